#ifndef FWPERF_TIME_GRID_HPP
#define FWPERF_TIME_GRID_HPP

#include <cstdint>
#include <stdexcept>

#include "fwperf/units.hpp"

namespace fwperf {

// Uniform analysis grid: interval i covers [start + i*step, start + (i+1)*step).
struct TimeGrid {
    int64_t start_epoch_s = 0;
    double step_min = 1.0;
    int n_intervals = 60;

    void validate() const {
        if (step_min <= 0.0) throw std::invalid_argument("TimeGrid: step must be > 0");
        if (n_intervals < 1) throw std::invalid_argument("TimeGrid: need at least one interval");
    }

    double step_hours() const { return minutes_to_hours(step_min); }
    int64_t interval_start_s(int i) const {
        return start_epoch_s + static_cast<int64_t>(i * step_min * kSecPerMin);
    }
    // Interval index for an epoch timestamp, or -1 when outside the grid.
    int interval_of(int64_t t) const {
        double m = static_cast<double>(t - start_epoch_s) / kSecPerMin;
        if (m < 0.0) return -1;
        int i = static_cast<int>(m / step_min);
        return i < n_intervals ? i : -1;
    }
};

}  // namespace fwperf

#endif
