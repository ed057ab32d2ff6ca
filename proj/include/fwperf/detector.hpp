#ifndef FWPERF_DETECTOR_HPP
#define FWPERF_DETECTOR_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fwperf/field.hpp"
#include "fwperf/geometry.hpp"
#include "fwperf/time_grid.hpp"

namespace fwperf {

// One lane-minute record from a single-loop station.
struct DetectorSample {
    std::string vds_id;
    int lane = 0;      // 1-based, 1 = leftmost
    int interval = 0;
    double count = 0.0;      // vehicles per interval
    double occupancy = 0.0;  // fraction in [0, 1]
};

// Per-lane effective vehicle lengths in feet (index 0 = leftmost lane).
struct GFactorSet {
    std::vector<double> g_ft;

    double for_lane(int lane) const {
        if (g_ft.empty()) return 22.0;
        int i = lane - 1;
        if (i < 0) i = 0;
        if (i >= static_cast<int>(g_ft.size())) i = static_cast<int>(g_ft.size()) - 1;
        return g_ft[i];
    }
};

// Preliminary point speed from a single loop: s = g * q / o, with g in
// miles and q in veh/hr. Zero flow gives zero (the filter holds the
// previous value); q > 0 with o = 0 is physically inconsistent and
// reported as invalid (nullopt).
std::optional<double> preliminary_speed(double g_ft, double count, double occupancy,
                                        double step_hours);

// Exponential speed filter; the weight w = q / (q + a) shifts toward the
// fresh sample as flow grows. Initializes at the first positive
// preliminary speed; earlier intervals come back missing.
class LoopSpeedFilter {
  public:
    explicit LoopSpeedFilter(double a_veh_per_interval = 10.0) : a_(a_veh_per_interval) {}

    // Feed one lane-minute's preliminary speed (nullopt = invalid sample,
    // which leaves the state untouched) plus its count.
    std::optional<double> feed(std::optional<double> preliminary, double count);

    bool initialized() const { return initialized_; }
    double previous_speed() const { return v_prev_; }

  private:
    double a_;
    double v_prev_ = 0.0;
    bool initialized_ = false;
};

// Unweighted mean of valid lane speeds; nullopt when no lane is valid.
std::optional<double> vds_speed(const std::vector<std::optional<double>>& lane_speeds);

// Station-level aggregation of raw lane samples onto the analysis grid.
struct VdsAggregate {
    SpaceTimeField flow;   // veh/hr, total across lanes (one "point" per VDS)
    SpaceTimeField speed;  // mph, mean of filtered lane speeds
};

VdsAggregate aggregate_vds(const std::vector<DetectorSample>& samples,
                           const CorridorGeometry& geom, const TimeGrid& grid,
                           const GFactorSet& g, double smoothing_a);

// One observation used for g-factor calibration: a lane-minute with the
// matching ground-truth point speed.
struct CalibrationSample {
    std::string loop_key;  // one filter chain per key (VDS id)
    int interval = 0;
    double count = 0.0;
    double occupancy = 0.0;
    double true_speed_mph = 0.0;
};

struct CalibrationResult {
    double g_ft = 0.0;
    double median_error_mph = 0.0;  // signed, calculated - true, at the chosen g
    int over_count = 0;
    int under_count = 0;
};

// Grid search over g in [14, 34] ft (0.5 ft step): pick the g whose signed
// median error is closest to zero, breaking ties by the smallest imbalance
// between over- and under-estimates. Throws if fewer than 100 usable
// samples are supplied.
CalibrationResult calibrate_g(const std::vector<CalibrationSample>& samples,
                              double smoothing_a, double step_hours);

}  // namespace fwperf

#endif
