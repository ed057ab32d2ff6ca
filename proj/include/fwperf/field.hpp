#ifndef FWPERF_FIELD_HPP
#define FWPERF_FIELD_HPP

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace fwperf {

enum class Quantity {
    flow_vph,       // vehicles per hour
    count_veh,      // vehicles per interval
    speed_mph,
    density_vpm,    // vehicles per mile
    travel_time_hr
};

// Dense values indexed (point, interval) with a missing-entry mask.
class SpaceTimeField {
  public:
    SpaceTimeField() = default;
    SpaceTimeField(Quantity kind, int n_points, int n_intervals)
        : kind_(kind), n_points_(n_points), n_intervals_(n_intervals),
          values_(static_cast<std::size_t>(n_points) * n_intervals, 0.0),
          missing_(static_cast<std::size_t>(n_points) * n_intervals, 1) {}

    Quantity kind() const { return kind_; }
    int n_points() const { return n_points_; }
    int n_intervals() const { return n_intervals_; }

    double at(int p, int i) const { return values_[idx(p, i)]; }
    bool is_missing(int p, int i) const { return missing_[idx(p, i)] != 0; }
    void set(int p, int i, double v) {
        values_[idx(p, i)] = v;
        missing_[idx(p, i)] = 0;
    }
    void set_missing(int p, int i) {
        values_[idx(p, i)] = 0.0;
        missing_[idx(p, i)] = 1;
    }

    std::size_t missing_count() const {
        std::size_t n = 0;
        for (auto m : missing_) n += m;
        return n;
    }

  private:
    std::size_t idx(int p, int i) const {
        if (p < 0 || p >= n_points_ || i < 0 || i >= n_intervals_)
            throw std::out_of_range("SpaceTimeField index");
        return static_cast<std::size_t>(p) * n_intervals_ + i;
    }

    Quantity kind_ = Quantity::flow_vph;
    int n_points_ = 0;
    int n_intervals_ = 0;
    std::vector<double> values_;
    std::vector<uint8_t> missing_;
};

}  // namespace fwperf

#endif
