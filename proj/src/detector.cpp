#include "fwperf/detector.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "fwperf/units.hpp"

namespace fwperf {

std::optional<double> preliminary_speed(double g_ft, double count, double occupancy,
                                        double step_hours) {
    if (count <= 0.0) return 0.0;
    if (occupancy <= 0.0) return std::nullopt;  // vehicles counted but loop never occupied
    double flow_vph = count / step_hours;
    return feet_to_miles(g_ft) * flow_vph / occupancy;
}

std::optional<double> LoopSpeedFilter::feed(std::optional<double> preliminary, double count) {
    if (!preliminary) return std::nullopt;  // invalid sample, state holds
    double s = *preliminary;
    if (!initialized_) {
        if (s <= 0.0) return std::nullopt;  // nothing usable yet
        v_prev_ = s;
        initialized_ = true;
        return v_prev_;
    }
    double w = count / (count + a_);
    v_prev_ = w * s + (1.0 - w) * v_prev_;
    return v_prev_;
}

std::optional<double> vds_speed(const std::vector<std::optional<double>>& lane_speeds) {
    double sum = 0.0;
    int n = 0;
    for (const auto& v : lane_speeds) {
        if (v) {
            sum += *v;
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum / n;
}

VdsAggregate aggregate_vds(const std::vector<DetectorSample>& samples,
                           const CorridorGeometry& geom, const TimeGrid& grid,
                           const GFactorSet& g, double smoothing_a) {
    const int n_vds = static_cast<int>(geom.vds.size());
    const int n_int = grid.n_intervals;
    const double step_hr = grid.step_hours();

    std::map<std::string, int> vds_index;
    for (int j = 0; j < n_vds; ++j) vds_index[geom.vds[j].id] = j;

    // (vds, lane, interval) -> sample; rows may arrive in any order.
    struct LaneCell {
        double count = 0.0;
        double occupancy = 0.0;
        bool present = false;
    };
    std::vector<std::vector<std::vector<LaneCell>>> cells(n_vds);
    for (int j = 0; j < n_vds; ++j)
        cells[j].assign(geom.vds[j].lanes, std::vector<LaneCell>(n_int));

    for (const auto& s : samples) {
        auto it = vds_index.find(s.vds_id);
        if (it == vds_index.end())
            throw std::invalid_argument("detector sample for unknown VDS: " + s.vds_id);
        int j = it->second;
        if (s.lane < 1 || s.lane > geom.vds[j].lanes)
            throw std::invalid_argument("detector sample lane out of range for " + s.vds_id);
        if (s.interval < 0 || s.interval >= n_int) continue;  // outside the grid
        auto& c = cells[j][s.lane - 1][s.interval];
        c.count = s.count;
        c.occupancy = s.occupancy;
        c.present = true;
    }

    VdsAggregate out{SpaceTimeField(Quantity::flow_vph, n_vds, n_int),
                     SpaceTimeField(Quantity::speed_mph, n_vds, n_int)};

    for (int j = 0; j < n_vds; ++j) {
        const int lanes = geom.vds[j].lanes;
        std::vector<LoopSpeedFilter> filters(lanes, LoopSpeedFilter(smoothing_a));
        for (int i = 0; i < n_int; ++i) {
            double total_count = 0.0;
            bool any_present = false;
            std::vector<std::optional<double>> lane_speeds(lanes);
            for (int l = 0; l < lanes; ++l) {
                const auto& c = cells[j][l][i];
                if (!c.present) continue;
                any_present = true;
                total_count += c.count;
                auto s = preliminary_speed(g.for_lane(l + 1), c.count, c.occupancy, step_hr);
                lane_speeds[l] = filters[l].feed(s, c.count);
            }
            if (any_present) out.flow.set(j, i, total_count / step_hr);
            if (auto v = vds_speed(lane_speeds)) out.speed.set(j, i, *v);
        }
    }
    return out;
}

CalibrationResult calibrate_g(const std::vector<CalibrationSample>& samples,
                              double smoothing_a, double step_hours) {
    int usable = 0;
    for (const auto& s : samples)
        if (s.occupancy > 0.0) ++usable;
    if (usable < 100)
        throw std::runtime_error("calibrate_g: need at least 100 samples with occupancy > 0, got " +
                                 std::to_string(usable));

    // Group per loop and keep each group in interval order so the
    // exponential filter sees samples the way a live station would.
    std::map<std::string, std::vector<const CalibrationSample*>> groups;
    for (const auto& s : samples) groups[s.loop_key].push_back(&s);
    for (auto& [key, vec] : groups)
        std::stable_sort(vec.begin(), vec.end(),
                         [](const CalibrationSample* a, const CalibrationSample* b) {
                             return a->interval < b->interval;
                         });

    CalibrationResult best;
    bool have_best = false;
    double best_score = 0.0;
    int best_imbalance = 0;

    for (double g = 14.0; g <= 34.0 + 1e-9; g += 0.5) {
        std::vector<double> errors;
        errors.reserve(samples.size());
        for (const auto& [key, vec] : groups) {
            LoopSpeedFilter filter(smoothing_a);
            for (const auto* s : vec) {
                auto prelim = preliminary_speed(g, s->count, s->occupancy, step_hours);
                auto v = filter.feed(prelim, s->count);
                if (v && s->true_speed_mph > 0.0 && s->count > 0.0)
                    errors.push_back(*v - s->true_speed_mph);
            }
        }
        if (errors.empty()) continue;
        std::nth_element(errors.begin(), errors.begin() + errors.size() / 2, errors.end());
        double median = errors[errors.size() / 2];
        if (errors.size() % 2 == 0) {
            double lower = *std::max_element(errors.begin(), errors.begin() + errors.size() / 2);
            median = 0.5 * (median + lower);
        }
        int over = 0, under = 0;
        for (double e : errors) {
            if (e > 0.0) ++over;
            else if (e < 0.0) ++under;
        }
        double score = std::abs(median);
        int imbalance = std::abs(over - under);
        if (!have_best || score < best_score ||
            (score == best_score && imbalance < best_imbalance)) {
            have_best = true;
            best_score = score;
            best_imbalance = imbalance;
            best = CalibrationResult{g, median, over, under};
        }
    }
    if (!have_best) throw std::runtime_error("calibrate_g: no usable samples in grid search");
    return best;
}

}  // namespace fwperf
