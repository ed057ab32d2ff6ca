#ifndef FWPERF_MEASURES_HPP
#define FWPERF_MEASURES_HPP

#include <optional>
#include <string>
#include <vector>

#include "fwperf/field.hpp"
#include "fwperf/geometry.hpp"
#include "fwperf/time_grid.hpp"
#include "fwperf/ttfuse.hpp"

namespace fwperf {

struct MeasureConfig {
    double threshold_mph = 65.0;  // delay threshold b
    bool clamp_delay = true;      // per-contribution delay floored at zero
};

enum class Method { ground_truth, traditional, hybrid };

std::string method_name(Method m);

// VMT/VHT/VHD totals plus the per-(point, interval) contributions they
// were summed from. Summation order is fixed (point-major, then interval)
// so repeated runs are bit-stable.
struct PerfReport {
    Method method = Method::ground_truth;
    double vmt = 0.0;  // veh-miles
    double vht = 0.0;  // veh-hours
    double vhd = 0.0;  // veh-hours
    std::vector<double> point_positions_mi;
    std::vector<double> vmt_cell;  // per point, summed over intervals
    std::vector<double> vht_cell;
    std::vector<double> vhd_cell;
    int coverage_gaps = 0;   // count>0 intervals skipped for missing speed
    int capped_cells = 0;    // cell-intervals hit by the speed cap
};

// Per-segment folds over one interval series.
double vmt_segment(double length_mi, const std::vector<double>& counts);
double vht_segment(double length_mi, const std::vector<double>& counts,
                   const std::vector<std::optional<double>>& speeds, int* gaps = nullptr);
double vhd_segment(double length_mi, const std::vector<double>& counts,
                   const std::vector<std::optional<double>>& speeds,
                   const MeasureConfig& cfg, int* gaps = nullptr);

// Traditional method: each VDS represents the midpoint-to-midpoint
// segment around it, with its counts and station speed applied over the
// whole segment.
PerfReport traditional_report(const SpaceTimeField& vds_flow, const SpaceTimeField& vds_speed,
                              const CorridorGeometry& geom, const TimeGrid& grid,
                              const MeasureConfig& cfg);

// Hybrid method: conflated flow turns into per-cell counts; cell speeds
// come from the conflated vendor travel times.
PerfReport hybrid_report(const SpaceTimeField& cell_flow, const CellTravelTimes& cell_tt,
                         const EvaluationPointSet& eps, const TimeGrid& grid,
                         const MeasureConfig& cfg, double speed_cap_mph = 90.0);

struct ErrorMetrics {
    double mae = 0.0;
    double mape_pct = 0.0;  // over entries with truth > 0
    std::size_t n = 0;      // overlapping sample count
};

ErrorMetrics error_metrics(const SpaceTimeField& estimate, const SpaceTimeField& truth);
ErrorMetrics error_metrics(const std::vector<double>& estimate,
                           const std::vector<double>& truth);

struct Improvement {
    double traditional_pct_err = 0.0;
    double hybrid_pct_err = 0.0;
    double improvement_pp = 0.0;  // traditional error minus hybrid error
};

// Percentage-point gain of the hybrid method over the traditional one for
// a single measure; undefined (nullopt) when the truth value is zero.
std::optional<Improvement> improvement(double traditional, double hybrid, double truth);

}  // namespace fwperf

#endif
