#include "fwperf/measures.hpp"

#include <cmath>
#include <stdexcept>

#include "fwperf/units.hpp"

namespace fwperf {

std::string method_name(Method m) {
    switch (m) {
        case Method::ground_truth: return "ground_truth";
        case Method::traditional: return "traditional";
        case Method::hybrid: return "hybrid";
    }
    return "unknown";
}

double vmt_segment(double length_mi, const std::vector<double>& counts) {
    double total = 0.0;
    for (double q : counts) total += length_mi * q;
    return total;
}

double vht_segment(double length_mi, const std::vector<double>& counts,
                   const std::vector<std::optional<double>>& speeds, int* gaps) {
    double total = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] <= 0.0) continue;
        if (!speeds[i] || *speeds[i] <= 0.0) {
            if (gaps) ++*gaps;
            continue;
        }
        total += length_mi * counts[i] / *speeds[i];
    }
    return total;
}

double vhd_segment(double length_mi, const std::vector<double>& counts,
                   const std::vector<std::optional<double>>& speeds,
                   const MeasureConfig& cfg, int* gaps) {
    double total = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] <= 0.0) continue;
        if (!speeds[i] || *speeds[i] <= 0.0) {
            if (gaps) ++*gaps;
            continue;
        }
        double delay = counts[i] * (length_mi / *speeds[i] - length_mi / cfg.threshold_mph);
        if (cfg.clamp_delay && delay < 0.0) delay = 0.0;
        total += delay;
    }
    return total;
}

namespace {

// Shared fold: per point, per interval, counts and speeds -> report.
PerfReport fold_report(Method method, const std::vector<double>& positions,
                       const std::vector<double>& lengths,
                       const std::vector<std::vector<double>>& counts,
                       const std::vector<std::vector<std::optional<double>>>& speeds,
                       const MeasureConfig& cfg) {
    PerfReport rep;
    rep.method = method;
    rep.point_positions_mi = positions;
    const std::size_t n = positions.size();
    rep.vmt_cell.resize(n, 0.0);
    rep.vht_cell.resize(n, 0.0);
    rep.vhd_cell.resize(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        rep.vmt_cell[k] = vmt_segment(lengths[k], counts[k]);
        rep.vht_cell[k] = vht_segment(lengths[k], counts[k], speeds[k], &rep.coverage_gaps);
        rep.vhd_cell[k] = vhd_segment(lengths[k], counts[k], speeds[k], cfg, nullptr);
        rep.vmt += rep.vmt_cell[k];
        rep.vht += rep.vht_cell[k];
        rep.vhd += rep.vhd_cell[k];
    }
    return rep;
}

}  // namespace

PerfReport traditional_report(const SpaceTimeField& vds_flow, const SpaceTimeField& vds_speed,
                              const CorridorGeometry& geom, const TimeGrid& grid,
                              const MeasureConfig& cfg) {
    if (geom.vds.empty()) throw std::invalid_argument("traditional_report: no VDS");
    const int n_vds = static_cast<int>(geom.vds.size());
    const int n_int = grid.n_intervals;
    const double step_hr = grid.step_hours();
    auto lengths = vds_segment_lengths(geom);

    std::vector<double> positions;
    std::vector<std::vector<double>> counts(n_vds, std::vector<double>(n_int, 0.0));
    std::vector<std::vector<std::optional<double>>> speeds(
        n_vds, std::vector<std::optional<double>>(n_int));
    int dead_stations = 0;
    for (int j = 0; j < n_vds; ++j) {
        positions.push_back(geom.vds[j].position_mi);
        bool any = false;
        for (int i = 0; i < n_int; ++i) {
            if (!vds_flow.is_missing(j, i)) {
                counts[j][i] = vds_flow.at(j, i) * step_hr;
                any = true;
            }
            if (!vds_speed.is_missing(j, i)) speeds[j][i] = vds_speed.at(j, i);
        }
        if (!any) ++dead_stations;  // segment has no coverage at all
    }
    auto rep = fold_report(Method::traditional, positions, lengths, counts, speeds, cfg);
    rep.coverage_gaps += dead_stations;
    return rep;
}

PerfReport hybrid_report(const SpaceTimeField& cell_flow, const CellTravelTimes& cell_tt,
                         const EvaluationPointSet& eps, const TimeGrid& grid,
                         const MeasureConfig& cfg, double speed_cap_mph) {
    const int n_pts = static_cast<int>(eps.size());
    const int n_int = grid.n_intervals;
    const double step_hr = grid.step_hours();

    std::vector<double> positions, lengths;
    std::vector<std::vector<double>> counts(n_pts, std::vector<double>(n_int, 0.0));
    std::vector<std::vector<std::optional<double>>> speeds(
        n_pts, std::vector<std::optional<double>>(n_int));

    int capped = 0;
    for (int k = 0; k < n_pts; ++k) {
        const auto& pt = eps.points[k];
        positions.push_back(pt.position_mi);
        lengths.push_back(pt.span_length_mi());
        for (int i = 0; i < n_int; ++i) {
            if (!cell_flow.is_missing(k, i)) counts[k][i] = cell_flow.at(k, i) * step_hr;
            if (!cell_tt.tt.is_missing(k, i)) {
                auto r = cell_speed(cell_tt.tt.at(k, i), pt.span_length_mi(), speed_cap_mph);
                speeds[k][i] = r.speed_mph;
                if (r.capped) ++capped;
            }
        }
    }
    auto rep = fold_report(Method::hybrid, positions, lengths, counts, speeds, cfg);
    rep.capped_cells = capped;
    return rep;
}

ErrorMetrics error_metrics(const std::vector<double>& estimate,
                           const std::vector<double>& truth) {
    if (estimate.size() != truth.size())
        throw std::invalid_argument("error_metrics: shape mismatch");
    ErrorMetrics m;
    double abs_sum = 0.0, pct_sum = 0.0;
    std::size_t n_pct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        double e = std::abs(estimate[i] - truth[i]);
        abs_sum += e;
        ++m.n;
        if (truth[i] > 0.0) {
            pct_sum += e / truth[i];
            ++n_pct;
        }
    }
    if (m.n == 0) throw std::runtime_error("error_metrics: empty overlap");
    m.mae = abs_sum / m.n;
    m.mape_pct = n_pct ? 100.0 * pct_sum / n_pct : 0.0;
    return m;
}

ErrorMetrics error_metrics(const SpaceTimeField& estimate, const SpaceTimeField& truth) {
    if (estimate.n_points() != truth.n_points() ||
        estimate.n_intervals() != truth.n_intervals())
        throw std::invalid_argument("error_metrics: shape mismatch");
    std::vector<double> e, t;
    for (int p = 0; p < estimate.n_points(); ++p) {
        for (int i = 0; i < estimate.n_intervals(); ++i) {
            if (estimate.is_missing(p, i) || truth.is_missing(p, i)) continue;
            e.push_back(estimate.at(p, i));
            t.push_back(truth.at(p, i));
        }
    }
    if (e.empty()) throw std::runtime_error("error_metrics: empty overlap");
    return error_metrics(e, t);
}

std::optional<Improvement> improvement(double traditional, double hybrid, double truth) {
    if (truth == 0.0) return std::nullopt;
    Improvement imp;
    imp.traditional_pct_err = 100.0 * std::abs(traditional - truth) / truth;
    imp.hybrid_pct_err = 100.0 * std::abs(hybrid - truth) / truth;
    imp.improvement_pp = imp.traditional_pct_err - imp.hybrid_pct_err;
    return imp;
}

}  // namespace fwperf
