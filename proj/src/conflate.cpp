#include "fwperf/conflate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fwperf {

void SmoothingParams::validate() const {
    if (delta_mi <= 0.0 || mu_min <= 0.0 || v_ff_mph <= 0.0 || v_cong_mph <= 0.0 ||
        v_cr_mph <= 0.0 || delta_v_mph <= 0.0)
        throw std::invalid_argument("smoothing parameters must all be > 0");
    if (kernel_floor < 0.0)
        throw std::invalid_argument("kernel floor must be >= 0");
}

VdsSeries::VdsSeries(std::vector<double> positions, const SpaceTimeField& flow_in,
                     const SpaceTimeField& speed_in)
    : positions_mi(std::move(positions)), flow(flow_in), speed(speed_in),
      density(Quantity::density_vpm, flow_in.n_points(), flow_in.n_intervals()) {
    if (flow.n_points() != static_cast<int>(positions_mi.size()) ||
        speed.n_points() != flow.n_points() || speed.n_intervals() != flow.n_intervals())
        throw std::invalid_argument("VdsSeries: shape mismatch");
    for (int j = 0; j < flow.n_points(); ++j) {
        for (int i = 0; i < flow.n_intervals(); ++i) {
            if (flow.is_missing(j, i)) continue;
            double q = flow.at(j, i);
            if (q <= 0.0) {
                density.set(j, i, 0.0);  // an empty interval has no vehicles stored
            } else if (!speed.is_missing(j, i) && speed.at(j, i) > 0.0) {
                density.set(j, i, q / speed.at(j, i));
            }
        }
    }
}

double kernel(double dx_mi, double dt_min, const SmoothingParams& p) {
    return std::exp(-(std::abs(dx_mi) / p.delta_mi + std::abs(dt_min) / p.mu_min));
}

double crossover_weight(double v_ff_est_mph, double v_cong_est_mph,
                        const SmoothingParams& p) {
    double v = std::min(v_ff_est_mph, v_cong_est_mph);
    return 0.5 * (1.0 + std::tanh((p.v_cr_mph - v) / p.delta_v_mph));
}

std::optional<double> gasm_at(const SpaceTimeField& values,
                              const std::vector<double>& positions_mi, double x_mi,
                              int t_interval, const TimeGrid& grid,
                              const SmoothingParams& p) {
    double num = 0.0, den = 0.0;
    for (int j = 0; j < values.n_points(); ++j) {
        double dx = x_mi - positions_mi[j];
        for (int i = 0; i < values.n_intervals(); ++i) {
            if (values.is_missing(j, i)) continue;
            double dt = (t_interval - i) * grid.step_min;
            double k = kernel(dx, dt, p);
            if (k < p.kernel_floor) continue;
            num += k * values.at(j, i);
            den += k;
        }
    }
    if (den <= 0.0) return std::nullopt;
    return num / den;
}

namespace {

// Neighbors confining the smoothing: the nearest VDS at or before x and
// the nearest one strictly after it. Either may be absent near the
// corridor ends.
struct Neighbors {
    int upstream = -1;
    int downstream = -1;
};

Neighbors find_neighbors(const std::vector<double>& positions_mi, double x_mi) {
    Neighbors nb;
    for (int j = 0; j < static_cast<int>(positions_mi.size()); ++j) {
        if (positions_mi[j] <= x_mi) nb.upstream = j;
        else {
            nb.downstream = j;
            break;
        }
    }
    return nb;
}

// One confined directional pass; c_mph is the signed characteristic speed.
std::optional<double> directional_sum(const SpaceTimeField& values,
                                      const std::vector<double>& positions_mi,
                                      double x_mi, int t_interval, double c_mph,
                                      const TimeGrid& grid, const SmoothingParams& p) {
    Neighbors nb = find_neighbors(positions_mi, x_mi);
    if (nb.upstream < 0 && nb.downstream < 0) return std::nullopt;

    double num = 0.0, den = 0.0;
    for (int j : {nb.upstream, nb.downstream}) {
        if (j < 0) continue;
        double dx = x_mi - positions_mi[j];
        double shift_min = hours_to_minutes(dx / c_mph);
        for (int i = 0; i < values.n_intervals(); ++i) {
            if (values.is_missing(j, i)) continue;
            double dt = (t_interval - i) * grid.step_min - shift_min;
            double k = kernel(dx, dt, p);
            if (k < p.kernel_floor) continue;
            num += k * values.at(j, i);
            den += k;
        }
    }
    if (den <= 0.0) return std::nullopt;
    return num / den;
}

}  // namespace

std::optional<double> cgasm_directional_at(const SpaceTimeField& values,
                                           const std::vector<double>& positions_mi,
                                           double x_mi, int t_interval, WaveDirection dir,
                                           const TimeGrid& grid, const SmoothingParams& p) {
    double c = (dir == WaveDirection::free_flow) ? p.v_ff_mph : -p.v_cong_mph;
    return directional_sum(values, positions_mi, x_mi, t_interval, c, grid, p);
}

std::optional<double> cgasm_at(const SpaceTimeField& values, const SpaceTimeField& speeds,
                               const std::vector<double>& positions_mi, double x_mi,
                               int t_interval, const TimeGrid& grid,
                               const SmoothingParams& p) {
    auto v_ff = cgasm_directional_at(speeds, positions_mi, x_mi, t_interval,
                                     WaveDirection::free_flow, grid, p);
    auto v_cong = cgasm_directional_at(speeds, positions_mi, x_mi, t_interval,
                                       WaveDirection::congested, grid, p);
    auto q_ff = cgasm_directional_at(values, positions_mi, x_mi, t_interval,
                                     WaveDirection::free_flow, grid, p);
    auto q_cong = cgasm_directional_at(values, positions_mi, x_mi, t_interval,
                                       WaveDirection::congested, grid, p);

    if (!q_ff && !q_cong) return std::nullopt;
    if (!q_ff) return q_cong;
    if (!q_cong) return q_ff;

    std::optional<double> z;
    if (v_ff && v_cong) z = crossover_weight(*v_ff, *v_cong, p);
    else if (v_ff) z = crossover_weight(*v_ff, *v_ff, p);
    else if (v_cong) z = crossover_weight(*v_cong, *v_cong, p);
    if (!z) return std::nullopt;  // no speed information anywhere

    return *z * *q_cong + (1.0 - *z) * *q_ff;
}

ConflatedFields conflate(const VdsSeries& series, const EvaluationPointSet& eps,
                         const TimeGrid& grid, const SmoothingParams& p,
                         ConflationMethod method) {
    p.validate();
    const int n_pts = static_cast<int>(eps.size());
    const int n_int = grid.n_intervals;
    ConflatedFields out(n_pts, n_int);

    for (int k = 0; k < n_pts; ++k) {
        const auto& pt = eps.points[k];
        if (pt.kind == PointKind::vds) {
            // Measured station data is used as-is.
            int j = pt.vds_index;
            for (int i = 0; i < n_int; ++i) {
                if (!series.flow.is_missing(j, i)) out.flow.set(k, i, series.flow.at(j, i));
                if (!series.speed.is_missing(j, i)) out.speed.set(k, i, series.speed.at(j, i));
                if (!series.density.is_missing(j, i))
                    out.density.set(k, i, series.density.at(j, i));
            }
            continue;
        }
        const double x = pt.position_mi;
        for (int i = 0; i < n_int; ++i) {
            if (method == ConflationMethod::gasm) {
                if (auto q = gasm_at(series.flow, series.positions_mi, x, i, grid, p))
                    out.flow.set(k, i, *q);
                if (auto v = gasm_at(series.speed, series.positions_mi, x, i, grid, p))
                    out.speed.set(k, i, *v);
                if (auto d = gasm_at(series.density, series.positions_mi, x, i, grid, p))
                    out.density.set(k, i, *d);
            } else {
                if (auto q = cgasm_at(series.flow, series.speed, series.positions_mi, x, i,
                                      grid, p))
                    out.flow.set(k, i, *q);
                if (auto v = cgasm_at(series.speed, series.speed, series.positions_mi, x, i,
                                      grid, p))
                    out.speed.set(k, i, *v);
                if (auto d = cgasm_at(series.density, series.speed, series.positions_mi, x,
                                      i, grid, p))
                    out.density.set(k, i, *d);
            }
        }
    }
    return out;
}

}  // namespace fwperf
