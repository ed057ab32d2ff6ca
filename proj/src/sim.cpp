#include "fwperf/sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

#include "fwperf/units.hpp"

namespace fwperf {

void FundamentalDiagram::validate() const {
    if (free_flow_mph <= 0.0 || wave_mph <= 0.0 || jam_density_vpmpl <= 0.0)
        throw std::invalid_argument("fundamental diagram parameters must be > 0");
}

void ScenarioSpec::validate() const {
    if (name.empty()) throw std::invalid_argument("scenario needs a name");
    if (duration_min <= 0.0) throw std::invalid_argument("scenario duration must be > 0");
    if (spinup_min < 0.0) throw std::invalid_argument("spin-up must be >= 0");
    if (demand.empty()) throw std::invalid_argument("scenario needs a demand profile");
    for (const auto& d : demand)
        if (d.vph < 0.0) throw std::invalid_argument("demand must be >= 0");
    for (std::size_t k = 1; k < demand.size(); ++k)
        if (demand[k].minute <= demand[k - 1].minute)
            throw std::invalid_argument("demand breakpoints must be increasing");
    if (bottleneck) {
        if (bottleneck->capacity_drop_frac < 0.0 || bottleneck->capacity_drop_frac >= 1.0)
            throw std::invalid_argument("bottleneck capacity drop must be in [0, 1)");
        if (bottleneck->end_min <= bottleneck->start_min)
            throw std::invalid_argument("bottleneck window must have positive length");
        if (bottleneck->start_min < -spinup_min || bottleneck->end_min > duration_min)
            throw std::invalid_argument("bottleneck window must lie within the run");
    }
}

void ProbeSpec::validate() const {
    if (penetration <= 0.0 || penetration > 1.0)
        throw std::invalid_argument("probe penetration must be in (0, 1]");
    if (crossing_margin < 0.0 || crossing_margin >= 0.5)
        throw std::invalid_argument("crossing margin must be in [0, 0.5)");
    if (obs_dt_s <= 0.0) throw std::invalid_argument("probe observation step must be > 0");
}

double ScenarioSpec::demand_at(double minute) const {
    if (minute <= demand.front().minute) return demand.front().vph;
    if (minute >= demand.back().minute) return demand.back().vph;
    for (std::size_t k = 1; k < demand.size(); ++k) {
        if (minute <= demand[k].minute) {
            double f = (minute - demand[k - 1].minute) /
                       (demand[k].minute - demand[k - 1].minute);
            return demand[k - 1].vph + f * (demand[k].vph - demand[k - 1].vph);
        }
    }
    return demand.back().vph;
}

int GroundTruth::cell_of(double pos_mi) const {
    int c = static_cast<int>(pos_mi / grid.dx_mi);
    if (c < 0) c = 0;
    if (c >= n_cells()) c = n_cells() - 1;
    return c;
}

double GroundTruth::speed_lookup(double pos_mi, double t_min) const {
    const int nc = n_cells();
    const int ns = n_steps();
    double step_min = grid.dt_s / kSecPerMin;

    double cf = pos_mi / grid.dx_mi - 0.5;  // fractional cell-center index
    int c0 = static_cast<int>(std::floor(cf));
    double fx = cf - c0;
    if (c0 < 0) { c0 = 0; fx = 0.0; }
    if (c0 >= nc - 1) { c0 = nc - 1; fx = 0.0; }
    int c1 = std::min(c0 + 1, nc - 1);

    double sf = (t_min - sim_start_min()) / step_min;
    int s0 = static_cast<int>(std::floor(sf));
    double ft = sf - s0;
    if (s0 < 0) { s0 = 0; ft = 0.0; }
    if (s0 >= ns - 1) { s0 = ns - 1; ft = 0.0; }
    int s1 = std::min(s0 + 1, ns - 1);

    double v00 = speed_step[c0][s0], v01 = speed_step[c0][s1];
    double v10 = speed_step[c1][s0], v11 = speed_step[c1][s1];
    double v0 = v00 + ft * (v01 - v00);
    double v1 = v10 + ft * (v11 - v10);
    return v0 + fx * (v1 - v0);
}

double GroundTruth::speed_sample(double pos_mi, double t_min) const {
    int c = cell_of(pos_mi);
    double step_min = grid.dt_s / kSecPerMin;
    int s = static_cast<int>((t_min - sim_start_min()) / step_min);
    s = std::clamp(s, 0, n_steps() - 1);
    return speed_step[c][s];
}

GroundTruth run_ground_truth(const CorridorGeometry& geom, const ScenarioSpec& scenario,
                             const FundamentalDiagram& fd, const SimGrid& grid) {
    geom.validate();
    scenario.validate();
    fd.validate();
    if (grid.dx_mi <= 0.0 || grid.dt_s <= 0.0)
        throw std::invalid_argument("simulation grid steps must be > 0");

    const double dt_hr = seconds_to_hours(grid.dt_s);
    if (fd.free_flow_mph * dt_hr > grid.dx_mi || fd.wave_mph * dt_hr > grid.dx_mi)
        throw std::invalid_argument(
            "CFL violation: reduce dt or enlarge dx for the given fundamental diagram");

    const int nc = static_cast<int>(std::round(geom.length_mi / grid.dx_mi));
    if (nc < 2 || std::abs(nc * grid.dx_mi - geom.length_mi) > 1e-9)
        throw std::invalid_argument("corridor length must be a multiple of dx");

    const double total_min = scenario.spinup_min + scenario.duration_min;
    const int steps_per_min = static_cast<int>(std::round(kSecPerMin / grid.dt_s));
    if (std::abs(steps_per_min * grid.dt_s - kSecPerMin) > 1e-9)
        throw std::invalid_argument("dt must divide one minute evenly");
    const int ns = static_cast<int>(std::round(total_min)) * steps_per_min;
    const int spinup_steps = static_cast<int>(std::round(scenario.spinup_min)) * steps_per_min;
    const int n_minutes = static_cast<int>(std::round(scenario.duration_min));

    GroundTruth gt;
    gt.grid = grid;
    gt.spinup_min = scenario.spinup_min;
    gt.duration_min = scenario.duration_min;
    gt.window_start_s = scenario.window_start_s;

    gt.cell_center_mi.resize(nc);
    gt.cell_lanes.resize(nc);
    for (int c = 0; c < nc; ++c) {
        gt.cell_center_mi[c] = (c + 0.5) * grid.dx_mi;
        gt.cell_lanes[c] = geom.lanes_at(gt.cell_center_mi[c]);
    }

    gt.speed_step.assign(nc, std::vector<double>(ns, fd.free_flow_mph));
    gt.inflow_per_step_veh.assign(ns, 0.0);
    gt.flow_vph.assign(nc, std::vector<double>(n_minutes, 0.0));
    gt.speed_mph.assign(nc, std::vector<double>(n_minutes, 0.0));
    gt.density_vpm.assign(nc, std::vector<double>(n_minutes, 0.0));

    // Bottleneck acts on the interface nearest its milepost.
    int bneck_iface = -1;
    double bneck_cap_frac = 1.0;
    if (scenario.bottleneck) {
        bneck_iface = static_cast<int>(std::round(scenario.bottleneck->position_mi / grid.dx_mi));
        bneck_iface = std::clamp(bneck_iface, 1, nc - 1);
        bneck_cap_frac = 1.0 - scenario.bottleneck->capacity_drop_frac;
    }

    std::vector<double> density(nc, 0.0);   // veh/mi, all lanes
    std::vector<double> flux(nc + 1, 0.0);  // veh/hr across interfaces
    std::vector<std::vector<double>> k_acc(nc, std::vector<double>(n_minutes, 0.0));
    std::vector<std::vector<double>> q_acc(nc, std::vector<double>(n_minutes, 0.0));

    double entry_queue = 0.0;  // vehicles waiting upstream of milepost 0
    double cum_in = 0.0, cum_out = 0.0;
    double worst_conservation = 0.0;

    auto cell_demand = [&](int c) {
        double lanes = gt.cell_lanes[c];
        return std::min(fd.free_flow_mph * density[c], fd.capacity_vphpl() * lanes);
    };
    auto cell_supply = [&](int c) {
        double lanes = gt.cell_lanes[c];
        return std::min(fd.capacity_vphpl() * lanes,
                        fd.wave_mph * (fd.jam_density_vpmpl * lanes - density[c]));
    };

    for (int s = 0; s < ns; ++s) {
        double t_min = -scenario.spinup_min + (s + 0.5) * grid.dt_s / kSecPerMin;

        bool bneck_active =
            scenario.bottleneck && t_min >= scenario.bottleneck->start_min &&
            t_min < scenario.bottleneck->end_min;

        entry_queue += scenario.demand_at(t_min) * dt_hr;
        double entry_flux = std::min(entry_queue / dt_hr, cell_supply(0));
        flux[0] = entry_flux;
        for (int c = 1; c < nc; ++c) {
            double f = std::min(cell_demand(c - 1), cell_supply(c));
            if (bneck_active && c == bneck_iface)
                f = std::min(f, fd.capacity_vphpl() * gt.cell_lanes[c] * bneck_cap_frac);
            flux[c] = f;
        }
        flux[nc] = cell_demand(nc - 1);  // free outflow

        entry_queue -= entry_flux * dt_hr;
        cum_in += entry_flux * dt_hr;
        cum_out += flux[nc] * dt_hr;
        gt.inflow_per_step_veh[s] = entry_flux * dt_hr;

        double stored = 0.0;
        for (int c = 0; c < nc; ++c) {
            density[c] += dt_hr / grid.dx_mi * (flux[c] - flux[c + 1]);
            if (density[c] < 0.0 && density[c] > -1e-12) density[c] = 0.0;
            stored += density[c] * grid.dx_mi;

            double k_lane = density[c] / gt.cell_lanes[c];
            double v = fd.speed_at(k_lane);
            gt.speed_step[c][s] = v;

            int minute = (s - spinup_steps) / steps_per_min;
            if (s >= spinup_steps && minute < n_minutes) {
                k_acc[c][minute] += density[c];
                q_acc[c][minute] += density[c] * v;
            }
        }
        if (cum_in > 1.0) {
            double err = std::abs(cum_in - cum_out - stored) / cum_in;
            worst_conservation = std::max(worst_conservation, err);
        }
    }
    gt.conservation_rel_err = worst_conservation;

    for (int c = 0; c < nc; ++c) {
        for (int m = 0; m < n_minutes; ++m) {
            double k_mean = k_acc[c][m] / steps_per_min;
            double q_mean = q_acc[c][m] / steps_per_min;
            gt.density_vpm[c][m] = k_mean;
            gt.flow_vph[c][m] = q_mean;
            gt.speed_mph[c][m] = (k_mean > 1e-12) ? q_mean / k_mean : fd.free_flow_mph;
        }
    }
    return gt;
}

std::vector<DetectorSample> emulate_detectors(const GroundTruth& gt,
                                              const CorridorGeometry& geom,
                                              const GFactorSet& g_true,
                                              const DetectorNoise& noise, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double step_hr = minutes_to_hours(1.0);

    std::vector<DetectorSample> out;
    out.reserve(geom.vds.size() * 6 * gt.n_minutes());

    for (const auto& vds : geom.vds) {
        int c = gt.cell_of(vds.position_mi);
        for (int m = 0; m < gt.n_minutes(); ++m) {
            double flow_lane = gt.flow_vph[c][m] / vds.lanes;
            double k_lane = gt.density_vpm[c][m] / vds.lanes;
            for (int l = 1; l <= vds.lanes; ++l) {
                double count = flow_lane * step_hr;
                if (count > 0.0 && noise.count_sigma > 0.0)
                    count = std::max(0.0, count * (1.0 + noise.count_sigma * gauss(rng)));
                // Per-vehicle length scatter averages down over the
                // vehicles seen in the minute.
                double g_eff = g_true.for_lane(l);
                if (noise.effective_length_sigma_ft > 0.0 && count > 0.0) {
                    double n_veh = std::max(1.0, count);
                    g_eff += noise.effective_length_sigma_ft / std::sqrt(n_veh) * gauss(rng);
                    g_eff = std::max(1.0, g_eff);
                }
                double occupancy = std::clamp(k_lane * feet_to_miles(g_eff), 0.0, 1.0);

                DetectorSample s;
                s.vds_id = vds.id;
                s.lane = l;
                s.interval = m;
                s.count = count;
                s.occupancy = occupancy;
                out.push_back(std::move(s));
            }
        }
    }
    return out;
}

std::vector<double> corridor_entry_times(const GroundTruth& gt) {
    std::vector<double> out;
    double cum = 0.0;
    int next_vehicle = 0;
    const double step_min = gt.grid.dt_s / kSecPerMin;
    for (int s = 0; s < gt.n_steps(); ++s) {
        double before = cum;
        cum += gt.inflow_per_step_veh[s];
        while (next_vehicle + 1 <= cum) {
            ++next_vehicle;
            double frac = (next_vehicle - before) / (cum - before);
            out.push_back(gt.sim_start_min() + (s + frac) * step_min);
        }
    }
    return out;
}

namespace {

struct LinkWindowObs {
    double first_t_min = 0.0;
    double first_x = -1.0;
    double last_t_min = 0.0;
    double last_x = -1.0;
};

}  // namespace

std::vector<LinkTravelTime> generate_probe_tts(const GroundTruth& gt,
                                               const std::vector<LinkDef>& links,
                                               const ProbeSpec& probes, uint64_t seed) {
    probes.validate();
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution is_probe(probes.penetration);

    const double corridor_end = links.empty() ? 0.0 : links.back().end_mi;
    const double obs_dt_min = probes.obs_dt_s / kSecPerMin;
    const double sim_end_min = gt.sim_start_min() + gt.spinup_min + gt.duration_min;

    std::vector<double> entry_times_min = corridor_entry_times(gt);

    struct Accum {
        double tt_sum_s = 0.0;
        int n = 0;
    };
    std::map<std::pair<int, std::string>, Accum> bins;  // (minute, link id)

    for (double t_enter : entry_times_min) {
        bool probe = is_probe(rng);
        if (!probe) continue;

        std::vector<LinkWindowObs> obs(links.size());
        double x = 0.0;
        double t = t_enter;
        while (x < corridor_end && t < sim_end_min) {
            for (std::size_t l = 0; l < links.size(); ++l) {
                if (x >= links[l].start_mi && x <= links[l].end_mi) {
                    if (obs[l].first_x < 0.0) {
                        obs[l].first_x = x;
                        obs[l].first_t_min = t;
                    }
                    obs[l].last_x = x;
                    obs[l].last_t_min = t;
                }
            }
            double v = gt.speed_lookup(x, t);
            if (v < 0.1) v = 0.1;  // keep crawling vehicles moving
            x += v * minutes_to_hours(obs_dt_min);
            t += obs_dt_min;
        }

        for (std::size_t l = 0; l < links.size(); ++l) {
            if (obs[l].first_x < 0.0 || obs[l].last_x < 0.0) continue;
            double len = links[l].length_mi();
            bool entry_ok = obs[l].first_x <= links[l].start_mi + probes.crossing_margin * len;
            bool exit_ok = obs[l].last_x >= links[l].end_mi - probes.crossing_margin * len;
            if (!entry_ok || !exit_ok) continue;
            double tt_min = obs[l].last_t_min - obs[l].first_t_min;
            if (tt_min <= 0.0) continue;
            int minute = static_cast<int>(std::floor(obs[l].last_t_min));
            if (minute < 0 || minute >= gt.n_minutes()) continue;
            auto& acc = bins[{minute, links[l].id}];
            acc.tt_sum_s += tt_min * kSecPerMin;
            acc.n += 1;
        }
    }

    std::vector<LinkTravelTime> out;
    out.reserve(bins.size());
    for (const auto& [key, acc] : bins) {
        LinkTravelTime r;
        r.interval = key.first;
        r.link_id = key.second;
        r.travel_time_s = acc.tt_sum_s / acc.n;
        r.probe_count = acc.n;
        out.push_back(std::move(r));
    }
    return out;
}

PerfReport ground_truth_measures(const GroundTruth& gt, const MeasureConfig& cfg) {
    PerfReport rep;
    rep.method = Method::ground_truth;
    const int nc = gt.n_cells();
    const int nm = gt.n_minutes();
    const double step_hr = minutes_to_hours(1.0);
    const double dx = gt.grid.dx_mi;

    rep.point_positions_mi = gt.cell_center_mi;
    rep.vmt_cell.assign(nc, 0.0);
    rep.vht_cell.assign(nc, 0.0);
    rep.vhd_cell.assign(nc, 0.0);

    for (int c = 0; c < nc; ++c) {
        for (int m = 0; m < nm; ++m) {
            double count = gt.flow_vph[c][m] * step_hr;
            if (count <= 0.0) continue;
            double v = gt.speed_mph[c][m];
            rep.vmt_cell[c] += dx * count;
            rep.vht_cell[c] += dx * count / v;
            double delay = count * (dx / v - dx / cfg.threshold_mph);
            if (cfg.clamp_delay && delay < 0.0) delay = 0.0;
            rep.vhd_cell[c] += delay;
        }
        rep.vmt += rep.vmt_cell[c];
        rep.vht += rep.vht_cell[c];
        rep.vhd += rep.vhd_cell[c];
    }
    return rep;
}

PerfReport ground_truth_measures_on_spans(const GroundTruth& gt, const MeasureConfig& cfg,
                                          const EvaluationPointSet& eps) {
    PerfReport fine = ground_truth_measures(gt, cfg);
    PerfReport rep;
    rep.method = Method::ground_truth;
    rep.vmt = fine.vmt;
    rep.vht = fine.vht;
    rep.vhd = fine.vhd;

    const std::size_t n = eps.size();
    rep.point_positions_mi.resize(n);
    rep.vmt_cell.assign(n, 0.0);
    rep.vht_cell.assign(n, 0.0);
    rep.vhd_cell.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) rep.point_positions_mi[k] = eps.points[k].position_mi;

    for (int c = 0; c < gt.n_cells(); ++c) {
        double x = gt.cell_center_mi[c];
        // Fine cells nest inside spans except at boundaries; assign by center.
        for (std::size_t k = 0; k < n; ++k) {
            if (x >= eps.points[k].span_start_mi && x < eps.points[k].span_end_mi) {
                rep.vmt_cell[k] += fine.vmt_cell[c];
                rep.vht_cell[k] += fine.vht_cell[c];
                rep.vhd_cell[k] += fine.vhd_cell[c];
                break;
            }
        }
    }
    return rep;
}

TrajectoryMeasures trajectory_measures(const GroundTruth& gt, const MeasureConfig& cfg) {
    TrajectoryMeasures out;
    const double corridor_end = gt.cell_center_mi.back() + 0.5 * gt.grid.dx_mi;
    // Walk finer than the field step so queue-boundary crossings land
    // inside the right cell.
    const double step_min = 0.25 * gt.grid.dt_s / kSecPerMin;
    const double sim_end_min = gt.sim_start_min() + gt.spinup_min + gt.duration_min;
    const double window_end_min = gt.duration_min;

    std::vector<double> entry_times_min = corridor_entry_times(gt);
    out.vehicles = static_cast<int>(entry_times_min.size());

    for (double t_enter : entry_times_min) {
        double x = 0.0, t = t_enter;
        while (x < corridor_end && t < sim_end_min) {
            double v = gt.speed_sample(x, t);
            if (v < 0.1) v = 0.1;
            double dx_step = std::min(v * minutes_to_hours(step_min), corridor_end - x);
            double dt_used = dx_step / v;  // hours, shortened on the exit step
            if (t >= 0.0 && t < window_end_min) {
                out.vmt += dx_step;
                out.vht += dt_used;
                double delay = dx_step / v - dx_step / cfg.threshold_mph;
                if (cfg.clamp_delay) {
                    if (delay > 0.0) out.vhd += delay;
                } else {
                    out.vhd += delay;
                }
            }
            x += dx_step;
            t += step_min;
        }
    }
    return out;
}

PointTruth truth_at_position(const GroundTruth& gt, double pos_mi) {
    PointTruth out;
    int c = gt.cell_of(pos_mi);
    out.flow_vph = gt.flow_vph[c];
    out.speed_mph = gt.speed_mph[c];
    return out;
}

}  // namespace fwperf
