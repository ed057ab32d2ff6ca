#include "fwperf/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fwperf/timeutil.hpp"
#include "fwperf/units.hpp"

namespace fs = std::filesystem;

namespace fwperf {

namespace {

TimeGrid scenario_grid(const ScenarioSpec& sc) {
    return TimeGrid{sc.window_start_s, 1.0, static_cast<int>(std::round(sc.duration_min))};
}

std::vector<std::string> selected_scenarios(const Config& cfg, const RunManifest& m) {
    if (m.scenarios.empty()) {
        std::vector<std::string> names;
        for (const auto& s : cfg.sim.scenarios) names.push_back(s.name);
        return names;
    }
    for (const auto& name : m.scenarios) cfg.scenario(name);  // existence check
    return m.scenarios;
}

std::vector<uint64_t> selected_seeds(const Config& cfg, const RunManifest& m) {
    return m.seeds.empty() ? cfg.sim.seeds : m.seeds;
}

uint64_t probe_seed(uint64_t seed) { return seed * 0x9e3779b97f4a7c15ull + 1; }

void run_parallel(int jobs, std::vector<std::function<void()>> tasks) {
    if (jobs < 1) jobs = 1;
    jobs = std::min<int>(jobs, static_cast<int>(tasks.size()));
    if (jobs <= 1) {
        for (auto& t : tasks) t();
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error = nullptr;
    std::mutex err_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < jobs; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= tasks.size()) return;
                try {
                    tasks[i]();
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::ofstream checked_writer(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

PerfReport truth_frame_measures(const TruthFrame& truth, const MeasureConfig& cfg) {
    PerfReport rep;
    rep.method = Method::ground_truth;
    const int nc = truth.n_cells();
    const int nm = truth.n_minutes();
    if (nc < 2) throw std::runtime_error("truth frame too small");
    const double dx = truth.positions_mi[1] - truth.positions_mi[0];
    const double step_hr = minutes_to_hours(1.0);

    rep.point_positions_mi = truth.positions_mi;
    rep.vmt_cell.assign(nc, 0.0);
    rep.vht_cell.assign(nc, 0.0);
    rep.vhd_cell.assign(nc, 0.0);
    for (int c = 0; c < nc; ++c) {
        for (int m = 0; m < nm; ++m) {
            double count = truth.flow_vph[c][m] * step_hr;
            if (count <= 0.0) continue;
            double v = truth.speed_mph[c][m];
            if (v <= 0.0) continue;
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

PerfReport average_reports(const std::vector<PerfReport>& reps) {
    PerfReport avg = reps.front();
    if (reps.size() == 1) return avg;
    for (std::size_t r = 1; r < reps.size(); ++r) {
        avg.vmt += reps[r].vmt;
        avg.vht += reps[r].vht;
        avg.vhd += reps[r].vhd;
        for (std::size_t k = 0; k < avg.vmt_cell.size(); ++k) {
            avg.vmt_cell[k] += reps[r].vmt_cell[k];
            avg.vht_cell[k] += reps[r].vht_cell[k];
            avg.vhd_cell[k] += reps[r].vhd_cell[k];
        }
        avg.coverage_gaps += reps[r].coverage_gaps;
        avg.capped_cells += reps[r].capped_cells;
    }
    double inv = 1.0 / reps.size();
    avg.vmt *= inv;
    avg.vht *= inv;
    avg.vhd *= inv;
    for (std::size_t k = 0; k < avg.vmt_cell.size(); ++k) {
        avg.vmt_cell[k] *= inv;
        avg.vht_cell[k] *= inv;
        avg.vhd_cell[k] *= inv;
    }
    return avg;
}

}  // namespace

Config manifest_config(const RunManifest& m) {
    Config cfg = m.config_path.empty() ? default_config() : load_config(m.config_path);
    cfg.validate();
    return cfg;
}

std::string run_dir(const RunManifest& m, const std::string& scenario, uint64_t seed) {
    return m.out_dir + "/" + scenario + "/seed_" + std::to_string(seed);
}

void cmd_simulate(const Config& cfg, const RunManifest& m) {
    auto names = selected_scenarios(cfg, m);
    auto seeds = selected_seeds(cfg, m);

    std::vector<std::function<void()>> tasks;
    for (const auto& name : names) {
        tasks.push_back([&, name] {
            const auto& sc = cfg.scenario(name);
            TimeGrid grid = scenario_grid(sc);
            GroundTruth gt = run_ground_truth(cfg.corridor, sc, cfg.sim.fd, cfg.sim.grid);
            for (uint64_t seed : seeds) {
                std::string dir = run_dir(m, name, seed);
                fs::create_directories(dir);
                auto samples = emulate_detectors(gt, cfg.corridor, cfg.sim.g_true,
                                                 cfg.sim.noise, seed);
                auto probes = generate_probe_tts(gt, cfg.corridor.links, cfg.sim.probes,
                                                 probe_seed(seed));
                write_detector_csv(dir + "/detector.csv", samples, grid);
                write_vendor_csv(dir + "/vendor.csv", probes, grid);
                write_truth_csv(dir + "/truth.csv", gt);
            }
        });
    }
    run_parallel(m.jobs, std::move(tasks));

    nlohmann::json man;
    man["config_hash"] = cfg.source_hash;
    man["scenarios"] = names;
    man["seeds"] = seeds;
    fs::create_directories(m.out_dir);
    auto out = checked_writer(m.out_dir + "/manifest.json");
    out << man.dump(2) << "\n";
}

SeedInputs load_seed_inputs(const std::string& dir, const TimeGrid& grid) {
    for (const char* f : {"/detector.csv", "/vendor.csv", "/truth.csv"})
        if (!fs::exists(dir + f))
            throw std::runtime_error("missing input file: " + dir + f +
                                     " (run the simulate command first)");
    SeedInputs in;
    in.detector = read_detector_csv(dir + "/detector.csv", grid);
    in.vendor = read_vendor_csv(dir + "/vendor.csv", grid);
    in.truth = read_truth_csv(dir + "/truth.csv", grid);
    return in;
}

VdsSeries build_vds_series(const std::vector<DetectorSample>& samples, const Config& cfg,
                           const TimeGrid& grid) {
    VdsAggregate agg = aggregate_vds(samples, cfg.corridor, grid, cfg.detector.g_factors,
                                     cfg.detector.smoothing_a);
    std::vector<double> positions;
    positions.reserve(cfg.corridor.vds.size());
    for (const auto& v : cfg.corridor.vds) positions.push_back(v.position_mi);
    return VdsSeries(std::move(positions), agg.flow, agg.speed);
}

SpaceTimeField truth_field_at_points(const TruthFrame& truth, const EvaluationPointSet& eps,
                                     Quantity kind) {
    const int n_pts = static_cast<int>(eps.size());
    const int n_int = truth.n_minutes();
    SpaceTimeField out(kind, n_pts, n_int);
    for (int k = 0; k < n_pts; ++k) {
        int c = truth.cell_nearest(eps.points[k].position_mi);
        for (int i = 0; i < n_int; ++i) {
            double v = 0.0;
            switch (kind) {
                case Quantity::flow_vph: v = truth.flow_vph[c][i]; break;
                case Quantity::speed_mph: v = truth.speed_mph[c][i]; break;
                case Quantity::density_vpm: v = truth.density_vpm[c][i]; break;
                default: throw std::invalid_argument("unsupported truth quantity");
            }
            out.set(k, i, v);
        }
    }
    return out;
}

ScenarioMeasures evaluate_seed_dir(const Config& cfg, const std::string& scenario,
                                   const std::string& dir) {
    const auto& sc = cfg.scenario(scenario);
    TimeGrid grid = scenario_grid(sc);
    SeedInputs in = load_seed_inputs(dir, grid);

    ScenarioMeasures out;
    out.ground_truth = truth_frame_measures(in.truth, cfg.measures);

    VdsSeries series = build_vds_series(in.detector, cfg, grid);
    out.traditional =
        traditional_report(series.flow, series.speed, cfg.corridor, grid, cfg.measures);

    EvaluationPointSet eps = derive_evaluation_points(cfg.corridor);
    ConflatedFields fields =
        conflate(series, eps, grid, cfg.smoothing, ConflationMethod::cgasm);
    CellTravelTimes cell_tts = conflate_travel_times(
        in.vendor, cfg.corridor, eps, grid, fields.density, cfg.fusion.vendor_weights,
        cfg.smoothing.v_ff_mph, cfg.fusion.tt_gap_horizon_min);
    out.hybrid = hybrid_report(fields.flow, cell_tts, eps, grid, cfg.measures,
                               cfg.fusion.speed_cap_mph);
    return out;
}

namespace {

void write_conflated_csv(const std::string& path, const ConflatedFields& fields,
                         const EvaluationPointSet& eps, const TimeGrid& grid) {
    auto out = checked_writer(path);
    out << "timestamp,position_mi,kind,flow_vph,speed_mph,density_vpm\n";
    char buf[200];
    for (int i = 0; i < grid.n_intervals; ++i) {
        std::string ts = format_iso8601(grid.interval_start_s(i));
        for (std::size_t k = 0; k < eps.size(); ++k) {
            const auto& pt = eps.points[k];
            auto cell = [&](const SpaceTimeField& f) {
                return f.is_missing(static_cast<int>(k), i)
                           ? std::string()
                           : [&] {
                                 char v[32];
                                 std::snprintf(v, sizeof(v), "%.6f",
                                               f.at(static_cast<int>(k), i));
                                 return std::string(v);
                             }();
            };
            std::snprintf(buf, sizeof(buf), "%s,%.4f,%s,%s,%s,%s\n", ts.c_str(),
                          pt.position_mi,
                          pt.kind == PointKind::vds ? "vds" : "cell_boundary",
                          cell(fields.flow).c_str(), cell(fields.speed).c_str(),
                          cell(fields.density).c_str());
            out << buf;
        }
    }
}

struct MetricAccum {
    double mae_sum = 0.0;
    double mape_sum = 0.0;
    int n = 0;

    void add(const ErrorMetrics& m) {
        mae_sum += m.mae;
        mape_sum += m.mape_pct;
        ++n;
    }
    double mae() const { return n ? mae_sum / n : 0.0; }
    double mape() const { return n ? mape_sum / n : 0.0; }
};

// Error of a conflated field against truth, cell boundaries only (the
// stations reproduce their own measurements by construction).
ErrorMetrics boundary_metrics(const SpaceTimeField& est, const SpaceTimeField& truth,
                              const EvaluationPointSet& eps) {
    std::vector<double> e, t;
    for (std::size_t k = 0; k < eps.size(); ++k) {
        if (eps.points[k].kind != PointKind::cell_boundary) continue;
        for (int i = 0; i < est.n_intervals(); ++i) {
            int kk = static_cast<int>(k);
            if (est.is_missing(kk, i) || truth.is_missing(kk, i)) continue;
            e.push_back(est.at(kk, i));
            t.push_back(truth.at(kk, i));
        }
    }
    return error_metrics(e, t);
}

}  // namespace

void cmd_conflate(const Config& cfg, const RunManifest& m) {
    auto names = selected_scenarios(cfg, m);
    auto seeds = selected_seeds(cfg, m);
    EvaluationPointSet eps = derive_evaluation_points(cfg.corridor);

    struct Row {
        std::string scenario, method, quantity;
        double mae, mape;
    };
    std::vector<std::vector<Row>> rows_per_scenario(names.size());

    std::vector<std::function<void()>> tasks;
    for (std::size_t si = 0; si < names.size(); ++si) {
        tasks.push_back([&, si] {
            const std::string& name = names[si];
            const auto& sc = cfg.scenario(name);
            TimeGrid grid = scenario_grid(sc);

            MetricAccum gasm_flow, gasm_speed, cgasm_flow, cgasm_speed;
            for (uint64_t seed : seeds) {
                std::string dir = run_dir(m, name, seed);
                SeedInputs in = load_seed_inputs(dir, grid);
                VdsSeries series = build_vds_series(in.detector, cfg, grid);

                auto g = conflate(series, eps, grid, cfg.smoothing, ConflationMethod::gasm);
                auto c = conflate(series, eps, grid, cfg.smoothing, ConflationMethod::cgasm);
                write_conflated_csv(dir + "/conflated_gasm.csv", g, eps, grid);
                write_conflated_csv(dir + "/conflated_cgasm.csv", c, eps, grid);

                auto truth_flow = truth_field_at_points(in.truth, eps, Quantity::flow_vph);
                auto truth_speed = truth_field_at_points(in.truth, eps, Quantity::speed_mph);
                gasm_flow.add(boundary_metrics(g.flow, truth_flow, eps));
                gasm_speed.add(boundary_metrics(g.speed, truth_speed, eps));
                cgasm_flow.add(boundary_metrics(c.flow, truth_flow, eps));
                cgasm_speed.add(boundary_metrics(c.speed, truth_speed, eps));
            }
            rows_per_scenario[si] = {
                {name, "cgasm", "flow", cgasm_flow.mae(), cgasm_flow.mape()},
                {name, "gasm", "flow", gasm_flow.mae(), gasm_flow.mape()},
                {name, "cgasm", "speed", cgasm_speed.mae(), cgasm_speed.mape()},
                {name, "gasm", "speed", gasm_speed.mae(), gasm_speed.mape()},
            };
        });
    }
    run_parallel(m.jobs, std::move(tasks));

    fs::create_directories(m.out_dir);
    auto out = checked_writer(m.out_dir + "/conflation_metrics.csv");
    out << "scenario,method,quantity,mae,mape_pct\n";
    char buf[160];
    for (const auto& rows : rows_per_scenario) {
        for (const auto& r : rows) {
            std::snprintf(buf, sizeof(buf), "%s,%s,%s,%.3f,%.3f\n", r.scenario.c_str(),
                          r.method.c_str(), r.quantity.c_str(), r.mae, r.mape);
            out << buf;
        }
    }
}

void cmd_report(const Config& cfg, const RunManifest& m) {
    auto names = selected_scenarios(cfg, m);
    auto seeds = selected_seeds(cfg, m);
    EvaluationPointSet eps = derive_evaluation_points(cfg.corridor);

    const bool want_traditional = m.method == "both" || m.method == "traditional";
    const bool want_hybrid = m.method == "both" || m.method == "hybrid";
    if (!want_traditional && !want_hybrid)
        throw ConfigError("method must be traditional, hybrid, or both: " + m.method);

    struct ScenarioRow {
        PerfReport truth, traditional, hybrid, truth_spans;
    };
    std::vector<ScenarioRow> results(names.size());

    std::vector<std::function<void()>> tasks;
    for (std::size_t si = 0; si < names.size(); ++si) {
        tasks.push_back([&, si] {
            const std::string& name = names[si];
            const auto& sc = cfg.scenario(name);
            TimeGrid grid = scenario_grid(sc);
            std::vector<PerfReport> truths, trads, hybs, truth_spans;
            for (uint64_t seed : seeds) {
                std::string dir = run_dir(m, name, seed);
                ScenarioMeasures r = evaluate_seed_dir(cfg, name, dir);
                truths.push_back(r.ground_truth);
                trads.push_back(r.traditional);
                hybs.push_back(r.hybrid);

                // Re-aggregate the fine truth onto the evaluation spans
                // for a comparable per-cell breakdown.
                SeedInputs in = load_seed_inputs(dir, grid);
                PerfReport spans;
                spans.method = Method::ground_truth;
                spans.point_positions_mi.resize(eps.size());
                spans.vmt_cell.assign(eps.size(), 0.0);
                spans.vht_cell.assign(eps.size(), 0.0);
                spans.vhd_cell.assign(eps.size(), 0.0);
                PerfReport fine = r.ground_truth;
                for (std::size_t k = 0; k < eps.size(); ++k)
                    spans.point_positions_mi[k] = eps.points[k].position_mi;
                for (std::size_t c = 0; c < fine.point_positions_mi.size(); ++c) {
                    double x = fine.point_positions_mi[c];
                    for (std::size_t k = 0; k < eps.size(); ++k) {
                        if (x >= eps.points[k].span_start_mi && x < eps.points[k].span_end_mi) {
                            spans.vmt_cell[k] += fine.vmt_cell[c];
                            spans.vht_cell[k] += fine.vht_cell[c];
                            spans.vhd_cell[k] += fine.vhd_cell[c];
                            break;
                        }
                    }
                }
                spans.vmt = fine.vmt;
                spans.vht = fine.vht;
                spans.vhd = fine.vhd;
                truth_spans.push_back(std::move(spans));
            }
            results[si] = {average_reports(truths), average_reports(trads),
                           average_reports(hybs), average_reports(truth_spans)};
        });
    }
    run_parallel(m.jobs, std::move(tasks));

    for (std::size_t si = 0; si < names.size(); ++si) {
        const auto& r = results[si];
        if (r.traditional.coverage_gaps || r.hybrid.coverage_gaps || r.hybrid.capped_cells)
            std::printf("note: %s: coverage gaps traditional %d hybrid %d, capped cell-minutes %d\n",
                        names[si].c_str(), r.traditional.coverage_gaps,
                        r.hybrid.coverage_gaps, r.hybrid.capped_cells);
    }

    fs::create_directories(m.out_dir);
    char buf[200];

    {
        auto out = checked_writer(m.out_dir + "/report.csv");
        out << "scenario,method,vmt,vht,vhd\n";
        for (std::size_t si = 0; si < names.size(); ++si) {
            auto row = [&](const PerfReport& r) {
                std::snprintf(buf, sizeof(buf), "%s,%s,%.2f,%.2f,%.2f\n", names[si].c_str(),
                              method_name(r.method).c_str(), r.vmt, r.vht, r.vhd);
                out << buf;
            };
            row(results[si].truth);
            if (want_traditional) row(results[si].traditional);
            if (want_hybrid) row(results[si].hybrid);
        }
    }
    {
        auto out = checked_writer(m.out_dir + "/report_tidy.csv");
        out << "measure,method,scenario,value\n";
        for (std::size_t si = 0; si < names.size(); ++si) {
            auto rows = [&](const PerfReport& r) {
                std::string mn = method_name(r.method);
                std::snprintf(buf, sizeof(buf), "vmt,%s,%s,%.2f\nvht,%s,%s,%.2f\nvhd,%s,%s,%.2f\n",
                              mn.c_str(), names[si].c_str(), r.vmt, mn.c_str(),
                              names[si].c_str(), r.vht, mn.c_str(), names[si].c_str(), r.vhd);
                out << buf;
            };
            rows(results[si].truth);
            if (want_traditional) rows(results[si].traditional);
            if (want_hybrid) rows(results[si].hybrid);
        }
    }
    {
        auto out = checked_writer(m.out_dir + "/report_cells.csv");
        out << "scenario,method,position_mi,vmt,vht,vhd\n";
        for (std::size_t si = 0; si < names.size(); ++si) {
            auto rows = [&](const PerfReport& r) {
                for (std::size_t k = 0; k < r.point_positions_mi.size(); ++k) {
                    std::snprintf(buf, sizeof(buf), "%s,%s,%.4f,%.2f,%.2f,%.2f\n",
                                  names[si].c_str(), method_name(r.method).c_str(),
                                  r.point_positions_mi[k], r.vmt_cell[k], r.vht_cell[k],
                                  r.vhd_cell[k]);
                    out << buf;
                }
            };
            rows(results[si].truth_spans);
            if (want_traditional) rows(results[si].traditional);
            if (want_hybrid) rows(results[si].hybrid);
        }
    }
    if (want_traditional && want_hybrid) {
        auto out = checked_writer(m.out_dir + "/improvement.csv");
        out << "scenario,measure,traditional_pct_err,hybrid_pct_err,improvement_pp\n";
        for (std::size_t si = 0; si < names.size(); ++si) {
            const auto& r = results[si];
            auto row = [&](const char* measure, double trad, double hyb, double truth) {
                auto imp = improvement(trad, hyb, truth);
                if (imp) {
                    std::snprintf(buf, sizeof(buf), "%s,%s,%.2f,%.2f,%.2f\n",
                                  names[si].c_str(), measure, imp->traditional_pct_err,
                                  imp->hybrid_pct_err, imp->improvement_pp);
                } else {
                    std::snprintf(buf, sizeof(buf), "%s,%s,NA,NA,NA\n", names[si].c_str(),
                                  measure);
                }
                out << buf;
            };
            row("vmt", r.traditional.vmt, r.hybrid.vmt, r.truth.vmt);
            row("vht", r.traditional.vht, r.hybrid.vht, r.truth.vht);
            row("vhd", r.traditional.vhd, r.hybrid.vhd, r.truth.vhd);
        }
    }
}

void cmd_compare(const std::string& report_csv, const std::string& out_csv) {
    std::ifstream in(report_csv);
    if (!in) throw std::runtime_error("cannot open " + report_csv);
    std::string line;
    if (!std::getline(in, line) || line.rfind("scenario,method,vmt,vht,vhd", 0) != 0)
        throw std::runtime_error("unexpected report header in " + report_csv);

    struct Vals {
        double vmt = 0, vht = 0, vhd = 0;
        bool set = false;
    };
    std::map<std::string, std::map<std::string, Vals>> table;  // scenario -> method
    std::vector<std::string> order;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string scen, method, v1, v2, v3;
        std::getline(ss, scen, ',');
        std::getline(ss, method, ',');
        std::getline(ss, v1, ',');
        std::getline(ss, v2, ',');
        std::getline(ss, v3, ',');
        if (!table.count(scen)) order.push_back(scen);
        table[scen][method] = {std::stod(v1), std::stod(v2), std::stod(v3), true};
    }

    auto out = checked_writer(out_csv);
    out << "scenario,measure,traditional_pct_err,hybrid_pct_err,improvement_pp\n";
    char buf[200];
    for (const auto& scen : order) {
        const auto& methods = table[scen];
        if (!methods.count("ground_truth") || !methods.count("traditional") ||
            !methods.count("hybrid"))
            continue;
        const auto& t = methods.at("ground_truth");
        const auto& tr = methods.at("traditional");
        const auto& hy = methods.at("hybrid");
        auto row = [&](const char* measure, double trad, double hyb, double truth) {
            auto imp = improvement(trad, hyb, truth);
            if (imp)
                std::snprintf(buf, sizeof(buf), "%s,%s,%.2f,%.2f,%.2f\n", scen.c_str(),
                              measure, imp->traditional_pct_err, imp->hybrid_pct_err,
                              imp->improvement_pp);
            else
                std::snprintf(buf, sizeof(buf), "%s,%s,NA,NA,NA\n", scen.c_str(), measure);
            out << buf;
            std::fputs(buf, stdout);
        };
        row("vmt", tr.vmt, hy.vmt, t.vmt);
        row("vht", tr.vht, hy.vht, t.vht);
        row("vhd", tr.vhd, hy.vhd, t.vhd);
    }
}

}  // namespace fwperf
