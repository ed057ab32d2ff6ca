#include "fwperf/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fwperf/timeutil.hpp"
#include "fwperf/units.hpp"

namespace fwperf {

using nlohmann::json;

uint64_t fnv1a64(const std::string& bytes) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

const ScenarioSpec& Config::scenario(const std::string& name) const {
    for (const auto& s : sim.scenarios)
        if (s.name == name) return s;
    throw ConfigError("unknown scenario: " + name);
}

void Config::validate() const {
    corridor.validate();
    smoothing.validate();
    fusion.vendor_weights.validate();
    for (const auto& l : corridor.links)
        if (!fusion.vendor_weights.phi.count(l.vendor_id))
            throw ConfigError("link " + l.id + " references vendor '" + l.vendor_id +
                              "' with no weight");
    sim.fd.validate();
    sim.probes.validate();
    if (sim.seeds.empty()) throw ConfigError("at least one seed required");
    if (sim.scenarios.empty()) throw ConfigError("at least one scenario required");
    for (const auto& s : sim.scenarios) s.validate();
    if (measures.threshold_mph <= 0.0) throw ConfigError("threshold speed must be > 0");
    for (double g : detector.g_factors.g_ft)
        if (g < 10.0 || g > 40.0) throw ConfigError("g-factor outside plausible [10, 40] ft");
}

namespace {

// Unit-suffixed scalar readers. Each accepts the internal-unit spelling
// and the metric alternative, e.g. delta_mi or delta_km.
double get_distance_mi(const json& obj, const std::string& base, double fallback) {
    if (obj.contains(base + "_mi")) return obj[base + "_mi"].get<double>();
    if (obj.contains(base + "_km")) return km_to_miles(obj[base + "_km"].get<double>());
    return fallback;
}

double get_speed_mph(const json& obj, const std::string& base, double fallback) {
    if (obj.contains(base + "_mph")) return obj[base + "_mph"].get<double>();
    if (obj.contains(base + "_kmph")) return kmph_to_mph(obj[base + "_kmph"].get<double>());
    return fallback;
}

double get_short_distance_ft(const json& obj, const std::string& base, double fallback) {
    if (obj.contains(base + "_ft")) return obj[base + "_ft"].get<double>();
    if (obj.contains(base + "_m")) return meters_to_feet(obj[base + "_m"].get<double>());
    return fallback;
}

double get_plain(const json& obj, const std::string& key, double fallback) {
    return obj.contains(key) ? obj[key].get<double>() : fallback;
}

}  // namespace

Config default_config() {
    Config cfg;
    cfg.source_hash = "builtin";

    auto& cor = cfg.corridor;
    cor.length_mi = 16.0;
    cor.cell_spacing_mi = 0.25;
    cor.suppression_radius_ft = 200.0;
    cor.lane_segments = {{0.0, 6}};

    // 33 stations at 0.32-0.68 mile spacings.
    const double vds_pos[] = {0.31,  0.75,  1.19,  1.68,  2.26,  2.69,  3.18,  3.76,  4.31,
                              4.81,  5.19,  5.51,  5.94,  6.43,  6.93,  7.49,  8.06,  8.56,
                              9.24,  9.69,  10.18, 10.56, 11.01, 11.44, 11.93, 12.37, 12.74,
                              13.19, 13.68, 14.26, 14.69, 15.18, 15.62};
    int n = 0;
    for (double p : vds_pos) {
        char id[16];
        std::snprintf(id, sizeof(id), "vds%02d", ++n);
        cor.vds.push_back({id, p, 6});
    }

    const double link_len[] = {1.2, 0.9, 1.4, 0.7, 1.1, 0.8, 1.3, 0.6,
                               1.0, 1.5, 0.8, 1.2, 0.5, 1.1, 0.9, 1.0};
    double cursor = 0.0;
    n = 0;
    for (double len : link_len) {
        char id[16];
        std::snprintf(id, sizeof(id), "L%02d", ++n);
        cor.links.push_back({id, "A", cursor, cursor + len});
        cursor += len;
    }

    cfg.detector.g_factors.g_ft = {22.0, 22.0, 26.0, 25.0, 24.0, 23.0};
    cfg.detector.smoothing_a = 10.0;

    // cfg.smoothing keeps its constructor defaults (0.8 km, 1 min, 100/10/90/20 kmph).

    cfg.fusion.vendor_weights.phi = {{"A", 1.0}};
    cfg.fusion.speed_cap_mph = 90.0;
    cfg.fusion.tt_gap_horizon_min = 10.0;

    cfg.sim.fd = FundamentalDiagram{68.0, 15.0, 200.0};
    cfg.sim.grid = SimGrid{0.05, 2.0};
    cfg.sim.probes = ProbeSpec{0.05, 0.10, 0.5};
    cfg.sim.noise = DetectorNoise{0.05, 2.0};
    cfg.sim.g_true.g_ft = {22.0, 22.0, 26.0, 25.0, 24.0, 23.0};
    cfg.sim.seeds = {101, 202};

    // Demand levels sized against the 6-lane capacity of ~14,750 veh/hr.
    auto make = [](const std::string& name, const std::string& start,
                   std::vector<DemandPoint> demand,
                   std::optional<BottleneckSpec> bneck) {
        ScenarioSpec s;
        s.name = name;
        s.window_start_s = parse_iso8601(start);
        s.duration_min = 60.0;
        s.spinup_min = 15.0;
        s.demand = std::move(demand);
        s.bottleneck = bneck;
        return s;
    };
    cfg.sim.scenarios = {
        make("before_morning_peak", "2020-07-15T06:00:00",
             {{-15.0, 9000.0}, {0.0, 9500.0}, {60.0, 13500.0}},
             BottleneckSpec{8.0, 0.22, 20.0, 60.0}),
        make("morning_peak", "2020-07-15T07:00:00", {{0.0, 12500.0}},
             BottleneckSpec{8.0, 0.30, 10.0, 50.0}),
        make("noon", "2020-07-15T13:00:00", {{0.0, 9600.0}},
             BottleneckSpec{8.0, 0.42, 15.0, 45.0}),
        make("afternoon_peak", "2020-07-15T17:00:00", {{0.0, 12100.0}},
             BottleneckSpec{8.0, 0.28, 5.0, 55.0}),
        make("night_offpeak", "2020-07-15T20:00:00", {{0.0, 3700.0}}, std::nullopt),
    };
    return cfg;
}

Config parse_config(const std::string& json_text, const std::string& hash) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }

    Config cfg = default_config();
    cfg.source_hash = hash;
    try {
        if (root.contains("corridor")) {
            const auto& c = root["corridor"];
            auto& cor = cfg.corridor;
            cor.length_mi = get_distance_mi(c, "length", cor.length_mi);
            cor.cell_spacing_mi = get_distance_mi(c, "cell_spacing", cor.cell_spacing_mi);
            cor.suppression_radius_ft =
                get_short_distance_ft(c, "suppression_radius", cor.suppression_radius_ft);
            if (c.contains("lanes")) {
                cor.lane_segments.clear();
                for (const auto& seg : c["lanes"])
                    cor.lane_segments.push_back(
                        {get_distance_mi(seg, "start", 0.0), seg["count"].get<int>()});
            }
            if (c.contains("vds")) {
                cor.vds.clear();
                for (const auto& v : c["vds"])
                    cor.vds.push_back({v["id"].get<std::string>(),
                                       get_distance_mi(v, "position", 0.0),
                                       v["lanes"].get<int>()});
            }
            if (c.contains("links")) {
                cor.links.clear();
                for (const auto& l : c["links"])
                    cor.links.push_back({l["id"].get<std::string>(),
                                         l["vendor_id"].get<std::string>(),
                                         get_distance_mi(l, "start", 0.0),
                                         get_distance_mi(l, "end", 0.0)});
            }
        }
        if (root.contains("detector")) {
            const auto& d = root["detector"];
            if (d.contains("g_factors_ft"))
                cfg.detector.g_factors.g_ft = d["g_factors_ft"].get<std::vector<double>>();
            cfg.detector.smoothing_a = get_plain(d, "smoothing_a_veh", cfg.detector.smoothing_a);
        }
        if (root.contains("smoothing")) {
            const auto& s = root["smoothing"];
            auto& p = cfg.smoothing;
            p.delta_mi = get_distance_mi(s, "delta", p.delta_mi);
            p.mu_min = get_plain(s, "mu_min", p.mu_min);
            p.v_ff_mph = get_speed_mph(s, "v_ff", p.v_ff_mph);
            p.v_cong_mph = get_speed_mph(s, "v_cong", p.v_cong_mph);
            p.v_cr_mph = get_speed_mph(s, "v_cr", p.v_cr_mph);
            p.delta_v_mph = get_speed_mph(s, "delta_v", p.delta_v_mph);
            p.kernel_floor = get_plain(s, "kernel_floor", p.kernel_floor);
        }
        if (root.contains("fusion")) {
            const auto& f = root["fusion"];
            if (f.contains("vendor_weights")) {
                cfg.fusion.vendor_weights.phi.clear();
                for (const auto& [id, w] : f["vendor_weights"].items())
                    cfg.fusion.vendor_weights.phi[id] = w.get<double>();
            }
            cfg.fusion.speed_cap_mph = get_speed_mph(f, "speed_cap", cfg.fusion.speed_cap_mph);
            cfg.fusion.tt_gap_horizon_min =
                get_plain(f, "tt_gap_horizon_min", cfg.fusion.tt_gap_horizon_min);
        }
        if (root.contains("measures")) {
            const auto& m = root["measures"];
            cfg.measures.threshold_mph = get_speed_mph(m, "threshold", cfg.measures.threshold_mph);
            if (m.contains("clamp_delay")) cfg.measures.clamp_delay = m["clamp_delay"].get<bool>();
        }
        if (root.contains("simulation")) {
            const auto& s = root["simulation"];
            if (s.contains("fd")) {
                const auto& f = s["fd"];
                cfg.sim.fd.free_flow_mph = get_speed_mph(f, "free_flow", cfg.sim.fd.free_flow_mph);
                cfg.sim.fd.wave_mph = get_speed_mph(f, "wave", cfg.sim.fd.wave_mph);
                cfg.sim.fd.jam_density_vpmpl =
                    get_plain(f, "jam_density_vpmpl", cfg.sim.fd.jam_density_vpmpl);
            }
            cfg.sim.grid.dx_mi = get_distance_mi(s, "dx", cfg.sim.grid.dx_mi);
            cfg.sim.grid.dt_s = get_plain(s, "dt_s", cfg.sim.grid.dt_s);
            cfg.sim.probes.penetration = get_plain(s, "probe_penetration", cfg.sim.probes.penetration);
            cfg.sim.probes.crossing_margin =
                get_plain(s, "probe_crossing_margin", cfg.sim.probes.crossing_margin);
            cfg.sim.probes.obs_dt_s = get_plain(s, "probe_obs_dt_s", cfg.sim.probes.obs_dt_s);
            cfg.sim.noise.count_sigma = get_plain(s, "count_noise_frac", cfg.sim.noise.count_sigma);
            cfg.sim.noise.effective_length_sigma_ft = get_short_distance_ft(
                s, "effective_length_sigma", cfg.sim.noise.effective_length_sigma_ft);
            if (s.contains("true_g_factors_ft"))
                cfg.sim.g_true.g_ft = s["true_g_factors_ft"].get<std::vector<double>>();
            if (s.contains("seeds")) cfg.sim.seeds = s["seeds"].get<std::vector<uint64_t>>();
            if (s.contains("scenarios")) {
                cfg.sim.scenarios.clear();
                for (const auto& sc : s["scenarios"]) {
                    ScenarioSpec spec;
                    spec.name = sc["name"].get<std::string>();
                    spec.window_start_s = parse_iso8601(sc["start_time"].get<std::string>());
                    spec.duration_min = get_plain(sc, "duration_min", 60.0);
                    spec.spinup_min = get_plain(sc, "spinup_min", 15.0);
                    for (const auto& d : sc["demand_vph"])
                        spec.demand.push_back({d[0].get<double>(), d[1].get<double>()});
                    if (sc.contains("bottleneck") && !sc["bottleneck"].is_null()) {
                        const auto& b = sc["bottleneck"];
                        BottleneckSpec bn;
                        bn.position_mi = get_distance_mi(b, "position", 0.0);
                        bn.capacity_drop_frac = b["capacity_drop_frac"].get<double>();
                        bn.start_min = b["start_min"].get<double>();
                        bn.end_min = b["end_min"].get<double>();
                        spec.bottleneck = bn;
                    }
                    cfg.sim.scenarios.push_back(std::move(spec));
                }
            }
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }

    try {
        cfg.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
    return cfg;
}

Config load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config file not found: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    char hex[24];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(text)));
    return parse_config(text, hex);
}

}  // namespace fwperf
