// fwperf: batch front-end for the freeway performance-measure pipeline.
//
//   fwperf simulate --config cfg.json --out out/
//   fwperf conflate --config cfg.json --out out/
//   fwperf report   --config cfg.json --out out/ --method both
//   fwperf compare  --report out/report.csv --out out/
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration error.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fwperf/pipeline.hpp"

namespace {

void split_seeds(const std::string& text, std::vector<uint64_t>& out) {
    std::string cur;
    for (char ch : text + ",") {
        if (ch == ',') {
            if (!cur.empty()) out.push_back(std::stoull(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Freeway performance measures from point detectors and probe travel times"};
    app.require_subcommand(1);

    fwperf::RunManifest manifest;
    std::string seed_text;
    std::string report_path;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", manifest.config_path, "Configuration file (JSON)")
            ->envname("FWPERF_CONFIG");
        cmd->add_option("--out", manifest.out_dir, "Output directory")->envname("FWPERF_OUT");
        cmd->add_option("--seed", seed_text, "Comma-separated replication seeds")
            ->envname("FWPERF_SEED");
        cmd->add_option("--scenario", manifest.scenarios, "Scenario name (repeatable)")
            ->envname("FWPERF_SCENARIO");
        cmd->add_option("--jobs", manifest.jobs, "Parallel scenario jobs")
            ->envname("FWPERF_JOBS");
    };

    auto* sim = app.add_subcommand("simulate", "Generate detector, vendor, and truth CSVs");
    add_common(sim);
    auto* con = app.add_subcommand("conflate", "Run GASM/C-GASM and score against truth");
    add_common(con);
    auto* rep = app.add_subcommand("report", "Compute VMT/VHT/VHD for all methods");
    add_common(rep);
    rep->add_option("--method", manifest.method, "traditional | hybrid | both")
        ->envname("FWPERF_METHOD");
    auto* cmp = app.add_subcommand("compare", "Improvement table from an existing report.csv");
    cmp->add_option("--report", report_path, "Path to report.csv")->required();
    cmp->add_option("--out", manifest.out_dir, "Output directory")->envname("FWPERF_OUT");

    CLI11_PARSE(app, argc, argv);
    split_seeds(seed_text, manifest.seeds);

    try {
        if (cmp->parsed()) {
            fwperf::cmd_compare(report_path, manifest.out_dir + "/improvement.csv");
            return 0;
        }
        fwperf::Config cfg = fwperf::manifest_config(manifest);
        if (sim->parsed()) fwperf::cmd_simulate(cfg, manifest);
        if (con->parsed()) fwperf::cmd_conflate(cfg, manifest);
        if (rep->parsed()) fwperf::cmd_report(cfg, manifest);
        return 0;
    } catch (const fwperf::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
