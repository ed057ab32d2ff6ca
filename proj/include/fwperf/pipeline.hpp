#ifndef FWPERF_PIPELINE_HPP
#define FWPERF_PIPELINE_HPP

#include <string>
#include <vector>

#include "fwperf/config.hpp"
#include "fwperf/csvio.hpp"

namespace fwperf {

struct RunManifest {
    std::string config_path;               // empty = built-in defaults
    std::string out_dir = "out";
    std::vector<std::string> scenarios;    // empty = all configured
    std::vector<uint64_t> seeds;           // empty = configured seeds
    std::string method = "both";           // traditional | hybrid | both
    int jobs = 1;
};

Config manifest_config(const RunManifest& m);

// Scenario/seed data directory: <out>/<scenario>/seed_<seed>
std::string run_dir(const RunManifest& m, const std::string& scenario, uint64_t seed);

// Scenario runs -> detector.csv, vendor.csv, truth.csv per seed, plus a
// top-level manifest.json recording the config hash and seed list.
void cmd_simulate(const Config& cfg, const RunManifest& m);

// GASM and C-GASM fields per seed plus an error table against the truth
// at cell boundaries (conflation_metrics.csv, seed-averaged).
void cmd_conflate(const Config& cfg, const RunManifest& m);

// Ground-truth / traditional / hybrid measures per scenario, averaged
// over seeds: report.csv, report_tidy.csv, report_cells.csv,
// improvement.csv.
void cmd_report(const Config& cfg, const RunManifest& m);

// Rebuild the improvement table from an existing report.csv.
void cmd_compare(const std::string& report_csv, const std::string& out_csv);

// Shared plumbing, exposed for tests.
struct SeedInputs {
    std::vector<DetectorSample> detector;
    std::vector<LinkTravelTime> vendor;
    TruthFrame truth;
};

SeedInputs load_seed_inputs(const std::string& dir, const TimeGrid& grid);
VdsSeries build_vds_series(const std::vector<DetectorSample>& samples, const Config& cfg,
                           const TimeGrid& grid);
SpaceTimeField truth_field_at_points(const TruthFrame& truth, const EvaluationPointSet& eps,
                                     Quantity kind);

struct ScenarioMeasures {
    PerfReport ground_truth;
    PerfReport traditional;
    PerfReport hybrid;
};

// Full two-method evaluation of one scenario/seed directory.
ScenarioMeasures evaluate_seed_dir(const Config& cfg, const std::string& scenario,
                                   const std::string& dir);

}  // namespace fwperf

#endif
