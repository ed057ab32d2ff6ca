#ifndef FWPERF_CONFIG_HPP
#define FWPERF_CONFIG_HPP

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "fwperf/conflate.hpp"
#include "fwperf/detector.hpp"
#include "fwperf/geometry.hpp"
#include "fwperf/measures.hpp"
#include "fwperf/sim.hpp"
#include "fwperf/ttfuse.hpp"

namespace fwperf {

// Configuration problems exit with code 2; everything else with 1.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct DetectorConfig {
    GFactorSet g_factors;          // estimator-side effective lengths
    double smoothing_a = 10.0;     // vehicles per interval
};

struct FusionConfig {
    VendorWeights vendor_weights;
    double speed_cap_mph = 90.0;
    double tt_gap_horizon_min = 10.0;
};

struct SimulationConfig {
    FundamentalDiagram fd;
    SimGrid grid;
    ProbeSpec probes;
    DetectorNoise noise;
    GFactorSet g_true;             // generator-side effective lengths
    std::vector<ScenarioSpec> scenarios;
    std::vector<uint64_t> seeds;
};

struct Config {
    CorridorGeometry corridor;
    DetectorConfig detector;
    SmoothingParams smoothing;
    FusionConfig fusion;
    MeasureConfig measures;
    SimulationConfig sim;
    std::string source_hash;  // FNV-1a of the config file bytes (or "builtin")

    const ScenarioSpec& scenario(const std::string& name) const;
    void validate() const;
};

// The built-in synthetic testbed: 16-mile corridor, 6 lanes, 33 VDS at
// 0.3-0.7 mile spacings, 16 vendor links, five one-hour scenarios.
Config default_config();

// Load from JSON. Distances, speeds and durations carry unit suffixes in
// the key names; metric spellings (_km, _kmph, _m) convert on load.
Config load_config(const std::string& path);
Config parse_config(const std::string& json_text, const std::string& hash);

uint64_t fnv1a64(const std::string& bytes);

}  // namespace fwperf

#endif
