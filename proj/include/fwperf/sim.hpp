#ifndef FWPERF_SIM_HPP
#define FWPERF_SIM_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fwperf/detector.hpp"
#include "fwperf/geometry.hpp"
#include "fwperf/measures.hpp"
#include "fwperf/time_grid.hpp"
#include "fwperf/ttfuse.hpp"

namespace fwperf {

// Triangular flow-density relation, parameters per lane.
struct FundamentalDiagram {
    double free_flow_mph = 68.0;
    double wave_mph = 15.0;              // backward wave magnitude
    double jam_density_vpmpl = 200.0;

    double critical_density_vpmpl() const {
        return jam_density_vpmpl * wave_mph / (free_flow_mph + wave_mph);
    }
    double capacity_vphpl() const { return free_flow_mph * critical_density_vpmpl(); }
    // Speed at a per-lane density; empty road reads as free flow.
    double speed_at(double k_vpmpl) const {
        if (k_vpmpl <= critical_density_vpmpl()) return free_flow_mph;
        if (k_vpmpl >= jam_density_vpmpl) return 0.0;
        return wave_mph * (jam_density_vpmpl - k_vpmpl) / k_vpmpl;
    }
    void validate() const;
};

struct BottleneckSpec {
    double position_mi = 0.0;
    double capacity_drop_frac = 0.0;  // fraction of capacity removed while active
    double start_min = 0.0;           // relative to window start
    double end_min = 0.0;
};

struct DemandPoint {
    double minute = 0.0;  // relative to window start; negative = spin-up
    double vph = 0.0;
};

struct ScenarioSpec {
    std::string name;
    int64_t window_start_s = 0;
    double duration_min = 60.0;
    double spinup_min = 15.0;
    std::vector<DemandPoint> demand;  // piecewise-linear inflow profile
    std::optional<BottleneckSpec> bottleneck;

    double demand_at(double minute) const;  // linear between points, flat outside
    double sim_start_min() const { return -spinup_min; }
    void validate() const;
};

struct SimGrid {
    double dx_mi = 0.05;
    double dt_s = 2.0;
};

struct ProbeSpec {
    double penetration = 0.05;
    double crossing_margin = 0.10;  // both link ends must be observed inside this share
    double obs_dt_s = 0.5;          // probe position report spacing

    void validate() const;
};

struct DetectorNoise {
    double count_sigma = 0.05;              // multiplicative, per lane-minute
    double effective_length_sigma_ft = 2.0;  // per vehicle, averages down with count
};

// Macroscopic ground truth from a cell-transmission run. Minute fields
// cover the reporting window only; the step-resolution speed field spans
// the spin-up too and drives trajectory integration.
class GroundTruth {
  public:
    SimGrid grid;
    double spinup_min = 0.0;
    double duration_min = 60.0;
    int64_t window_start_s = 0;

    std::vector<double> cell_center_mi;
    std::vector<int> cell_lanes;
    // [cell][minute], window minutes only
    std::vector<std::vector<double>> flow_vph;
    std::vector<std::vector<double>> speed_mph;
    std::vector<std::vector<double>> density_vpm;
    // [cell][step], spin-up included
    std::vector<std::vector<double>> speed_step;
    std::vector<double> inflow_per_step_veh;
    double conservation_rel_err = 0.0;

    int n_cells() const { return static_cast<int>(cell_center_mi.size()); }
    int n_minutes() const { return static_cast<int>(duration_min); }
    int n_steps() const { return static_cast<int>(inflow_per_step_veh.size()); }
    double dt_hours() const { return seconds_to_hours(grid.dt_s); }
    double sim_start_min() const { return -spinup_min; }  // relative to window start

    int cell_of(double pos_mi) const;
    // Bilinear speed lookup at (position, minute-relative-to-window-start).
    double speed_lookup(double pos_mi, double t_min) const;
    // Nearest cell/step sample of the same field (Lagrangian counterpart
    // of the per-cell sums).
    double speed_sample(double pos_mi, double t_min) const;
    TimeGrid minute_grid() const {
        return TimeGrid{window_start_s, 1.0, n_minutes()};
    }
};

// Godunov/CTM integration; throws std::invalid_argument when the grid
// violates the CFL bound for the diagram.
GroundTruth run_ground_truth(const CorridorGeometry& geom, const ScenarioSpec& scenario,
                             const FundamentalDiagram& fd, const SimGrid& grid);

// Corridor entry times (minutes relative to window start) implied by the
// cumulative inflow; one entry per whole vehicle.
std::vector<double> corridor_entry_times(const GroundTruth& gt);

// Noisy single-loop emulation at the VDS positions.
std::vector<DetectorSample> emulate_detectors(const GroundTruth& gt,
                                              const CorridorGeometry& geom,
                                              const GFactorSet& g_true,
                                              const DetectorNoise& noise, uint64_t seed);

// Probe travel times per link-minute. A probe counts for a link only
// when observed inside both the entry and exit margin zones; the travel
// time is last-minus-first observation, binned by exit minute.
std::vector<LinkTravelTime> generate_probe_tts(const GroundTruth& gt,
                                               const std::vector<LinkDef>& links,
                                               const ProbeSpec& probes, uint64_t seed);

// VMT/VHT/VHD folded over the fine grid; the oracle both methods are
// scored against.
PerfReport ground_truth_measures(const GroundTruth& gt, const MeasureConfig& cfg);

// The same totals re-aggregated onto arbitrary spans (per-cell reporting).
PerfReport ground_truth_measures_on_spans(const GroundTruth& gt, const MeasureConfig& cfg,
                                          const EvaluationPointSet& eps);

// Independent check: measures integrated along full-population vehicle
// trajectories instead of the field.
struct TrajectoryMeasures {
    double vmt = 0.0;
    double vht = 0.0;
    double vhd = 0.0;
    int vehicles = 0;
};

TrajectoryMeasures trajectory_measures(const GroundTruth& gt, const MeasureConfig& cfg);

// Per-minute mean speed and per-minute flow at one position, for
// detector-accuracy scoring.
struct PointTruth {
    std::vector<double> flow_vph;
    std::vector<double> speed_mph;
};

PointTruth truth_at_position(const GroundTruth& gt, double pos_mi);

}  // namespace fwperf

#endif
