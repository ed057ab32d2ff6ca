#ifndef FWPERF_CONFLATE_HPP
#define FWPERF_CONFLATE_HPP

#include <optional>
#include <vector>

#include "fwperf/field.hpp"
#include "fwperf/geometry.hpp"
#include "fwperf/time_grid.hpp"
#include "fwperf/units.hpp"

namespace fwperf {

// Kernel and propagation parameters. v_cong is the magnitude of the
// backward congested wave; the characteristic shift applies it with a
// negative sign. Defaults are metric calibration values (0.8 km, 1 min,
// 100/10/90/20 kmph) converted to internal units.
struct SmoothingParams {
    double delta_mi = km_to_miles(0.8);
    double mu_min = 1.0;
    double v_ff_mph = kmph_to_mph(100.0);
    double v_cong_mph = kmph_to_mph(10.0);
    double v_cr_mph = kmph_to_mph(90.0);
    double delta_v_mph = kmph_to_mph(20.0);
    // Kernel weights below this are skipped. 0 disables truncation; any
    // positive setting must not move results by more than 1e-9.
    double kernel_floor = 0.0;

    void validate() const;
};

// Per-VDS time series of flow, speed, and derived density, sharing one
// grid. Zero flow pins density at zero even when the speed is missing.
struct VdsSeries {
    std::vector<double> positions_mi;  // one per VDS, strictly increasing
    SpaceTimeField flow;               // veh/hr
    SpaceTimeField speed;              // mph
    SpaceTimeField density;            // veh/mi

    VdsSeries() : flow(Quantity::flow_vph, 0, 0), speed(Quantity::speed_mph, 0, 0),
                  density(Quantity::density_vpm, 0, 0) {}
    VdsSeries(std::vector<double> positions, const SpaceTimeField& flow_in,
              const SpaceTimeField& speed_in);

    int n_vds() const { return static_cast<int>(positions_mi.size()); }
    int n_intervals() const { return flow.n_intervals(); }
};

enum class WaveDirection { free_flow, congested };

double kernel(double dx_mi, double dt_min, const SmoothingParams& p);

// S-shaped congestion weight from the two directional speed estimates.
double crossover_weight(double v_ff_est_mph, double v_cong_est_mph,
                        const SmoothingParams& p);

// Isotropic reconstruction of one quantity at (x, t) over all VDS and all
// intervals. Missing samples drop out of numerator and denominator alike;
// nullopt when nothing contributes.
std::optional<double> gasm_at(const SpaceTimeField& values,
                              const std::vector<double>& positions_mi, double x_mi,
                              int t_interval, const TimeGrid& grid,
                              const SmoothingParams& p);

// Directional (characteristic-shifted) reconstruction confined to the
// immediate upstream/downstream VDS of x; corridor-edge targets use the
// single available neighbor.
std::optional<double> cgasm_directional_at(const SpaceTimeField& values,
                                           const std::vector<double>& positions_mi,
                                           double x_mi, int t_interval, WaveDirection dir,
                                           const TimeGrid& grid, const SmoothingParams& p);

// Crossover-fused confined reconstruction of one quantity at (x, t). The
// weight comes from the directional speed reconstructions; if one
// direction is missing the other stands alone.
std::optional<double> cgasm_at(const SpaceTimeField& values, const SpaceTimeField& speeds,
                               const std::vector<double>& positions_mi, double x_mi,
                               int t_interval, const TimeGrid& grid,
                               const SmoothingParams& p);

struct ConflatedFields {
    SpaceTimeField flow;
    SpaceTimeField speed;
    SpaceTimeField density;

    ConflatedFields(int n_points, int n_intervals)
        : flow(Quantity::flow_vph, n_points, n_intervals),
          speed(Quantity::speed_mph, n_points, n_intervals),
          density(Quantity::density_vpm, n_points, n_intervals) {}
};

enum class ConflationMethod { gasm, cgasm };

// Project VDS series onto the evaluation points. VDS-kind points keep the
// measured series as-is; cell boundaries get the reconstruction.
ConflatedFields conflate(const VdsSeries& series, const EvaluationPointSet& eps,
                         const TimeGrid& grid, const SmoothingParams& p,
                         ConflationMethod method);

}  // namespace fwperf

#endif
