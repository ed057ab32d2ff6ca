#ifndef FWPERF_TTFUSE_HPP
#define FWPERF_TTFUSE_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fwperf/conflate.hpp"
#include "fwperf/field.hpp"
#include "fwperf/geometry.hpp"
#include "fwperf/time_grid.hpp"

namespace fwperf {

// One vendor record: a link-minute travel time.
struct LinkTravelTime {
    std::string link_id;
    int interval = 0;
    double travel_time_s = 0.0;
    int probe_count = 0;
};

struct VendorWeights {
    std::map<std::string, double> phi;  // vendor_id -> weight, summing to 1

    void validate() const;
};

// A piece of a link delimited by the link ends and the evaluation points
// interior to it. The governing point supplies the density that decides
// the piece's share of the link travel time.
struct LinkPart {
    int link_index = -1;
    double start_mi = 0.0;
    double end_mi = 0.0;
    int governing_point = -1;

    double length_mi() const { return end_mi - start_mi; }
};

std::vector<LinkPart> link_parts(const LinkDef& link, int link_index,
                                 const EvaluationPointSet& eps);

// Vehicle content of each part: conflated density at the governing point
// times part length. Masked density masks the part.
std::vector<std::optional<double>> part_vehicle_counts(const SpaceTimeField& density,
                                                       const std::vector<LinkPart>& parts,
                                                       int interval);

struct DistributedTT {
    std::vector<double> tt_s;        // one per part, summing to the link TT
    bool length_fallback = false;    // all counts were zero; split by length
};

DistributedTT distribute_link_tt(double link_tt_s, const std::vector<LinkPart>& parts,
                                 const std::vector<std::optional<double>>& counts);

// Per-cell travel times for one interval: parts are cut at cell-span
// boundaries pro-rata by length and their travel times summed per cell.
// Cells with no overlapping vendor coverage stay masked.
std::vector<std::optional<double>> stitch_cell_tt(
    const std::vector<std::vector<LinkPart>>& parts_per_link,
    const std::vector<std::vector<double>>& tts_per_link, const EvaluationPointSet& eps);

// Weighted blend across vendors; weights renormalize over the vendors
// present at each cell. All-masked cells stay masked.
std::vector<std::optional<double>> blend_vendors(
    const std::vector<std::vector<std::optional<double>>>& per_vendor_cell_tt,
    const std::vector<std::string>& vendor_ids, const VendorWeights& w);

struct CellSpeedResult {
    double speed_mph = 0.0;
    bool capped = false;
};

// v = span / tt, capped to guard against tiny-travel-time artifacts.
CellSpeedResult cell_speed(double tt_s, double span_mi, double cap_mph = 90.0);

// Link series preparation: fill missing minutes by linear interpolation
// between observations no further than gap_horizon_min away; longer gaps
// fall back to free-flow travel time and are flagged.
struct FilledLinkSeries {
    std::vector<double> tt_s;           // one per interval
    std::vector<uint8_t> freeflow_fill;  // 1 where the fallback was used
};

FilledLinkSeries fill_link_series(const std::vector<LinkTravelTime>& records,
                                  const LinkDef& link, const TimeGrid& grid,
                                  double v_ff_mph, double gap_horizon_min = 10.0);

// Full travel-time conflation: vendor records -> per-cell travel time
// field (seconds), with part shares taken from the conflated density.
struct CellTravelTimes {
    SpaceTimeField tt;          // travel_time stored in seconds per cell-interval
    int freeflow_filled = 0;    // link-minutes filled with the free-flow fallback
    int length_fallbacks = 0;   // link-minutes distributed by length (zero density)

    CellTravelTimes(int n_points, int n_intervals)
        : tt(Quantity::travel_time_hr, n_points, n_intervals) {}
};

CellTravelTimes conflate_travel_times(const std::vector<LinkTravelTime>& records,
                                      const CorridorGeometry& geom,
                                      const EvaluationPointSet& eps, const TimeGrid& grid,
                                      const SpaceTimeField& density,
                                      const VendorWeights& weights, double v_ff_mph,
                                      double gap_horizon_min = 10.0);

}  // namespace fwperf

#endif
