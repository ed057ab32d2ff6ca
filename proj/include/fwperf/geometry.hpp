#ifndef FWPERF_GEOMETRY_HPP
#define FWPERF_GEOMETRY_HPP

#include <string>
#include <vector>

#include "fwperf/units.hpp"

namespace fwperf {

// All positions are linear mileposts on a single corridor, increasing in
// the direction of travel.

struct VdsLocation {
    std::string id;
    double position_mi = 0.0;
    int lanes = 1;
};

// A vendor reporting unit: a stretch of freeway with one travel time per
// interval. Links tile the corridor without gaps or overlaps.
struct LinkDef {
    std::string id;
    std::string vendor_id;
    double start_mi = 0.0;
    double end_mi = 0.0;

    double length_mi() const { return end_mi - start_mi; }
};

struct LaneSegment {
    double start_mi = 0.0;
    int lanes = 1;
};

struct CorridorGeometry {
    double length_mi = 0.0;
    std::vector<LaneSegment> lane_segments;  // sorted, first at 0.0
    std::vector<VdsLocation> vds;            // sorted by position
    std::vector<LinkDef> links;              // sorted by start, tiling [0, length]
    double cell_spacing_mi = 0.25;
    double suppression_radius_ft = 200.0;

    void validate() const;  // throws std::invalid_argument on broken invariants
    int lanes_at(double pos_mi) const;
    double suppression_radius_mi() const { return feet_to_miles(suppression_radius_ft); }
};

enum class PointKind { vds, cell_boundary };

struct EvaluationPoint {
    double position_mi = 0.0;
    PointKind kind = PointKind::cell_boundary;
    int vds_index = -1;  // index into geometry vds list when kind == vds
    double span_start_mi = 0.0;
    double span_end_mi = 0.0;

    double span_length_mi() const { return span_end_mi - span_start_mi; }
};

// The hybrid method's analysis layout: VDS positions plus cell boundaries
// every cell_spacing, except boundaries falling within the suppression
// radius of a VDS (the raw VDS point stands in for them). Spans run from
// the upstream midpoint to the downstream midpoint, with the corridor
// ends closing the first and last span.
struct EvaluationPointSet {
    double corridor_length_mi = 0.0;
    std::vector<EvaluationPoint> points;

    std::size_t size() const { return points.size(); }
    std::vector<double> span_lengths() const;
    // Index of the point whose position is nearest to pos.
    int nearest_point(double pos_mi) const;
    // Indices of points strictly inside (a, b), either kind.
    std::vector<int> interior_points(double a_mi, double b_mi) const;
};

EvaluationPointSet derive_evaluation_points(const CorridorGeometry& geom);

// Traditional per-VDS coverage segments, midpoint to midpoint.
std::vector<double> vds_segment_lengths(const CorridorGeometry& geom);

}  // namespace fwperf

#endif
