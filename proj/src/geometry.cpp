#include "fwperf/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fwperf {

namespace {
constexpr double kPosTol = 1e-9;  // milepost comparison tolerance
}

void CorridorGeometry::validate() const {
    if (length_mi <= 0.0) throw std::invalid_argument("corridor length must be > 0");
    if (cell_spacing_mi <= 0.0) throw std::invalid_argument("cell spacing must be > 0");
    if (suppression_radius_ft < 0.0) throw std::invalid_argument("suppression radius must be >= 0");
    if (lane_segments.empty()) throw std::invalid_argument("at least one lane segment required");
    if (std::abs(lane_segments.front().start_mi) > kPosTol)
        throw std::invalid_argument("first lane segment must start at milepost 0");
    for (std::size_t s = 0; s < lane_segments.size(); ++s) {
        if (lane_segments[s].lanes < 1) throw std::invalid_argument("lane count must be >= 1");
        if (s > 0 && lane_segments[s].start_mi <= lane_segments[s - 1].start_mi)
            throw std::invalid_argument("lane segments must be sorted by start");
    }
    double prev = -1.0;
    for (const auto& v : vds) {
        if (v.position_mi < 0.0 || v.position_mi > length_mi)
            throw std::invalid_argument("VDS position outside corridor: " + v.id);
        if (v.position_mi <= prev)
            throw std::invalid_argument("VDS positions must be strictly increasing: " + v.id);
        if (v.lanes < 1) throw std::invalid_argument("VDS lane count must be >= 1: " + v.id);
        prev = v.position_mi;
    }
    if (!links.empty()) {
        double cursor = 0.0;
        for (const auto& l : links) {
            if (l.end_mi <= l.start_mi)
                throw std::invalid_argument("link end must exceed start: " + l.id);
            if (std::abs(l.start_mi - cursor) > kPosTol)
                throw std::invalid_argument("links must tile the corridor without gaps: " + l.id);
            cursor = l.end_mi;
        }
        if (std::abs(cursor - length_mi) > kPosTol)
            throw std::invalid_argument("links must end at the corridor end");
    }
}

int CorridorGeometry::lanes_at(double pos_mi) const {
    int lanes = lane_segments.front().lanes;
    for (const auto& seg : lane_segments) {
        if (seg.start_mi <= pos_mi + kPosTol) lanes = seg.lanes;
        else break;
    }
    return lanes;
}

std::vector<double> EvaluationPointSet::span_lengths() const {
    std::vector<double> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(p.span_length_mi());
    return out;
}

int EvaluationPointSet::nearest_point(double pos_mi) const {
    if (points.empty()) return -1;
    int best = 0;
    double best_d = std::abs(points[0].position_mi - pos_mi);
    for (std::size_t k = 1; k < points.size(); ++k) {
        double d = std::abs(points[k].position_mi - pos_mi);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(k);
        }
    }
    return best;
}

std::vector<int> EvaluationPointSet::interior_points(double a_mi, double b_mi) const {
    std::vector<int> out;
    for (std::size_t k = 0; k < points.size(); ++k) {
        double x = points[k].position_mi;
        if (x > a_mi + kPosTol && x < b_mi - kPosTol) out.push_back(static_cast<int>(k));
    }
    return out;
}

EvaluationPointSet derive_evaluation_points(const CorridorGeometry& geom) {
    geom.validate();
    const double radius = geom.suppression_radius_mi();

    EvaluationPointSet eps;
    eps.corridor_length_mi = geom.length_mi;

    // Candidate boundaries at multiples of the spacing, excluding the far
    // corridor end (a boundary there would carry an empty span).
    for (int k = 0;; ++k) {
        double x = k * geom.cell_spacing_mi;
        if (x >= geom.length_mi - kPosTol) break;
        bool suppressed = false;
        for (const auto& v : geom.vds) {
            if (std::abs(x - v.position_mi) <= radius) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) {
            EvaluationPoint p;
            p.position_mi = x;
            p.kind = PointKind::cell_boundary;
            eps.points.push_back(p);
        }
    }
    for (std::size_t j = 0; j < geom.vds.size(); ++j) {
        EvaluationPoint p;
        p.position_mi = geom.vds[j].position_mi;
        p.kind = PointKind::vds;
        p.vds_index = static_cast<int>(j);
        eps.points.push_back(p);
    }
    std::sort(eps.points.begin(), eps.points.end(),
              [](const EvaluationPoint& a, const EvaluationPoint& b) {
                  return a.position_mi < b.position_mi;
              });

    // Midpoint spans; corridor ends close the first and last.
    const std::size_t n = eps.points.size();
    for (std::size_t k = 0; k < n; ++k) {
        auto& p = eps.points[k];
        p.span_start_mi = (k == 0) ? 0.0
                                   : 0.5 * (eps.points[k - 1].position_mi + p.position_mi);
        p.span_end_mi = (k + 1 == n) ? geom.length_mi
                                     : 0.5 * (p.position_mi + eps.points[k + 1].position_mi);
    }
    return eps;
}

std::vector<double> vds_segment_lengths(const CorridorGeometry& geom) {
    std::vector<double> out;
    const std::size_t n = geom.vds.size();
    out.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        double lo = (j == 0) ? 0.0
                             : 0.5 * (geom.vds[j - 1].position_mi + geom.vds[j].position_mi);
        double hi = (j + 1 == n) ? geom.length_mi
                                 : 0.5 * (geom.vds[j].position_mi + geom.vds[j + 1].position_mi);
        out.push_back(hi - lo);
    }
    return out;
}

}  // namespace fwperf
