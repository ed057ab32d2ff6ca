#include "fwperf/ttfuse.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fwperf/units.hpp"

namespace fwperf {

namespace {
constexpr double kPosTol = 1e-9;
}

void VendorWeights::validate() const {
    if (phi.empty()) throw std::invalid_argument("vendor weights empty");
    double sum = 0.0;
    for (const auto& [id, w] : phi) {
        if (w < 0.0 || w > 1.0)
            throw std::invalid_argument("vendor weight out of [0,1] for " + id);
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("vendor weights must sum to 1");
}

std::vector<LinkPart> link_parts(const LinkDef& link, int link_index,
                                 const EvaluationPointSet& eps) {
    std::vector<int> interior = eps.interior_points(link.start_mi, link.end_mi);
    std::vector<LinkPart> parts;
    parts.reserve(interior.size() + 1);

    double cursor = link.start_mi;
    int first_gov = eps.nearest_point(link.start_mi);
    for (std::size_t k = 0; k <= interior.size(); ++k) {
        LinkPart part;
        part.link_index = link_index;
        part.start_mi = cursor;
        part.end_mi = (k < interior.size()) ? eps.points[interior[k]].position_mi
                                            : link.end_mi;
        part.governing_point = (k == 0) ? first_gov : interior[k - 1];
        cursor = part.end_mi;
        parts.push_back(part);
    }
    return parts;
}

std::vector<std::optional<double>> part_vehicle_counts(const SpaceTimeField& density,
                                                       const std::vector<LinkPart>& parts,
                                                       int interval) {
    std::vector<std::optional<double>> counts;
    counts.reserve(parts.size());
    for (const auto& part : parts) {
        if (part.governing_point < 0 || density.is_missing(part.governing_point, interval)) {
            counts.push_back(std::nullopt);
        } else {
            counts.push_back(density.at(part.governing_point, interval) * part.length_mi());
        }
    }
    return counts;
}

DistributedTT distribute_link_tt(double link_tt_s, const std::vector<LinkPart>& parts,
                                 const std::vector<std::optional<double>>& counts) {
    if (link_tt_s <= 0.0) throw std::invalid_argument("link travel time must be > 0");
    if (parts.size() != counts.size())
        throw std::invalid_argument("distribute_link_tt: shape mismatch");

    DistributedTT out;
    out.tt_s.resize(parts.size(), 0.0);

    double total = 0.0;
    bool usable = true;
    for (const auto& c : counts) {
        if (!c) {
            usable = false;
            break;
        }
        total += *c;
    }

    if (!usable || total <= 0.0) {
        // No vehicle-content signal; split by length instead.
        out.length_fallback = true;
        double len = 0.0;
        for (const auto& p : parts) len += p.length_mi();
        for (std::size_t k = 0; k < parts.size(); ++k)
            out.tt_s[k] = link_tt_s * parts[k].length_mi() / len;
        return out;
    }
    for (std::size_t k = 0; k < parts.size(); ++k)
        out.tt_s[k] = link_tt_s * *counts[k] / total;
    return out;
}

std::vector<std::optional<double>> stitch_cell_tt(
    const std::vector<std::vector<LinkPart>>& parts_per_link,
    const std::vector<std::vector<double>>& tts_per_link, const EvaluationPointSet& eps) {
    if (parts_per_link.size() != tts_per_link.size())
        throw std::invalid_argument("stitch_cell_tt: shape mismatch");

    const std::size_t n_cells = eps.size();
    std::vector<double> tt(n_cells, 0.0);
    std::vector<double> covered(n_cells, 0.0);

    for (std::size_t l = 0; l < parts_per_link.size(); ++l) {
        const auto& parts = parts_per_link[l];
        const auto& tts = tts_per_link[l];
        if (parts.size() != tts.size())
            throw std::invalid_argument("stitch_cell_tt: per-link shape mismatch");
        for (std::size_t k = 0; k < parts.size(); ++k) {
            const auto& part = parts[k];
            double len = part.length_mi();
            if (len <= 0.0) continue;
            for (std::size_t c = 0; c < n_cells; ++c) {
                const auto& span = eps.points[c];
                double lo = std::max(part.start_mi, span.span_start_mi);
                double hi = std::min(part.end_mi, span.span_end_mi);
                if (hi <= lo + kPosTol) continue;
                double frac = (hi - lo) / len;
                tt[c] += tts[k] * frac;
                covered[c] += hi - lo;
            }
        }
    }

    std::vector<std::optional<double>> out(n_cells);
    for (std::size_t c = 0; c < n_cells; ++c) {
        double span_len = eps.points[c].span_length_mi();
        if (covered[c] >= span_len * (1.0 - 1e-6)) out[c] = tt[c];
    }
    return out;
}

std::vector<std::optional<double>> blend_vendors(
    const std::vector<std::vector<std::optional<double>>>& per_vendor_cell_tt,
    const std::vector<std::string>& vendor_ids, const VendorWeights& w) {
    w.validate();
    if (per_vendor_cell_tt.size() != vendor_ids.size())
        throw std::invalid_argument("blend_vendors: shape mismatch");
    if (per_vendor_cell_tt.empty()) return {};

    const std::size_t n_cells = per_vendor_cell_tt.front().size();
    std::vector<std::optional<double>> out(n_cells);
    for (std::size_t c = 0; c < n_cells; ++c) {
        double num = 0.0, den = 0.0;
        for (std::size_t v = 0; v < vendor_ids.size(); ++v) {
            auto it = w.phi.find(vendor_ids[v]);
            if (it == w.phi.end())
                throw std::invalid_argument("no weight for vendor " + vendor_ids[v]);
            const auto& tt = per_vendor_cell_tt[v][c];
            if (!tt) continue;
            num += it->second * *tt;
            den += it->second;
        }
        if (den > 0.0) out[c] = num / den;
    }
    return out;
}

CellSpeedResult cell_speed(double tt_s, double span_mi, double cap_mph) {
    if (tt_s <= 0.0) throw std::invalid_argument("cell travel time must be > 0");
    CellSpeedResult r;
    r.speed_mph = span_mi / seconds_to_hours(tt_s);
    if (r.speed_mph > cap_mph) {
        r.speed_mph = cap_mph;
        r.capped = true;
    }
    return r;
}

FilledLinkSeries fill_link_series(const std::vector<LinkTravelTime>& records,
                                  const LinkDef& link, const TimeGrid& grid,
                                  double v_ff_mph, double gap_horizon_min) {
    const int n = grid.n_intervals;
    std::vector<double> obs(n, -1.0);
    for (const auto& r : records) {
        if (r.link_id != link.id) continue;
        if (r.interval < 0 || r.interval >= n) continue;
        if (r.travel_time_s <= 0.0)
            throw std::invalid_argument("vendor travel time must be > 0 on " + link.id);
        obs[r.interval] = r.travel_time_s;
    }

    const double ff_tt = hours_to_seconds(link.length_mi() / v_ff_mph);
    const int horizon = static_cast<int>(std::ceil(gap_horizon_min / grid.step_min));

    FilledLinkSeries out;
    out.tt_s.resize(n, 0.0);
    out.freeflow_fill.resize(n, 0);

    for (int i = 0; i < n; ++i) {
        if (obs[i] > 0.0) {
            out.tt_s[i] = obs[i];
            continue;
        }
        int prev = -1, next = -1;
        for (int k = i - 1; k >= 0 && i - k <= horizon; --k)
            if (obs[k] > 0.0) {
                prev = k;
                break;
            }
        for (int k = i + 1; k < n && k - i <= horizon; ++k)
            if (obs[k] > 0.0) {
                next = k;
                break;
            }
        if (prev >= 0 && next >= 0) {
            double f = static_cast<double>(i - prev) / (next - prev);
            out.tt_s[i] = obs[prev] + f * (obs[next] - obs[prev]);
        } else if (prev >= 0) {
            out.tt_s[i] = obs[prev];
        } else if (next >= 0) {
            out.tt_s[i] = obs[next];
        } else {
            out.tt_s[i] = ff_tt;
            out.freeflow_fill[i] = 1;
        }
    }
    return out;
}

CellTravelTimes conflate_travel_times(const std::vector<LinkTravelTime>& records,
                                      const CorridorGeometry& geom,
                                      const EvaluationPointSet& eps, const TimeGrid& grid,
                                      const SpaceTimeField& density,
                                      const VendorWeights& weights, double v_ff_mph,
                                      double gap_horizon_min) {
    weights.validate();
    const int n_pts = static_cast<int>(eps.size());
    const int n_int = grid.n_intervals;
    CellTravelTimes out(n_pts, n_int);

    // Vendors in deterministic (weight-map) order.
    std::vector<std::string> vendor_ids;
    for (const auto& [id, w] : weights.phi) vendor_ids.push_back(id);

    struct LinkPrep {
        int link_index;
        std::vector<LinkPart> parts;
        FilledLinkSeries series;
    };
    std::vector<std::vector<LinkPrep>> per_vendor(vendor_ids.size());
    for (std::size_t v = 0; v < vendor_ids.size(); ++v) {
        for (std::size_t l = 0; l < geom.links.size(); ++l) {
            if (geom.links[l].vendor_id != vendor_ids[v]) continue;
            LinkPrep prep;
            prep.link_index = static_cast<int>(l);
            prep.parts = link_parts(geom.links[l], static_cast<int>(l), eps);
            prep.series = fill_link_series(records, geom.links[l], grid, v_ff_mph,
                                           gap_horizon_min);
            for (auto f : prep.series.freeflow_fill) out.freeflow_filled += f;
            per_vendor[v].push_back(std::move(prep));
        }
    }

    for (int i = 0; i < n_int; ++i) {
        std::vector<std::vector<std::optional<double>>> vendor_cell_tts;
        vendor_cell_tts.reserve(vendor_ids.size());
        for (std::size_t v = 0; v < vendor_ids.size(); ++v) {
            std::vector<std::vector<LinkPart>> parts_all;
            std::vector<std::vector<double>> tts_all;
            for (const auto& prep : per_vendor[v]) {
                auto counts = part_vehicle_counts(density, prep.parts, i);
                auto dist = distribute_link_tt(prep.series.tt_s[i], prep.parts, counts);
                if (dist.length_fallback) ++out.length_fallbacks;
                parts_all.push_back(prep.parts);
                tts_all.push_back(std::move(dist.tt_s));
            }
            vendor_cell_tts.push_back(stitch_cell_tt(parts_all, tts_all, eps));
        }
        auto blended = blend_vendors(vendor_cell_tts, vendor_ids, weights);
        for (int c = 0; c < n_pts; ++c)
            if (blended[c]) out.tt.set(c, i, *blended[c]);
    }
    return out;
}

}  // namespace fwperf
