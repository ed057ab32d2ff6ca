#include <doctest.h>

#include <cmath>
#include <random>

#include "fwperf/geometry.hpp"
#include "fwperf/ttfuse.hpp"
#include "fwperf/units.hpp"

using namespace fwperf;

namespace {

EvaluationPointSet points_at(std::vector<double> xs, double length) {
    EvaluationPointSet eps;
    eps.corridor_length_mi = length;
    for (double x : xs) {
        EvaluationPoint p;
        p.position_mi = x;
        eps.points.push_back(p);
    }
    for (std::size_t k = 0; k < eps.points.size(); ++k) {
        auto& p = eps.points[k];
        p.span_start_mi = k == 0 ? 0.0
                                 : 0.5 * (eps.points[k - 1].position_mi + p.position_mi);
        p.span_end_mi = k + 1 == eps.points.size()
                            ? length
                            : 0.5 * (p.position_mi + eps.points[k + 1].position_mi);
    }
    return eps;
}

SpaceTimeField density_of(std::vector<double> per_point, int n_int = 1) {
    SpaceTimeField f(Quantity::density_vpm, static_cast<int>(per_point.size()), n_int);
    for (std::size_t k = 0; k < per_point.size(); ++k)
        for (int i = 0; i < n_int; ++i) f.set(static_cast<int>(k), i, per_point[k]);
    return f;
}

}  // namespace

TEST_CASE("interior points split a link into uniform parts") {
    auto eps = points_at({0.25, 0.5, 0.75}, 1.0);
    LinkDef link{"L1", "A", 0.0, 1.0};
    auto parts = link_parts(link, 0, eps);
    REQUIRE(parts.size() == 4);
    for (const auto& p : parts) CHECK(p.length_mi() == doctest::Approx(0.25));
    CHECK(parts[0].governing_point == 0);  // nearest point to the link start
    CHECK(parts[1].governing_point == 0);
    CHECK(parts[2].governing_point == 1);
    CHECK(parts[3].governing_point == 2);
}

TEST_CASE("a link with no interior points is one part") {
    auto eps = points_at({2.0}, 4.0);
    LinkDef link{"L1", "A", 0.5, 1.5};
    auto parts = link_parts(link, 0, eps);
    REQUIRE(parts.size() == 1);
    CHECK(parts[0].length_mi() == doctest::Approx(1.0));
}

TEST_CASE("part lengths sum to the link length") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<> u(0.0, 10.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> xs;
        int n = std::uniform_int_distribution<>(1, 15)(rng);
        for (int k = 0; k < n; ++k) xs.push_back(u(rng));
        std::sort(xs.begin(), xs.end());
        xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
        auto eps = points_at(xs, 10.0);
        double a = u(rng), b = u(rng);
        if (a > b) std::swap(a, b);
        if (b - a < 1e-3) continue;
        LinkDef link{"L", "A", a, b};
        auto parts = link_parts(link, 0, eps);
        double sum = 0.0;
        for (const auto& p : parts) sum += p.length_mi();
        CHECK(std::abs(sum - link.length_mi()) <= 1e-12 * link.length_mi());
    }
}

TEST_CASE("vehicle counts are density times part length") {
    auto eps = points_at({0.0, 0.5}, 1.0);
    LinkDef link{"L1", "A", 0.0, 1.0};
    auto parts = link_parts(link, 0, eps);
    REQUIRE(parts.size() == 2);
    auto counts = part_vehicle_counts(density_of({40.0, 80.0}), parts, 0);
    REQUIRE(counts.size() == 2);
    CHECK(*counts[0] == doctest::Approx(20.0));
    CHECK(*counts[1] == doctest::Approx(40.0));
}

TEST_CASE("travel time distribution follows counts and conserves the total") {
    auto eps = points_at({0.5}, 1.0);
    LinkDef link{"L1", "A", 0.0, 1.0};
    auto parts = link_parts(link, 0, eps);
    REQUIRE(parts.size() == 2);

    auto d = distribute_link_tt(100.0, parts, {10.0, 30.0});
    CHECK_FALSE(d.length_fallback);
    CHECK(d.tt_s[0] == doctest::Approx(25.0));
    CHECK(d.tt_s[1] == doctest::Approx(75.0));

    SUBCASE("equal counts split evenly") {
        auto eps4 = points_at({0.25, 0.5, 0.75}, 1.0);
        auto parts4 = link_parts(link, 0, eps4);
        auto even = distribute_link_tt(120.0, parts4, {5.0, 5.0, 5.0, 5.0});
        for (double tt : even.tt_s) CHECK(tt == doctest::Approx(30.0));
    }

    SUBCASE("zero counts fall back to length shares") {
        auto z = distribute_link_tt(100.0, parts, {0.0, 0.0});
        CHECK(z.length_fallback);
        CHECK(z.tt_s[0] == doctest::Approx(50.0));
        CHECK(z.tt_s[1] == doctest::Approx(50.0));
    }

    SUBCASE("conservation holds for random inputs") {
        std::mt19937 rng(9);
        std::uniform_real_distribution<> u(0.0, 50.0);
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<std::optional<double>> counts = {u(rng), u(rng)};
            double tt = 1.0 + u(rng);
            auto r = distribute_link_tt(tt, parts, counts);
            double sum = r.tt_s[0] + r.tt_s[1];
            CHECK(std::abs(sum - tt) <= 1e-9 * tt);
        }
    }
}

TEST_CASE("a bigger count strictly raises a part's share") {
    auto eps = points_at({0.5}, 1.0);
    auto parts = link_parts(LinkDef{"L", "A", 0.0, 1.0}, 0, eps);
    auto lo = distribute_link_tt(100.0, parts, {10.0, 30.0});
    auto hi = distribute_link_tt(100.0, parts, {15.0, 30.0});
    CHECK(hi.tt_s[0] > lo.tt_s[0]);
}

TEST_CASE("stitching: one link exactly covering one cell hands over its TT") {
    auto eps = points_at({0.5}, 1.0);  // single span [0, 1]
    LinkDef link{"L1", "A", 0.0, 1.0};
    auto parts = link_parts(link, 0, eps);
    auto d = distribute_link_tt(90.0, parts, {12.0, 12.0});
    auto cells = stitch_cell_tt({parts}, {d.tt_s}, eps);
    REQUIRE(cells.size() == 1);
    REQUIRE(cells[0].has_value());
    CHECK(*cells[0] == doctest::Approx(90.0).epsilon(1e-12));
}

TEST_CASE("a cell straddling two links takes the tail of one and head of the next") {
    // Points at 0.5 and 1.5 -> spans [0,1] and [1,2]; links split at 1.2.
    auto eps = points_at({0.5, 1.5}, 2.0);
    LinkDef l1{"L1", "A", 0.0, 1.2};
    LinkDef l2{"L2", "A", 1.2, 2.0};
    auto p1 = link_parts(l1, 0, eps);
    auto p2 = link_parts(l2, 1, eps);
    // Uniform density -> length-proportional part travel times.
    auto d1 = distribute_link_tt(120.0, p1, part_vehicle_counts(density_of({30.0, 30.0}), p1, 0));
    auto d2 = distribute_link_tt(80.0, p2, part_vehicle_counts(density_of({30.0, 30.0}), p2, 0));
    auto cells = stitch_cell_tt({p1, p2}, {d1.tt_s, d2.tt_s}, eps);
    REQUIRE(cells.size() == 2);
    REQUIRE(cells[0].has_value());
    REQUIRE(cells[1].has_value());
    // Conservation across the corridor.
    CHECK(*cells[0] + *cells[1] == doctest::Approx(200.0).epsilon(1e-9));
    // Span [0,1] carries 1.0/1.2 of link 1's time.
    CHECK(*cells[0] == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(*cells[1] == doctest::Approx(20.0 + 80.0).epsilon(1e-9));
}

TEST_CASE("corridor-level conservation on random layouts") {
    std::mt19937 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        double length = std::uniform_real_distribution<>(2.0, 20.0)(rng);

        // Random evaluation points.
        std::vector<double> xs;
        int n_pts = std::uniform_int_distribution<>(1, 30)(rng);
        std::uniform_real_distribution<> upos(0.01, length - 0.01);
        for (int k = 0; k < n_pts; ++k) xs.push_back(upos(rng));
        std::sort(xs.begin(), xs.end());
        xs.erase(std::unique(xs.begin(), xs.end(),
                             [](double a, double b) { return b - a < 1e-6; }),
                 xs.end());
        auto eps = points_at(xs, length);

        // Random link tiling.
        std::vector<LinkDef> links;
        double cursor = 0.0;
        int id = 0;
        while (cursor < length - 1e-9) {
            double len = std::min(std::uniform_real_distribution<>(0.4, 2.0)(rng),
                                  length - cursor);
            links.push_back({"L" + std::to_string(++id), "A", cursor, cursor + len});
            cursor += len;
        }

        std::vector<double> dens;
        std::uniform_real_distribution<> ud(0.0, 120.0);
        for (std::size_t k = 0; k < eps.size(); ++k) dens.push_back(ud(rng));
        auto density = density_of(dens);

        double total_tt = 0.0;
        std::vector<std::vector<LinkPart>> parts_all;
        std::vector<std::vector<double>> tts_all;
        std::uniform_real_distribution<> utt(20.0, 400.0);
        for (std::size_t l = 0; l < links.size(); ++l) {
            auto parts = link_parts(links[l], static_cast<int>(l), eps);
            double tt = utt(rng);
            total_tt += tt;
            auto counts = part_vehicle_counts(density, parts, 0);
            auto d = distribute_link_tt(tt, parts, counts);
            double sum = 0.0;
            for (double v : d.tt_s) sum += v;
            CHECK(std::abs(sum - tt) <= 1e-9 * tt);  // link-level conservation
            parts_all.push_back(std::move(parts));
            tts_all.push_back(std::move(d.tt_s));
        }

        auto cells = stitch_cell_tt(parts_all, tts_all, eps);
        double cell_sum = 0.0;
        for (const auto& c : cells) {
            REQUIRE(c.has_value());
            cell_sum += *c;
        }
        CHECK(std::abs(cell_sum - total_tt) <= 1e-9 * total_tt);
    }
}

TEST_CASE("vendor blending honors weights and renormalizes over gaps") {
    VendorWeights w;
    w.phi = {{"A", 0.5}, {"B", 0.5}};
    std::vector<std::vector<std::optional<double>>> tts = {{100.0, std::nullopt},
                                                           {120.0, 80.0}};
    auto out = blend_vendors(tts, {"A", "B"}, w);
    REQUIRE(out.size() == 2);
    CHECK(*out[0] == doctest::Approx(110.0));
    CHECK(*out[1] == doctest::Approx(80.0));  // only vendor B present

    SUBCASE("single vendor identity") {
        VendorWeights one;
        one.phi = {{"A", 1.0}};
        auto r = blend_vendors({{55.5}}, {"A"}, one);
        CHECK(*r[0] == doctest::Approx(55.5));
    }
    SUBCASE("weights must sum to one") {
        VendorWeights bad;
        bad.phi = {{"A", 0.7}, {"B", 0.4}};
        CHECK_THROWS(bad.validate());
    }
    SUBCASE("all vendors masked stays masked") {
        auto r = blend_vendors({{std::nullopt}, {std::nullopt}}, {"A", "B"}, w);
        CHECK_FALSE(r[0].has_value());
    }
}

TEST_CASE("cell speed converts and caps") {
    auto r = cell_speed(15.0, 0.25);
    CHECK(r.speed_mph == doctest::Approx(60.0));
    CHECK_FALSE(r.capped);

    r = cell_speed(3600.0, 1.0);
    CHECK(r.speed_mph == doctest::Approx(1.0));

    r = cell_speed(5.0, 0.25);  // raw 180 mph
    CHECK(r.speed_mph == doctest::Approx(90.0));
    CHECK(r.capped);

    CHECK_THROWS(cell_speed(0.0, 0.25));
}

TEST_CASE("gap filling interpolates nearby minutes and flags long gaps") {
    TimeGrid grid{0, 1.0, 30};
    LinkDef link{"L1", "A", 0.0, 1.0};
    std::vector<LinkTravelTime> recs = {
        {"L1", 2, 60.0, 3}, {"L1", 6, 100.0, 2}, {"L1", 29, 80.0, 1}};
    auto filled = fill_link_series(recs, link, grid, 60.0, 10.0);

    CHECK(filled.tt_s[2] == doctest::Approx(60.0));
    CHECK(filled.tt_s[4] == doctest::Approx(80.0));   // halfway between 60 and 100
    CHECK(filled.tt_s[6] == doctest::Approx(100.0));
    CHECK(filled.tt_s[10] == doctest::Approx(100.0));  // one-sided hold within horizon
    // Minute 18 is >10 from both 6 and 29: free-flow fallback (1 mi at 60).
    CHECK(filled.tt_s[18] == doctest::Approx(60.0));
    CHECK(filled.freeflow_fill[18] == 1);
    CHECK(filled.freeflow_fill[4] == 0);
}
