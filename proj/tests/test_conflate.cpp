#include <doctest.h>

#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "fwperf/conflate.hpp"
#include "fwperf/geometry.hpp"

using namespace fwperf;

// ---------------------------------------------------------------------------
// Brute-force transcription of the smoothing equations, kept deliberately
// separate from the library implementation. Arrays are plain vectors; every
// term is visited; nothing is confined, cached, or truncated beyond what the
// equations themselves say.
// ---------------------------------------------------------------------------
namespace bruteforce {

struct Grid {
    std::vector<double> xs;                       // VDS positions
    std::vector<std::vector<double>> val;         // [vds][interval]
    std::vector<std::vector<int>> missing;        // 1 = missing
    double step_min = 1.0;
};

double kern(double dx, double dt, double delta, double mu) {
    return std::exp(-(std::fabs(dx) / delta + std::fabs(dt) / mu));
}

std::optional<double> gasm(const Grid& g, double x, int t, double delta, double mu) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < g.xs.size(); ++j) {
        for (std::size_t i = 0; i < g.val[j].size(); ++i) {
            if (g.missing[j][i]) continue;
            double k = kern(x - g.xs[j], (t - static_cast<int>(i)) * g.step_min, delta, mu);
            num += k * g.val[j][i];
            den += k;
        }
    }
    if (den == 0.0) return std::nullopt;
    return num / den;
}

// Directional pass per the confined equations: only the nearest upstream
// and downstream stations contribute, kernel time shifted by dx/c.
std::optional<double> cgasm_dir(const Grid& g, double x, int t, double c_mph, double delta,
                                double mu) {
    int u = -1, d = -1;
    for (std::size_t j = 0; j < g.xs.size(); ++j) {
        if (g.xs[j] <= x) u = static_cast<int>(j);
        if (g.xs[j] > x && d < 0) d = static_cast<int>(j);
    }
    double num = 0.0, den = 0.0;
    for (int j : {u, d}) {
        if (j < 0) continue;
        double dx = x - g.xs[j];
        double shift_min = dx / c_mph * 60.0;
        for (std::size_t i = 0; i < g.val[j].size(); ++i) {
            if (g.missing[j][i]) continue;
            double k = kern(dx, (t - static_cast<int>(i)) * g.step_min - shift_min, delta, mu);
            num += k * g.val[j][i];
            den += k;
        }
    }
    if (den == 0.0) return std::nullopt;
    return num / den;
}

std::optional<double> cgasm(const Grid& values, const Grid& speeds, double x, int t,
                            const SmoothingParams& p) {
    auto vff = cgasm_dir(speeds, x, t, p.v_ff_mph, p.delta_mi, p.mu_min);
    auto vcg = cgasm_dir(speeds, x, t, -p.v_cong_mph, p.delta_mi, p.mu_min);
    auto qff = cgasm_dir(values, x, t, p.v_ff_mph, p.delta_mi, p.mu_min);
    auto qcg = cgasm_dir(values, x, t, -p.v_cong_mph, p.delta_mi, p.mu_min);
    if (!qff && !qcg) return std::nullopt;
    if (!qff) return qcg;
    if (!qcg) return qff;
    double vmin;
    if (vff && vcg) vmin = std::min(*vff, *vcg);
    else if (vff) vmin = *vff;
    else if (vcg) vmin = *vcg;
    else return std::nullopt;
    double z = 0.5 * (1.0 + std::tanh((p.v_cr_mph - vmin) / p.delta_v_mph));
    return z * *qcg + (1.0 - z) * *qff;
}

}  // namespace bruteforce

namespace {

SpaceTimeField to_field(const bruteforce::Grid& g, Quantity kind) {
    SpaceTimeField f(kind, static_cast<int>(g.xs.size()),
                     static_cast<int>(g.val.front().size()));
    for (std::size_t j = 0; j < g.xs.size(); ++j)
        for (std::size_t i = 0; i < g.val[j].size(); ++i)
            if (!g.missing[j][i]) f.set(static_cast<int>(j), static_cast<int>(i), g.val[j][i]);
    return f;
}

bruteforce::Grid random_grid(std::mt19937& rng, int n_vds, int n_int, double lo, double hi,
                             double missing_rate = 0.1) {
    bruteforce::Grid g;
    std::uniform_real_distribution<> pos(0.0, 5.0), val(lo, hi), miss(0.0, 1.0);
    for (int j = 0; j < n_vds; ++j) g.xs.push_back(pos(rng));
    std::sort(g.xs.begin(), g.xs.end());
    g.val.assign(n_vds, std::vector<double>(n_int, 0.0));
    g.missing.assign(n_vds, std::vector<int>(n_int, 0));
    for (int j = 0; j < n_vds; ++j)
        for (int i = 0; i < n_int; ++i) {
            g.val[j][i] = val(rng);
            g.missing[j][i] = miss(rng) < missing_rate ? 1 : 0;
        }
    return g;
}

TimeGrid minute_grid(int n) { return TimeGrid{0, 1.0, n}; }

}  // namespace

TEST_CASE("kernel values at canonical offsets") {
    SmoothingParams p;
    CHECK(kernel(0.0, 0.0, p) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(kernel(p.delta_mi, 0.0, p) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    CHECK(kernel(p.delta_mi, p.mu_min, p) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
    CHECK(kernel(-p.delta_mi, -p.mu_min, p) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
}

TEST_CASE("crossover weight hits the canonical points") {
    SmoothingParams p;
    CHECK(crossover_weight(p.v_cr_mph, p.v_cr_mph + 30.0, p) == doctest::Approx(0.5));
    CHECK(crossover_weight(p.v_cr_mph - p.delta_v_mph, 100.0, p) ==
          doctest::Approx(0.5 * (1.0 + std::tanh(1.0))).epsilon(1e-12));
    CHECK(crossover_weight(p.v_cr_mph + 10.0 * p.delta_v_mph, 200.0, p) < 1e-8);
}

TEST_CASE("constant input reproduces the constant everywhere") {
    SmoothingParams p;
    TimeGrid grid = minute_grid(10);
    bruteforce::Grid g;
    g.xs = {0.4, 1.1, 2.3, 3.9};
    g.val.assign(4, std::vector<double>(10, 1234.5));
    g.missing.assign(4, std::vector<int>(10, 0));
    auto field = to_field(g, Quantity::flow_vph);

    for (double x : {0.0, 0.7, 1.9, 3.0, 4.5}) {
        for (int t : {0, 4, 9}) {
            auto v = gasm_at(field, g.xs, x, t, grid, p);
            REQUIRE(v.has_value());
            CHECK(std::abs(*v - 1234.5) <= 1e-12 * 1234.5);

            auto c = cgasm_at(field, field, g.xs, x, t, grid, p);
            REQUIRE(c.has_value());
            CHECK(std::abs(*c - 1234.5) <= 1e-12 * 1234.5);
        }
    }
}

TEST_CASE("point equidistant between two stations splits the difference") {
    SmoothingParams p;
    TimeGrid grid = minute_grid(1);
    bruteforce::Grid g;
    g.xs = {1.0, 2.0};
    g.val = {{1000.0}, {2000.0}};
    g.missing = {{0}, {0}};
    auto field = to_field(g, Quantity::flow_vph);
    auto v = gasm_at(field, g.xs, 1.5, 0, grid, p);
    REQUIRE(v.has_value());
    CHECK(*v == doctest::Approx(1500.0).epsilon(1e-12));
}

TEST_CASE("gasm matches the brute-force transcription on random grids") {
    SmoothingParams p;
    std::mt19937 rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        int n_vds = std::uniform_int_distribution<>(1, 5)(rng);
        int n_int = std::uniform_int_distribution<>(2, 10)(rng);
        auto g = random_grid(rng, n_vds, n_int, 100.0, 4000.0);
        auto field = to_field(g, Quantity::flow_vph);
        TimeGrid grid = minute_grid(n_int);

        std::uniform_real_distribution<> xs(-0.5, 5.5);
        for (int k = 0; k < 8; ++k) {
            double x = xs(rng);
            int t = std::uniform_int_distribution<>(0, n_int - 1)(rng);
            auto expect = bruteforce::gasm(g, x, t, p.delta_mi, p.mu_min);
            auto got = gasm_at(field, g.xs, x, t, grid, p);
            REQUIRE(expect.has_value() == got.has_value());
            if (expect)
                CHECK(std::abs(*got - *expect) <= 1e-12 * std::abs(*expect));
        }
    }
}

TEST_CASE("cgasm matches the brute-force transcription on random grids") {
    SmoothingParams p;
    std::mt19937 rng(13);
    for (int trial = 0; trial < 25; ++trial) {
        int n_vds = std::uniform_int_distribution<>(2, 5)(rng);
        int n_int = std::uniform_int_distribution<>(2, 10)(rng);
        auto values = random_grid(rng, n_vds, n_int, 100.0, 4000.0);
        auto speeds = values;  // same layout, fresh values
        std::uniform_real_distribution<> sp(5.0, 80.0);
        for (auto& row : speeds.val)
            for (auto& v : row) v = sp(rng);

        auto value_field = to_field(values, Quantity::flow_vph);
        auto speed_field = to_field(speeds, Quantity::speed_mph);
        TimeGrid grid = minute_grid(n_int);

        std::uniform_real_distribution<> xs(-0.5, 5.5);
        for (int k = 0; k < 8; ++k) {
            double x = xs(rng);
            int t = std::uniform_int_distribution<>(0, n_int - 1)(rng);
            auto expect = bruteforce::cgasm(values, speeds, x, t, p);
            auto got = cgasm_at(value_field, speed_field, values.xs, x, t, grid, p);
            REQUIRE(expect.has_value() == got.has_value());
            if (expect)
                CHECK(std::abs(*got - *expect) <= 1e-12 * std::abs(*expect));

            for (auto dir : {WaveDirection::free_flow, WaveDirection::congested}) {
                double c = dir == WaveDirection::free_flow ? p.v_ff_mph : -p.v_cong_mph;
                auto e2 = bruteforce::cgasm_dir(values, x, t, c, p.delta_mi, p.mu_min);
                auto g2 = cgasm_directional_at(value_field, values.xs, x, t, dir, grid, p);
                REQUIRE(e2.has_value() == g2.has_value());
                if (e2) CHECK(std::abs(*g2 - *e2) <= 1e-12 * std::abs(*e2));
            }
        }
    }
}

TEST_CASE("time-constant series make the directions agree") {
    SmoothingParams p;
    TimeGrid grid = minute_grid(60);
    bruteforce::Grid g;
    g.xs = {1.0, 2.0};
    g.val.assign(2, std::vector<double>(60, 800.0));
    g.missing.assign(2, std::vector<int>(60, 0));
    auto field = to_field(g, Quantity::flow_vph);

    auto ff = cgasm_directional_at(field, g.xs, 1.4, 30, WaveDirection::free_flow, grid, p);
    auto cg = cgasm_directional_at(field, g.xs, 1.4, 30, WaveDirection::congested, grid, p);
    REQUIRE(ff.has_value());
    REQUIRE(cg.has_value());
    CHECK(*ff == doctest::Approx(800.0).epsilon(1e-12));
    CHECK(*cg == doctest::Approx(800.0).epsilon(1e-12));
}

TEST_CASE("a downstream pulse reaches the cell on the direction's schedule") {
    // Pulse at the downstream station: forward characteristics put it at
    // the cell slightly before the detection, the backward wave well after.
    SmoothingParams p;
    const int n_int = 40;
    TimeGrid grid = minute_grid(n_int);
    bruteforce::Grid g;
    g.xs = {0.0, 1.0};
    g.val.assign(2, std::vector<double>(n_int, 1000.0));
    g.missing.assign(2, std::vector<int>(n_int, 0));
    g.val[1][20] = 3000.0;  // pulse at t=20 on the downstream station
    auto field = to_field(g, Quantity::flow_vph);

    auto argmax_for = [&](WaveDirection dir) {
        int best_t = -1;
        double best = -1.0;
        for (int t = 0; t < n_int; ++t) {
            auto v = cgasm_directional_at(field, g.xs, 0.5, t, dir, grid, p);
            REQUIRE(v.has_value());
            if (*v > best) {
                best = *v;
                best_t = t;
            }
        }
        return best_t;
    };
    int t_ff = argmax_for(WaveDirection::free_flow);
    int t_cong = argmax_for(WaveDirection::congested);
    // dx = -0.5 mi: ff shift = -0.5/62.14 h ~ -0.5 min; cong = +0.5/6.21 h ~ +4.8 min
    CHECK(t_ff <= 20);
    CHECK(t_cong > 20);
    CHECK(t_ff < t_cong);

    auto bf_ff = bruteforce::cgasm_dir(g, 0.5, t_ff, p.v_ff_mph, p.delta_mi, p.mu_min);
    auto lib_ff = cgasm_directional_at(field, g.xs, 0.5, t_ff, WaveDirection::free_flow,
                                       grid, p);
    CHECK(std::abs(*bf_ff - *lib_ff) <= 1e-12 * *bf_ff);
}

TEST_CASE("at a station the confined estimate collapses to that station") {
    SmoothingParams p;
    p.delta_mi = 1e-6;  // vanishing spatial width
    TimeGrid grid = minute_grid(5);
    bruteforce::Grid g;
    g.xs = {1.0, 2.0};
    g.val = {{10, 10, 10, 10, 10}, {99, 99, 99, 99, 99}};
    g.missing.assign(2, std::vector<int>(5, 0));
    auto field = to_field(g, Quantity::flow_vph);
    auto v = cgasm_directional_at(field, g.xs, 1.0, 2, WaveDirection::free_flow, grid, p);
    REQUIRE(v.has_value());
    CHECK(*v == doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("confinement: far stations cannot touch a cell's value") {
    SmoothingParams p;
    const int n_int = 12;
    TimeGrid grid = minute_grid(n_int);

    CorridorGeometry geom;
    geom.length_mi = 5.0;
    geom.lane_segments = {{0.0, 4}};
    geom.cell_spacing_mi = 0.25;
    geom.vds = {{"a", 0.6, 4}, {"b", 1.6, 4}, {"c", 3.1, 4}, {"d", 4.4, 4}};
    auto eps = derive_evaluation_points(geom);

    auto make_series = [&](double far_value) {
        SpaceTimeField flow(Quantity::flow_vph, 4, n_int);
        SpaceTimeField speed(Quantity::speed_mph, 4, n_int);
        std::mt19937 rng(21);
        std::uniform_real_distribution<> q(500.0, 3000.0), v(20.0, 70.0);
        for (int j = 0; j < 4; ++j)
            for (int i = 0; i < n_int; ++i) {
                flow.set(j, i, j == 3 ? far_value : q(rng));
                speed.set(j, i, v(rng));
            }
        return VdsSeries({0.6, 1.6, 3.1, 4.4}, flow, speed);
    };

    auto base = conflate(make_series(1000.0), eps, grid, p, ConflationMethod::cgasm);
    auto pert = conflate(make_series(2600.0), eps, grid, p, ConflationMethod::cgasm);

    // Cells strictly between stations a and b have neighbors {a, b}; the
    // perturbed station d is not allowed to move them at all.
    for (std::size_t k = 0; k < eps.size(); ++k) {
        double x = eps.points[k].position_mi;
        if (x <= 0.6 || x >= 1.6) continue;
        for (int i = 0; i < n_int; ++i) {
            CHECK(base.flow.at(static_cast<int>(k), i) ==
                  pert.flow.at(static_cast<int>(k), i));
        }
    }
}

TEST_CASE("masked samples drop out and renormalize") {
    SmoothingParams p;
    TimeGrid grid = minute_grid(3);
    bruteforce::Grid g;
    g.xs = {1.0, 2.0};
    g.val = {{500, 500, 500}, {900, 900, 900}};
    g.missing = {{0, 1, 0}, {1, 1, 1}};  // station b entirely missing
    auto field = to_field(g, Quantity::flow_vph);

    auto v = gasm_at(field, g.xs, 1.5, 1, grid, p);
    REQUIRE(v.has_value());
    CHECK(*v == doctest::Approx(500.0).epsilon(1e-12));

    // Everything missing -> masked result.
    g.missing = {{1, 1, 1}, {1, 1, 1}};
    auto none = gasm_at(to_field(g, Quantity::flow_vph), g.xs, 1.5, 1, grid, p);
    CHECK_FALSE(none.has_value());
}

TEST_CASE("z extremes select the matching directional value") {
    // Speeds far below the crossover -> z ~ 1 -> congested value; far
    // above -> z ~ 0 -> free-flow value.
    SmoothingParams p;
    TimeGrid grid = minute_grid(21);
    const int n_int = 21;
    bruteforce::Grid values;
    values.xs = {0.0, 1.0};
    values.val.assign(2, std::vector<double>(n_int, 1000.0));
    values.val[1].assign(n_int, 2000.0);
    values.missing.assign(2, std::vector<int>(n_int, 0));
    auto value_field = to_field(values, Quantity::flow_vph);

    for (double speed : {8.0, 85.0}) {
        bruteforce::Grid speeds = values;
        for (auto& row : speeds.val)
            for (auto& s : row) s = speed;
        auto speed_field = to_field(speeds, Quantity::speed_mph);

        auto fused = cgasm_at(value_field, speed_field, values.xs, 0.5, 10, grid, p);
        auto ff = cgasm_directional_at(value_field, values.xs, 0.5, 10,
                                       WaveDirection::free_flow, grid, p);
        auto cg = cgasm_directional_at(value_field, values.xs, 0.5, 10,
                                       WaveDirection::congested, grid, p);
        REQUIRE(fused.has_value());
        if (speed < 20.0)
            CHECK(*fused == doctest::Approx(*cg).epsilon(1e-6));
        else
            CHECK(*fused == doctest::Approx(*ff).epsilon(1e-6));
    }
}

TEST_CASE("balanced crossover fuses to the mean of the directions") {
    // Speeds pinned at the crossover speed make z = 1/2 exactly, so the
    // fused value is the average of the two directional reconstructions.
    SmoothingParams p;
    const int n_int = 31;
    TimeGrid grid = minute_grid(n_int);
    bruteforce::Grid values;
    values.xs = {0.0, 1.0};
    values.val.assign(2, std::vector<double>(n_int, 1000.0));
    values.val[1].assign(n_int, 2000.0);
    values.missing.assign(2, std::vector<int>(n_int, 0));
    bruteforce::Grid speeds = values;
    for (auto& row : speeds.val)
        for (auto& s : row) s = p.v_cr_mph;

    auto value_field = to_field(values, Quantity::flow_vph);
    auto speed_field = to_field(speeds, Quantity::speed_mph);
    auto fused = cgasm_at(value_field, speed_field, values.xs, 0.4, 15, grid, p);
    auto ff = cgasm_directional_at(value_field, values.xs, 0.4, 15,
                                   WaveDirection::free_flow, grid, p);
    auto cg = cgasm_directional_at(value_field, values.xs, 0.4, 15,
                                   WaveDirection::congested, grid, p);
    REQUIRE(fused.has_value());
    CHECK(*fused == doctest::Approx(0.5 * (*ff + *cg)).epsilon(1e-12));
}

TEST_CASE("reconstructions stay inside the contributing sample range") {
    SmoothingParams p;
    std::mt19937 rng(37);
    for (int trial = 0; trial < 20; ++trial) {
        auto g = random_grid(rng, 4, 8, 200.0, 3000.0, 0.2);
        auto field = to_field(g, Quantity::flow_vph);
        TimeGrid grid = minute_grid(8);
        double lo = 1e12, hi = -1e12;
        bool any = false;
        for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 8; ++i)
                if (!g.missing[j][i]) {
                    lo = std::min(lo, g.val[j][i]);
                    hi = std::max(hi, g.val[j][i]);
                    any = true;
                }
        if (!any) continue;
        std::uniform_real_distribution<> xs(0.0, 5.0);
        for (int k = 0; k < 6; ++k) {
            auto v = gasm_at(field, g.xs, xs(rng), k % 8, grid, p);
            if (!v) continue;
            CHECK(*v >= lo - 1e-9);
            CHECK(*v <= hi + 1e-9);
        }
    }
}

TEST_CASE("kernel truncation floor changes nothing beyond 1e-9") {
    std::mt19937 rng(31);
    auto g = random_grid(rng, 5, 10, 100.0, 4000.0, 0.0);
    auto field = to_field(g, Quantity::flow_vph);
    TimeGrid grid = minute_grid(10);

    SmoothingParams exact;
    SmoothingParams truncated;
    truncated.kernel_floor = 1e-12;

    for (double x : {0.2, 1.7, 3.3, 4.9}) {
        for (int t : {0, 5, 9}) {
            auto a = gasm_at(field, g.xs, x, t, grid, exact);
            auto b = gasm_at(field, g.xs, x, t, grid, truncated);
            REQUIRE(a.has_value());
            REQUIRE(b.has_value());
            CHECK(std::abs(*a - *b) <= 1e-9 * std::abs(*a));
        }
    }
}
