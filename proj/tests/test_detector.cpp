#include <doctest.h>

#include <cmath>
#include <random>

#include "fwperf/detector.hpp"
#include "fwperf/units.hpp"

using namespace fwperf;

static const double kStepHr = 1.0 / 60.0;

TEST_CASE("preliminary speed evaluates g*q/o in consistent units") {
    // 22 ft, 40 veh/min, 16% occupancy -> (22/5280)*2400/0.16 = 62.5 mph
    auto s = preliminary_speed(22.0, 40.0, 0.16, kStepHr);
    REQUIRE(s.has_value());
    CHECK(*s == doctest::Approx(62.5).epsilon(1e-12));

    CHECK(*preliminary_speed(22.0, 0.0, 0.0, kStepHr) == 0.0);
    CHECK_FALSE(preliminary_speed(22.0, 5.0, 0.0, kStepHr).has_value());
}

TEST_CASE("filter blends toward the sample as flow grows") {
    LoopSpeedFilter f(10.0);
    CHECK(*f.feed(60.0, 40.0) == doctest::Approx(60.0));  // initializes at s

    // a=10, q=40, s=62.5, v_prev=60 -> w=0.8, v=62.0
    CHECK(*f.feed(62.5, 40.0) == doctest::Approx(62.0).epsilon(1e-12));

    // zero flow holds the previous value exactly
    CHECK(*f.feed(0.0, 0.0) == doctest::Approx(62.0).epsilon(1e-15));
}

TEST_CASE("small smoothing constant tracks the sample") {
    LoopSpeedFilter f(1e-9);
    f.feed(50.0, 30.0);
    CHECK(*f.feed(71.0, 30.0) == doctest::Approx(71.0).epsilon(1e-9));
}

TEST_CASE("filter output is a convex combination of sample and state") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<> sp(5.0, 90.0), q(0.0, 50.0);
    LoopSpeedFilter f(10.0);
    f.feed(60.0, 20.0);
    for (int i = 0; i < 500; ++i) {
        double prev = f.previous_speed();
        double s = sp(rng), count = q(rng);
        auto v = f.feed(s, count);
        REQUIRE(v.has_value());
        CHECK(*v >= std::min(s, prev) - 1e-12);
        CHECK(*v <= std::max(s, prev) + 1e-12);
    }
}

TEST_CASE("constant inputs converge geometrically") {
    const double a = 10.0, q = 20.0, s = 70.0, v0 = 40.0;
    const double w = q / (q + a);
    LoopSpeedFilter f(a);
    f.feed(v0, q);
    double bound = std::abs(v0 - s);
    for (int i = 1; i <= 30; ++i) {
        double v = *f.feed(s, q);
        bound *= (1.0 - w);
        CHECK(std::abs(v - s) <= bound + 1e-12);
    }
}

TEST_CASE("station speed averages valid lanes only") {
    CHECK(*vds_speed({60.0, 60.0, 60.0}) == doctest::Approx(60.0));
    CHECK(*vds_speed({50.0, 70.0}) == doctest::Approx(60.0));
    CHECK(*vds_speed({62.0}) == doctest::Approx(62.0));
    CHECK(*vds_speed({std::nullopt, 55.0, std::nullopt}) == doctest::Approx(55.0));
    CHECK_FALSE(vds_speed({std::nullopt, std::nullopt}).has_value());
}

namespace {

// Synthesize lane-minutes for loops seeing speed v and per-lane flow q,
// with occupancy implied by the true effective length.
std::vector<CalibrationSample> synth_samples(double g_true_ft, int n_loops, int n_minutes,
                                             double flow_vph, double speed_mph) {
    std::vector<CalibrationSample> out;
    for (int loop = 0; loop < n_loops; ++loop) {
        for (int m = 0; m < n_minutes; ++m) {
            CalibrationSample s;
            s.loop_key = "loop" + std::to_string(loop);
            s.interval = m;
            s.count = flow_vph * kStepHr;
            s.occupancy = (flow_vph / speed_mph) * feet_to_miles(g_true_ft);
            s.true_speed_mph = speed_mph;
            out.push_back(s);
        }
    }
    return out;
}

}  // namespace

TEST_CASE("calibration inverts a uniform effective length") {
    auto samples = synth_samples(20.0, 4, 60, 1800.0, 63.0);
    auto r = calibrate_g(samples, 10.0, kStepHr);
    CHECK(std::abs(r.g_ft - 20.0) <= 0.5);
    CHECK(std::abs(r.median_error_mph) <= 1e-9);
}

TEST_CASE("calibration recovers an off-grid length within the step") {
    auto samples = synth_samples(23.3, 3, 90, 2100.0, 58.0);
    auto r = calibrate_g(samples, 10.0, kStepHr);
    CHECK(std::abs(r.g_ft - 23.3) <= 0.5);
}

TEST_CASE("calibration refuses thin samples") {
    auto samples = synth_samples(20.0, 1, 50, 1800.0, 63.0);  // 50 < 100
    CHECK_THROWS(calibrate_g(samples, 10.0, kStepHr));
}

TEST_CASE("noiseless synthesis round-trips through the estimator") {
    // o = k * g/5280 with v = q/k makes the estimator exact at the true g.
    const double g = 24.0, v_true = 61.0, flow = 1500.0;
    LoopSpeedFilter f(10.0);
    for (int i = 0; i < 10; ++i) {
        double count = flow * kStepHr;
        double occ = (flow / v_true) * feet_to_miles(g);
        auto s = preliminary_speed(g, count, occ, kStepHr);
        REQUIRE(s.has_value());
        auto v = f.feed(s, count);
        REQUIRE(v.has_value());
        CHECK(std::abs(*v - v_true) <= 1e-9 * v_true);
    }
}
