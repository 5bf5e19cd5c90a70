#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "frontlab/errors.hpp"
#include "frontlab/feynman_kac.hpp"
#include "frontlab/potential.hpp"
#include "frontlab/solver.hpp"
#include "test_util.hpp"

using namespace frontlab;

TEST_CASE("path estimate matches the homogeneous closed form") {
    const ConstantPotential pot(1.0, {-1e12, 1e12});
    // u(t,x) = e^t Phi(-x/sqrt(t))
    const PathEstimate est =
        estimate_u_mc(pot, 1.0, 0.5, InitialCondition::heaviside(), 20000, 2e-3, 99, 1);
    const double exact = std::exp(1.0) * testutil::phi(-0.5);
    CHECK(std::abs(est.value - exact) < 3.0 * est.standard_error + 0.005);
    CHECK(est.standard_error > 0.0);
    CHECK(est.n_paths == 20000);
}

TEST_CASE("path estimate agrees with the finite-difference field in a random medium") {
    const auto pot = make_poisson_potential(1.0, 3.0, 1.0, {-40.0, 40.0}, 31);
    SolverConfig cfg;
    cfg.kind = EquationKind::pam;
    cfg.dx = 0.02;
    cfg.window_mode = WindowMode::fixed;
    cfg.window = {-30.0, 30.0};
    cfg.cadence = 0.25;
    cfg.snapshot_times = {0.75};
    Solver solver(pot, cfg);
    const SolveResult res = solver.solve(InitialCondition::heaviside(), 2.0);

    struct Point {
        double t, x;
    };
    for (const Point p : {Point{0.75, -1.3}, Point{2.0, 2.2}}) {
        const Field& field = (p.t == 2.0) ? res.final_field : res.snapshots.at(0);
        const double fd = std::exp(interpolate_log_value(field, p.x));
        const PathEstimate mc =
            estimate_u_mc(pot, p.t, p.x, InitialCondition::heaviside(), 20000, 2e-3, 101, 1);
        CHECK(std::abs(mc.value - fd) < 3.0 * mc.standard_error + 0.02 * fd);
    }
}

TEST_CASE("path estimate validates its inputs") {
    const ConstantPotential pot(1.0, {-1e12, 1e12});
    const auto init = InitialCondition::heaviside();
    CHECK_THROWS_AS(estimate_u_mc(pot, 0.0, 0.0, init, 100, 1e-3, 1), ConfigError);
    CHECK_THROWS_AS(estimate_u_mc(pot, 1.0, 0.0, init, 100, 0.02, 1), ConfigError);
    CHECK_THROWS_AS(estimate_u_mc(pot, 1.0, 0.0, init, 1, 1e-3, 1), ConfigError);
}

TEST_CASE("shifted potential is the original minus its peak") {
    const auto pot = make_poisson_potential(1.0, 3.0, 0.5, {-50.0, 50.0}, 17);
    const ShiftedPotential zeta(pot);
    CHECK(zeta.es() == doctest::Approx(3.0));
    CHECK(zeta.lower_bound() == doctest::Approx(-2.0));
    for (double x = -20.0; x <= 20.0; x += 0.7) {
        CHECK(zeta.value(x) == doctest::Approx(pot.value(x) - 3.0));
        CHECK(zeta.value(x) <= 1e-12);
        CHECK(zeta.value(x) >= -2.0 - 1e-12);
    }
}

TEST_CASE("unit crossings reproduce the first-passage transform") {
    // flat zeta == 0: E[e^{eta tau}] = e^{-sqrt(2|eta|)}
    const ConstantPotential pot(1.0, {-1e12, 1e12});
    const ShiftedPotential zeta(pot);
    Rng rng(7, 0);
    const double eta = -1.0;
    std::vector<double> weights;
    for (int i = 0; i < 4000; ++i) {
        const CrossingSample s = simulate_crossing(zeta, 1.0, 0.0, 1e-3, rng, 400.0, -500.0);
        CHECK(s.zeta_integral == doctest::Approx(0.0).scale(1.0));
        weights.push_back(std::exp(eta * s.tau));
    }
    double mean = 0.0, var = 0.0;
    for (const double w : weights) mean += w;
    mean /= weights.size();
    for (const double w : weights) var += (w - mean) * (w - mean);
    const double se = std::sqrt(var / (weights.size() - 1.0) / weights.size());
    CHECK(std::abs(mean - std::exp(-std::sqrt(2.0))) < 3.0 * se + 0.005);
}

TEST_CASE("crossing samples respect the time cap") {
    const ConstantPotential pot(1.0, {-1e12, 1e12});
    const ShiftedPotential zeta(pot);
    Rng rng(8, 0);
    bool saw_cap = false;
    for (int i = 0; i < 50; ++i) {
        const CrossingSample s = simulate_crossing(zeta, 1.0, 0.0, 1e-3, rng, 0.05, -500.0);
        CHECK(s.tau <= 0.05 + 1e-9);
        saw_cap = saw_cap || s.capped;
    }
    CHECK(saw_cap);
    CHECK_THROWS_AS(simulate_crossing(zeta, 0.0, 1.0, 1e-3, rng), PreconditionError);
}

TEST_CASE("hitting walk reproduces the exponential functional") {
    const ConstantPotential pot(2.0, {-1e12, 1e12});
    const ShiftedPotential zeta(pot);  // zeta == 0
    const double eta = -2.0;
    std::vector<double> weights;
    int capped = 0;
    for (int i = 0; i < 600; ++i) {
        try {
            const HitSample s = simulate_until_hit(zeta, 1.0, eta, 1e-3, 9000 + i);
            CHECK(s.hitting_time > 0.0);
            weights.push_back(std::exp(s.integral));
        } catch (const NumericalError&) {
            // a capped path would carry weight exp(eta * 1e6); count it as 0
            ++capped;
            weights.push_back(0.0);
        }
    }
    CHECK(capped <= 3);
    double mean = 0.0, var = 0.0;
    for (const double w : weights) mean += w;
    mean /= weights.size();
    for (const double w : weights) var += (w - mean) * (w - mean);
    const double se = std::sqrt(var / (weights.size() - 1.0) / weights.size());
    CHECK(std::abs(mean - std::exp(-2.0)) < 3.0 * se + 0.005);

    CHECK_THROWS_AS(simulate_until_hit(zeta, -1.0, eta, 1e-3, 1), PreconditionError);
    CHECK_THROWS_AS(simulate_until_hit(zeta, 1.0, 0.5, 1e-3, 1), PreconditionError);
}

TEST_CASE("growth-rate curve is decreasing with the predicted finite-time values") {
    const ConstantPotential pot(1.0, {-1e12, 1e12});
    const std::vector<double> vs{0.0, 0.5, 1.0};
    const double t = 25.0;
    const LyapunovCurve curve = estimate_lyapunov(pot, vs, t);
    REQUIRE(curve.points.size() == 3);

    // Lambda_hat(v) = (1/t) ln[e^t Phi(-v sqrt(t))]
    for (std::size_t i = 0; i < vs.size(); ++i) {
        const double predicted = 1.0 + std::log(testutil::phi(-vs[i] * std::sqrt(t))) / t;
        CHECK(std::abs(curve.points[i].lambda_hat - predicted) < 0.02);
    }
    CHECK(curve.points[0].lambda_hat > curve.points[1].lambda_hat);
    CHECK(curve.points[1].lambda_hat > curve.points[2].lambda_hat);
    CHECK_THROWS_AS(estimate_lyapunov(pot, std::vector<double>{}, t), ConfigError);
    CHECK_THROWS_AS(estimate_lyapunov(pot, vs, 0.5), ConfigError);
}

TEST_CASE("v0 bracket straddles the growth-rate root") {
    const ConstantPotential pot(1.0, {-1e12, 1e12});
    V0Config cfg;
    cfg.t = 25.0;
    const V0Estimate est = estimate_v0(pot, cfg);

    // root of 1 + ln Phi(-z)/t in z = v sqrt(t), computed independently
    double lo = 0.1, hi = 12.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (25.0 + std::log(testutil::phi(-mid)) > 0.0 ? lo : hi) = mid;
    }
    const double predicted_v0 = 0.5 * (lo + hi) / std::sqrt(25.0);
    CHECK(est.v0 == doctest::Approx(predicted_v0).epsilon(0.03));
    CHECK(est.bracket_lo < est.v0);
    CHECK(est.v0 <= est.bracket_hi);
    // the finite-time root sits below the asymptotic speed sqrt(2)
    CHECK(est.v0 < std::sqrt(2.0));
    CHECK(est.v0 > 1.2);
}

TEST_CASE("v0 estimation reports a missing root as a domain error") {
    const ConstantPotential pot(1.0, {-1e12, 1e12});
    V0Config cfg;
    cfg.t = 25.0;
    cfg.v_factor = 0.3;  // scan stops before the curve turns negative
    CHECK_THROWS_AS(estimate_v0(pot, cfg), DomainError);
}
