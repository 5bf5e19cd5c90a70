#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

#include "frontlab/errors.hpp"
#include "frontlab/potential.hpp"
#include "frontlab/solver.hpp"
#include "test_util.hpp"

using namespace frontlab;

namespace {

Field flat_field(EquationKind kind, std::size_t n, double dx, double value) {
    Field f;
    f.kind = kind;
    f.origin = 0.0;
    f.dx = dx;
    f.values.assign(n, value);
    return f;
}

LatticePotential flat_lattice(std::size_t n, double dx, double level) {
    return LatticePotential(0.0, dx, std::vector<double>(n, level), level, level);
}

}

TEST_CASE("initial conditions sample with midpoint jumps") {
    const auto heav = InitialCondition::heaviside();
    CHECK(heav.sample(-1.0) == doctest::Approx(1.0));
    CHECK(heav.sample(0.0) == doctest::Approx(0.5));
    CHECK(heav.sample(1.0) == doctest::Approx(0.0).scale(1.0));

    const auto minimal = InitialCondition::pam_minimal(0.2);
    CHECK(minimal.sample(-0.1) == doctest::Approx(0.2));
    CHECK(minimal.sample(-0.3) == doctest::Approx(0.0).scale(1.0));
    CHECK(minimal.sample(0.1) == doctest::Approx(0.0).scale(1.0));
    CHECK_THROWS_AS(InitialCondition::pam_minimal(0.0), ConfigError);

    const auto maximal = InitialCondition::pam_maximal(3.0);
    CHECK(maximal.sample(-2.0) == doctest::Approx(3.0));
    CHECK(maximal.sample(0.0) == doctest::Approx(1.5));
    CHECK(maximal.sample(0.5) == doctest::Approx(0.0).scale(1.0));

    CHECK_THROWS_AS(InitialCondition::custom(nullptr), ConfigError);
}

TEST_CASE("pam class sandwich check") {
    CHECK_NOTHROW(InitialCondition::pam_minimal(0.1).require_pam_class(0.1, 1.0));
    CHECK_NOTHROW(InitialCondition::heaviside().require_pam_class(0.1, 1.0));
    CHECK_NOTHROW(InitialCondition::pam_maximal(1.0).require_pam_class(0.1, 1.0));
    // exceeds the cap on x <= 0
    const auto big = InitialCondition::custom([](double x) { return x <= 0.0 ? 2.0 : 0.0; });
    CHECK_THROWS_AS(big.require_pam_class(0.1, 1.0), ConfigError);
    // misses the floor on [-delta, 0]
    const auto hollow = InitialCondition::custom([](double) { return 0.0; });
    CHECK_THROWS_AS(hollow.require_pam_class(0.1, 1.0), ConfigError);
    CHECK_THROWS_AS(InitialCondition::heaviside().require_pam_class(0.5, 0.2), ConfigError);
}

TEST_CASE("flat fkpp field follows the reaction ODE against an RK4 oracle") {
    const std::size_t n = 64;
    Field f = flat_field(EquationKind::fkpp, n, 0.5, 0.01);
    const LatticePotential xi = flat_lattice(n, 0.5, 2.0);
    const Nonlinearity reaction{OffspringDistribution{}};
    const double dt = 1e-3;
    for (int s = 0; s < 1000; ++s)
        Solver::step(f, xi, reaction, dt, BoundaryPolicy::neumann);

    const double oracle =
        testutil::rk4(0.01, 1.0, 1e-4, [](double w) { return 2.0 * w * (1.0 - w); });
    CHECK(f.values[0] == doctest::Approx(oracle).epsilon(1e-2));
    CHECK(std::abs(f.values[0] - oracle) < 5e-4);  // explicit Euler O(dt) gap
    for (std::size_t i = 1; i < n; ++i)
        CHECK(f.values[i] == doctest::Approx(f.values[0]).epsilon(1e-12));
}

TEST_CASE("flat pam field grows like exp(xi t) under renormalization") {
    const std::size_t n = 32;
    Field f = flat_field(EquationKind::pam, n, 0.5, 1.0);
    const LatticePotential xi = flat_lattice(n, 0.5, 3.0);
    const Nonlinearity reaction{OffspringDistribution{}};
    const double dt = 1e-3;
    for (int s = 0; s < 1000; ++s)
        Solver::step(f, xi, reaction, dt, BoundaryPolicy::neumann);
    // explicit Euler: 1000 * ln(1 + 3 dt) = 2.99551...
    CHECK(f.log_value(0) == doctest::Approx(3.0).epsilon(0.002));
    CHECK(f.log_value(n / 2) == doctest::Approx(f.log_value(0)).epsilon(1e-12));
    // the mantissa stayed in a safe band even though the field grew ~e^3
    CHECK(f.values[n / 2] < 10.0);
    CHECK(f.log_scale > 0.0);
}

TEST_CASE("pam solve matches the homogeneous closed form") {
    const ConstantPotential pot(3.0, {-1e12, 1e12});
    SolverConfig cfg;
    cfg.kind = EquationKind::pam;
    cfg.dx = 0.05;
    cfg.window_mode = WindowMode::fixed;
    cfg.window = {-25.0, 25.0};
    cfg.cadence = 0.5;
    Solver solver(pot, cfg);
    const SolveResult res = solver.solve(InitialCondition::heaviside(), 5.0);

    // u(t,x) = e^{3t} Phi(-x/sqrt(t))
    const double log_u0 = 15.0 + std::log(0.5);
    CHECK(interpolate_log_value(res.final_field, 0.0) == doctest::Approx(log_u0).epsilon(2e-3));
    const double log_u2 = 15.0 + std::log(testutil::phi(-2.0 / std::sqrt(5.0)));
    CHECK(interpolate_log_value(res.final_field, 2.0) == doctest::Approx(log_u2).epsilon(2e-3));

    // m_eps oracle: solve e^{15} Phi(-z) = eps by bisection
    double lo = 0.0, hi = 12.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (std::exp(15.0) * testutil::phi(-mid) > 0.1 ? lo : hi) = mid;
    }
    const double oracle_m = std::sqrt(5.0) * 0.5 * (lo + hi);
    CHECK(res.trajectory.back().m_eps == doctest::Approx(oracle_m).epsilon(0.02));
    CHECK(res.trajectory.back().width_pam > 0.0);
}

TEST_CASE("fkpp front advances at the expected speed with a bounded profile") {
    const ConstantPotential pot(1.0, {-1e12, 1e12});
    SolverConfig cfg;
    cfg.dx = 0.05;
    cfg.cadence = 0.5;
    Solver solver(pot, cfg);
    const SolveResult res = solver.solve(InitialCondition::heaviside(), 25.0);
    const FrontReport& last = res.trajectory.back();
    // sqrt(2) minus the logarithmic lag keeps m/t in [1.2, 1.42] at t = 25
    CHECK(last.m_eps / 25.0 > 1.2);
    CHECK(last.m_eps / 25.0 < 1.42);
    CHECK(last.width_fkpp > 3.0);
    CHECK(last.width_fkpp < 8.0);
    // the moving window grew ahead of the front and never extended leftward
    CHECK(res.final_field.origin >= -40.0 - 1e-9);
    CHECK(res.final_field.right_edge() > last.m_eps + 20.0);
    double prev = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 4; i < res.trajectory.size(); ++i) {
        CHECK(res.trajectory[i].m_eps > prev - 1e-9);
        prev = res.trajectory[i].m_eps;
    }
    // values stay inside [0,1]
    for (const double v : res.final_field.values) {
        CHECK(v >= -1e-12);
        CHECK(v <= 1.0 + 1e-12);
    }
}

TEST_CASE("front positions interpolate linearly and honor sentinels") {
    Field f = flat_field(EquationKind::fkpp, 3, 1.0, 0.0);
    f.values = {1.0, 0.55, 0.05};
    const FrontReport r = front_positions(f, 0.1, 10.0);
    CHECK(r.m_eps == doctest::Approx(1.9).epsilon(1e-12));
    CHECK(r.m_eps_minus == doctest::Approx(1.9).epsilon(1e-12));
    const double leading = 1.9;
    const double trailing = (1.0 - 0.9) / (1.0 - 0.55);
    CHECK(r.width_fkpp == doctest::Approx(leading - trailing).epsilon(1e-12));
    CHECK(std::isnan(r.width_pam));

    Field zero = flat_field(EquationKind::fkpp, 4, 1.0, 0.0);
    const FrontReport rz = front_positions(zero, 0.1, 10.0);
    CHECK(std::isinf(rz.m_eps));
    CHECK(rz.m_eps < 0.0);
    CHECK(rz.m_eps_minus == doctest::Approx(0.0).scale(1.0));

    Field ones = flat_field(EquationKind::fkpp, 4, 1.0, 1.0);
    const FrontReport ro = front_positions(ones, 0.1, 10.0);
    CHECK(std::isinf(ro.m_eps));
    CHECK(ro.m_eps > 0.0);

    CHECK_THROWS_AS(front_positions(f, 0.0, 10.0), DomainError);
    CHECK_THROWS_AS(front_positions(f, 1.0, 10.0), DomainError);
}

TEST_CASE("pam front positions work in log space") {
    Field f = flat_field(EquationKind::pam, 3, 1.0, 0.0);
    f.values = {std::exp(2.0), 1.0, std::exp(-5.0)};
    f.log_scale = 1.0;  // log values: 3, 1, -4
    const FrontReport r = front_positions(f, 0.1, 5.0);
    const double log_eps = std::log(0.1);
    const double log_big = std::log(5.0);
    CHECK(r.m_eps == doctest::Approx(1.0 + (1.0 - log_eps) / 5.0).epsilon(1e-12));
    CHECK(r.mbar_M == doctest::Approx((3.0 - log_big) / 2.0).epsilon(1e-12));
    CHECK(r.mbar_M_minus == doctest::Approx((3.0 - log_big) / 2.0).epsilon(1e-12));
    CHECK(r.width_pam == doctest::Approx(r.m_eps - r.mbar_M_minus).epsilon(1e-12));
    CHECK(std::isnan(r.width_fkpp));
    CHECK_THROWS_AS(front_positions(f, 0.1, 0.05), DomainError);
}

TEST_CASE("interpolate_log_value is linear in log space") {
    Field f = flat_field(EquationKind::pam, 2, 1.0, 0.0);
    f.values = {std::exp(-1.0), std::exp(1.0)};
    f.log_scale = 0.5;
    CHECK(interpolate_log_value(f, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(interpolate_log_value(f, 0.0) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK_THROWS_AS(interpolate_log_value(f, 2.0), DomainError);
}

TEST_CASE("solver configuration is validated") {
    const ConstantPotential pot(1.0, {-1e12, 1e12});
    SolverConfig cfg;
    cfg.dx = 0.05;
    cfg.dt = 0.002;  // violates 0.4 dx^2 = 0.001
    CHECK_THROWS_AS(Solver(pot, cfg), ConfigError);

    SolverConfig bad_eps;
    bad_eps.level_eps = 1.5;
    CHECK_THROWS_AS(Solver(pot, bad_eps), ConfigError);

    SolverConfig ok;
    Solver solver(pot, ok);
    CHECK_THROWS_AS(solver.solve(InitialCondition::heaviside(), -1.0), ConfigError);
    const auto outside =
        InitialCondition::custom([](double x) { return x <= 0.0 ? 1.5 : 0.0; });
    CHECK_THROWS_AS(solver.solve(outside, 1.0), ConfigError);
}

TEST_CASE("a fixed window reports front escape instead of polluting data") {
    const ConstantPotential pot(1.0, {-1e12, 1e12});
    SolverConfig cfg;
    cfg.dx = 0.05;
    cfg.window_mode = WindowMode::fixed;
    cfg.window = {-10.0, 10.0};
    Solver solver(pot, cfg);
    CHECK_THROWS_AS(solver.solve(InitialCondition::heaviside(), 12.0), NumericalError);
}

TEST_CASE("space perturbation check: exponential decay rates near the front") {
    const ConstantPotential pot(1.0, {-1e12, 1e12});
    SolverConfig cfg;
    cfg.kind = EquationKind::pam;
    cfg.dx = 0.05;
    cfg.window_mode = WindowMode::fixed;
    cfg.window = {-30.0, 30.0};
    Solver solver(pot, cfg);
    const SolveResult res = solver.solve(InitialCondition::heaviside(), 20.0);

    const std::vector<double> offsets{0.5, 1.0, 2.0};
    const SpacePerturbationCheck check = check_space_perturbation(res.final_field, 1.0, offsets);
    REQUIRE(check.points.size() == offsets.size());
    for (const auto& p : check.points) {
        CHECK(p.ratio > 0.0);
        CHECK(p.ratio < 1.0);  // moving right decreases u
        CHECK(p.rate > 0.3);
        CHECK(p.rate < 3.0);
    }
    CHECK(check.c_min >= 1.0);
    CHECK(check.c_min < 2.5);

    const std::vector<double> far{15.0};
    CHECK_THROWS_AS(check_space_perturbation(res.final_field, 1.0, far), DomainError);
    CHECK_THROWS_AS(check_space_perturbation(res.final_field, 1.0, std::vector<double>{-1.0}),
                    DomainError);
    // fkpp fields are rejected
    Field fkpp = flat_field(EquationKind::fkpp, 8, 0.5, 0.5);
    CHECK_THROWS_AS(check_space_perturbation(fkpp, 1.0, offsets), PreconditionError);
}

TEST_CASE("snapshots land on the requested times") {
    const ConstantPotential pot(1.0, {-1e12, 1e12});
    SolverConfig cfg;
    cfg.dx = 0.05;
    cfg.cadence = 0.25;
    cfg.snapshot_times = {0.5, 1.5, 3.0};
    Solver solver(pot, cfg);
    const SolveResult res = solver.solve(InitialCondition::heaviside(), 4.0);
    REQUIRE(res.snapshots.size() == 3);
    CHECK(res.snapshots[0].time == doctest::Approx(0.5));
    CHECK(res.snapshots[1].time == doctest::Approx(1.5));
    CHECK(res.snapshots[2].time == doctest::Approx(3.0));
    CHECK(res.final_field.time == doctest::Approx(4.0));
}
