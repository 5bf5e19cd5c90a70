#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <memory>
#include <vector>

#include "frontlab/errors.hpp"
#include "frontlab/potential.hpp"
#include "frontlab/rng.hpp"
#include "test_util.hpp"

using namespace frontlab;

TEST_CASE("default bump profile: flat top, linear shoulder, compact support") {
    const BumpProfile p;
    CHECK(p.value(0.0) == doctest::Approx(1.0));
    CHECK(p.value(1.0) == doctest::Approx(1.0));
    CHECK(p.value(-0.7) == doctest::Approx(1.0));
    CHECK(p.value(1.25) == doctest::Approx(0.5));
    CHECK(p.value(1.5) == doctest::Approx(0.0).scale(1.0));
    CHECK(p.value(2.0) == doctest::Approx(0.0).scale(1.0));
    CHECK(p.value(5.0) == doctest::Approx(0.0).scale(1.0));
    CHECK(p.max_slope() == doctest::Approx(2.0));
    CHECK(p.support_radius() == doctest::Approx(1.5));
}

TEST_CASE("bump profile validation") {
    using BP = BumpProfile::Breakpoint;
    CHECK_THROWS_AS(BumpProfile({BP{0.0, 1.0}}), ConfigError);                    // too short
    CHECK_THROWS_AS(BumpProfile({BP{0.0, 0.5}, BP{2.0, 0.0}}), ConfigError);      // not 1 on [0,1]
    CHECK_THROWS_AS(BumpProfile({BP{0.0, 1.0}, BP{1.0, 1.0}, BP{2.0, 0.2}}),      // no vanish
                    ConfigError);
    CHECK_THROWS_AS(BumpProfile({BP{0.0, 1.0}, BP{1.0, 1.0}, BP{0.5, 0.0}}),      // not sorted
                    ConfigError);
    CHECK_NOTHROW(BumpProfile({BP{0.0, 1.0}, BP{1.0, 1.0}, BP{2.0, 0.0}}));
}

TEST_CASE("constant potential") {
    const ConstantPotential pot(2.5, {-10.0, 10.0});
    CHECK(pot.value(3.0) == doctest::Approx(2.5));
    CHECK(pot.ei() == doctest::Approx(2.5));
    CHECK(pot.es() == doctest::Approx(2.5));
    CHECK_THROWS_AS(pot.value(11.0), DomainError);
    CHECK_THROWS_AS(ConstantPotential(0.0, {-1.0, 1.0}), ConfigError);
}

TEST_CASE("poisson bump potential takes the sup over nearby bumps") {
    const PoissonBumpPotential pot(1.0, 3.0, 0.0, {-10.0, 10.0}, {0.0, 3.0}, BumpProfile{});
    CHECK(pot.value(0.0) == doctest::Approx(3.0));     // on a bump center
    CHECK(pot.value(0.9) == doctest::Approx(3.0));     // flat top
    CHECK(pot.value(1.25) == doctest::Approx(2.0));    // shoulder: 1 + 2*0.5
    CHECK(pot.value(1.6) == doctest::Approx(1.4));     // shoulder of the bump at 3
    CHECK(pot.value(2.1) == doctest::Approx(3.0));     // flat top of the bump at 3
    CHECK(pot.value(-5.0) == doctest::Approx(1.0));    // floor away from bumps
    CHECK(pot.value(1.5) == doctest::Approx(1.0) );    // both shoulders vanish here
    CHECK_THROWS_AS(pot.value(-11.0), DomainError);
    CHECK_THROWS_AS(PoissonBumpPotential(1.0, 0.5, 0.0, {-1.0, 1.0}, {}, BumpProfile{}),
                    ConfigError);
}

TEST_CASE("poisson point sampling: count and spacing laws") {
    const double intensity = 1.5;
    const Interval window{0.0, 100.0};
    const auto points = sample_poisson_points(intensity, window, 2024);
    // points cover the window extended by 2 on each side
    const double expected = intensity * (window.length() + 4.0);
    CHECK(std::abs(static_cast<double>(points.size()) - expected) < 5.0 * std::sqrt(expected));
    std::vector<double> gaps;
    for (std::size_t i = 1; i < points.size(); ++i) gaps.push_back(points[i] - points[i - 1]);
    const double d = testutil::ks_statistic(
        gaps, [&](double x) { return 1.0 - std::exp(-intensity * x); });
    CHECK(d * std::sqrt(static_cast<double>(gaps.size())) < 1.95);
    // reproducible per seed
    CHECK(sample_poisson_points(intensity, window, 2024) == points);
    CHECK(sample_poisson_points(intensity, window, 2025) != points);
    CHECK(sample_poisson_points(0.0, window, 1).empty());
}

TEST_CASE("discretized lattice tracks the source within the lipschitz bound") {
    const auto pot = make_poisson_potential(1.0, 3.0, 1.0, {-20.0, 20.0}, 7);
    const double dx = 0.05;
    const LatticePotential lat = discretize(pot, dx, {-15.0, 15.0});
    const double lip = pot.lipschitz_bound();
    Rng rng(5, 0);
    for (int i = 0; i < 200; ++i) {
        const double x = rng.uniform(-15.0, 15.0 - dx);
        CHECK(std::abs(lat.value(x) - pot.value(x)) <= lip * dx / 2.0 + 1e-12);
    }
    CHECK_THROWS_AS(lat.value(15.2), DomainError);
    CHECK_THROWS_AS(discretize(pot, dx, {-25.0, 25.0}), DomainError);
}

TEST_CASE("scaled potential multiplies values and bounds") {
    const auto base = std::make_shared<ConstantPotential>(1.5, Interval{-5.0, 5.0});
    const ScaledPotential scaled(base, 4.0);
    CHECK(scaled.value(0.0) == doctest::Approx(6.0));
    CHECK(scaled.ei() == doctest::Approx(6.0));
    CHECK(scaled.es() == doctest::Approx(6.0));
    CHECK_THROWS_AS(ScaledPotential(base, 0.0), ConfigError);
    CHECK_THROWS_AS(ScaledPotential(nullptr, 2.0), ConfigError);
}

TEST_CASE("engineered stretch has the advertised plateau geometry") {
    const double ei = 1.0, es = 5.0, lam = 8.0, center = 30.0;
    const auto pot = engineer_stretch_potential(ei, es, lam, center, {-20.0, 160.0});
    // floor on [center - 2 lam, center]
    for (double x = center - 2.0 * lam; x <= center + 1e-9; x += 0.25)
        CHECK(pot.value(x) == doctest::Approx(ei));
    // peak plateau on [center + 2, center + 2 lam - 2]
    for (double x = center + 2.0; x <= center + 2.0 * lam - 2.0 + 1e-9; x += 0.25)
        CHECK(pot.value(x) == doctest::Approx(es));
    // non-decreasing rise in between, values inside [ei, es]
    double prev = -1.0;
    for (double x = center - 2.0 * lam; x <= center + 2.0; x += 0.01) {
        const double v = pot.value(x);
        CHECK(v >= prev - 1e-12);
        CHECK(v >= ei - 1e-12);
        CHECK(v <= es + 1e-12);
        prev = v;
    }
    // back to the floor past the right shoulder
    CHECK(pot.value(center + 2.0 * lam + 2.0) == doctest::Approx(ei));
    CHECK_THROWS_AS(engineer_stretch_potential(1.0, 5.0, 2.0, 0.0, {-100.0, 100.0}),
                    PreconditionError);
    CHECK_THROWS_AS(engineer_stretch_potential(1.0, 5.0, 8.0, 0.0, {-5.0, 5.0}),
                    PreconditionError);
}

TEST_CASE("find_stretches locates an engineered stretch and verifies it") {
    const double lam = 8.0, center = 40.0;
    const auto pot = engineer_stretch_potential(1.0, 5.0, lam, center, {-30.0, 170.0});
    const auto reports = find_stretches(pot, 2.0, 10, 60);
    REQUIRE_FALSE(reports.empty());
    for (const auto& rep : reports) {
        CHECK(rep.monotone_ok);
        CHECK(rep.x_n >= center - 0.1);
        CHECK(rep.x_n <= center + 2.0);
        // re-verify the reported intervals against the potential directly
        const double phi = rep.c0 * std::log(rep.n);
        CHECK(rep.low_interval.lo == doctest::Approx(rep.x_n - 2.0 * phi));
        CHECK(rep.high_interval.lo == doctest::Approx(rep.x_n + 2.0));
        for (double x = rep.low_interval.lo; x <= rep.low_interval.hi + 1e-9; x += 0.2)
            CHECK(pot.value(x) == doctest::Approx(1.0));
        for (double x = rep.high_interval.lo; x <= rep.high_interval.hi + 1e-9; x += 0.2)
            CHECK(pot.value(x) == doctest::Approx(5.0));
    }
}

TEST_CASE("find_stretches reports nothing on a bump-free medium") {
    const PoissonBumpPotential pot(1.0, 5.0, 0.0, {-100.0, 400.0}, {}, BumpProfile{});
    CHECK(find_stretches(pot, 2.0, 10, 60).empty());
}

TEST_CASE("find_stretches validates its arguments") {
    const PoissonBumpPotential pot(1.0, 5.0, 0.0, {-100.0, 400.0}, {}, BumpProfile{});
    CHECK_THROWS_AS(find_stretches(pot, 0.0, 10, 60), ConfigError);
    CHECK_THROWS_AS(find_stretches(pot, 2.0, 60, 10), ConfigError);
    CHECK_THROWS_AS(find_stretches(pot, 2.0, 10, 60, 0.5), ConfigError);
    // scan range exceeds the potential window
    const PoissonBumpPotential narrow(1.0, 5.0, 0.0, {-1.0, 50.0}, {}, BumpProfile{});
    CHECK_THROWS_AS(find_stretches(narrow, 2.0, 10, 60), DomainError);
}
