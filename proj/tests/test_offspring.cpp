#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "frontlab/errors.hpp"
#include "frontlab/offspring.hpp"
#include "frontlab/rng.hpp"

using namespace frontlab;

TEST_CASE("binary default: two children, second moment 4") {
    const OffspringDistribution dist;
    CHECK(dist.is_binary());
    CHECK(dist.mean() == doctest::Approx(2.0));
    CHECK(dist.second_moment() == doctest::Approx(4.0));
    CHECK(dist.max_count() == 2);
}

TEST_CASE("table law must average exactly two offspring") {
    const OffspringDistribution dist({{1, 1.0 / 3.0}, {2, 1.0 / 3.0}, {3, 1.0 / 3.0}});
    CHECK_FALSE(dist.is_binary());
    CHECK(dist.mean() == doctest::Approx(2.0));
    CHECK(dist.second_moment() == doctest::Approx(14.0 / 3.0));
    CHECK(dist.max_count() == 3);

    CHECK_THROWS_AS(OffspringDistribution({{1, 0.5}, {2, 0.5}}), ConfigError);  // mean 1.5
    CHECK_THROWS_AS(OffspringDistribution({{0, 0.5}, {4, 0.5}}), ConfigError);  // zero children
    CHECK_THROWS_AS(OffspringDistribution({{2, 1.2}}), ConfigError);            // bad probability
    CHECK_THROWS_AS(OffspringDistribution({{2, 0.7}, {2, 0.3}}), ConfigError);  // duplicate count
    CHECK_THROWS_AS(OffspringDistribution({{1, 0.4}, {3, 0.4}}), ConfigError);  // sums to 0.8
    CHECK_THROWS_AS(OffspringDistribution(std::vector<OffspringDistribution::Entry>{}),
                    ConfigError);
}

TEST_CASE("sampling frequencies match the table") {
    const OffspringDistribution dist({{1, 0.25}, {2, 0.5}, {3, 0.25}});
    Rng rng(31, 0);
    const int n = 50000;
    int c1 = 0, c2 = 0, c3 = 0;
    for (int i = 0; i < n; ++i) {
        const auto k = sample_offspring(dist, rng);
        if (k == 1) ++c1;
        else if (k == 2) ++c2;
        else if (k == 3) ++c3;
    }
    CHECK(c1 + c2 + c3 == n);
    // 5 sigma bands
    CHECK(std::abs(c1 - 12500) < 5.0 * std::sqrt(n * 0.25 * 0.75));
    CHECK(std::abs(c2 - 25000) < 5.0 * std::sqrt(n * 0.5 * 0.5));
}

TEST_CASE("binary reaction term is u(1-u) exactly") {
    const Nonlinearity f{OffspringDistribution{}};
    for (double u = 0.0; u <= 1.0; u += 0.05) {
        CHECK(f.value(u) == doctest::Approx(u * (1.0 - u)).epsilon(1e-14));
    }
}

TEST_CASE("table reaction term matches the generating-function formula") {
    const OffspringDistribution dist({{1, 1.0 / 3.0}, {2, 1.0 / 3.0}, {3, 1.0 / 3.0}});
    const Nonlinearity f{dist};
    for (double u = 0.0; u <= 1.0; u += 0.1) {
        const double s = 1.0 - u;
        const double expected = s - (s + s * s + s * s * s) / 3.0;
        CHECK(f.value(u) == doctest::Approx(expected).epsilon(1e-13));
    }
    CHECK(f.value(0.0) == doctest::Approx(0.0).scale(1.0));
    CHECK(f.value(1.0) == doctest::Approx(0.0).scale(1.0));
    CHECK_THROWS_AS(f.value(-0.1), DomainError);
    CHECK_THROWS_AS(f.value(1.1), DomainError);
}

TEST_CASE("reaction slope at zero is one: second difference recovers -(m2 - 2)") {
    for (const OffspringDistribution& dist :
         {OffspringDistribution{},
          OffspringDistribution({{1, 1.0 / 3.0}, {2, 1.0 / 3.0}, {3, 1.0 / 3.0}})}) {
        const Nonlinearity f{dist};
        const double h = 1e-4;
        const double slope0 = (f.value(h) - f.value(0.0)) / h;
        CHECK(slope0 == doctest::Approx(1.0).epsilon(1e-3));
        const double second = (f.value(2.0 * h) - 2.0 * f.value(h) + f.value(0.0)) / (h * h);
        CHECK(second == doctest::Approx(-(dist.second_moment() - 2.0)).epsilon(1e-3));
    }
}

TEST_CASE("growth ratio starts at one and decays") {
    const Nonlinearity f{OffspringDistribution{}};
    CHECK(f.growth_ratio(0.0) == doctest::Approx(1.0));
    CHECK(f.growth_ratio(1e-12) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(f.growth_ratio(0.3) == doctest::Approx(0.7).epsilon(1e-12));
    double prev = 1.0;
    for (double w = 0.1; w <= 1.0; w += 0.1) {
        const double c = f.growth_ratio(w);
        CHECK(c <= prev + 1e-12);
        prev = c;
    }
    CHECK(f.growth_ratio(1.0) == doctest::Approx(0.0).scale(1.0));
    CHECK_THROWS_AS(f.growth_ratio(1.5), DomainError);
}
