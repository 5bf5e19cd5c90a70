#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "frontlab/coupling.hpp"
#include "frontlab/errors.hpp"
#include "frontlab/potential.hpp"

using namespace frontlab;

namespace {

// Brute-force feasibility oracle: scan s' on a fine grid for both constraint
// suprema and bisect the t' axis for the window edges.
double sup_oracle(double t_prime, double a, double b) {
    double best = -1e300;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double s = t_prime * static_cast<double>(i) / n;
        best = std::max(best, t_prime + a * s - b / (t_prime - s));
    }
    return best;
}

bool feasible_oracle(double t_prime, double a, double b1, double b2) {
    return sup_oracle(t_prime, a, b1) < 0.0 && sup_oracle(t_prime, a, b2) > 0.0 &&
           t_prime < 1.0 - 1e-12;
}

}

TEST_CASE("closed-form feasibility window matches a grid-search oracle") {
    struct Case {
        double ei, es, delta1;
    };
    for (const Case c : {Case{1.0, 5.0, 0.01}, Case{1.0, 3.0, 0.005}}) {
        const FeasibleParameters p = select_parameters(c.ei, c.es, c.delta1);
        const double a = (c.es - c.ei) / c.ei;
        const double b1 = std::pow(1.0 + 4.0 * c.delta1, 2);
        const double b2 = std::pow(1.0 + 2.0 * c.delta1, 2);
        CHECK(p.a == doctest::Approx(a));
        CHECK(p.b1 == doctest::Approx(b1));
        CHECK(p.b2 == doctest::Approx(b2));

        // bisect the oracle for the window edges
        double lo = 1e-3, hi = 1.0;
        REQUIRE(feasible_oracle(0.5 * (p.t_lower + p.t_upper), a, b1, b2));
        double llo = lo, lhi = 0.5 * (p.t_lower + p.t_upper);
        for (int i = 0; i < 60; ++i) {
            const double mid = 0.5 * (llo + lhi);
            (feasible_oracle(mid, a, b1, b2) ? lhi : llo) = mid;
        }
        double ulo = 0.5 * (p.t_lower + p.t_upper), uhi = hi;
        for (int i = 0; i < 60; ++i) {
            const double mid = 0.5 * (ulo + uhi);
            (feasible_oracle(mid, a, b1, b2) ? ulo : uhi) = mid;
        }
        CHECK(std::abs(p.t_lower - 0.5 * (llo + lhi)) < 1.5e-3);
        CHECK(std::abs(p.t_upper - 0.5 * (ulo + uhi)) < 1.5e-3);
        CHECK(p.t_prime > p.t_lower);
        CHECK(p.t_prime < p.t_upper);
        CHECK(p.negsup < 0.0);
        CHECK(p.possup > 0.0);
        CHECK(p.delta2 > 0.0);
        CHECK(p.delta2 < 1.0);
    }
}

TEST_CASE("parameter selection needs the peak to double the floor") {
    CHECK_THROWS_AS(select_parameters(1.0, 2.0), DomainError);
    CHECK_THROWS_AS(select_parameters(1.0, 1.5), DomainError);
    CHECK_THROWS_AS(select_parameters(2.0, 4.0), DomainError);
    CHECK_NOTHROW(select_parameters(1.0, 2.5));
    CHECK_THROWS_AS(select_parameters(1.0, 5.0, 0.3), ConfigError);   // delta1 out of range
    CHECK_THROWS_AS(select_parameters(1.0, 5.0, 0.0), ConfigError);
    CHECK_THROWS_AS(select_parameters(-1.0, 5.0), ConfigError);
}

TEST_CASE("automatic delta1 search returns the widest-margin feasible triple") {
    const FeasibleParameters p = select_parameters(1.0, 5.0);
    CHECK(p.delta1 > 0.0);
    CHECK(p.delta1 <= 0.05 + 1e-12);
    CHECK(p.negsup < 0.0);
    CHECK(p.possup > 0.0);
    CHECK(p.t_prime < 1.0);
    // no single pinned delta1 on the search grid beats the chosen margin
    for (int i = 1; i <= 100; ++i) {
        const double d1 = 5e-4 * static_cast<double>(i);
        FeasibleParameters q;
        try {
            q = select_parameters(1.0, 5.0, d1);
        } catch (const DomainError&) {
            continue;
        }
        CHECK(-q.negsup <= -p.negsup + 1e-9);
    }
}

TEST_CASE("coupling geometry derives from the anchor and the stretch length") {
    const FeasibleParameters p = select_parameters(1.0, 5.0, 0.01);
    const double x_n = 30.0, phi = 10.0;
    const CouplingConfig cfg = make_coupling_config(p, 1.0, 5.0, x_n, phi);
    CHECK(cfg.l == doctest::Approx(x_n - 4.5 * p.delta1 * phi));
    CHECK(cfg.r == doctest::Approx(x_n + 1.5 * p.delta1 * phi));
    CHECK(cfg.m == doctest::Approx(0.5 * (cfg.l + cfg.r)));
    CHECK(cfg.big_l == doctest::Approx(x_n - phi));
    CHECK(cfg.big_r == doctest::Approx(2.0 * cfg.m - cfg.big_l));
    CHECK(cfg.big_r - cfg.m == doctest::Approx(cfg.m - cfg.big_l));
    CHECK(cfg.t_check == doctest::Approx(p.t_prime * phi / std::sqrt(2.0)));
    CHECK(cfg.t_final == doctest::Approx(2.0 * cfg.t_check));
}

TEST_CASE("the run rejects media that break the monotone band") {
    const FeasibleParameters p = select_parameters(1.0, 5.0);
    // bumps at -3 and 3 leave a valley at 0, inside [L, R] for this geometry
    const PoissonBumpPotential pot(1.0, 5.0, 0.5, {-100.0, 100.0}, {-3.0, 3.0});
    const CouplingConfig cfg = make_coupling_config(p, 1.0, 5.0, 0.0, 8.0);
    CHECK_THROWS_AS(run_coupling(cfg, pot, OffspringDistribution{}, 1), PreconditionError);
}

TEST_CASE("config validation guards the slot geometry") {
    const FeasibleParameters p = select_parameters(1.0, 5.0);
    const auto pot = engineer_stretch_potential(1.0, 5.0, 8.0, 0.0, {-40.0, 40.0});
    CouplingConfig cfg = make_coupling_config(p, 1.0, 5.0, 0.0, 8.0);
    cfg.l = cfg.x_n - 6.0 * cfg.delta1 * cfg.phi;  // outside the allowed slot
    cfg.m = 0.5 * (cfg.l + cfg.r);
    cfg.big_r = 2.0 * cfg.m - cfg.big_l;
    CHECK_THROWS_AS(run_coupling(cfg, pot, OffspringDistribution{}, 1), ConfigError);

    CouplingConfig swapped = make_coupling_config(p, 1.0, 5.0, 0.0, 8.0);
    swapped.m = swapped.r + 1.0;
    CHECK_THROWS_AS(run_coupling(swapped, pot, OffspringDistribution{}, 1), ConfigError);
}

TEST_CASE("runs are reproducible per seed") {
    const FeasibleParameters p = select_parameters(1.0, 5.0);
    const auto pot = engineer_stretch_potential(1.0, 5.0, 2.5, 0.0, {-30.0, 30.0});
    const CouplingConfig cfg = make_coupling_config(p, 1.0, 5.0, 0.0, 2.5);
    const CouplingOutcome a = run_coupling(cfg, pot, OffspringDistribution{}, 2024);
    const CouplingOutcome b = run_coupling(cfg, pot, OffspringDistribution{}, 2024);
    const CouplingOutcome c = run_coupling(cfg, pot, OffspringDistribution{}, 2025);
    REQUIRE(a.left_final.size() == b.left_final.size());
    bool all_equal = true;
    for (std::size_t i = 0; i < a.left_final.size(); ++i)
        all_equal = all_equal && a.left_final[i].position == b.left_final[i].position;
    CHECK(all_equal);
    CHECK(a.g1 == b.g1);
    CHECK(a.success == b.success);
    const bool differs = c.left_final.size() != a.left_final.size() || c.success != a.success ||
                         c.trace.size() != a.trace.size() ||
                         (!c.left_final.empty() && !a.left_final.empty() &&
                          c.left_final[0].position != a.left_final[0].position);
    CHECK(differs);
}

TEST_CASE("mirror and co-location invariants hold exactly along the trace") {
    const FeasibleParameters p = select_parameters(1.0, 5.0);
    const auto pot = engineer_stretch_potential(1.0, 5.0, 2.5, 0.0, {-30.0, 30.0});
    CouplingConfig cfg = make_coupling_config(p, 1.0, 5.0, 0.0, 2.5);
    cfg.trace_dt = 0.02;
    std::size_t snapshots = 0;
    for (int rep = 0; rep < 25; ++rep) {
        const CouplingOutcome out = run_coupling(cfg, pot, OffspringDistribution{}, 400 + rep);
        for (const auto& s : out.trace) {
            ++snapshots;
            CHECK(s.n_lm == s.n_rm);
            CHECK(s.n_lc == s.n_rc);
            CHECK(s.mirror_drift == 0.0);
            CHECK(s.coloc_drift == 0.0);
            CHECK(s.n_lm + s.n_lc + s.n_bad >= 1);
        }
        // partner table is a matched involution at the end of the run
        std::map<std::uint64_t, const TypedParticle*> right;
        for (const auto& q : out.right_final) right[q.id] = &q;
        for (const auto& l : out.left_final) {
            if (l.tag == ParticleTag::lm || l.tag == ParticleTag::lc) {
                REQUIRE(right.count(l.partner) == 1);
                const TypedParticle* q = right[l.partner];
                CHECK(q->partner == l.id);
                if (l.tag == ParticleTag::lm) {
                    CHECK(q->tag == ParticleTag::rm);
                    CHECK(std::abs(q->position - (2.0 * cfg.m - l.position)) < 1e-12);
                } else {
                    CHECK(q->tag == ParticleTag::rc);
                    CHECK(std::abs(q->position - l.position) < 1e-12);
                }
            }
        }
    }
    CHECK(snapshots > 100);
}

TEST_CASE("both marginals grow at the floor rate on a flat slab") {
    // anchor the geometry deep inside the floor plateau so xi == ei around
    // every reachable position and both systems are plain rate-ei trees
    const auto pot = engineer_stretch_potential(1.0, 5.0, 15.0, 0.0, {-80.0, 80.0});
    const FeasibleParameters p = select_parameters(1.0, 5.0);
    CouplingConfig cfg = make_coupling_config(p, 1.0, 5.0, -10.0, 15.0);
    cfg.t_check = 2.0;  // shorten the horizon; geometry checks still apply
    cfg.t_final = 2.0;
    const int reps = 300;
    double sum_l = 0.0, sumsq_l = 0.0, sum_r = 0.0, sumsq_r = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
        const CouplingOutcome out = run_coupling(cfg, pot, OffspringDistribution{}, 9000 + rep);
        REQUIRE(out.reached_t_check);
        const double nl = static_cast<double>(out.left_final.size());
        const double nr = static_cast<double>(out.right_final.size());
        sum_l += nl;
        sumsq_l += nl * nl;
        sum_r += nr;
        sumsq_r += nr * nr;
    }
    const double expect = std::exp(2.0);
    const double mean_l = sum_l / reps;
    const double se_l = std::sqrt((sumsq_l - reps * mean_l * mean_l) / (reps - 1.0) / reps);
    CHECK(std::abs(mean_l - expect) < 3.0 * se_l + 0.1);
    const double mean_r = sum_r / reps;
    const double se_r = std::sqrt((sumsq_r - reps * mean_r * mean_r) / (reps - 1.0) / reps);
    CHECK(std::abs(mean_r - expect) < 3.0 * se_r + 0.1);
}

TEST_CASE("good events recompute from the trace and gate the subset logic") {
    const FeasibleParameters p = select_parameters(1.0, 5.0);
    const auto pot = engineer_stretch_potential(1.0, 5.0, 2.5, 0.0, {-30.0, 30.0});
    const CouplingConfig cfg = make_coupling_config(p, 1.0, 5.0, 0.0, 2.5);
    std::size_t violations = 0, reps = 0;
    for (int rep = 0; rep < 40; ++rep) {
        const CouplingOutcome out = run_coupling(cfg, pot, OffspringDistribution{}, 1700 + rep);
        if (!out.reached_t_check) continue;
        ++reps;
        const auto [g1, g2] = check_good_events(out, cfg);
        CHECK(g1 == out.g1);
        CHECK(g2 == out.g2);
        if (!verify_subset_logic(out)) ++violations;
    }
    REQUIRE(reps > 30);
    CHECK(static_cast<double>(violations) <= 0.01 * static_cast<double>(reps) + 1e-9);
}

TEST_CASE("subset logic verdicts on synthetic outcomes") {
    CouplingOutcome out;
    out.reached_t_check = false;
    CHECK(verify_subset_logic(out));  // vacuous off the good events

    out.reached_t_check = true;
    out.g1 = true;
    out.g2 = false;
    CHECK(verify_subset_logic(out));  // vacuous again

    out.g2 = true;
    out.success = true;
    out.n_lm_check = 0;
    out.n_bad_check = 0;
    CHECK(verify_subset_logic(out));

    out.n_lm_check = 2;
    CHECK_FALSE(verify_subset_logic(out));

    const FeasibleParameters p = select_parameters(1.0, 5.0);
    const CouplingConfig cfg = make_coupling_config(p, 1.0, 5.0, 0.0, 2.5);
    CouplingOutcome bare;
    bare.reached_t_check = true;  // but no trace recorded
    CHECK_THROWS_AS(check_good_events(bare, cfg), PreconditionError);
}

TEST_CASE("a tiny cap ends the replicate early and says so") {
    const FeasibleParameters p = select_parameters(1.0, 5.0);
    const auto pot = engineer_stretch_potential(1.0, 5.0, 2.5, 0.0, {-30.0, 30.0});
    CouplingConfig cfg = make_coupling_config(p, 1.0, 5.0, 0.0, 2.5);
    cfg.cap = 8;
    bool saw_cap = false;
    for (int rep = 0; rep < 12 && !saw_cap; ++rep) {
        const CouplingOutcome out = run_coupling(cfg, pot, OffspringDistribution{}, 60 + rep);
        if (out.capped && !out.reached_t_check) {
            saw_cap = true;
            CHECK(out.end_time <= cfg.t_check + 1e-9);
        }
    }
    CHECK(saw_cap);
}
