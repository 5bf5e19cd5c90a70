#include "frontlab/bbmre.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "frontlab/errors.hpp"
#include "frontlab/parallel.hpp"

namespace frontlab {

namespace {

struct Walker {
    std::uint64_t id;
    std::uint64_t parent;
    double birth_time;
    double pos;
    double ptime;      // particle-local clock within the current sweep
    double next_ring;  // absolute time of the next proposal
};

}

BbmResult simulate_bbm(const Potential& pot, double x0, double t_end,
                       const OffspringDistribution& dist, double dt, std::size_t cap, Rng& rng,
                       bool record_genealogy) {
    if (!(t_end >= 0.0)) throw ConfigError("simulate_bbm needs t_end >= 0");
    if (!(dt > 0.0)) throw ConfigError("simulate_bbm needs dt > 0");
    if (cap < 1) throw ConfigError("simulate_bbm needs cap >= 1");

    const double es = pot.es();
    std::uint64_t next_id = 1;
    std::vector<Walker> alive;
    alive.push_back(Walker{next_id++, 0, 0.0, x0, 0.0, rng.exponential(es)});

    BbmResult out;

    const auto n_steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-12));
    for (std::size_t step = 0; step < n_steps; ++step) {
        const double t_next = std::min(t_end, dt * static_cast<double>(step + 1));
        // index loop on purpose: children appended below are picked up within
        // the same sweep, starting at their birth time
        for (std::size_t i = 0; i < alive.size(); ++i) {
            while (alive[i].next_ring <= t_next) {
                Walker& w = alive[i];
                const double gap = w.next_ring - w.ptime;
                w.pos += std::sqrt(gap) * rng.normal();
                w.ptime = w.next_ring;
                if (rng.uniform() * es < pot.value(w.pos)) {
                    const int k = sample_offspring(dist, rng);
                    if (record_genealogy)
                        out.genealogy.push_back(
                            GenealogyEntry{w.id, w.parent, w.birth_time, w.pos});
                    const std::uint64_t parent_id = w.id;
                    const double born = w.ptime;
                    const double at = w.pos;
                    // first child takes over the slot; the rest are appended
                    w.id = next_id++;
                    w.parent = parent_id;
                    w.birth_time = born;
                    w.next_ring = born + rng.exponential(es);
                    for (int c = 1; c < k; ++c) {
                        alive.push_back(Walker{next_id++, parent_id, born, at, born,
                                               born + rng.exponential(es)});
                        if (alive.size() > cap) break;
                    }
                    if (alive.size() > cap) {
                        out.capped = true;
                        out.time = born;
                        for (const auto& a : alive)
                            out.particles.push_back(
                                BbmParticle{a.id, a.parent, a.birth_time, a.pos});
                        return out;
                    }
                } else {
                    w.next_ring = w.ptime + rng.exponential(es);
                }
            }
            Walker& w = alive[i];
            const double gap = t_next - w.ptime;
            if (gap > 0.0) {
                w.pos += std::sqrt(gap) * rng.normal();
                w.ptime = t_next;
            }
        }
    }

    out.time = t_end;
    out.particles.reserve(alive.size());
    for (const auto& a : alive)
        out.particles.push_back(BbmParticle{a.id, a.parent, a.birth_time, a.pos});
    return out;
}

BbmResult simulate_bbm(const Potential& pot, double x0, double t_end,
                       const OffspringDistribution& dist, double dt, std::size_t cap,
                       std::uint64_t seed, bool record_genealogy) {
    Rng rng(seed, 0);
    return simulate_bbm(pot, x0, t_end, dist, dt, cap, rng, record_genealogy);
}

std::size_t count_interval(const BbmResult& system, Interval window) {
    std::size_t n = 0;
    for (const auto& p : system.particles)
        if (p.position >= window.lo && p.position <= window.hi) ++n;
    return n;
}

namespace {

WEstimate estimate_w_impl(const Potential& pot, double start, double t,
                          const OffspringDistribution& dist, std::size_t n_reps, std::size_t cap,
                          std::uint64_t seed, double dt, int threads, bool reflected,
                          double level) {
    if (!(t >= 0.0)) throw ConfigError("estimate_w needs t >= 0");
    if (n_reps < 2) throw ConfigError("estimate_w needs at least 2 replicates");

    struct Tally {
        std::size_t success = 0;
        std::size_t capped = 0;
    };
    constexpr std::size_t kChunk = 64;
    const std::size_t n_chunks = (n_reps + kChunk - 1) / kChunk;
    std::vector<Tally> tallies(n_chunks);

    parallel_for(n_chunks, threads, [&](std::size_t chunk) {
        const std::size_t lo = chunk * kChunk;
        const std::size_t hi = std::min(n_reps, lo + kChunk);
        Tally tally;
        for (std::size_t rep = lo; rep < hi; ++rep) {
            Rng rng(seed, rep);
            const BbmResult run = simulate_bbm(pot, start, t, dist, dt, cap, rng, false);
            if (run.capped) {
                ++tally.capped;
                continue;
            }
            bool hit = false;
            for (const auto& p : run.particles) {
                if (reflected ? (p.position >= level) : (p.position <= level)) {
                    hit = true;
                    break;
                }
            }
            if (hit) ++tally.success;
        }
        tallies[chunk] = tally;
    });

    WEstimate out;
    out.n_reps = n_reps;
    for (const auto& t2 : tallies) {
        out.successes += t2.success;
        out.capped += t2.capped;
    }
    const std::size_t determinate = n_reps - out.capped;
    out.indeterminate_fraction = static_cast<double>(out.capped) / static_cast<double>(n_reps);
    if (out.indeterminate_fraction > 0.2)
        throw NumericalError("estimate_w: " + std::to_string(out.capped) + " of " +
                             std::to_string(n_reps) +
                             " replicates hit the population cap; lower t or raise the cap");
    const double n_det = static_cast<double>(determinate);
    out.w_hat = (determinate > 0) ? static_cast<double>(out.successes) / n_det : 0.0;
    out.standard_error =
        (determinate > 1) ? std::sqrt(out.w_hat * (1.0 - out.w_hat) / n_det) : 0.0;
    const auto n_all = static_cast<double>(n_reps);
    out.bound_low = static_cast<double>(out.successes) / n_all;
    out.bound_high = static_cast<double>(out.successes + out.capped) / n_all;
    return out;
}

}

WEstimate estimate_w(const Potential& pot, double x, double t, const OffspringDistribution& dist,
                     std::size_t n_reps, std::size_t cap, std::uint64_t seed, double dt,
                     int threads) {
    return estimate_w_impl(pot, x, t, dist, n_reps, cap, seed, dt, threads, false, 0.0);
}

WEstimate estimate_w_reflected(const Potential& pot, double x, double t,
                               const OffspringDistribution& dist, std::size_t n_reps,
                               std::size_t cap, std::uint64_t seed, double dt, int threads) {
    return estimate_w_impl(pot, 0.0, t, dist, n_reps, cap, seed, dt, threads, true, x);
}

}
