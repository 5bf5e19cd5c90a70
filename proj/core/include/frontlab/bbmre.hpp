#pragma once

#include <cstdint>
#include <vector>

#include "frontlab/interval.hpp"
#include "frontlab/offspring.hpp"
#include "frontlab/potential.hpp"
#include "frontlab/rng.hpp"

namespace frontlab {

struct BbmParticle {
    std::uint64_t id = 0;
    std::uint64_t parent = 0;  // 0: the root has no parent
    double birth_time = 0.0;
    double position = 0.0;
};

struct GenealogyEntry {
    std::uint64_t id = 0;
    std::uint64_t parent = 0;
    double birth_time = 0.0;
    double position = 0.0;  // where the branch happened
};

struct BbmResult {
    double time = 0.0;
    bool capped = false;  // population hit the cap; positions are partial state
    std::vector<BbmParticle> particles;
    std::vector<GenealogyEntry> genealogy;
};

// Branching Brownian motion with space-dependent branching rate xi. Each
// particle carries an exponential proposal clock at rate es; a ring branches
// with probability xi(pos)/es (thinning), offspring placed at the parent
// position. Motion advances by Gaussian increments on the dt grid, split
// exactly at ring times.
BbmResult simulate_bbm(const Potential& pot, double x0, double t_end,
                       const OffspringDistribution& dist, double dt, std::size_t cap, Rng& rng,
                       bool record_genealogy = false);

BbmResult simulate_bbm(const Potential& pot, double x0, double t_end,
                       const OffspringDistribution& dist, double dt, std::size_t cap,
                       std::uint64_t seed, bool record_genealogy = false);

// Alive particles with position in the closed interval.
std::size_t count_interval(const BbmResult& system, Interval window);

struct WEstimate {
    double w_hat = 0.0;           // success fraction among determinate replicates
    double standard_error = 0.0;
    double bound_low = 0.0;       // capped replicates counted as failures
    double bound_high = 0.0;      // capped replicates counted as successes
    std::size_t n_reps = 0;
    std::size_t successes = 0;
    std::size_t capped = 0;
    double indeterminate_fraction = 0.0;
};

// McKean estimate of w(t,x) = P(some particle started at x sits at or below 0
// at time t). Capped replicates are indeterminate; more than 20% of them
// raises NumericalError instead of reporting a hollow estimate.
WEstimate estimate_w(const Potential& pot, double x, double t, const OffspringDistribution& dist,
                     std::size_t n_reps, std::size_t cap, std::uint64_t seed, double dt = 1e-3,
                     int threads = 0);

// Mirror-image functional: start at 0, success when some particle sits at or
// above x at time t. For constant media this matches estimate_w by reflection.
WEstimate estimate_w_reflected(const Potential& pot, double x, double t,
                               const OffspringDistribution& dist, std::size_t n_reps,
                               std::size_t cap, std::uint64_t seed, double dt = 1e-3,
                               int threads = 0);

}
