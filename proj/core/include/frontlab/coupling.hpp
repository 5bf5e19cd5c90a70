#pragma once

#include <cstdint>
#include <vector>

#include "frontlab/offspring.hpp"
#include "frontlab/potential.hpp"

namespace frontlab {

// Feasibility analysis for the two-system coupling. Both constraint suprema
// have the form sup_{s' in [0,t')} [t' + A s' - B/(t' - s')] with
// A = (es-ei)/ei and B = (1+4*delta1)^2 (must stay negative) or
// B = (1+2*delta1)^2 (must go positive); the interior maximizer gives the
// closed-form value t'(1+A) - 2 sqrt(A B).
struct FeasibleParameters {
    double a = 0.0;
    double b1 = 0.0;
    double b2 = 0.0;
    double delta1 = 0.0;
    double delta2 = 0.0;
    double t_lower = 0.0;   // feasible t' window, lower end (exclusive)
    double t_upper = 0.0;   // upper end
    double t_prime = 0.0;   // chosen t'
    double negsup = 0.0;    // constraint value with b1 (feasible: < 0)
    double possup = 0.0;    // constraint value with b2 (feasible: > 0)
};

// Searches delta1 in (0, 0.05] for the feasible triple with the largest
// margin on the negative constraint; the chosen t' sits at the low end of
// the window. Throws DomainError when es/ei <= 2 (A <= 1 leaves no window).
FeasibleParameters select_parameters(double ei, double es);

// Same derivation with delta1 pinned.
FeasibleParameters select_parameters(double ei, double es, double delta1);

enum class ParticleTag { lm, lc, bad, rm, rc, free_right };

struct TypedParticle {
    std::uint64_t id = 0;
    double position = 0.0;
    ParticleTag tag = ParticleTag::lm;
    std::uint64_t partner = 0;  // 0: none
};

struct CouplingConfig {
    double ei = 1.0;
    double es = 5.0;
    double x_n = 0.0;     // stretch anchor
    double phi = 0.0;     // usable half-length of the stretch
    double delta1 = 0.0;
    double t_prime = 0.0;
    double l = 0.0;       // left start, in [x_n - 5 d1 phi, x_n - 4 d1 phi]
    double r = 0.0;       // right start, in [x_n + d1 phi, x_n + 2 d1 phi]
    double m = 0.0;       // (l + r) / 2
    double big_l = 0.0;   // absorbing marker L = x_n - phi
    double big_r = 0.0;   // R = 2 m - L
    double dt = 1e-3;
    double t_check = 0.0;  // t' phi / sqrt(2 ei)
    double t_final = 0.0;  // monitoring horizon; 0 means 2 * t_check
    double trace_dt = 0.05;
    std::size_t cap = 100000;  // total particles across both systems
};

// Fills the derived geometry (l, r, m, L, R, t_check) from a feasible
// parameter set; l and r sit at the midpoints of their allowed slots.
CouplingConfig make_coupling_config(const FeasibleParameters& params, double ei, double es,
                                    double x_n, double phi, double dt = 1e-3,
                                    std::size_t cap = 100000);

struct CouplingSnapshot {
    double t = 0.0;
    std::size_t n_lm = 0, n_lc = 0, n_bad = 0;
    std::size_t n_rm = 0, n_rc = 0, n_free = 0;
    double run_min_left = 0.0;   // running min over left positions up to t
    double min_right = 0.0;      // current leftmost right-system particle
    double max_lm = 0.0;         // rightmost LM (-inf when none)
    double min_free = 0.0;       // leftmost Free (+inf when none)
    double mirror_drift = 0.0;   // max |(m - Y) - (Y' - m)| over LM/RM pairs
    double coloc_drift = 0.0;    // max |Y - Y'| over LC/RC pairs
};

struct CouplingOutcome {
    bool reached_t_check = false;
    bool g1 = false;       // no left particle at or below L up to t_check
    bool g2 = false;       // some right particle at or below L at t_check
    bool success = false;  // at t_check: no LM, no Bad (all left coupled)
    bool success_window = false;  // success held on every step of [t_check, t_final]
    bool window_complete = false;
    bool capped = false;
    std::size_t n_lm_check = 0;
    std::size_t n_bad_check = 0;
    std::size_t max_bad = 0;
    std::size_t tau_violations = 0;  // steps where rightmost LM > leftmost Free
    double end_time = 0.0;
    std::vector<CouplingSnapshot> trace;
    std::vector<TypedParticle> left_final;
    std::vector<TypedParticle> right_final;
};

// Runs the two mirrored/coupled branching systems. Left particles branch at
// rate xi (thinned at es) and every branch is replicated onto the partner;
// RM particles branch additionally at rate xi(Y') - xi(2m - Y') (thinned at
// es - ei), one child keeping the link; Free particles branch at rate xi.
// Type changes fire at linearly interpolated crossings, earliest first.
CouplingOutcome run_coupling(const CouplingConfig& config, const Potential& pot,
                             const OffspringDistribution& dist, std::uint64_t seed);

// (G1, G2) re-derived from the trace of a finished run.
std::pair<bool, bool> check_good_events(const CouplingOutcome& outcome,
                                        const CouplingConfig& config);

// The containment implication: on G1 and G2, time t_check must show zero Bad
// and zero LM particles and the success flag. Vacuously true off G1 and G2.
bool verify_subset_logic(const CouplingOutcome& outcome);

}
