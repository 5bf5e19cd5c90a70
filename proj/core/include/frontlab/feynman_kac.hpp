#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "frontlab/potential.hpp"
#include "frontlab/rng.hpp"
#include "frontlab/solver.hpp"

namespace frontlab {

struct PathEstimate {
    double value = 0.0;
    double standard_error = 0.0;
    std::size_t n_paths = 0;
    double dt = 0.0;
};

// Monte Carlo estimate of u(t,x) = E_x[exp(int_0^t xi(B_s) ds) u0(B_t)].
// Brownian increments of variance dt, trapezoid rule along the path. Paths
// must stay inside the potential's window; escapes surface as DomainError.
PathEstimate estimate_u_mc(const Potential& pot, double t, double x, const InitialCondition& u0,
                           std::size_t n_paths, double dt, std::uint64_t seed, int threads = 0);

// zeta(x) = xi(x) - es <= 0 everywhere; the natural integrand for hitting
// functionals, shared with the mgf module.
class ShiftedPotential {
public:
    explicit ShiftedPotential(const Potential& base);
    double value(double x) const { return base_->value(x) - es_; }
    double lower_bound() const { return ei_ - es_; }
    double es() const { return es_; }
    Interval window() const { return base_->window(); }
    const Potential& base() const { return *base_; }

private:
    const Potential* base_;
    double ei_;
    double es_;
};

struct CrossingSample {
    double tau = 0.0;            // time to reach the target level (or the cap)
    double zeta_integral = 0.0;  // int zeta(B_s) ds along the way, tilt excluded
    bool capped = false;
};

// One downward crossing from start to target. Grid steps of size dt with a
// Brownian-bridge sub-step correction: a step ending above the target still
// hits with probability exp(-2 a b / dt), and the hitting time inside the
// step is interpolated. The tilt eta is excluded from the integral so one
// sample bank serves every tilt. Stops early (capped = true) once tau or the
// integral make the path's weight irrelevant at any usable tilt.
CrossingSample simulate_crossing(const ShiftedPotential& zeta, double start, double target,
                                 double dt, Rng& rng, double tau_cap = 1e6,
                                 double zeta_floor = -745.0);

struct HitSample {
    double hitting_time = 0.0;
    double integral = 0.0;  // int (zeta + eta) ds up to the hit
};

// Walks from x > 0 until the first hit of level 0 under tilt eta < 0.
// Throws NumericalError if the path exceeds the hard time cap 1e6.
HitSample simulate_until_hit(const ShiftedPotential& zeta, double x, double eta, double dt,
                             std::uint64_t seed);

struct LyapunovPoint {
    double v = 0.0;
    double lambda_hat = 0.0;  // -inf when the field underflows at vt
};

struct LyapunovCurve {
    std::vector<LyapunovPoint> points;
    double t_used = 0.0;
    std::string method = "fd-solver";
};

struct LyapunovConfig {
    double dx = 0.05;
    double margin = 20.0;          // window slack beyond the reachable cone
    std::size_t max_cells = 4000000;
    double range_budget = 650.0;   // caps es * t so the log-field stays in double range
    InitialCondition u0 = InitialCondition::heaviside();
};

// Lambda_hat(v) = ln u(t, vt) / t from the finite-difference log-field; the
// horizon is reduced below t when es * t would overflow the global exponent.
LyapunovCurve estimate_lyapunov(const Potential& pot, std::span<const double> v_grid, double t,
                                const LyapunovConfig& config = {});

struct V0Config {
    double t = 30.0;
    double v_step = 0.05;
    double v_factor = 1.25;  // scan up to v_factor * sqrt(2 es)
    LyapunovConfig lyapunov;
};

struct V0Estimate {
    double v0 = 0.0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    LyapunovCurve curve;
};

// Root of Lambda_hat by scan plus linear interpolation on the sign-change
// cell. Throws DomainError when the sampled curve never changes sign.
V0Estimate estimate_v0(const Potential& pot, const V0Config& config = {});

}
