#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "frontlab/feynman_kac.hpp"
#include "frontlab/potential.hpp"

namespace frontlab {

enum class MgfVariant { unit_interval, averaged, ensemble };

struct MgfEstimate {
    double eta = 0.0;
    double x = 0.0;
    double value = 0.0;  // per-unit log-MGF estimate
    double standard_error = 0.0;
    std::size_t n_paths = 0;
    MgfVariant variant = MgfVariant::unit_interval;
    double ess = 0.0;     // smallest effective sample size seen
    bool low_ess = false; // ess < 100: estimate kept, variance untrustworthy
};

// Reusable bank of downward unit-crossing samples (tau, int zeta ds) for the
// segments x -> x-1 -> ... -> 1 -> 0. The tilt enters only at query time, so
// one bank serves every eta probe and keeps root-finding deterministic.
// Paths are capped at tau_cap; capped samples carry weight <= exp(eta*tau_cap)
// and queries are trustworthy once |eta| * tau_cap is a few units.
class CrossingBank {
public:
    struct Config {
        std::size_t paths_per_unit = 4000;
        double dt = 2.5e-3;
        double tau_cap = 400.0;
        double zeta_floor = -500.0;
        std::uint64_t seed = 2024;
        int threads = 0;
    };

    CrossingBank(const ShiftedPotential& zeta, int units);
    CrossingBank(const ShiftedPotential& zeta, int units, Config config);

    int units() const { return static_cast<int>(samples_.size()); }
    std::size_t paths_per_unit() const { return config_.paths_per_unit; }
    double tau_cap() const { return config_.tau_cap; }
    std::size_t capped_paths() const { return capped_; }

    // unit k (1-based) is the crossing from level k to k-1
    double unit_log_mean(int unit, double eta) const;
    double unit_tilted_time(int unit, double eta) const;

    double lbar(double eta) const;       // mean over units of per-unit ln-mean weights
    double lbar_se(double eta) const;
    double lprime(double eta) const;     // mean over units of tilted crossing times
    double lprime_se(double eta) const;
    double total_log_mgf(double eta) const;     // ln E_x[exp int (zeta+eta)]
    double total_tilted_time(double eta) const; // tilted E_x[H_0]
    double min_ess(double eta) const;

private:
    struct Sample {
        double tau;
        double zi;
    };
    struct UnitStats {
        double log_mean;
        double log_mean_var;
        double tilted_time;
        double tilted_time_var;
        double ess;
    };
    UnitStats unit_stats(int unit, double eta) const;

    std::vector<std::vector<Sample>> samples_;
    Config config_;
    std::size_t capped_ = 0;
};

// Per-unit log-MGF of the hitting functional from x_max under tilt eta.
//  - unit_interval: strong-Markov factorization into unit crossings (primary;
//    immune to the weight collapse of long paths)
//  - averaged: direct paths from x_max; ess reports the weight degeneracy
// The ensemble variant lives in estimate_L_ensemble.
MgfEstimate estimate_L(const Potential& pot, double eta, double x_max, std::size_t n_paths,
                       double dt, std::uint64_t seed,
                       MgfVariant variant = MgfVariant::unit_interval, int threads = 0);

// Averages unit-interval estimates over independently drawn media (>= 10).
MgfEstimate estimate_L_ensemble(std::span<const std::shared_ptr<const Potential>> pots, double eta,
                                double x_max, std::size_t n_paths, double dt, std::uint64_t seed,
                                int threads = 0);

struct LPrimeEstimate {
    double eta = 0.0;
    double value = 0.0;     // method A (primary)
    double se = 0.0;
    double value_fd = 0.0;  // method B: central difference of the log-MGF
    double se_fd = 0.0;
    double discrepancy = 0.0;
};

// Method A: self-normalized tilted mean of the crossing time per unit.
// Method B: central finite difference of lbar with step 1e-2 * |eta| on the
// same sample bank. Disagreement beyond 3 joint SE raises NumericalError.
LPrimeEstimate estimate_L_prime(const Potential& pot, double eta, double x_max,
                                std::size_t n_paths, double dt, std::uint64_t seed,
                                int threads = 0);

struct SEstimate {
    double value = 0.0;
    double standard_error = 0.0;
    double eta = 0.0;
    double x = 0.0;
    double v = 0.0;
};

// S = x * (eta / v - lbar_x(eta)), the exponential cost of holding mean
// velocity v with tilt eta over distance x.
SEstimate compute_S(const Potential& pot, double x, double v, double eta, std::size_t n_paths,
                    double dt, std::uint64_t seed, int threads = 0);

struct EtaSolveConfig {
    CrossingBank::Config bank;
    int x_max = 20;
    double eta_lo = -50.0;
    double eta_hi = -1e-3;
    double tolerance = 1e-3;
};

// Root of L'(eta) = 1/v: the tilt under which paths drift at mean speed v.
double solve_eta_bar(const Potential& pot, double v, const EtaSolveConfig& config = {});

// Root of tilted E_x[H_0] = x/v for a finite start level x (near-integer).
double solve_eta_x(const Potential& pot, double x, double v, const EtaSolveConfig& config = {});

struct VcSample {
    double eta = 0.0;
    double lprime = 0.0;
    double inverse = 0.0;
};

struct VcEstimate {
    double v_c = 0.0;          // intercept of the sqrt-fit, clamped to >= 0
    double raw_intercept = 0.0;
    double slope = 0.0;
    double fit_residual = 0.0;
    bool poor_fit = false;     // residual above 10% of the estimate
    std::vector<VcSample> samples;
};

struct VcConfig {
    CrossingBank::Config bank{.paths_per_unit = 3000};
    int x_max = 10;
    std::vector<double> etas = {-0.4, -0.2, -0.1, -0.05, -0.025};
};

// Critical velocity 1/L'(0-): fits 1/L'(eta) = v_c + a*sqrt(|eta|), the exact
// form for flat media, and extrapolates to eta -> 0-.
VcEstimate estimate_vc(const Potential& pot, VcConfig config = {});

struct EtaBarSample {
    double v = 0.0;
    double eta_bar = 0.0;
};

struct VelocityReport {
    double scale = 1.0;
    double v_c = 0.0;
    double vc_residual = 0.0;
    bool vc_poor_fit = false;
    double v0 = 0.0;
    double v0_bracket = 0.0;
    bool vel_ok = false;  // v0 clears v_c with joint uncertainty to spare
    std::vector<EtaBarSample> eta_bar;
};

struct CheckVelConfig {
    VcConfig vc;
    V0Config v0;
    EtaSolveConfig eta;
    std::vector<double> v_factors = {0.8, 1.0, 1.2};  // eta-bar sample grid, times v0
};

// Runs the critical-velocity / front-speed comparison on scale * xi for each
// requested scale.
std::vector<VelocityReport> check_vel(const Potential& pot, std::span<const double> scales,
                                      const CheckVelConfig& config = {});

}
