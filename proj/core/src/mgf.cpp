#include "frontlab/mgf.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "frontlab/errors.hpp"
#include "frontlab/parallel.hpp"

namespace frontlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kChunk = 512;

int require_integer_level(double x, const char* what) {
    const double r = std::round(x);
    if (std::abs(x - r) > 1e-9 || r < 1.0)
        throw ConfigError(std::string(what) + " needs a positive integer level, got " +
                          std::to_string(x));
    return static_cast<int>(r);
}

}

CrossingBank::CrossingBank(const ShiftedPotential& zeta, int units)
    : CrossingBank(zeta, units, Config{}) {}

CrossingBank::CrossingBank(const ShiftedPotential& zeta, int units, Config config)
    : config_(config) {
    if (units < 1) throw ConfigError("crossing bank needs at least one unit");
    if (config_.paths_per_unit < 2) throw ConfigError("crossing bank needs at least 2 paths per unit");
    if (!(config_.dt > 0.0)) throw ConfigError("crossing bank needs dt > 0");
    if (!(config_.tau_cap > 0.0)) throw ConfigError("crossing bank needs a positive tau cap");

    samples_.assign(static_cast<std::size_t>(units), {});
    for (auto& u : samples_) u.resize(config_.paths_per_unit);

    const std::size_t n_chunks = (config_.paths_per_unit + kChunk - 1) / kChunk;
    const std::size_t n_tasks = static_cast<std::size_t>(units) * n_chunks;
    std::atomic<std::size_t> capped{0};

    parallel_for(n_tasks, config_.threads, [&](std::size_t task) {
        const std::size_t unit = task / n_chunks;
        const std::size_t chunk = task % n_chunks;
        Rng rng(config_.seed, task);
        const double start = static_cast<double>(unit + 1);
        const double target = static_cast<double>(unit);
        const std::size_t lo = chunk * kChunk;
        const std::size_t hi = std::min(config_.paths_per_unit, lo + kChunk);
        std::size_t local_capped = 0;
        for (std::size_t p = lo; p < hi; ++p) {
            CrossingSample s;
            try {
                s = simulate_crossing(zeta, start, target, config_.dt, rng, config_.tau_cap,
                                      config_.zeta_floor);
            } catch (const DomainError& e) {
                throw DomainError(std::string("crossing path left the potential window; "
                                              "enlarge it: ") +
                                  e.what());
            }
            if (s.capped) ++local_capped;
            samples_[unit][p] = Sample{s.tau, s.zeta_integral};
        }
        capped += local_capped;
    });
    capped_ = capped.load();
}

CrossingBank::UnitStats CrossingBank::unit_stats(int unit, double eta) const {
    const auto& ss = samples_[static_cast<std::size_t>(unit - 1)];
    const auto n = static_cast<double>(ss.size());
    double m = -kInf;
    for (const auto& s : ss) m = std::max(m, s.zi + eta * s.tau);

    double sw = 0.0, sw2 = 0.0, swt = 0.0, sw2t = 0.0, sw2tt = 0.0;
    for (const auto& s : ss) {
        const double w = std::exp(s.zi + eta * s.tau - m);
        sw += w;
        sw2 += w * w;
        swt += w * s.tau;
        sw2t += w * w * s.tau;
        sw2tt += w * w * s.tau * s.tau;
    }

    UnitStats out;
    out.log_mean = m + std::log(sw / n);
    out.log_mean_var = std::max(0.0, (n * sw2 / (sw * sw) - 1.0) / n);
    const double r = swt / sw;
    out.tilted_time = r;
    out.tilted_time_var = std::max(0.0, (sw2tt - 2.0 * r * sw2t + r * r * sw2) / (sw * sw));
    out.ess = sw * sw / sw2;
    return out;
}

double CrossingBank::unit_log_mean(int unit, double eta) const {
    return unit_stats(unit, eta).log_mean;
}

double CrossingBank::unit_tilted_time(int unit, double eta) const {
    return unit_stats(unit, eta).tilted_time;
}

double CrossingBank::lbar(double eta) const {
    double sum = 0.0;
    for (int k = 1; k <= units(); ++k) sum += unit_stats(k, eta).log_mean;
    return sum / units();
}

double CrossingBank::lbar_se(double eta) const {
    double var = 0.0;
    for (int k = 1; k <= units(); ++k) var += unit_stats(k, eta).log_mean_var;
    return std::sqrt(var) / units();
}

double CrossingBank::lprime(double eta) const {
    double sum = 0.0;
    for (int k = 1; k <= units(); ++k) sum += unit_stats(k, eta).tilted_time;
    return sum / units();
}

double CrossingBank::lprime_se(double eta) const {
    double var = 0.0;
    for (int k = 1; k <= units(); ++k) var += unit_stats(k, eta).tilted_time_var;
    return std::sqrt(var) / units();
}

double CrossingBank::total_log_mgf(double eta) const { return lbar(eta) * units(); }

double CrossingBank::total_tilted_time(double eta) const { return lprime(eta) * units(); }

double CrossingBank::min_ess(double eta) const {
    double out = kInf;
    for (int k = 1; k <= units(); ++k) out = std::min(out, unit_stats(k, eta).ess);
    return out;
}

// ----------------------------------------------------------------- estimate_L

namespace {

MgfEstimate estimate_L_direct(const Potential& pot, double eta, double x_max, std::size_t n_paths,
                              double dt, std::uint64_t seed, int threads) {
    const ShiftedPotential zeta(pot);
    const double gap = pot.es() - pot.ei();
    const double decay = std::sqrt(2.0 * (std::abs(eta) + gap));
    const double tau_cap = std::clamp((46.0 + x_max * decay) / std::abs(eta), 400.0, 1e6);
    const double zeta_floor = -x_max * decay - 46.0;

    struct Acc {
        double max_w = -kInf;
        double sw = 0.0;
        double sw2 = 0.0;
    };
    const std::size_t n_chunks = (n_paths + kChunk - 1) / kChunk;
    std::vector<Acc> acc(n_chunks);

    parallel_for(n_chunks, threads, [&](std::size_t chunk) {
        Rng rng(seed, chunk);
        const std::size_t lo = chunk * kChunk;
        const std::size_t hi = std::min(n_paths, lo + kChunk);
        std::vector<double> ws;
        ws.reserve(hi - lo);
        Acc a;
        for (std::size_t p = lo; p < hi; ++p) {
            const CrossingSample s =
                simulate_crossing(zeta, x_max, 0.0, dt, rng, tau_cap, zeta_floor);
            const double w = s.zeta_integral + eta * s.tau;
            ws.push_back(w);
            a.max_w = std::max(a.max_w, w);
        }
        for (double w : ws) {
            const double e = std::exp(w - a.max_w);
            a.sw += e;
            a.sw2 += e * e;
        }
        acc[chunk] = a;
    });

    double m = -kInf;
    for (const auto& a : acc) m = std::max(m, a.max_w);
    double sw = 0.0, sw2 = 0.0;
    for (const auto& a : acc) {
        const double shift = std::exp(a.max_w - m);
        sw += a.sw * shift;
        sw2 += a.sw2 * shift * shift;
    }

    const auto n = static_cast<double>(n_paths);
    MgfEstimate out;
    out.eta = eta;
    out.x = x_max;
    out.n_paths = n_paths;
    out.variant = MgfVariant::averaged;
    out.value = (m + std::log(sw / n)) / x_max;
    out.standard_error = std::sqrt(std::max(0.0, (n * sw2 / (sw * sw) - 1.0) / n)) / x_max;
    out.ess = sw * sw / sw2;
    out.low_ess = out.ess < 100.0;
    return out;
}

}

MgfEstimate estimate_L(const Potential& pot, double eta, double x_max, std::size_t n_paths,
                       double dt, std::uint64_t seed, MgfVariant variant, int threads) {
    if (!(eta < -1e-3)) throw PreconditionError("estimate_L needs eta < -1e-3");
    if (!(x_max >= 20.0 - 1e-9)) throw PreconditionError("estimate_L needs x_max >= 20");
    if (variant == MgfVariant::ensemble)
        throw ConfigError("the ensemble variant needs estimate_L_ensemble with a family of media");
    if (variant == MgfVariant::averaged)
        return estimate_L_direct(pot, eta, x_max, n_paths, dt, seed, threads);

    const int units = require_integer_level(x_max, "unit-interval factorization");
    const ShiftedPotential zeta(pot);
    CrossingBank::Config bc;
    bc.paths_per_unit = n_paths;
    bc.dt = dt;
    bc.seed = seed;
    bc.threads = threads;
    const CrossingBank bank(zeta, units, bc);

    MgfEstimate out;
    out.eta = eta;
    out.x = x_max;
    out.n_paths = n_paths;
    out.variant = MgfVariant::unit_interval;
    out.value = bank.lbar(eta);
    out.standard_error = bank.lbar_se(eta);
    out.ess = bank.min_ess(eta);
    out.low_ess = out.ess < 100.0;
    return out;
}

MgfEstimate estimate_L_ensemble(std::span<const std::shared_ptr<const Potential>> pots, double eta,
                                double x_max, std::size_t n_paths, double dt, std::uint64_t seed,
                                int threads) {
    if (pots.size() < 10) throw ConfigError("ensemble estimate needs at least 10 media");
    if (!(eta < -1e-3)) throw PreconditionError("estimate_L needs eta < -1e-3");
    const int units = require_integer_level(x_max, "unit-interval factorization");

    std::vector<double> values;
    double min_ess = kInf;
    for (std::size_t i = 0; i < pots.size(); ++i) {
        const ShiftedPotential zeta(*pots[i]);
        CrossingBank::Config bc;
        bc.paths_per_unit = n_paths;
        bc.dt = dt;
        bc.seed = seed + i;
        bc.threads = threads;
        const CrossingBank bank(zeta, units, bc);
        values.push_back(bank.lbar(eta));
        min_ess = std::min(min_ess, bank.min_ess(eta));
    }

    const auto n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= (n - 1.0);

    MgfEstimate out;
    out.eta = eta;
    out.x = x_max;
    out.n_paths = n_paths * pots.size();
    out.variant = MgfVariant::ensemble;
    out.value = mean;
    out.standard_error = std::sqrt(var / n);
    out.ess = min_ess;
    out.low_ess = min_ess < 100.0;
    return out;
}

LPrimeEstimate estimate_L_prime(const Potential& pot, double eta, double x_max,
                                std::size_t n_paths, double dt, std::uint64_t seed, int threads) {
    if (!(eta < -1e-3)) throw PreconditionError("estimate_L_prime needs eta < -1e-3");
    if (!(x_max >= 20.0 - 1e-9)) throw PreconditionError("estimate_L_prime needs x_max >= 20");
    const int units = require_integer_level(x_max, "unit-interval factorization");

    const ShiftedPotential zeta(pot);
    CrossingBank::Config bc;
    bc.paths_per_unit = n_paths;
    bc.dt = dt;
    bc.seed = seed;
    bc.threads = threads;
    const CrossingBank bank(zeta, units, bc);

    const double delta = 1e-2 * std::abs(eta);
    LPrimeEstimate out;
    out.eta = eta;
    out.value = bank.lprime(eta);
    out.se = bank.lprime_se(eta);

    std::vector<double> disc;
    double fd_sum = 0.0;
    for (int k = 1; k <= units; ++k) {
        const double fd = (bank.unit_log_mean(k, eta + delta) - bank.unit_log_mean(k, eta - delta)) /
                          (2.0 * delta);
        fd_sum += fd;
        disc.push_back(bank.unit_tilted_time(k, eta) - fd);
    }
    out.value_fd = fd_sum / units;

    double d_mean = 0.0;
    for (double d : disc) d_mean += d;
    d_mean /= disc.size();
    double d_var = 0.0;
    for (double d : disc) d_var += (d - d_mean) * (d - d_mean);
    d_var /= (disc.size() > 1 ? (disc.size() - 1.0) : 1.0);
    out.se_fd = std::sqrt(d_var / disc.size());
    out.discrepancy = out.value - out.value_fd;

    const double allowance = 3.0 * out.se_fd + 1e-3 * std::abs(out.value);
    if (std::abs(out.discrepancy) > allowance)
        throw NumericalError("tilted-mean and finite-difference derivative estimates disagree: " +
                             std::to_string(out.value) + " vs " + std::to_string(out.value_fd));
    return out;
}

SEstimate compute_S(const Potential& pot, double x, double v, double eta, std::size_t n_paths,
                    double dt, std::uint64_t seed, int threads) {
    if (!(eta < 0.0)) throw PreconditionError("compute_S needs eta < 0");
    if (!(x > 0.0) || !(v > 0.0)) throw PreconditionError("compute_S needs x > 0 and v > 0");
    const int units = require_integer_level(x, "unit-interval factorization");

    const ShiftedPotential zeta(pot);
    CrossingBank::Config bc;
    bc.paths_per_unit = n_paths;
    bc.dt = dt;
    bc.seed = seed;
    bc.threads = threads;
    const CrossingBank bank(zeta, units, bc);

    SEstimate out;
    out.eta = eta;
    out.x = x;
    out.v = v;
    out.value = x * (eta / v - bank.lbar(eta));
    out.standard_error = x * bank.lbar_se(eta);
    return out;
}

// --------------------------------------------------------------- root finding

namespace {

double bisect_increasing(const std::function<double(double)>& f, double lo, double hi,
                         double tolerance, const char* low_msg) {
    double f_hi = f(hi);
    if (f_hi < 0.0) throw PreconditionError(low_msg);
    double f_lo = f(lo);
    if (f_lo > 0.0)
        throw PreconditionError("root below the eta bracket; the requested velocity is too large");
    while (hi - lo > tolerance) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) >= 0.0)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

}

double solve_eta_bar(const Potential& pot, double v, const EtaSolveConfig& config) {
    if (!(v > 0.0)) throw PreconditionError("solve_eta_bar needs v > 0");
    const ShiftedPotential zeta(pot);
    const CrossingBank bank(zeta, config.x_max, config.bank);
    const double target = 1.0 / v;
    auto f = [&](double eta) { return bank.lprime(eta) - target; };
    return bisect_increasing(f, config.eta_lo, config.eta_hi, config.tolerance,
                             "velocity at or below the critical velocity of this medium");
}

double solve_eta_x(const Potential& pot, double x, double v, const EtaSolveConfig& config) {
    if (!(v > 0.0)) throw PreconditionError("solve_eta_x needs v > 0");
    if (!(x >= 10.0 - 1e-9)) throw PreconditionError("solve_eta_x needs x >= 10");
    const int units = require_integer_level(x, "unit-interval factorization");
    const ShiftedPotential zeta(pot);
    const CrossingBank bank(zeta, units, config.bank);
    const double target = x / v;
    auto f = [&](double eta) { return bank.total_tilted_time(eta) - target; };
    return bisect_increasing(f, config.eta_lo, config.eta_hi, config.tolerance,
                             "velocity at or below the critical velocity of this medium");
}

VcEstimate estimate_vc(const Potential& pot, VcConfig config) {
    if (config.etas.size() < 3) throw ConfigError("vc extrapolation needs at least 3 tilt points");
    for (double eta : config.etas)
        if (!(eta < 0.0)) throw ConfigError("vc tilt points must be negative");

    const ShiftedPotential zeta(pot);
    const CrossingBank bank(zeta, config.x_max, config.bank);

    VcEstimate out;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (double eta : config.etas) {
        VcSample s;
        s.eta = eta;
        s.lprime = bank.lprime(eta);
        s.inverse = 1.0 / s.lprime;
        out.samples.push_back(s);
        const double u = std::sqrt(std::abs(eta));
        sx += u;
        sy += s.inverse;
        sxx += u * u;
        sxy += u * s.inverse;
    }
    const auto n = static_cast<double>(config.etas.size());
    const double denom = n * sxx - sx * sx;
    out.slope = (n * sxy - sx * sy) / denom;
    out.raw_intercept = (sy - out.slope * sx) / n;
    out.v_c = std::max(0.0, out.raw_intercept);
    for (const auto& s : out.samples) {
        const double fit = out.raw_intercept + out.slope * std::sqrt(std::abs(s.eta));
        out.fit_residual = std::max(out.fit_residual, std::abs(s.inverse - fit));
    }
    out.poor_fit = out.fit_residual > 0.1 * std::max(out.v_c, 1e-12);
    return out;
}

std::vector<VelocityReport> check_vel(const Potential& pot, std::span<const double> scales,
                                      const CheckVelConfig& config) {
    if (scales.empty()) throw ConfigError("check_vel needs at least one scale");
    const std::shared_ptr<const Potential> base(&pot, [](const Potential*) {});

    std::vector<VelocityReport> reports;
    for (double c : scales) {
        if (!(c > 0.0)) throw ConfigError("scales must be positive");
        const ScaledPotential scaled(base, c);
        VelocityReport rep;
        rep.scale = c;

        const VcEstimate vc = estimate_vc(scaled, config.vc);
        rep.v_c = vc.v_c;
        rep.vc_residual = vc.fit_residual;
        rep.vc_poor_fit = vc.poor_fit;

        const V0Estimate v0 = estimate_v0(scaled, config.v0);
        rep.v0 = v0.v0;
        rep.v0_bracket = v0.bracket_hi - v0.bracket_lo;

        const double joint = rep.v0_bracket + std::max(rep.vc_residual, 0.02);
        rep.vel_ok = rep.v0 > rep.v_c + joint;

        for (double f : config.v_factors) {
            const double v = f * rep.v0;
            if (!(v > 1.05 * rep.v_c) || !(v > 0.0)) continue;
            try {
                rep.eta_bar.push_back(EtaBarSample{v, solve_eta_bar(scaled, v, config.eta)});
            } catch (const PreconditionError&) {
                // below the empirical critical velocity; sample omitted
            }
        }
        reports.push_back(std::move(rep));
    }
    return reports;
}

}
