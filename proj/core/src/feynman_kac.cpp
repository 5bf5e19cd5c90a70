#include "frontlab/feynman_kac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "frontlab/errors.hpp"
#include "frontlab/parallel.hpp"

namespace frontlab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kChunk = 4096;
}

PathEstimate estimate_u_mc(const Potential& pot, double t, double x, const InitialCondition& u0,
                           std::size_t n_paths, double dt, std::uint64_t seed, int threads) {
    if (!(t > 0.0)) throw ConfigError("estimate_u_mc needs t > 0");
    if (!(dt > 0.0) || dt > 1e-2 + 1e-15) throw ConfigError("estimate_u_mc needs 0 < dt <= 1e-2");
    if (n_paths < 2) throw ConfigError("estimate_u_mc needs at least 2 paths");

    const auto steps = static_cast<std::size_t>(std::ceil(t / dt - 1e-9));
    const double h = t / static_cast<double>(steps);
    const double sqrt_h = std::sqrt(h);

    const std::size_t n_chunks = (n_paths + kChunk - 1) / kChunk;
    struct Acc {
        double sum = 0.0;
        double sum_sq = 0.0;
    };
    std::vector<Acc> acc(n_chunks);

    parallel_for(n_chunks, threads, [&](std::size_t chunk) {
        Rng rng(seed, chunk);
        const std::size_t lo = chunk * kChunk;
        const std::size_t hi = std::min(n_paths, lo + kChunk);
        Acc a;
        for (std::size_t p = lo; p < hi; ++p) {
            double y = x;
            double f_prev = pot.value(y);
            double integral = 0.0;
            for (std::size_t s = 0; s < steps; ++s) {
                y += sqrt_h * rng.normal();
                const double f = pot.value(y);
                integral += 0.5 * (f_prev + f) * h;
                f_prev = f;
            }
            const double w = std::exp(integral) * u0.sample(y);
            a.sum += w;
            a.sum_sq += w * w;
        }
        acc[chunk] = a;
    });

    double sum = 0.0;
    double sum_sq = 0.0;
    for (const auto& a : acc) {
        sum += a.sum;
        sum_sq += a.sum_sq;
    }
    const auto n = static_cast<double>(n_paths);
    const double mean = sum / n;
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    PathEstimate out;
    out.value = mean;
    out.standard_error = std::sqrt(var / n);
    out.n_paths = n_paths;
    out.dt = h;
    return out;
}

ShiftedPotential::ShiftedPotential(const Potential& base)
    : base_(&base), ei_(base.ei()), es_(base.es()) {}

CrossingSample simulate_crossing(const ShiftedPotential& zeta, double start, double target,
                                 double dt, Rng& rng, double tau_cap, double zeta_floor) {
    if (!(start > target)) throw PreconditionError("crossing needs start above target");
    if (!(dt > 0.0)) throw ConfigError("crossing needs dt > 0");
    const double sqrt_dt = std::sqrt(dt);
    const double z_target = zeta.value(target);

    CrossingSample out;
    double y = start;
    double z_prev = zeta.value(y);
    while (true) {
        if (out.tau >= tau_cap || out.zeta_integral <= zeta_floor) {
            out.capped = true;
            return out;
        }
        const double yn = y + sqrt_dt * rng.normal();
        const double a = y - target;
        const double b = yn - target;
        if (b <= 0.0) {
            const double theta = dt * a / (a - b);
            out.zeta_integral += 0.5 * (z_prev + z_target) * theta;
            out.tau += theta;
            return out;
        }
        if (rng.uniform() < std::exp(-2.0 * a * b / dt)) {
            const double theta = dt * a / (a + b);
            out.zeta_integral += 0.5 * (z_prev + z_target) * theta;
            out.tau += theta;
            return out;
        }
        const double z_next = zeta.value(yn);
        out.zeta_integral += 0.5 * (z_prev + z_next) * dt;
        out.tau += dt;
        y = yn;
        z_prev = z_next;
    }
}

HitSample simulate_until_hit(const ShiftedPotential& zeta, double x, double eta, double dt,
                             std::uint64_t seed) {
    if (!(x > 0.0)) throw PreconditionError("simulate_until_hit needs x > 0");
    if (!(eta < 0.0)) throw PreconditionError("simulate_until_hit needs eta < 0");
    Rng rng(seed, 0);
    const CrossingSample s = simulate_crossing(zeta, x, 0.0, dt, rng, 1e6, -kInf);
    if (s.capped)
        throw NumericalError("hitting path exceeded the time cap 1e6 from x = " +
                             std::to_string(x));
    HitSample out;
    out.hitting_time = s.tau;
    out.integral = s.zeta_integral + eta * s.tau;
    return out;
}

LyapunovCurve estimate_lyapunov(const Potential& pot, std::span<const double> v_grid, double t,
                                const LyapunovConfig& config) {
    if (v_grid.empty()) throw ConfigError("lyapunov needs a non-empty velocity grid");
    for (double v : v_grid)
        if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("lyapunov velocities must be >= 0");
    if (!(t >= 1.0)) throw ConfigError("lyapunov needs t >= 1");

    const double es = pot.es();
    double t_used = std::min(t, config.range_budget / es);
    t_used = std::max(1.0, std::floor(t_used));

    const double v_max = *std::max_element(v_grid.begin(), v_grid.end());
    const double reach = std::max(v_max, std::sqrt(2.0 * es)) * t_used;
    const double slack = config.margin + 3.0 * std::sqrt(t_used);

    SolverConfig sc;
    sc.kind = EquationKind::pam;
    sc.dx = config.dx;
    sc.cadence = 1.0;
    sc.window_mode = WindowMode::fixed;
    sc.window = Interval{-slack, reach + slack};
    sc.max_cells = config.max_cells;

    Solver solver(pot, sc);
    const SolveResult run = solver.solve(config.u0, t_used);

    LyapunovCurve curve;
    curve.t_used = run.final_field.time;
    curve.method = "fd-solver";
    for (double v : v_grid) {
        LyapunovPoint pt;
        pt.v = v;
        pt.lambda_hat = interpolate_log_value(run.final_field, v * curve.t_used) / curve.t_used;
        curve.points.push_back(pt);
    }
    return curve;
}

V0Estimate estimate_v0(const Potential& pot, const V0Config& config) {
    if (!(config.v_step > 0.0)) throw ConfigError("v0 scan needs a positive velocity step");
    const double v_hi = config.v_factor * std::sqrt(2.0 * pot.es());
    std::vector<double> grid;
    for (double v = 0.0; v <= v_hi + 1e-12; v += config.v_step) grid.push_back(v);

    V0Estimate out;
    out.curve = estimate_lyapunov(pot, grid, config.t, config.lyapunov);
    const auto& pts = out.curve.points;
    if (pts.front().lambda_hat <= 0.0)
        throw DomainError("lyapunov exponent non-positive at v = 0; no positive front speed");
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double a = pts[i].lambda_hat;
        const double b = pts[i + 1].lambda_hat;
        if (a > 0.0 && b <= 0.0) {
            out.bracket_lo = pts[i].v;
            out.bracket_hi = pts[i + 1].v;
            const double frac = a / (a - b);  // 0 when b = -inf
            out.v0 = pts[i].v + (pts[i + 1].v - pts[i].v) * (std::isfinite(b) ? frac : 0.0);
            return out;
        }
    }
    std::ostringstream msg;
    msg << "no sign change on the sampled lyapunov curve (t = " << out.curve.t_used << "):";
    for (const auto& p : pts) msg << " (" << p.v << ", " << p.lambda_hat << ")";
    throw DomainError(msg.str());
}

}
