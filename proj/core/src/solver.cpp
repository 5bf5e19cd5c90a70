#include "frontlab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "frontlab/errors.hpp"

namespace frontlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double reaction_value(const Nonlinearity& reaction, bool binary, double u) {
    if (binary) return u * (1.0 - u);
    return reaction.value(u);
}

}

double Field::log_value(std::size_t i) const {
    const double v = values[i];
    if (v <= 0.0) return -kInf;
    return std::log(v) + log_scale;
}

// ------------------------------------------------------------ InitialCondition

InitialCondition InitialCondition::heaviside() {
    InitialCondition ic;
    ic.fn_ = [](double x) {
        if (x < -1e-12) return 1.0;
        if (x <= 1e-12) return 0.5;  // node on the jump takes the midpoint
        return 0.0;
    };
    return ic;
}

InitialCondition InitialCondition::pam_minimal(double delta) {
    if (!(delta > 0.0) || delta > 1.0) throw ConfigError("pam_minimal needs delta in (0,1]");
    InitialCondition ic;
    ic.fn_ = [delta](double x) { return (x >= -delta && x <= 0.0) ? delta : 0.0; };
    return ic;
}

InitialCondition InitialCondition::pam_maximal(double cap) {
    if (!(cap > 0.0)) throw ConfigError("pam_maximal needs a positive cap");
    InitialCondition ic;
    ic.fn_ = [cap](double x) {
        if (x < -1e-12) return cap;
        if (x <= 1e-12) return 0.5 * cap;
        return 0.0;
    };
    return ic;
}

InitialCondition InitialCondition::custom(std::function<double(double)> fn) {
    if (!fn) throw ConfigError("custom initial condition needs a callable");
    InitialCondition ic;
    ic.fn_ = std::move(fn);
    return ic;
}

double InitialCondition::sample(double x) const { return fn_(x); }

void InitialCondition::require_pam_class(double delta, double cap) const {
    if (!(delta > 0.0) || !(cap >= delta))
        throw ConfigError("pam class needs 0 < delta <= cap");
    const double step = 1e-3;
    for (double x = -3.0 * std::max(1.0, delta) + 0.5 * step; x < 1.0; x += step) {
        const double v = fn_(x);
        const double lower = (x >= -delta && x <= 0.0) ? delta : 0.0;
        const double upper = (x <= 0.0) ? cap : 0.0;
        if (v < lower - 1e-12 || v > upper + 1e-12)
            throw ConfigError("initial condition leaves the pam class at x = " + std::to_string(x));
    }
}

// -------------------------------------------------------------------- stepping

void Solver::step(Field& field, const LatticePotential& xi, const Nonlinearity& reaction,
                  double dt, BoundaryPolicy boundary) {
    const std::size_t n = field.values.size();
    if (n == 0) throw DomainError("step on empty field");
    if (xi.size() != n) throw DomainError("potential lattice does not match field grid");
    const double lap = 0.5 * dt / (field.dx * field.dx);
    const bool binary = reaction.offspring().is_binary();
    const auto& v = field.values;
    const auto& p = xi.values();
    std::vector<double> out(n);

    if (field.kind == EquationKind::fkpp) {
        const double ghost_left = (boundary == BoundaryPolicy::neumann) ? v.front() : 1.0;
        const double ghost_right = (boundary == BoundaryPolicy::neumann) ? v.back() : 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double wl = (i == 0) ? ghost_left : v[i - 1];
            const double wr = (i + 1 == n) ? ghost_right : v[i + 1];
            const double w = v[i];
            const double next = w + lap * (wl + wr - 2.0 * w) +
                                dt * p[i] * reaction_value(reaction, binary, std::clamp(w, 0.0, 1.0));
            out[i] = std::clamp(next, 0.0, 1.0);
        }
        field.values = std::move(out);
    } else {
        const double ghost_left = v.front();  // zero flux behind the plateau
        const double ghost_right = (boundary == BoundaryPolicy::neumann) ? v.back() : 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double wl = (i == 0) ? ghost_left : v[i - 1];
            const double wr = (i + 1 == n) ? ghost_right : v[i + 1];
            const double w = v[i];
            out[i] = w + lap * (wl + wr - 2.0 * w) + dt * p[i] * w;
        }
        double peak = 0.0;
        for (double w : out) peak = std::max(peak, std::abs(w));
        if (!std::isfinite(peak)) {
            std::string which = "scheme blew up";
            if (dt > 0.4 * field.dx * field.dx + 1e-15) which = "dt <= 0.4*dx^2 violated";
            else if (dt * xi.es() > 0.1 + 1e-12) which = "dt <= 0.1/es violated";
            throw NumericalError("non-finite field at t = " + std::to_string(field.time) + "; " + which);
        }
        if (peak == 0.0) throw NumericalError("field vanished identically");
        if (peak > 2.0 || peak < 0.5) {
            const double inv = 1.0 / peak;
            for (double& w : out) w *= inv;
            field.log_scale += std::log(peak);
        }
        field.values = std::move(out);
    }
    field.time += dt;
}

// ---------------------------------------------------------------- level scans

namespace {

// sup{x : value >= level}; -inf if never attained, +inf if attained at the
// right edge (no room to interpolate).
double sup_level(const Field& field, double level, bool log_space) {
    const std::size_t n = field.values.size();
    auto at = [&](std::size_t i) { return log_space ? field.log_value(i) : field.values[i]; };
    for (std::size_t i = n; i-- > 0;) {
        if (at(i) >= level) {
            if (i + 1 == n) return kInf;
            const double a = at(i);
            const double b = at(i + 1);
            double frac = 0.0;
            if (std::isfinite(b)) {
                frac = (a - level) / (a - b);
            }
            return field.x_at(i) + field.dx * frac;
        }
    }
    return -kInf;
}

// inf{x >= 0 : value <= level}; the scan starts at the window's left edge
// when the window has moved past zero. +inf if the field never dips.
double inf_level(const Field& field, double level, bool log_space) {
    const std::size_t n = field.values.size();
    auto at = [&](std::size_t i) { return log_space ? field.log_value(i) : field.values[i]; };
    std::size_t start = 0;
    if (field.origin < 0.0) {
        start = static_cast<std::size_t>(std::ceil(-field.origin / field.dx - 1e-9));
        if (start >= n) return kInf;
    }
    if (at(start) <= level) return field.x_at(start);
    for (std::size_t i = start + 1; i < n; ++i) {
        const double b = at(i);
        if (b <= level) {
            const double a = at(i - 1);
            double frac = 1.0;
            if (std::isfinite(b)) frac = (a - level) / (a - b);
            return field.x_at(i - 1) + field.dx * frac;
        }
    }
    return kInf;
}

}

FrontReport front_positions(const Field& field, double eps, double level_big) {
    if (!(eps > 0.0) || eps >= 1.0) throw DomainError("front level eps must lie in (0,1)");
    FrontReport report;
    report.t = field.time;
    if (field.kind == EquationKind::fkpp) {
        report.m_eps = sup_level(field, eps, false);
        report.m_eps_minus = inf_level(field, eps, false);
        report.mbar_M = kNan;
        report.mbar_M_minus = kNan;
        report.width_fkpp = report.m_eps - inf_level(field, 1.0 - eps, false);
        report.width_pam = kNan;
    } else {
        if (!(level_big > eps)) throw DomainError("pam front level M must exceed eps");
        const double log_eps = std::log(eps);
        const double log_big = std::log(level_big);
        report.m_eps = sup_level(field, log_eps, true);
        report.m_eps_minus = inf_level(field, log_eps, true);
        report.mbar_M = sup_level(field, log_big, true);
        report.mbar_M_minus = inf_level(field, log_big, true);
        report.width_fkpp = kNan;
        report.width_pam = report.m_eps - report.mbar_M_minus;
    }
    return report;
}

// ----------------------------------------------------------------------- solve

Solver::Solver(const Potential& pot, SolverConfig config)
    : pot_(pot), config_(std::move(config)), reaction_(config_.offspring) {
    if (config_.dx <= 0.0) throw ConfigError("solver dx must be positive");
    if (config_.cadence <= 0.0) throw ConfigError("observer cadence must be positive");
    if (!(config_.level_eps > 0.0) || config_.level_eps >= 1.0)
        throw ConfigError("front level eps must lie in (0,1)");
    if (config_.kind == EquationKind::pam && config_.level_big <= config_.level_eps)
        throw ConfigError("pam front level M must exceed eps");
    if (!config_.window.valid()) throw ConfigError("solver window must be non-degenerate");
    const double dt_stability = 0.4 * config_.dx * config_.dx;
    const double dt_reaction = 0.1 / pot_.es();
    const double dt_max = std::min(dt_stability, dt_reaction);
    if (config_.dt > dt_max + 1e-15)
        throw ConfigError("dt = " + std::to_string(config_.dt) + " violates stability (needs <= " +
                          std::to_string(dt_max) + " = min(0.4*dx^2, 0.1/es))");
}

SolveResult Solver::solve(const InitialCondition& init, double t_end) {
    if (!(t_end >= 0.0)) throw ConfigError("t_end must be non-negative");

    const double dt_max =
        (config_.dt > 0.0) ? config_.dt : std::min(0.4 * config_.dx * config_.dx, 0.1 / pot_.es());
    const auto steps_per_sample =
        static_cast<std::size_t>(std::max(1.0, std::ceil(config_.cadence / dt_max - 1e-12)));
    const double dt = config_.cadence / static_cast<double>(steps_per_sample);
    const auto n_samples = static_cast<std::size_t>(std::ceil(t_end / config_.cadence - 1e-9));

    Field field;
    field.kind = config_.kind;
    field.dx = config_.dx;
    field.origin = std::round(config_.window.lo / config_.dx) * config_.dx;
    const auto cells0 =
        static_cast<std::size_t>(std::ceil((config_.window.hi - field.origin) / config_.dx)) + 1;
    if (cells0 > config_.max_cells) throw ConfigError("initial window exceeds max_cells");
    field.values.resize(cells0);
    for (std::size_t i = 0; i < cells0; ++i) {
        const double v = init.sample(field.x_at(i));
        if (config_.kind == EquationKind::fkpp && (v < -1e-12 || v > 1.0 + 1e-12))
            throw ConfigError("fkpp initial data must lie in [0,1]");
        if (v < 0.0 && v >= -1e-12)
            field.values[i] = 0.0;
        else
            field.values[i] = (config_.kind == EquationKind::fkpp) ? std::clamp(v, 0.0, 1.0) : v;
        if (field.values[i] < 0.0) throw ConfigError("initial data must be non-negative");
    }

    auto xi_values = [&](double origin, std::size_t count) {
        std::vector<double> out(count);
        for (std::size_t i = 0; i < count; ++i) {
            const double x = origin + field.dx * static_cast<double>(i);
            out[i] = pot_.value(x);
        }
        return out;
    };
    std::vector<double> xi = xi_values(field.origin, field.values.size());

    auto current_eps = [&](double t) {
        if (!config_.eps_decay) return config_.level_eps;
        const double e = (t > 0.0) ? std::pow(t, -0.25) : 0.49;
        return std::clamp(e, 1e-6, 0.49);
    };

    auto front_marker_index = [&]() -> std::size_t {
        const std::size_t n = field.values.size();
        if (field.kind == EquationKind::fkpp) {
            for (std::size_t i = n; i-- > 0;)
                if (field.values[i] >= 0.5) return i;
        } else {
            for (std::size_t i = n; i-- > 0;)
                if (field.log_value(i) >= 0.0) return i;
        }
        std::size_t best = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (field.values[i] > field.values[best]) best = i;
        return best;
    };

    auto manage_window = [&]() {
        const std::size_t n = field.values.size();
        const std::size_t marker = front_marker_index();
        const double margin = config_.margin_base + config_.margin_growth * std::sqrt(field.time);
        const auto margin_cells = static_cast<std::size_t>(std::ceil(margin / field.dx));
        if (config_.window_mode == WindowMode::fixed) {
            // a pinned far boundary stalls the profile instead of letting the
            // marker reach the edge, so also probe one unit inside the wall:
            // the boundary shapes the profile over an O(1) layer, and a front
            // carrying the report level there is already a wall artifact
            const double eps = current_eps(field.time);
            const auto inset = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                            std::ceil(1.0 / field.dx)));
            const std::size_t probe = (inset + 1 < n) ? n - 1 - inset : 1;
            const bool tail_touches = (field.kind == EquationKind::fkpp)
                                          ? field.values[probe] >= eps
                                          : field.log_value(probe) >= std::log(eps);
            if (marker + 2 >= n || tail_touches)
                throw NumericalError("front reached the window edge at t = " +
                                     std::to_string(field.time) +
                                     "; enlarge the window or use the moving mode");
            return;
        }
        if (marker + margin_cells + 1 > n) {
            const std::size_t grow = marker + margin_cells + 1 - n + 16;
            if (n + grow > config_.max_cells)
                throw NumericalError("moving window exceeded max_cells at t = " +
                                     std::to_string(field.time) + "; enlarge margin budget");
            const double right_origin = field.origin + field.dx * static_cast<double>(n);
            auto xi_new = xi_values(right_origin, grow);
            field.values.insert(field.values.end(), grow, 0.0);
            xi.insert(xi.end(), xi_new.begin(), xi_new.end());
        }
        if (marker > margin_cells + 1) {
            std::size_t target = marker - margin_cells - 1;
            std::size_t drop = 0;
            if (field.kind == EquationKind::fkpp) {
                while (drop < target && field.values[drop] >= 1.0 - 1e-9) ++drop;
            } else {
                // Cut only where the dropped prefix holds no peak above the
                // plateau just right of the cut (zero flux is then accurate
                // to ~1e-6 relative).
                const std::size_t guard = std::max<std::size_t>(margin_cells / 2, 8);
                if (target + guard < field.values.size()) {
                    double plateau = 0.0;
                    for (std::size_t i = target; i < target + guard; ++i)
                        plateau = std::max(plateau, field.values[i]);
                    double dropped_peak = 0.0;
                    for (std::size_t i = 0; i < target; ++i)
                        dropped_peak = std::max(dropped_peak, field.values[i]);
                    if (dropped_peak <= plateau * (1.0 + 1e-6)) drop = target;
                }
            }
            if (drop > 0) {
                field.values.erase(field.values.begin(),
                                   field.values.begin() + static_cast<std::ptrdiff_t>(drop));
                xi.erase(xi.begin(), xi.begin() + static_cast<std::ptrdiff_t>(drop));
                field.origin += field.dx * static_cast<double>(drop);
            }
        }
    };

    SolveResult result;
    std::vector<bool> snapshot_taken(config_.snapshot_times.size(), false);
    auto observe = [&]() {
        result.trajectory.push_back(
            front_positions(field, current_eps(field.time), config_.level_big));
        for (std::size_t s = 0; s < config_.snapshot_times.size(); ++s) {
            if (!snapshot_taken[s] &&
                std::abs(config_.snapshot_times[s] - field.time) <= config_.cadence / 2.0) {
                result.snapshots.push_back(field);
                snapshot_taken[s] = true;
            }
        }
    };

    observe();
    for (std::size_t sample = 1; sample <= n_samples; ++sample) {
        LatticePotential lattice(field.origin, field.dx, xi, pot_.ei(), pot_.es());
        for (std::size_t s = 0; s < steps_per_sample; ++s)
            step(field, lattice, reaction_, dt, config_.boundary == BoundaryPolicy::neumann
                                                    ? BoundaryPolicy::neumann
                                                    : BoundaryPolicy::by_kind);
        field.time = config_.cadence * static_cast<double>(sample);
        if (field.kind == EquationKind::fkpp) {
            for (double w : field.values)
                if (!std::isfinite(w))
                    throw NumericalError("non-finite field at t = " + std::to_string(field.time) +
                                         "; check dt <= 0.4*dx^2 and dt <= 0.1/es");
        }
        observe();
        manage_window();
    }
    result.final_field = std::move(field);
    return result;
}

// -------------------------------------------------- space perturbation check

double interpolate_log_value(const Field& field, double x) {
    const std::size_t n = field.values.size();
    const double pos = (x - field.origin) / field.dx;
    if (pos < -1e-9 || pos > static_cast<double>(n - 1) + 1e-9)
        throw DomainError("query point " + std::to_string(x) + " outside solver window");
    const double clamped = std::clamp(pos, 0.0, static_cast<double>(n - 1));
    const auto k = static_cast<std::size_t>(clamped);
    if (k + 1 >= n) return field.log_value(n - 1);
    const double a = field.log_value(k);
    const double b = field.log_value(k + 1);
    if (!std::isfinite(a) || !std::isfinite(b)) return -kInf;
    const double t = clamped - static_cast<double>(k);
    return a + t * (b - a);
}

SpacePerturbationCheck check_space_perturbation(const Field& pam_field, double v,
                                                std::span<const double> offsets) {
    if (pam_field.kind != EquationKind::pam)
        throw PreconditionError("space perturbation check needs a pam field");
    SpacePerturbationCheck out;
    const double base = interpolate_log_value(pam_field, v * pam_field.time);
    bool all_finite = std::isfinite(base);
    for (double h : offsets) {
        if (!(h > 0.0)) throw DomainError("offsets must be positive");
        SpacePerturbationPoint pt;
        pt.h = h;
        const double g = interpolate_log_value(pam_field, v * pam_field.time + h);
        const double diff = g - base;
        pt.ratio = std::exp(diff);
        pt.rate = -diff / h;
        all_finite = all_finite && std::isfinite(diff);
        out.points.push_back(pt);
    }
    if (!all_finite) {
        out.c_min = kInf;
        return out;
    }
    auto feasible = [&](double c) {
        for (const auto& pt : out.points) {
            if (pt.ratio > c * std::exp(-pt.h / c) + 1e-12) return false;
            if (pt.ratio < std::exp(-c * pt.h) / c - 1e-12) return false;
        }
        return true;
    };
    double hi = 1.0;
    while (!feasible(hi) && hi < 1e12) hi *= 2.0;
    if (!feasible(hi)) {
        out.c_min = kInf;
        return out;
    }
    double lo = 1e-9;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (feasible(mid))
            hi = mid;
        else
            lo = mid;
    }
    out.c_min = hi;
    return out;
}

}
