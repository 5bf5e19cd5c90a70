#pragma once

#include <functional>
#include <span>
#include <vector>

#include "frontlab/interval.hpp"
#include "frontlab/offspring.hpp"
#include "frontlab/potential.hpp"

namespace frontlab {

enum class EquationKind { fkpp, pam };

// Field values are stored as mantissas against a shared log-scale exponent:
// actual value = values[i] * exp(log_scale). FKPP runs keep log_scale = 0 and
// values in [0,1]; the linear equation renormalizes so the mantissa max stays
// in [0.5, 2] and exponential growth never overflows.
struct Field {
    EquationKind kind = EquationKind::fkpp;
    double origin = 0.0;
    double dx = 0.0;
    double time = 0.0;
    double log_scale = 0.0;
    std::vector<double> values;

    double x_at(std::size_t i) const { return origin + dx * static_cast<double>(i); }
    double right_edge() const { return x_at(values.empty() ? 0 : values.size() - 1); }
    // log of the field value at node i (log-space is the native scale for pam)
    double log_value(std::size_t i) const;
};

class InitialCondition {
public:
    static InitialCondition heaviside();
    // delta * 1_[-delta, 0]
    static InitialCondition pam_minimal(double delta);
    // cap * 1_(-inf, 0]
    static InitialCondition pam_maximal(double cap);
    static InitialCondition custom(std::function<double(double)> fn);

    // Pointwise sample; nodes that land exactly on a jump take the midpoint
    // value so the discrete profile matches the continuum one to O(dx^2).
    double sample(double x) const;

    // Checks the sandwich delta*1_[-delta,0] <= u0 <= cap*1_(-inf,0] on a fine
    // grid; throws ConfigError when violated.
    void require_pam_class(double delta, double cap) const;

private:
    InitialCondition() = default;
    std::function<double(double)> fn_;
};

enum class BoundaryPolicy {
    by_kind,   // fkpp: pinned 1 left / 0 right; pam: zero-flux left / 0 right
    neumann    // zero flux on both edges
};

enum class WindowMode { moving, fixed };

struct SolverConfig {
    EquationKind kind = EquationKind::fkpp;
    double dx = 0.05;
    double dt = 0.0;             // 0: auto, min(0.4 dx^2, 0.1/es)
    double cadence = 0.5;        // observer sample spacing
    BoundaryPolicy boundary = BoundaryPolicy::by_kind;
    WindowMode window_mode = WindowMode::moving;
    Interval window{-40.0, 40.0};
    double margin_base = 30.0;   // moving window margin: base + growth*sqrt(t)
    double margin_growth = 10.0;
    std::size_t max_cells = 4000000;
    std::vector<double> snapshot_times;
    double level_eps = 0.1;      // front-report levels (eps for both kinds, M for pam)
    double level_big = 10.0;
    bool eps_decay = false;      // eps(t) = t^{-1/4}, clamped to [1e-6, 0.49]
    OffspringDistribution offspring;
};

// Sentinel conventions: -inf when the level is never attained on the sup
// side, +inf when an inf-side scan never dips below the level or the level
// is met at the window edge.
struct FrontReport {
    double t = 0.0;
    double m_eps = 0.0;        // sup{x : field >= eps}
    double m_eps_minus = 0.0;  // inf{x >= 0 : field <= eps}
    double mbar_M = 0.0;       // pam only: sup{x : field >= M}
    double mbar_M_minus = 0.0; // pam only: inf{x >= 0 : field <= M}
    double width_fkpp = 0.0;   // m_eps - inf{x>=0 : field <= 1-eps}
    double width_pam = 0.0;    // sup at eps - inf at M
};

FrontReport front_positions(const Field& field, double eps, double level_big);

struct SolveResult {
    std::vector<FrontReport> trajectory;
    std::vector<Field> snapshots;
    Field final_field;
};

class Solver {
public:
    Solver(const Potential& pot, SolverConfig config);

    SolveResult solve(const InitialCondition& init, double t_end);

    // Single explicit Euler step on an externally managed field (no window
    // management); exposed for invariant tests.
    static void step(Field& field, const LatticePotential& xi, const Nonlinearity& reaction,
                     double dt, BoundaryPolicy boundary);

private:
    const Potential& pot_;
    SolverConfig config_;
    Nonlinearity reaction_;
};

// Log-linear interpolation of a field value at x.
double interpolate_log_value(const Field& field, double x);

struct SpacePerturbationPoint {
    double h = 0.0;
    double ratio = 0.0;  // u(t, vt+h) / u(t, vt)
    double rate = 0.0;   // log-ratio / (-h)
};

struct SpacePerturbationCheck {
    std::vector<SpacePerturbationPoint> points;
    double c_min = 0.0;  // smallest C with C^-1 e^{-Ch} <= ratio <= C e^{-h/C} for all h
};

SpacePerturbationCheck check_space_perturbation(const Field& pam_field, double v,
                                                std::span<const double> offsets);

}
