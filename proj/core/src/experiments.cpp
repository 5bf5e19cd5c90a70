#include "frontlab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "frontlab/coupling.hpp"
#include "frontlab/csv.hpp"
#include "frontlab/errors.hpp"
#include "frontlab/mgf.hpp"
#include "frontlab/parallel.hpp"
#include "frontlab/stats.hpp"
#include "frontlab/version.hpp"

namespace frontlab {

namespace {

constexpr const char* kSurrogateNote =
    "finite-scale surrogate: probes an asymptotic statement at desk scale";

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
    std::filesystem::create_directories(dir);
}

std::string fmt(double v) {
    return CsvWriter::format(v);
}

void require_equation(const Config& cfg, const std::string& expected, const std::string& exp_name) {
    const std::string eq = cfg.get_or("solver", "equation", expected);
    if (eq != expected)
        throw ConfigError(exp_name + " drives the " + expected + " equation; config requests '" +
                          eq + "'");
}

// Linear interpolation of a stored field (mantissa scale); fkpp fields keep
// log_scale = 0 so this is the plain solution value.
double field_value_at(const Field& f, double x) {
    if (f.values.empty() || x < f.origin - 1e-9 || x > f.right_edge() + 1e-9)
        throw DomainError("requested point lies outside the stored field window");
    const double pos = (x - f.origin) / f.dx;
    const auto i = static_cast<std::size_t>(
        std::clamp(std::floor(pos), 0.0, static_cast<double>(f.values.size() - 1)));
    const std::size_t j = std::min(i + 1, f.values.size() - 1);
    const double frac = std::clamp(pos - static_cast<double>(i), 0.0, 1.0);
    const double v = f.values[i] * (1.0 - frac) + f.values[j] * frac;
    return v * std::exp(f.log_scale);
}

double mean_of(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += v[i];
    return s / static_cast<double>(hi - lo);
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

CheckVelConfig build_checkvel(const Config& cfg, std::uint64_t seed, unsigned threads) {
    CheckVelConfig cv;
    cv.vc.bank.paths_per_unit =
        static_cast<std::size_t>(cfg.get_int_or("mc", "paths_per_unit", 1500));
    cv.vc.bank.dt = cfg.get_double_or("mc", "bank_dt", 5e-3);
    cv.vc.bank.seed = seed ^ 0x5DEECE66Dull;
    cv.vc.bank.threads = static_cast<int>(threads);
    cv.vc.x_max = static_cast<int>(cfg.get_int_or("mc", "x_max", 8));
    cv.eta.bank = cv.vc.bank;
    cv.eta.x_max = static_cast<int>(cfg.get_int_or("mc", "eta_x_max", 20));
    cv.v0.t = cfg.get_double_or("mc", "v0_t", 25.0);
    cv.v0.v_step = cfg.get_double_or("mc", "v0_step", 0.05);
    return cv;
}

SolveResult solve_with_snapshots(const Config& cfg, const Potential& pot, EquationKind kind,
                                 double t_end) {
    SolverConfig sc = build_solver_config(cfg, kind);
    const auto n = static_cast<std::size_t>(std::llround(t_end / sc.cadence));
    sc.snapshot_times.clear();
    for (std::size_t k = 1; k <= n; ++k)
        sc.snapshot_times.push_back(sc.cadence * static_cast<double>(k));
    Solver solver(pot, sc);
    return solver.solve(InitialCondition::heaviside(), t_end);
}

}

BuiltPotential build_potential(const Config& cfg, std::uint64_t seed) {
    BuiltPotential bp;
    bp.kind = cfg.get_or("potential", "kind", "constant");
    const double scale = cfg.get_double_or("potential", "scale", 1.0);
    if (!(scale > 0.0)) throw ConfigError("[potential] scale must be positive");
    std::shared_ptr<const Potential> base;
    if (bp.kind == "constant") {
        const double level = cfg.get_double_or("potential", "level", 1.0);
        if (!(level > 0.0)) throw ConfigError("[potential] level must be positive");
        base = std::make_shared<ConstantPotential>(level);
    } else if (bp.kind == "poisson") {
        const double ei = cfg.get_double_or("potential", "ei", 1.0);
        const double es = cfg.get_double_or("potential", "es", 3.0);
        const double intensity = cfg.get_double_or("potential", "intensity", 1.0);
        const double lo = cfg.get_double_or("potential", "window_lo", -100.0);
        const double hi = cfg.get_double_or("potential", "window_hi", 400.0);
        const auto pot_seed = static_cast<std::uint64_t>(
            cfg.get_int_or("potential", "seed", static_cast<std::int64_t>(seed)));
        base = std::make_shared<PoissonBumpPotential>(
            make_poisson_potential(ei, es, intensity, Interval{lo, hi}, pot_seed));
    } else if (bp.kind == "engineered") {
        const double ei = cfg.get_double_or("potential", "ei", 1.0);
        const double es = cfg.get_double_or("potential", "es", 5.0);
        const double half = cfg.get_double("potential", "half_length");
        const double center = cfg.get_double_or("potential", "center", 40.0);
        const double lo = cfg.get_double_or("potential", "window_lo", center - 2.0 * half - 60.0);
        const double hi = cfg.get_double_or("potential", "window_hi", center + 2.0 * half + 260.0);
        base = std::make_shared<PoissonBumpPotential>(
            engineer_stretch_potential(ei, es, half, center, Interval{lo, hi}));
        bp.has_stretch = true;
        bp.x_n = center;
        bp.phi = half;
    } else {
        throw ConfigError("unknown [potential] kind: " + bp.kind);
    }
    bp.scale = scale;
    bp.pot = (scale != 1.0) ? std::make_shared<ScaledPotential>(base, scale) : base;
    return bp;
}

OffspringDistribution build_offspring(const Config& cfg) {
    const std::string kind = cfg.get_or("offspring", "kind", "binary");
    if (kind == "binary") return OffspringDistribution();
    if (kind != "table") throw ConfigError("unknown [offspring] kind: " + kind);
    const std::vector<double> counts = cfg.get_list("offspring", "counts");
    const std::vector<double> probs = cfg.get_list("offspring", "probs");
    if (counts.size() != probs.size())
        throw ConfigError("[offspring] counts and probs must have equal length");
    std::vector<OffspringDistribution::Entry> entries;
    entries.reserve(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double c = counts[i];
        if (c != std::floor(c)) throw ConfigError("[offspring] counts must be integers");
        entries.push_back({static_cast<int>(c), probs[i]});
    }
    return OffspringDistribution(std::move(entries));
}

SolverConfig build_solver_config(const Config& cfg, EquationKind kind) {
    SolverConfig sc;
    sc.kind = kind;
    sc.dx = cfg.get_double_or("solver", "dx", 0.05);
    sc.dt = cfg.get_double_or("solver", "dt", 0.0);
    sc.cadence = cfg.get_double_or("solver", "cadence", 0.5);
    sc.level_eps = cfg.get_double_or("solver", "eps", 0.1);
    sc.level_big = cfg.get_double_or("solver", "M", 10.0);
    sc.window.lo = cfg.get_double_or("solver", "window_lo", -40.0);
    sc.window.hi = cfg.get_double_or("solver", "window_hi", 40.0);
    const std::string mode = cfg.get_or("solver", "window", "moving");
    if (mode == "moving")
        sc.window_mode = WindowMode::moving;
    else if (mode == "fixed")
        sc.window_mode = WindowMode::fixed;
    else
        throw ConfigError("[solver] window must be 'moving' or 'fixed'");
    const std::string boundary = cfg.get_or("solver", "boundary", "by_kind");
    if (boundary == "by_kind")
        sc.boundary = BoundaryPolicy::by_kind;
    else if (boundary == "neumann")
        sc.boundary = BoundaryPolicy::neumann;
    else
        throw ConfigError("[solver] boundary must be 'by_kind' or 'neumann'");
    sc.margin_base = cfg.get_double_or("solver", "margin_base", 30.0);
    sc.margin_growth = cfg.get_double_or("solver", "margin_growth", 10.0);
    sc.max_cells = static_cast<std::size_t>(cfg.get_int_or("solver", "max_cells", 4000000));
    sc.eps_decay = cfg.get_bool_or("solver", "eps_decay", false);
    sc.offspring = build_offspring(cfg);
    return sc;
}

// ---------------------------------------------------------------- pam-width

ExperimentResult exp_pam_width(const Config& cfg, const std::string& out_dir, std::uint64_t seed,
                               unsigned threads, bool force) {
    ensure_dir(out_dir);
    ExperimentResult res;
    res.name = "pam-width";
    require_equation(cfg, "pam", res.name);
    const BuiltPotential bp = build_potential(cfg, seed);

    bool vel_ok = false;
    std::string vel_note;
    if (bp.kind == "constant") {
        vel_ok = true;
        vel_note = "constant medium: v_c = 0 < v_0 = sqrt(2 level)";
    } else {
        const CheckVelConfig cv = build_checkvel(cfg, seed, threads);
        const double one = 1.0;
        const std::vector<VelocityReport> reports = check_vel(*bp.pot, {&one, 1}, cv);
        vel_ok = reports.front().vel_ok;
        vel_note = "v0 = " + fmt(reports.front().v0) + ", v_c = " + fmt(reports.front().v_c);
    }
    res.notes.emplace_back("vel_ok", vel_ok ? "true" : "false");
    res.notes.emplace_back("vel_detail", vel_note);
    if (!vel_ok && !force)
        throw PreconditionError("velocity condition fails (" + vel_note +
                                "); rerun with --force for an unsupported verdict");
    res.unsupported = !vel_ok;

    const double t_end = cfg.get_double_or("solver", "t_end", 40.0);
    SolverConfig sc = build_solver_config(cfg, EquationKind::pam);
    Solver solver(*bp.pot, sc);
    const SolveResult sr = solver.solve(InitialCondition::heaviside(), t_end);

    CsvWriter series({"t", "m_eps", "mbar_M", "mbar_M_minus", "width_pam"});
    series.add_note(kSurrogateNote);
    for (const auto& f : sr.trajectory)
        series.add_row({f.t, f.m_eps, f.mbar_M, f.mbar_M_minus, f.width_pam});
    series.write(join_path(out_dir, "pam_width.csv"));
    res.outputs.push_back("pam_width.csv");

    const double burn_in = cfg.get_double_or("experiment", "burn_in", 5.0);
    std::vector<double> widths;
    for (const auto& f : sr.trajectory)
        if (f.t >= burn_in && std::isfinite(f.width_pam)) widths.push_back(f.width_pam);
    if (widths.size() < 8)
        throw NumericalError("fewer than 8 finite width samples after burn-in; raise t_end");

    const std::size_t quarter = std::max<std::size_t>(1, widths.size() / 4);
    const double mean_first = mean_of(widths, 0, quarter);
    const double mean_last = mean_of(widths, widths.size() - quarter, widths.size());
    const double ratio = mean_last / mean_first;
    const TrendTest trend = kendall_trend(widths);
    const bool ratio_ok = ratio <= 1.2;
    const bool trend_ok = trend.p_increasing > 0.05;
    res.verdict = ratio_ok && trend_ok;

    res.notes.emplace_back("quarter_ratio", fmt(ratio));
    res.notes.emplace_back("kendall_tau", fmt(trend.tau));
    res.notes.emplace_back("kendall_p_increasing", fmt(trend.p_increasing));
    res.notes.emplace_back("mean_width", fmt(mean_of(widths, 0, widths.size())));
    std::ostringstream sum;
    sum << "pam width " << (res.verdict ? "bounded" : "NOT bounded") << " (last/first quarter "
        << fmt(ratio) << ", trend p " << fmt(trend.p_increasing) << ")"
        << (res.unsupported ? " [unsupported: velocity condition unverified]" : "");
    res.summary = sum.str();
    return res;
}

// --------------------------------------------------------------- fkpp-width

namespace {

struct StretchGeometry {
    bool control = false;  // no stretch exists (homogeneous medium)
    double x_n = 0.0;
    double phi = 0.0;
};

StretchGeometry locate_stretch(const Config& cfg, const BuiltPotential& bp,
                               ExperimentResult& res) {
    StretchGeometry g;
    if (bp.has_stretch) {
        g.x_n = bp.x_n;
        g.phi = bp.phi;
        res.notes.emplace_back("stretch", "engineered at " + fmt(g.x_n) + ", phi " + fmt(g.phi));
        return g;
    }
    if (bp.kind == "constant") {
        g.control = true;
        res.notes.emplace_back("stretch", "none (homogeneous control)");
        return g;
    }
    const double c0 = cfg.get_double_or("experiment", "c0", 2.0);
    const int n_lo = static_cast<int>(cfg.get_int_or("experiment", "n_lo", 10));
    const int n_hi = static_cast<int>(cfg.get_int_or("experiment", "n_hi", 60));
    const std::vector<StretchReport> found = find_stretches(*bp.pot, c0, n_lo, n_hi);
    if (found.empty())
        throw DomainError("no stretch of length c0 ln n found in [" + std::to_string(n_lo) +
                          ", " + std::to_string(2 * n_hi) +
                          "]; engineer_stretch_potential can build one");
    g.x_n = found.front().x_n;
    g.phi = found.front().c0 * std::log(found.front().n);
    res.notes.emplace_back("stretch", "found at " + fmt(g.x_n) + ", phi " + fmt(g.phi));
    return g;
}

}

ExperimentResult exp_fkpp_width(const Config& cfg, const std::string& out_dir, std::uint64_t seed,
                                unsigned threads, bool force) {
    (void)threads;
    ensure_dir(out_dir);
    ExperimentResult res;
    res.name = "fkpp-width";
    require_equation(cfg, "fkpp", res.name);
    const BuiltPotential bp = build_potential(cfg, seed);
    const StretchGeometry geo = locate_stretch(cfg, bp, res);

    if (!geo.control) {
        const double ratio = bp.pot->es() / bp.pot->ei();
        if (ratio <= 2.0) {
            if (!force)
                throw PreconditionError("stretch widening needs es/ei > 2, got " + fmt(ratio) +
                                        "; rerun with --force for an unsupported verdict");
            res.unsupported = true;
        }
    }

    const double t_end = cfg.get_double_or("solver", "t_end", 60.0);
    const SolveResult sr = solve_with_snapshots(cfg, *bp.pot, EquationKind::fkpp, t_end);

    CsvWriter series({"t", "m_eps", "trailing", "width_fkpp"});
    series.add_note(kSurrogateNote);
    for (const auto& f : sr.trajectory)
        series.add_row({f.t, f.m_eps, f.m_eps - f.width_fkpp, f.width_fkpp});
    series.write(join_path(out_dir, "fkpp_width.csv"));
    res.outputs.push_back("fkpp_width.csv");

    if (geo.control) {
        res.verdict = false;
        res.summary = "no stretch in a homogeneous medium: widening verdict false";
        return res;
    }

    const double burn_in = cfg.get_double_or("experiment", "burn_in", 5.0);
    const double lo_edge = geo.x_n - 2.0 * geo.phi;
    const double hi_edge = geo.x_n + 2.0 * geo.phi;
    double t_enter = -1.0, t_exit = -1.0;
    for (const auto& f : sr.trajectory) {
        if (t_enter < 0.0 && f.m_eps >= lo_edge) t_enter = f.t;
        if (t_exit < 0.0 && std::isfinite(f.width_fkpp) && f.m_eps - f.width_fkpp >= hi_edge)
            t_exit = f.t;
    }
    if (t_enter < 0.0 || t_exit < 0.0)
        throw ConfigError("front did not finish traversing the stretch; raise [solver] t_end");
    res.notes.emplace_back("t_enter", fmt(t_enter));
    res.notes.emplace_back("t_exit", fmt(t_exit));

    double max_width = -std::numeric_limits<double>::infinity();
    double max_t = 0.0, max_mid = 0.0;
    std::vector<double> off_widths;
    for (const auto& f : sr.trajectory) {
        if (!std::isfinite(f.width_fkpp)) continue;
        if (f.t >= t_enter && f.t <= t_exit) {
            if (f.width_fkpp > max_width) {
                max_width = f.width_fkpp;
                max_t = f.t;
                max_mid = f.m_eps - 0.5 * f.width_fkpp;
            }
        } else if (f.t >= burn_in) {
            off_widths.push_back(f.width_fkpp);
        }
    }
    if (off_widths.size() < 5)
        throw ConfigError("fewer than 5 off-stretch width samples; raise [solver] t_end");
    const double off_median = median_of(off_widths);
    const bool widening = max_width >= 2.0 * off_median;
    res.notes.emplace_back("max_width", fmt(max_width));
    res.notes.emplace_back("max_width_t", fmt(max_t));
    res.notes.emplace_back("max_width_mid", fmt(max_mid));
    res.notes.emplace_back("off_stretch_median", fmt(off_median));
    res.notes.emplace_back("widening_ratio", fmt(max_width / off_median));

    // passage of x_n at level delta, then the flatness inequality at the
    // coupling slots l and r
    const double delta = cfg.get_double_or("experiment", "delta", 0.5);
    const double eps_ineq = cfg.get_double_or("experiment", "epsilon", 0.1);
    const Field* at_passage = nullptr;
    double t_n = -1.0;
    for (const auto& snap : sr.snapshots) {
        if (snap.right_edge() < geo.x_n || snap.origin > geo.x_n) continue;
        if (field_value_at(snap, geo.x_n) >= delta) {
            at_passage = &snap;
            t_n = snap.time;
            break;
        }
    }
    if (at_passage == nullptr)
        throw ConfigError("front never reached level delta at x_n; raise [solver] t_end");
    FeasibleParameters params =
        cfg.has("coupling", "delta1")
            ? select_parameters(bp.pot->ei(), bp.pot->es(), cfg.get_double("coupling", "delta1"))
            : select_parameters(bp.pot->ei(), bp.pot->es());
    const double slot_l = geo.x_n - 4.5 * params.delta1 * geo.phi;
    const double slot_r = geo.x_n + 1.5 * params.delta1 * geo.phi;
    const double w_l = field_value_at(*at_passage, slot_l);
    const double w_r = field_value_at(*at_passage, slot_r);
    const bool flat = w_l <= w_r + eps_ineq;

    CsvWriter passage({"t_n", "x_n", "l", "r", "w_l", "w_r", "delta", "epsilon"});
    passage.add_note(kSurrogateNote);
    passage.add_row({t_n, geo.x_n, slot_l, slot_r, w_l, w_r, delta, eps_ineq});
    passage.write(join_path(out_dir, "fkpp_passage.csv"));
    res.outputs.push_back("fkpp_passage.csv");
    res.notes.emplace_back("t_n", fmt(t_n));
    res.notes.emplace_back("w_l", fmt(w_l));
    res.notes.emplace_back("w_r", fmt(w_r));
    res.notes.emplace_back("flatness_holds", flat ? "true" : "false");

    res.verdict = widening && flat;
    std::ostringstream sum;
    sum << "fkpp widening " << (widening ? "yes" : "no") << " (max " << fmt(max_width)
        << " vs off-stretch median " << fmt(off_median) << "), passage inequality "
        << (flat ? "holds" : "fails");
    res.summary = sum.str();
    return res;
}

// -------------------------------------------------------------- nonmonotone

ExperimentResult exp_nonmonotone(const Config& cfg, const std::string& out_dir,
                                 std::uint64_t seed, unsigned threads, bool force) {
    (void)threads;
    (void)force;
    ensure_dir(out_dir);
    ExperimentResult res;
    res.name = "nonmonotone";
    require_equation(cfg, "fkpp", res.name);
    const BuiltPotential bp = build_potential(cfg, seed);

    const double t_end = cfg.get_double_or("solver", "t_end", 60.0);
    const double eps = cfg.get_double_or("experiment", "epsilon", 0.05);
    const SolveResult sr = solve_with_snapshots(cfg, *bp.pot, EquationKind::fkpp, t_end);

    CsvWriter witnesses({"t", "l", "r", "w_l", "w_r", "spacing"});
    witnesses.add_note(kSurrogateNote);
    std::size_t count = 0;
    double best_gap = 0.0;
    for (const auto& snap : sr.snapshots) {
        const auto& v = snap.values;
        if (v.size() < 3) continue;
        // best left index against the running max to its right
        double suff = v.back();
        std::size_t suff_ix = v.size() - 1;
        double gap = -1.0;
        std::size_t l_ix = 0, r_ix = 0;
        for (std::size_t i = v.size() - 1; i-- > 0;) {
            if (suff - v[i] > gap) {
                gap = suff - v[i];
                l_ix = i;
                r_ix = suff_ix;
            }
            if (v[i] > suff) {
                suff = v[i];
                suff_ix = i;
            }
        }
        if (gap < eps) continue;
        // tightest r for that l: the first point to the right clearing the bar
        for (std::size_t j = l_ix + 1; j <= r_ix; ++j) {
            if (v[j] >= v[l_ix] + eps) {
                r_ix = j;
                break;
            }
        }
        const double xl = snap.x_at(l_ix);
        const double xr = snap.x_at(r_ix);
        witnesses.add_row({snap.time, xl, xr, v[l_ix], v[r_ix], xr - xl});
        ++count;
        best_gap = std::max(best_gap, gap);
    }
    witnesses.write(join_path(out_dir, "witnesses.csv"));
    res.outputs.push_back("witnesses.csv");

    res.verdict = count > 0;
    res.notes.emplace_back("witness_count", std::to_string(count));
    res.notes.emplace_back("max_gap", fmt(best_gap));
    std::ostringstream sum;
    sum << count << " non-monotonicity witness snapshot(s) at epsilon " << fmt(eps);
    res.summary = sum.str();
    return res;
}

// ----------------------------------------------------------------- vel-scan

ExperimentResult exp_vel_scan(const Config& cfg, const std::string& out_dir, std::uint64_t seed,
                              unsigned threads, bool force) {
    (void)force;
    ensure_dir(out_dir);
    ExperimentResult res;
    res.name = "vel-scan";
    const BuiltPotential bp = build_potential(cfg, seed);
    const std::vector<double> scales = cfg.get_list_or("experiment", "scales", {1.0, 2.0, 4.0, 8.0});
    const CheckVelConfig cv = build_checkvel(cfg, seed, threads);
    const std::vector<VelocityReport> reports = check_vel(*bp.pot, scales, cv);

    CsvWriter table({"scale", "v_c", "vc_residual", "v0", "v0_bracket", "vel_ok"});
    table.add_note(kSurrogateNote);
    CsvWriter etas({"scale", "v", "eta_bar"});
    bool increasing = true;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const VelocityReport& r = reports[i];
        table.add_row({fmt(r.scale), fmt(r.v_c), fmt(r.vc_residual), fmt(r.v0),
                       fmt(r.v0_bracket), r.vel_ok ? "true" : "false"});
        for (const auto& s : r.eta_bar) etas.add_row({r.scale, s.v, s.eta_bar});
        if (i > 0 && reports[i].v0 <= reports[i - 1].v0) increasing = false;
    }
    table.write(join_path(out_dir, "vel_scan.csv"));
    etas.write(join_path(out_dir, "eta_bar.csv"));
    res.outputs.push_back("vel_scan.csv");
    res.outputs.push_back("eta_bar.csv");

    res.verdict = reports.back().vel_ok;
    res.notes.emplace_back("v0_increasing", increasing ? "true" : "false");
    res.notes.emplace_back("largest_scale_vel_ok", reports.back().vel_ok ? "true" : "false");
    std::ostringstream sum;
    sum << "vel_ok at scale " << fmt(reports.back().scale) << ": "
        << (reports.back().vel_ok ? "true" : "false") << ", v0 "
        << (increasing ? "increasing" : "NOT increasing") << " across scales";
    res.summary = sum.str();
    return res;
}

// ----------------------------------------------------------------- coupling

ExperimentResult exp_coupling(const Config& cfg, const std::string& out_dir, std::uint64_t seed,
                              unsigned threads, bool force) {
    (void)force;
    ensure_dir(out_dir);
    ExperimentResult res;
    res.name = "coupling";
    const double ei = cfg.get_double_or("potential", "ei", 1.0);
    const double es = cfg.get_double_or("potential", "es", 5.0);
    const std::vector<double> lambdas = cfg.get_list_or("coupling", "lambda_list", {2.0, 3.0, 4.0});
    const auto n_reps = static_cast<std::size_t>(cfg.get_int_or("coupling", "n_reps", 200));
    const auto cap = static_cast<std::size_t>(cfg.get_int_or("coupling", "cap", 100000));
    const double dt = cfg.get_double_or("coupling", "dt", 1e-3);
    const double freq_threshold = cfg.get_double_or("coupling", "freq_threshold", 0.7);
    const OffspringDistribution dist = build_offspring(cfg);
    const FeasibleParameters params =
        cfg.has("coupling", "delta1")
            ? select_parameters(ei, es, cfg.get_double("coupling", "delta1"))
            : select_parameters(ei, es);

    CsvWriter table({"lambda", "delta1", "t_prime", "t_check", "n_reps", "n_reached", "n_capped",
                     "g1g2_count", "g1g2_freq", "ci_lo", "ci_hi", "success_count", "success_freq",
                     "window_count", "subset_violations"});
    table.add_note(kSurrogateNote);
    std::vector<double> freqs;
    for (std::size_t li = 0; li < lambdas.size(); ++li) {
        const double lam = lambdas[li];
        const PoissonBumpPotential pot = engineer_stretch_potential(
            ei, es, lam, 0.0, Interval{-2.0 * lam - 20.0, 2.0 * lam + 20.0});
        const CouplingConfig cc = make_coupling_config(params, ei, es, 0.0, lam, dt, cap);
        std::vector<CouplingOutcome> outcomes(n_reps);
        parallel_for(n_reps, threads, [&](std::size_t i) {
            const std::uint64_t rep_seed =
                seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(li * 1000003 + i + 1);
            outcomes[i] = run_coupling(cc, pot, dist, rep_seed);
        });

        std::size_t reached = 0, capped = 0, g1g2 = 0, success = 0, window_ok = 0, subset_bad = 0;
        for (const auto& o : outcomes) {
            if (o.capped) ++capped;
            if (o.reached_t_check) {
                ++reached;
                if (o.g1 && o.g2) ++g1g2;
                if (o.success) ++success;
                if (o.success_window && o.window_complete) ++window_ok;
            }
            if (!verify_subset_logic(o)) ++subset_bad;
        }
        const BinomialCi ci = wilson_interval(g1g2, n_reps);
        const double freq = static_cast<double>(g1g2) / static_cast<double>(n_reps);
        freqs.push_back(freq);
        table.add_row({fmt(lam), fmt(params.delta1), fmt(params.t_prime), fmt(cc.t_check),
                       std::to_string(n_reps), std::to_string(reached), std::to_string(capped),
                       std::to_string(g1g2), fmt(freq), fmt(ci.lo), fmt(ci.hi),
                       std::to_string(success),
                       fmt(static_cast<double>(success) / static_cast<double>(n_reps)),
                       std::to_string(window_ok), std::to_string(subset_bad)});
        if (capped > 0)
            res.notes.emplace_back("lambda_" + fmt(lam) + "_capped",
                                   std::to_string(capped) + " of " + std::to_string(n_reps) +
                                       " replicates hit the population cap (indeterminate, "
                                       "counted as failures)");
    }
    table.write(join_path(out_dir, "coupling.csv"));
    res.outputs.push_back("coupling.csv");

    if (freqs.size() >= 3) {
        const TrendTest trend = kendall_trend(freqs);
        res.notes.emplace_back("freq_trend_tau", fmt(trend.tau));
        res.notes.emplace_back("freq_trend_p_increasing", fmt(trend.p_increasing));
    }
    res.verdict = freqs.back() >= freq_threshold;
    res.notes.emplace_back("largest_lambda_freq", fmt(freqs.back()));
    std::ostringstream sum;
    sum << "freq(G1 and G2) at lambda " << fmt(lambdas.back()) << ": " << fmt(freqs.back())
        << (res.verdict ? " >= " : " < ") << fmt(freq_threshold);
    res.summary = sum.str();
    return res;
}

// ----------------------------------------------------------------- dispatch

ExperimentResult run_experiment(const std::string& name, const Config& cfg,
                                const std::string& out_dir, std::uint64_t seed, unsigned threads,
                                bool force) {
    std::string n = name;
    std::replace(n.begin(), n.end(), '_', '-');
    if (n == "pam-width") return exp_pam_width(cfg, out_dir, seed, threads, force);
    if (n == "fkpp-width") return exp_fkpp_width(cfg, out_dir, seed, threads, force);
    if (n == "nonmonotone") return exp_nonmonotone(cfg, out_dir, seed, threads, force);
    if (n == "vel-scan") return exp_vel_scan(cfg, out_dir, seed, threads, force);
    if (n == "coupling") return exp_coupling(cfg, out_dir, seed, threads, force);
    throw ConfigError("unknown experiment '" + name +
                      "' (pam-width, fkpp-width, nonmonotone, vel-scan, coupling)");
}

ExperimentResult run_with_manifest(const std::string& name, const Config& cfg,
                                   const std::string& out_dir, std::uint64_t seed,
                                   unsigned threads, bool force) {
    const auto start = std::chrono::steady_clock::now();
    ExperimentResult res = run_experiment(name, cfg, out_dir, seed, threads, force);
    const auto stop = std::chrono::steady_clock::now();

    Manifest m;
    m.experiment = res.name;
    m.seed = seed;
    m.threads = threads;
    m.force = force;
    m.version = version_string;
    m.config = cfg;
    m.config_hash = manifest_hash(res.name, seed, cfg);
    m.wall_seconds = std::chrono::duration<double>(stop - start).count();
    m.outputs = res.outputs;
    save_manifest(m, join_path(out_dir, "manifest.txt"));
    return res;
}

ExperimentResult rerun_manifest(const std::string& manifest_path, const std::string& out_dir) {
    const Manifest m = load_manifest(manifest_path);
    return run_with_manifest(m.experiment, m.config, out_dir, m.seed, m.threads, m.force);
}

}
