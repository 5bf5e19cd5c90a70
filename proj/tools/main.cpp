#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "frontlab/bbmre.hpp"
#include "frontlab/config.hpp"
#include "frontlab/coupling.hpp"
#include "frontlab/csv.hpp"
#include "frontlab/errors.hpp"
#include "frontlab/experiments.hpp"
#include "frontlab/feynman_kac.hpp"
#include "frontlab/manifest.hpp"
#include "frontlab/mgf.hpp"
#include "frontlab/potential.hpp"
#include "frontlab/solver.hpp"
#include "frontlab/stats.hpp"
#include "frontlab/version.hpp"

namespace {

using namespace frontlab;

struct GlobalOpts {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out_dir = "out";
    unsigned threads = 0;
    bool force = false;
};

Config load_config(const GlobalOpts& g) {
    if (g.config_path.empty()) return Config{};
    return Config::load(g.config_path);
}

std::uint64_t effective_seed(const GlobalOpts& g, const Config& cfg) {
    if (g.seed_given) return g.seed;
    return static_cast<std::uint64_t>(cfg.get_int_or("run", "seed", 2024));
}

std::string out_file(const GlobalOpts& g, const std::string& name) {
    std::filesystem::create_directories(g.out_dir);
    return (std::filesystem::path(g.out_dir) / name).string();
}

std::string fmt(double v) {
    return CsvWriter::format(v);
}

EquationKind equation_from(const Config& cfg) {
    const std::string eq = cfg.get_or("solver", "equation", "fkpp");
    if (eq == "fkpp") return EquationKind::fkpp;
    if (eq == "pam") return EquationKind::pam;
    throw ConfigError("[solver] equation must be 'fkpp' or 'pam'");
}

void write_trajectory(const SolveResult& sr, const std::string& path) {
    CsvWriter w({"t", "m_eps", "m_eps_minus", "mbar_M", "mbar_M_minus", "width_fkpp",
                 "width_pam"});
    for (const auto& f : sr.trajectory)
        w.add_row({f.t, f.m_eps, f.m_eps_minus, f.mbar_M, f.mbar_M_minus, f.width_fkpp,
                   f.width_pam});
    w.write(path);
}

void write_snapshots(const SolveResult& sr, const std::string& path) {
    CsvWriter w({"t", "x", "value", "log_exponent"});
    for (const auto& snap : sr.snapshots)
        for (std::size_t i = 0; i < snap.values.size(); ++i)
            w.add_row({snap.time, snap.x_at(i), snap.values[i], snap.log_scale});
    w.write(path);
}

void write_field(const Field& f, const std::string& path) {
    CsvWriter w({"t", "x", "value", "log_exponent"});
    for (std::size_t i = 0; i < f.values.size(); ++i)
        w.add_row({f.time, f.x_at(i), f.values[i], f.log_scale});
    w.write(path);
}

int cmd_potential(const GlobalOpts& g) {
    const Config cfg = load_config(g);
    const BuiltPotential bp = build_potential(cfg, effective_seed(g, cfg));
    const double dx = cfg.get_double_or("solver", "dx", 0.05);
    double lo = cfg.get_double_or("solver", "window_lo", bp.pot->window().lo);
    double hi = cfg.get_double_or("solver", "window_hi", bp.pot->window().hi);
    CsvWriter w({"x", "xi"});
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / dx));
    for (std::size_t i = 0; i <= n; ++i) {
        const double x = lo + dx * static_cast<double>(i);
        w.add_row({x, bp.pot->value(x)});
    }
    const std::string path = out_file(g, "potential.csv");
    w.write(path);
    std::printf("potential kind=%s ei=%s es=%s scale=%s -> %s\n", bp.kind.c_str(),
                fmt(bp.pot->ei()).c_str(), fmt(bp.pot->es()).c_str(), fmt(bp.scale).c_str(),
                path.c_str());
    if (bp.has_stretch)
        std::printf("stretch anchor x_n=%s phi=%s\n", fmt(bp.x_n).c_str(), fmt(bp.phi).c_str());
    if (cfg.has("experiment", "c0")) {
        const double c0 = cfg.get_double("experiment", "c0");
        const int n_lo = static_cast<int>(cfg.get_int_or("experiment", "n_lo", 10));
        const int n_hi = static_cast<int>(cfg.get_int_or("experiment", "n_hi", 60));
        const auto reports = find_stretches(*bp.pot, c0, n_lo, n_hi);
        CsvWriter sw({"n", "x_n", "phi", "low_lo", "low_hi", "high_lo", "high_hi"});
        for (const auto& r : reports)
            sw.add_row({r.n, r.x_n, r.c0 * std::log(r.n), r.low_interval.lo, r.low_interval.hi,
                        r.high_interval.lo, r.high_interval.hi});
        const std::string spath = out_file(g, "stretches.csv");
        sw.write(spath);
        std::printf("%zu stretch(es) found -> %s\n", reports.size(), spath.c_str());
    }
    return 0;
}

int cmd_solve(const GlobalOpts& g, bool fronts_only) {
    const Config cfg = load_config(g);
    const BuiltPotential bp = build_potential(cfg, effective_seed(g, cfg));
    SolverConfig sc = build_solver_config(cfg, equation_from(cfg));
    if (cfg.has("solver", "snapshot_times"))
        sc.snapshot_times = cfg.get_list("solver", "snapshot_times");
    const double t_end = cfg.get_double_or("solver", "t_end", 20.0);
    Solver solver(*bp.pot, sc);
    const SolveResult sr = solver.solve(InitialCondition::heaviside(), t_end);
    const std::string tpath = out_file(g, "trajectory.csv");
    write_trajectory(sr, tpath);
    std::printf("trajectory (%zu samples) -> %s\n", sr.trajectory.size(), tpath.c_str());
    if (!fronts_only) {
        if (!sr.snapshots.empty()) {
            const std::string spath = out_file(g, "snapshots.csv");
            write_snapshots(sr, spath);
            std::printf("%zu snapshot(s) -> %s\n", sr.snapshots.size(), spath.c_str());
        }
        const std::string fpath = out_file(g, "final.csv");
        write_field(sr.final_field, fpath);
        std::printf("final field -> %s\n", fpath.c_str());
    }
    if (!sr.trajectory.empty()) {
        const FrontReport& f = sr.trajectory.back();
        std::printf("t=%s m_eps=%s width_fkpp=%s width_pam=%s\n", fmt(f.t).c_str(),
                    fmt(f.m_eps).c_str(), fmt(f.width_fkpp).c_str(), fmt(f.width_pam).c_str());
    }
    return 0;
}

int cmd_mc_u(const GlobalOpts& g) {
    const Config cfg = load_config(g);
    const BuiltPotential bp = build_potential(cfg, effective_seed(g, cfg));
    const double t = cfg.get_double_or("mc", "t", 1.0);
    const double x = cfg.get_double_or("mc", "x", 0.0);
    const auto n_paths = static_cast<std::size_t>(cfg.get_int_or("mc", "n_paths", 100000));
    const double dt = cfg.get_double_or("mc", "dt", 1e-3);
    const PathEstimate est = estimate_u_mc(*bp.pot, t, x, InitialCondition::heaviside(), n_paths,
                                           dt, effective_seed(g, cfg),
                                           static_cast<int>(g.threads));
    CsvWriter w({"t", "x", "u_hat", "se", "n_paths", "dt"});
    w.add_row({t, x, est.value, est.standard_error, static_cast<double>(est.n_paths), est.dt});
    const std::string path = out_file(g, "mc_u.csv");
    w.write(path);
    std::printf("u(%s, %s) = %s +- %s (%zu paths) -> %s\n", fmt(t).c_str(), fmt(x).c_str(),
                fmt(est.value).c_str(), fmt(est.standard_error).c_str(), est.n_paths,
                path.c_str());
    return 0;
}

int cmd_lyapunov(const GlobalOpts& g) {
    const Config cfg = load_config(g);
    const BuiltPotential bp = build_potential(cfg, effective_seed(g, cfg));
    const double t = cfg.get_double_or("mc", "v0_t", 30.0);
    const double v_lo = cfg.get_double_or("mc", "v_lo", 0.0);
    const double v_hi =
        cfg.get_double_or("mc", "v_hi", 1.25 * std::sqrt(2.0 * bp.pot->es()));
    const double v_step = cfg.get_double_or("mc", "v0_step", 0.05);
    std::vector<double> grid;
    for (double v = v_lo; v <= v_hi + 1e-12; v += v_step) grid.push_back(v);
    const LyapunovCurve curve = estimate_lyapunov(*bp.pot, grid, t);
    CsvWriter w({"v", "lambda_hat"});
    for (const auto& p : curve.points) w.add_row({p.v, p.lambda_hat});
    const std::string path = out_file(g, "lyapunov.csv");
    w.write(path);
    std::printf("lyapunov curve (t_used=%s) -> %s\n", fmt(curve.t_used).c_str(), path.c_str());
    V0Config vc;
    vc.t = t;
    vc.v_step = v_step;
    const V0Estimate v0 = estimate_v0(*bp.pot, vc);
    std::printf("v0 = %s (bracket [%s, %s])\n", fmt(v0.v0).c_str(), fmt(v0.bracket_lo).c_str(),
                fmt(v0.bracket_hi).c_str());
    return 0;
}

int cmd_mgf(const GlobalOpts& g) {
    const Config cfg = load_config(g);
    const BuiltPotential bp = build_potential(cfg, effective_seed(g, cfg));
    const std::vector<double> etas =
        cfg.get_list_or("mc", "etas", {-0.4, -0.2, -0.1, -0.05, -0.025});
    const double x_max = cfg.get_double_or("mc", "x_max", 20.0);
    const auto n_paths = static_cast<std::size_t>(cfg.get_int_or("mc", "n_paths", 3000));
    const double dt = cfg.get_double_or("mc", "bank_dt", 2.5e-3);
    const std::uint64_t seed = effective_seed(g, cfg);
    CsvWriter w({"eta", "L_hat", "L_se", "L_prime_hat", "L_prime_se", "ess", "method"});
    for (const double eta : etas) {
        const MgfEstimate est = estimate_L(*bp.pot, eta, x_max, n_paths, dt, seed,
                                           MgfVariant::unit_interval,
                                           static_cast<int>(g.threads));
        const LPrimeEstimate lp = estimate_L_prime(*bp.pot, eta, x_max, n_paths, dt, seed,
                                                   static_cast<int>(g.threads));
        w.add_row({fmt(eta), fmt(est.value), fmt(est.standard_error), fmt(lp.value), fmt(lp.se),
                   fmt(est.ess), "unit-interval"});
        std::printf("eta=%s L=%s +- %s L'=%s +- %s ess=%s\n", fmt(eta).c_str(),
                    fmt(est.value).c_str(), fmt(est.standard_error).c_str(),
                    fmt(lp.value).c_str(), fmt(lp.se).c_str(), fmt(est.ess).c_str());
    }
    const std::string path = out_file(g, "mgf.csv");
    w.write(path);
    std::printf("-> %s\n", path.c_str());
    if (cfg.has("mc", "velocities")) {
        const std::vector<double> vs = cfg.get_list("mc", "velocities");
        EtaSolveConfig es_cfg;
        es_cfg.bank.paths_per_unit = n_paths;
        es_cfg.bank.dt = dt;
        es_cfg.bank.seed = seed;
        es_cfg.bank.threads = static_cast<int>(g.threads);
        CsvWriter vw({"v", "eta_bar", "eta_x", "x"});
        for (const double v : vs) {
            const double eb = solve_eta_bar(*bp.pot, v, es_cfg);
            const double ex = solve_eta_x(*bp.pot, x_max, v, es_cfg);
            vw.add_row({v, eb, ex, x_max});
            std::printf("v=%s eta_bar=%s eta_x=%s\n", fmt(v).c_str(), fmt(eb).c_str(),
                        fmt(ex).c_str());
        }
        const std::string vpath = out_file(g, "eta_roots.csv");
        vw.write(vpath);
        std::printf("-> %s\n", vpath.c_str());
    }
    return 0;
}

int cmd_bbmre_w(const GlobalOpts& g) {
    const Config cfg = load_config(g);
    const BuiltPotential bp = build_potential(cfg, effective_seed(g, cfg));
    const OffspringDistribution dist = build_offspring(cfg);
    const double x = cfg.get_double_or("mc", "x", 1.0);
    const double t = cfg.get_double_or("mc", "t", 1.0);
    const auto n_reps = static_cast<std::size_t>(cfg.get_int_or("mc", "n_reps", 10000));
    const auto cap = static_cast<std::size_t>(cfg.get_int_or("mc", "cap", 1000000));
    const double dt = cfg.get_double_or("mc", "dt", 1e-3);
    const WEstimate est = estimate_w(*bp.pot, x, t, dist, n_reps, cap, effective_seed(g, cfg), dt,
                                     static_cast<int>(g.threads));
    CsvWriter w({"x", "t", "w_hat", "se", "bound_low", "bound_high", "n_reps",
                 "indeterminate_frac"});
    w.add_row({x, t, est.w_hat, est.standard_error, est.bound_low, est.bound_high,
               static_cast<double>(est.n_reps), est.indeterminate_fraction});
    const std::string path = out_file(g, "bbmre_w.csv");
    w.write(path);
    std::printf("w(%s, %s) = %s +- %s (capped %zu of %zu) -> %s\n", fmt(t).c_str(),
                fmt(x).c_str(), fmt(est.w_hat).c_str(), fmt(est.standard_error).c_str(),
                est.capped, est.n_reps, path.c_str());
    return 0;
}

int cmd_couple(const GlobalOpts& g) {
    const Config cfg = load_config(g);
    const double ei = cfg.get_double_or("potential", "ei", 1.0);
    const double es = cfg.get_double_or("potential", "es", 5.0);
    const double lam = cfg.get_double_or("coupling", "lambda", 3.0);
    const auto n_reps = static_cast<std::size_t>(cfg.get_int_or("coupling", "n_reps", 50));
    const auto cap = static_cast<std::size_t>(cfg.get_int_or("coupling", "cap", 100000));
    const double dt = cfg.get_double_or("coupling", "dt", 1e-3);
    const OffspringDistribution dist = build_offspring(cfg);
    const FeasibleParameters params =
        cfg.has("coupling", "delta1")
            ? select_parameters(ei, es, cfg.get_double("coupling", "delta1"))
            : select_parameters(ei, es);
    const PoissonBumpPotential pot = engineer_stretch_potential(
        ei, es, lam, 0.0, Interval{-2.0 * lam - 20.0, 2.0 * lam + 20.0});
    const CouplingConfig cc = make_coupling_config(params, ei, es, 0.0, lam, dt, cap);
    const std::uint64_t seed = effective_seed(g, cfg);
    CsvWriter w({"rep", "reached_t_check", "g1", "g2", "success", "success_window", "n_lm_check",
                 "n_bad_check", "max_bad", "capped"});
    std::size_t g1g2 = 0, succ = 0;
    for (std::size_t i = 0; i < n_reps; ++i) {
        const CouplingOutcome o = run_coupling(cc, pot, dist, seed + i);
        w.add_row({std::to_string(i), o.reached_t_check ? "1" : "0", o.g1 ? "1" : "0",
                   o.g2 ? "1" : "0", o.success ? "1" : "0", o.success_window ? "1" : "0",
                   std::to_string(o.n_lm_check), std::to_string(o.n_bad_check),
                   std::to_string(o.max_bad), o.capped ? "1" : "0"});
        if (o.reached_t_check && o.g1 && o.g2) ++g1g2;
        if (o.reached_t_check && o.success) ++succ;
    }
    const std::string path = out_file(g, "couple.csv");
    w.write(path);
    const BinomialCi ci = wilson_interval(g1g2, n_reps);
    std::printf("lambda=%s t_check=%s: freq(G1&G2)=%s [%s, %s], success=%s -> %s\n",
                fmt(lam).c_str(), fmt(cc.t_check).c_str(),
                fmt(static_cast<double>(g1g2) / static_cast<double>(n_reps)).c_str(),
                fmt(ci.lo).c_str(), fmt(ci.hi).c_str(),
                fmt(static_cast<double>(succ) / static_cast<double>(n_reps)).c_str(),
                path.c_str());
    return 0;
}

int cmd_exp(const GlobalOpts& g, const std::string& name, const std::string& manifest_path) {
    ExperimentResult res;
    if (!manifest_path.empty()) {
        res = rerun_manifest(manifest_path, g.out_dir);
    } else {
        const Config cfg = load_config(g);
        res = run_with_manifest(name, cfg, g.out_dir, effective_seed(g, cfg), g.threads,
                                g.force);
    }
    std::printf("experiment %s: %s\n", res.name.c_str(), res.summary.c_str());
    for (const auto& [key, value] : res.notes)
        std::printf("  %s: %s\n", key.c_str(), value.c_str());
    for (const auto& f : res.outputs) std::printf("  wrote %s/%s\n", g.out_dir.c_str(), f.c_str());
    if (res.unsupported) std::printf("  verdict is UNSUPPORTED (precondition bypassed)\n");
    std::printf("verdict: %s\n", res.verdict ? "positive" : "negative");
    return res.verdict ? 0 : 5;
}

}

int main(int argc, char** argv) {
    CLI::App app{"front propagation in random media: solvers, estimators, experiments"};
    app.set_version_flag("--version", frontlab::version_string);
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOpts g;
    app.add_option("--config", g.config_path, "config file ([section] key = value)");
    auto* seed_opt = app.add_option("--seed", g.seed, "rng seed (overrides [run] seed)");
    app.add_option("--out", g.out_dir, "output directory")->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads (0: hardware)");
    app.add_flag("--force", g.force, "run past failed preconditions; verdicts marked unsupported");

    auto* c_potential = app.add_subcommand("potential", "sample the potential, report stretches");
    auto* c_solve = app.add_subcommand("solve", "finite-difference run: trajectory + snapshots");
    auto* c_fronts = app.add_subcommand("fronts", "finite-difference run: front trajectory only");
    auto* c_mc_u = app.add_subcommand("mc-u", "path-integral Monte Carlo estimate of u(t,x)");
    auto* c_lyap = app.add_subcommand("lyapunov", "growth-rate curve and its root v0");
    auto* c_mgf = app.add_subcommand("mgf", "hitting-functional log-MGF and derivative");
    auto* c_bbmre = app.add_subcommand("bbmre-w", "branching-walk estimate of w(t,x)");
    auto* c_couple = app.add_subcommand("couple", "two-system coupling replicates at one lambda");
    auto* c_exp = app.add_subcommand("exp", "experiment driver (writes manifest)");
    std::string exp_name;
    std::string manifest_path;
    c_exp->add_option("name", exp_name,
                      "pam-width | fkpp-width | nonmonotone | vel-scan | coupling | rerun");
    c_exp->add_option("--manifest", manifest_path, "rerun this manifest (ignores --config)");

    CLI11_PARSE(app, argc, argv);
    g.seed_given = seed_opt->count() > 0;

    try {
        if (c_potential->parsed()) return cmd_potential(g);
        if (c_solve->parsed()) return cmd_solve(g, false);
        if (c_fronts->parsed()) return cmd_solve(g, true);
        if (c_mc_u->parsed()) return cmd_mc_u(g);
        if (c_lyap->parsed()) return cmd_lyapunov(g);
        if (c_mgf->parsed()) return cmd_mgf(g);
        if (c_bbmre->parsed()) return cmd_bbmre_w(g);
        if (c_couple->parsed()) return cmd_couple(g);
        if (c_exp->parsed()) {
            if (exp_name.empty() && manifest_path.empty())
                throw frontlab::ConfigError("exp needs a name or --manifest");
            if (exp_name == "rerun" && manifest_path.empty())
                throw frontlab::ConfigError("exp rerun needs --manifest");
            return cmd_exp(g, exp_name, manifest_path);
        }
    } catch (const frontlab::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return frontlab::exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
