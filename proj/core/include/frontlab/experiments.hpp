#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "frontlab/config.hpp"
#include "frontlab/manifest.hpp"
#include "frontlab/offspring.hpp"
#include "frontlab/potential.hpp"
#include "frontlab/solver.hpp"

namespace frontlab {

// Medium assembled from a [potential] section: kind = constant | poisson |
// engineered, an optional scale factor, and the stretch anchor when the
// geometry makes one.
struct BuiltPotential {
    std::shared_ptr<const Potential> pot;
    std::string kind;
    double scale = 1.0;
    bool has_stretch = false;
    double x_n = 0.0;
    double phi = 0.0;
};

BuiltPotential build_potential(const Config& cfg, std::uint64_t seed);
OffspringDistribution build_offspring(const Config& cfg);
SolverConfig build_solver_config(const Config& cfg, EquationKind kind);

struct ExperimentResult {
    std::string name;
    bool verdict = false;
    bool unsupported = false;  // a precondition was bypassed with force
    std::vector<std::string> outputs;
    std::vector<std::pair<std::string, std::string>> notes;
    std::string summary;
};

// Verdicts are finite-scale surrogates for asymptotic statements; each CSV
// carries a header note saying so.
ExperimentResult exp_pam_width(const Config& cfg, const std::string& out_dir, std::uint64_t seed,
                               unsigned threads, bool force);
ExperimentResult exp_fkpp_width(const Config& cfg, const std::string& out_dir, std::uint64_t seed,
                                unsigned threads, bool force);
ExperimentResult exp_nonmonotone(const Config& cfg, const std::string& out_dir, std::uint64_t seed,
                                 unsigned threads, bool force);
ExperimentResult exp_vel_scan(const Config& cfg, const std::string& out_dir, std::uint64_t seed,
                              unsigned threads, bool force);
ExperimentResult exp_coupling(const Config& cfg, const std::string& out_dir, std::uint64_t seed,
                              unsigned threads, bool force);

// Dispatch by experiment name (pam-width, fkpp-width, nonmonotone, vel-scan,
// coupling); unknown names raise ConfigError.
ExperimentResult run_experiment(const std::string& name, const Config& cfg,
                                const std::string& out_dir, std::uint64_t seed, unsigned threads,
                                bool force);

// run_experiment plus a manifest.txt in out_dir; rerunning the manifest into
// a fresh directory reproduces every CSV byte for byte.
ExperimentResult run_with_manifest(const std::string& name, const Config& cfg,
                                   const std::string& out_dir, std::uint64_t seed,
                                   unsigned threads, bool force);
ExperimentResult rerun_manifest(const std::string& manifest_path, const std::string& out_dir);

}
