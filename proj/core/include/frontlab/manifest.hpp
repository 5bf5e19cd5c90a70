#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "frontlab/config.hpp"

namespace frontlab {

// Record of one experiment run: enough to reproduce it bit-for-bit. The
// embedded config plus the seed determine every CSV body; wall-clock lives
// only here, never in data files.
struct Manifest {
    std::string experiment;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    bool force = false;
    std::string version;
    std::uint64_t config_hash = 0;
    double wall_seconds = 0.0;
    Config config;
    std::vector<std::string> outputs;  // file names relative to the run directory
};

std::uint64_t fnv1a(const std::string& text);
std::uint64_t manifest_hash(const std::string& experiment, std::uint64_t seed,
                            const Config& config);

std::string serialize_manifest(const Manifest& m);
Manifest parse_manifest(const std::string& text);

Manifest load_manifest(const std::string& path);
void save_manifest(const Manifest& m, const std::string& path);

}
