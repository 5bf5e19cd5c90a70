#include "frontlab/manifest.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "frontlab/errors.hpp"

namespace frontlab {

namespace {

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
    errno = 0;
    char* end = nullptr;
    const std::uint64_t v = std::strtoull(text.c_str(), &end, 10);
    if (end != text.c_str() + text.size() || errno == ERANGE)
        throw ConfigError(what + ": cannot parse '" + text + "' as an unsigned integer");
    return v;
}

constexpr const char* kConfigPrefix = "config.";

}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (const char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t manifest_hash(const std::string& experiment, std::uint64_t seed,
                            const Config& config) {
    return fnv1a(experiment + '\n' + std::to_string(seed) + '\n' + config.serialize());
}

std::string serialize_manifest(const Manifest& m) {
    Config out;
    out.set("run", "experiment", m.experiment);
    out.set("run", "seed", std::to_string(m.seed));
    out.set("run", "threads", std::to_string(m.threads));
    out.set("run", "force", m.force ? "true" : "false");
    out.set("run", "version", m.version);
    out.set("run", "config_hash", std::to_string(m.config_hash));
    char wall[40];
    std::snprintf(wall, sizeof(wall), "%.3f", m.wall_seconds);
    out.set("run", "wall_seconds", wall);
    for (std::size_t i = 0; i < m.outputs.size(); ++i)
        out.set("outputs", "file" + std::to_string(i), m.outputs[i]);
    for (const auto& sec : m.config.sections())
        for (const auto& [key, value] : sec.items) out.set(kConfigPrefix + sec.name, key, value);
    return out.serialize();
}

Manifest parse_manifest(const std::string& text) {
    const Config in = Config::parse(text);
    Manifest m;
    m.experiment = in.get("run", "experiment");
    m.seed = parse_u64(in.get("run", "seed"), "[run] seed");
    m.threads = static_cast<unsigned>(in.get_int_or("run", "threads", 0));
    m.force = in.get_bool_or("run", "force", false);
    m.version = in.get_or("run", "version", "");
    m.config_hash = parse_u64(in.get_or("run", "config_hash", "0"), "[run] config_hash");
    m.wall_seconds = in.get_double_or("run", "wall_seconds", 0.0);
    for (const auto& sec : in.sections()) {
        if (sec.name == "outputs") {
            for (const auto& [key, value] : sec.items) m.outputs.push_back(value);
        } else if (sec.name.rfind(kConfigPrefix, 0) == 0) {
            const std::string name = sec.name.substr(std::string(kConfigPrefix).size());
            for (const auto& [key, value] : sec.items) m.config.set(name, key, value);
        }
    }
    const std::uint64_t expected = manifest_hash(m.experiment, m.seed, m.config);
    if (m.config_hash != 0 && m.config_hash != expected)
        throw ConfigError("manifest config_hash does not match its embedded config");
    return m;
}

Manifest load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open manifest: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_manifest(buf.str());
}

void save_manifest(const Manifest& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write manifest: " + path);
    out << serialize_manifest(m);
}

}
