#include "frontlab/config.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "frontlab/errors.hpp"

namespace frontlab {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}

double parse_double(const std::string& text, const std::string& what) {
    const std::string t = trim(text);
    if (t.empty()) throw ConfigError(what + ": empty numeric value");
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || errno == ERANGE)
        throw ConfigError(what + ": cannot parse '" + t + "' as a number");
    return v;
}

std::int64_t parse_int(const std::string& text, const std::string& what) {
    const std::string t = trim(text);
    if (t.empty()) throw ConfigError(what + ": empty integer value");
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(t.c_str(), &end, 10);
    if (end != t.c_str() + t.size() || errno == ERANGE)
        throw ConfigError(what + ": cannot parse '" + t + "' as an integer");
    return static_cast<std::int64_t>(v);
}

Config Config::parse(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    Section* current = nullptr;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": unterminated section header");
            const std::string name = trim(t.substr(1, t.size() - 2));
            if (name.empty())
                throw ConfigError("config line " + std::to_string(line_no) + ": empty section name");
            cfg.sections_.push_back(Section{name, {}});
            current = &cfg.sections_.back();
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected 'key = value' or '[section]'");
        if (current == nullptr)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": key outside of any [section]");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        current->items.emplace_back(key, value);
    }
    return cfg;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string Config::serialize() const {
    std::string out;
    bool first = true;
    for (const auto& sec : sections_) {
        if (!first) out += '\n';
        first = false;
        out += '[' + sec.name + "]\n";
        for (const auto& [key, value] : sec.items) out += key + " = " + value + '\n';
    }
    return out;
}

void Config::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write config file: " + path);
    out << serialize();
}

const std::string* Config::find(const std::string& section, const std::string& key) const {
    for (const auto& sec : sections_) {
        if (sec.name != section) continue;
        for (const auto& [k, v] : sec.items)
            if (k == key) return &v;
    }
    return nullptr;
}

bool Config::has_section(const std::string& section) const {
    for (const auto& sec : sections_)
        if (sec.name == section) return true;
    return false;
}

bool Config::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

std::string Config::get(const std::string& section, const std::string& key) const {
    const std::string* v = find(section, key);
    if (v == nullptr) throw ConfigError("missing config key [" + section + "] " + key);
    return *v;
}

std::string Config::get_or(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
    const std::string* v = find(section, key);
    return v != nullptr ? *v : fallback;
}

double Config::get_double(const std::string& section, const std::string& key) const {
    return parse_double(get(section, key), "[" + section + "] " + key);
}

double Config::get_double_or(const std::string& section, const std::string& key,
                             double fallback) const {
    const std::string* v = find(section, key);
    return v != nullptr ? parse_double(*v, "[" + section + "] " + key) : fallback;
}

std::int64_t Config::get_int(const std::string& section, const std::string& key) const {
    return parse_int(get(section, key), "[" + section + "] " + key);
}

std::int64_t Config::get_int_or(const std::string& section, const std::string& key,
                                std::int64_t fallback) const {
    const std::string* v = find(section, key);
    return v != nullptr ? parse_int(*v, "[" + section + "] " + key) : fallback;
}

bool Config::get_bool_or(const std::string& section, const std::string& key, bool fallback) const {
    const std::string* v = find(section, key);
    if (v == nullptr) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError("[" + section + "] " + key + ": expected a boolean, got '" + *v + "'");
}

std::vector<double> Config::get_list(const std::string& section, const std::string& key) const {
    const std::string text = get(section, key);
    std::vector<double> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        const std::string t = trim(item);
        if (t.empty()) continue;
        out.push_back(parse_double(t, "[" + section + "] " + key));
    }
    if (out.empty()) throw ConfigError("[" + section + "] " + key + ": empty list");
    return out;
}

std::vector<double> Config::get_list_or(const std::string& section, const std::string& key,
                                        std::vector<double> fallback) const {
    if (!has(section, key)) return fallback;
    return get_list(section, key);
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
    for (auto& sec : sections_) {
        if (sec.name != section) continue;
        for (auto& [k, v] : sec.items) {
            if (k == key) {
                v = value;
                return;
            }
        }
        sec.items.emplace_back(key, value);
        return;
    }
    sections_.push_back(Section{section, {{key, value}}});
}

void Config::set_double(const std::string& section, const std::string& key, double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    set(section, key, buf);
}

}
