#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace frontlab {

// Sectioned plain-text configuration: `key = value` lines grouped under
// `[section]` headers. Insertion order is preserved so parse -> serialize ->
// parse is the identity; `#` starts a comment line.
class Config {
public:
    struct Section {
        std::string name;
        std::vector<std::pair<std::string, std::string>> items;
    };

    Config() = default;

    static Config parse(const std::string& text);
    static Config load(const std::string& path);

    std::string serialize() const;
    void save(const std::string& path) const;

    bool has_section(const std::string& section) const;
    bool has(const std::string& section, const std::string& key) const;

    std::string get(const std::string& section, const std::string& key) const;
    std::string get_or(const std::string& section, const std::string& key,
                       const std::string& fallback) const;

    double get_double(const std::string& section, const std::string& key) const;
    double get_double_or(const std::string& section, const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& section, const std::string& key) const;
    std::int64_t get_int_or(const std::string& section, const std::string& key,
                            std::int64_t fallback) const;
    bool get_bool_or(const std::string& section, const std::string& key, bool fallback) const;
    // Comma-separated list of numbers.
    std::vector<double> get_list(const std::string& section, const std::string& key) const;
    std::vector<double> get_list_or(const std::string& section, const std::string& key,
                                    std::vector<double> fallback) const;

    // Inserts or overwrites; creates the section on first use.
    void set(const std::string& section, const std::string& key, const std::string& value);
    void set_double(const std::string& section, const std::string& key, double value);

    const std::vector<Section>& sections() const { return sections_; }

private:
    const std::string* find(const std::string& section, const std::string& key) const;
    std::vector<Section> sections_;
};

double parse_double(const std::string& text, const std::string& what);
std::int64_t parse_int(const std::string& text, const std::string& what);

}
