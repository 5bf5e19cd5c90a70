#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace frontlab {

// Column-ordered CSV emitter. Doubles print as %.17g so a rerun with the same
// inputs produces a byte-identical body; rows never carry timestamps.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> columns);

    // Comment lines (prefixed '#') above the header; readers skip them.
    void add_note(const std::string& note);

    void add_row(std::vector<std::string> cells);
    void add_row(std::initializer_list<double> cells);

    const std::vector<std::string>& columns() const { return columns_; }
    std::size_t row_count() const { return rows_.size(); }

    std::string body() const;
    void write(const std::string& path) const;

    static std::string format(double value);
    static std::string format(std::size_t value);

private:
    std::vector<std::string> columns_;
    std::vector<std::string> notes_;
    std::vector<std::vector<std::string>> rows_;
};

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::size_t column_index(const std::string& name) const;
    double number(std::size_t row, const std::string& column) const;
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text);

}
