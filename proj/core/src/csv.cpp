#include "frontlab/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "frontlab/config.hpp"
#include "frontlab/errors.hpp"

namespace frontlab {

CsvWriter::CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {
    if (columns_.empty()) throw ConfigError("csv table needs at least one column");
}

void CsvWriter::add_note(const std::string& note) {
    notes_.push_back(note);
}

void CsvWriter::add_row(std::vector<std::string> cells) {
    if (cells.size() != columns_.size())
        throw ConfigError("csv row has " + std::to_string(cells.size()) + " cells, expected " +
                          std::to_string(columns_.size()));
    rows_.push_back(std::move(cells));
}

void CsvWriter::add_row(std::initializer_list<double> cells) {
    std::vector<std::string> row;
    row.reserve(cells.size());
    for (double v : cells) row.push_back(format(v));
    add_row(std::move(row));
}

std::string CsvWriter::format(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

std::string CsvWriter::format(std::size_t value) {
    return std::to_string(value);
}

std::string CsvWriter::body() const {
    std::string out;
    for (const auto& note : notes_) out += "# " + note + '\n';
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (i > 0) out += ',';
        out += columns_[i];
    }
    out += '\n';
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) out += ',';
            out += row[i];
        }
        out += '\n';
    }
    return out;
}

void CsvWriter::write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write csv file: " + path);
    out << body();
}

std::size_t CsvTable::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    throw ConfigError("csv has no column named '" + name + "'");
}

double CsvTable::number(std::size_t row, const std::string& column) const {
    if (row >= rows.size()) throw ConfigError("csv row index out of range");
    return parse_double(rows[row][column_index(column)], "csv column " + column);
}

CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream row(line);
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.emplace_back();
        if (header) {
            table.columns = std::move(cells);
            header = false;
        } else {
            if (cells.size() != table.columns.size())
                throw ConfigError("csv row width mismatch");
            table.rows.push_back(std::move(cells));
        }
    }
    if (table.columns.empty()) throw ConfigError("csv text has no header row");
    return table;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open csv file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str());
}

}
