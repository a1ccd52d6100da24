#pragma once

// Minimal comma-separated reader shared by the data loaders. No quoting
// support; the bundled schemas never need embedded commas.

#include "roadcap/errors.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace roadcap::detail {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<int> line_numbers;

    [[nodiscard]] std::size_t column(const std::string& name, const std::string& source) const
    {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) {
                return i;
            }
        }
        throw ValidationError(source + ": missing column '" + name + "'");
    }
};

inline std::string trim(const std::string& s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        cells.push_back(trim(cell));
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

inline CsvTable read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "'");
    }
    CsvTable table;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        auto cells = split_line(t);
        if (table.header.empty()) {
            table.header = std::move(cells);
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                                  std::to_string(table.header.size()) + " columns, found " + std::to_string(cells.size()));
        }
        table.rows.push_back(std::move(cells));
        table.line_numbers.push_back(lineno);
    }
    if (table.header.empty()) {
        throw ValidationError(path.string() + ": empty file");
    }
    return table;
}

inline double parse_double(const std::string& text, const std::string& where)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) {
            throw std::invalid_argument(text);
        }
        return v;
    } catch (const std::exception&) {
        throw ValidationError(where + ": not a number: '" + text + "'");
    }
}

} // namespace roadcap::detail
