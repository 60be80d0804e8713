#pragma once

// Text I/O for the command-line tool: unit-level and pair-level CSV readers
// plus small parsing helpers.  Error messages carry the source name and
// 1-based line number.

#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "randci/core.hpp"
#include "randci/pairs.hpp"

namespace randci {
namespace detail {

inline std::string trim_copy(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim_copy(field));
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

inline int parse_binary_field(const std::string& s, const std::string& where) {
    if (s == "0") return 0;
    if (s == "1") return 1;
    throw std::invalid_argument(where + ": expected 0 or 1, got '" + s + "'");
}

}  // namespace detail

/// Reads unit-level data: header "y,z" then one 0/1 pair per row.
inline std::vector<std::pair<int, int>> read_unit_rows(std::istream& in,
                                                       const std::string& source) {
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::pair<int, int>> rows;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = source + ":" + std::to_string(lineno);
        const std::string stripped = detail::trim_copy(line);
        if (stripped.empty()) continue;
        const auto fields = detail::split_csv_line(stripped);
        if (!saw_header) {
            if (fields.size() != 2 || fields[0] != "y" || fields[1] != "z")
                throw std::invalid_argument(where + ": expected header 'y,z'");
            saw_header = true;
            continue;
        }
        if (fields.size() != 2)
            throw std::invalid_argument(where + ": expected 2 fields, got " +
                                        std::to_string(fields.size()));
        rows.emplace_back(detail::parse_binary_field(fields[0], where),
                          detail::parse_binary_field(fields[1], where));
    }
    if (!saw_header) throw std::invalid_argument(source + ": empty file (expected header 'y,z')");
    return rows;
}

/// Reads pair-level data: header "pair_id,y,z" then one unit per row; units
/// are grouped by pair_id in first-appearance order.
inline std::vector<PairRecord> read_pair_rows(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t lineno = 0;
    std::vector<PairRecord> rows;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = source + ":" + std::to_string(lineno);
        const std::string stripped = detail::trim_copy(line);
        if (stripped.empty()) continue;
        const auto fields = detail::split_csv_line(stripped);
        if (!saw_header) {
            if (fields.size() != 3 || fields[0] != "pair_id" || fields[1] != "y" ||
                fields[2] != "z")
                throw std::invalid_argument(where + ": expected header 'pair_id,y,z'");
            saw_header = true;
            continue;
        }
        if (fields.size() != 3)
            throw std::invalid_argument(where + ": expected 3 fields, got " +
                                        std::to_string(fields.size()));
        if (fields[0].empty()) throw std::invalid_argument(where + ": empty pair_id");
        rows.push_back(PairRecord{fields[0], detail::parse_binary_field(fields[1], where),
                                  detail::parse_binary_field(fields[2], where)});
    }
    if (!saw_header)
        throw std::invalid_argument(source + ": empty file (expected header 'pair_id,y,z')");
    return rows;
}

inline std::vector<std::pair<int, int>> read_unit_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open data file: " + path);
    return read_unit_rows(in, path);
}

inline std::vector<PairRecord> read_pair_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open data file: " + path);
    return read_pair_rows(in, path);
}

/// Parses a comma-separated list of exactly `expected` non-negative integers
/// (e.g. the --counts flag).
inline std::vector<long long> parse_counts_list(const std::string& text, std::size_t expected) {
    const auto fields = detail::split_csv_line(text);
    if (fields.size() != expected)
        throw std::invalid_argument("expected " + std::to_string(expected) +
                                    " comma-separated counts, got " +
                                    std::to_string(fields.size()));
    std::vector<long long> out;
    for (const auto& f : fields) {
        if (f.empty() || f.find_first_not_of("0123456789") != std::string::npos)
            throw std::invalid_argument("invalid count '" + f + "'");
        out.push_back(std::stoll(f));
    }
    return out;
}

}  // namespace randci
