#ifndef BATTOPT_CSV_HPP
#define BATTOPT_CSV_HPP

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "battopt/errors.hpp"

namespace battopt::csv {

/// Shortest decimal that parses back to the same double.
inline std::string format(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view line, char sep = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto p = line.find(sep, start);
        out.push_back(trim(line.substr(start, p == std::string_view::npos ? p : p - start)));
        if (p == std::string_view::npos) break;
        start = p + 1;
    }
    return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    double v = 0.0;
    const char* b = s.data();
    const char* e = b + s.size();
    if (!s.empty() && *b == '+') ++b;
    const auto r = std::from_chars(b, e, v);
    if (r.ec != std::errc() || r.ptr != e) throw IoError(where + ": '" + s + "' is not a number");
    return v;
}

/// Numeric table with a header row.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw IoError("csv: missing column '" + name + "'");
    }
};

/// Reads a numeric CSV. Blank lines and lines starting with '#' are skipped.
/// When `expected` is nonempty the header must match it exactly.
inline Table read(const std::string& path, const std::vector<std::string>& expected = {}) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    Table t;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        auto fields = split(s);
        if (!have_header) {
            t.header = std::move(fields);
            have_header = true;
            if (!expected.empty() && t.header != expected) {
                std::string want;
                for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
                throw IoError(path + ": expected header '" + want + "'");
            }
            continue;
        }
        if (fields.size() != t.header.size())
            throw IoError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                          " fields, got " + std::to_string(fields.size()));
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) row.push_back(parse_double(f, path + ":" + std::to_string(lineno)));
        t.rows.push_back(std::move(row));
    }
    if (!have_header) throw IoError(path + ": empty file");
    return t;
}

inline std::string header_line(const std::vector<std::string>& names) {
    std::string s;
    for (std::size_t i = 0; i < names.size(); ++i) s += (i ? "," : "") + names[i];
    return s + "\n";
}

inline std::string row_line(const std::vector<double>& values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) s += (i ? "," : "") + format(values[i]);
    return s + "\n";
}

inline void write(const std::string& path, const std::vector<std::string>& header,
                  const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << header_line(header);
    for (const auto& r : rows) out << row_line(r);
    if (!out) throw IoError("write failed for '" + path + "'");
}

} // namespace battopt::csv

#endif // BATTOPT_CSV_HPP
