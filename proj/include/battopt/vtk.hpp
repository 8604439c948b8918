#ifndef BATTOPT_VTK_HPP
#define BATTOPT_VTK_HPP

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "battopt/csv.hpp"
#include "battopt/errors.hpp"
#include "battopt/grid.hpp"

namespace battopt {

struct FieldArray {
    std::string name;
    int components = 1; ///< 1 (scalar) or 3 (vector, interleaved)
    std::vector<double> values;
};

/// Named nodal and element arrays on one grid, in declaration order.
struct FieldSnapshot {
    StructuredGrid grid;
    std::vector<FieldArray> point_data;
    std::vector<FieldArray> cell_data;

    explicit FieldSnapshot(StructuredGrid g) : grid(g) {}

    FieldSnapshot& add_point(std::string name, std::vector<double> values, int components = 1) {
        point_data.push_back({std::move(name), components, std::move(values)});
        return *this;
    }
    FieldSnapshot& add_cell(std::string name, std::vector<double> values, int components = 1) {
        cell_data.push_back({std::move(name), components, std::move(values)});
        return *this;
    }

    const FieldArray* find(const std::string& name) const {
        for (const auto* set : {&point_data, &cell_data})
            for (const auto& a : *set)
                if (a.name == name) return &a;
        return nullptr;
    }

    void validate() const {
        std::vector<std::string> seen;
        auto check = [&](const FieldArray& a, Index count, const char* where) {
            if (a.name.empty() || a.name.find_first_of(" \t\n") != std::string::npos)
                throw PreconditionError("vtk: array names must be nonempty without whitespace");
            for (const auto& s : seen)
                if (s == a.name) throw PreconditionError("vtk: duplicate array name '" + a.name + "'");
            seen.push_back(a.name);
            if (a.components != 1 && a.components != 3)
                throw PreconditionError("vtk: array '" + a.name + "' must have 1 or 3 components");
            if (a.values.size() != count * Index(a.components))
                throw PreconditionError(std::string("vtk: ") + where + " array '" + a.name + "' has " +
                                        std::to_string(a.values.size()) + " values, expected " +
                                        std::to_string(count * Index(a.components)));
        };
        for (const auto& a : point_data) check(a, grid.node_count(), "point");
        for (const auto& a : cell_data) check(a, grid.element_count(), "cell");
    }
};

namespace detail {

inline void write_arrays(std::ostream& out, const std::vector<FieldArray>& arrays) {
    for (const auto& a : arrays) {
        if (a.components == 1) out << "SCALARS " << a.name << " double 1\nLOOKUP_TABLE default\n";
        else out << "VECTORS " << a.name << " double\n";
        for (std::size_t i = 0; i < a.values.size(); i += std::size_t(a.components)) {
            for (int c = 0; c < a.components; ++c) out << (c ? " " : "") << csv::format(a.values[i + std::size_t(c)]);
            out << '\n';
        }
    }
}

} // namespace detail

/// Legacy ASCII structured points. Values use the shortest round-trip
/// decimal, so output is byte-stable and reads back exactly.
inline std::string vtk_string(const FieldSnapshot& s, const std::string& title = "battopt") {
    s.validate();
    const auto& g = s.grid;
    std::ostringstream out;
    out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET STRUCTURED_POINTS\n";
    out << "DIMENSIONS " << g.nx() + 1 << ' ' << g.ny() + 1 << ' ' << g.nz() + 1 << '\n';
    out << "ORIGIN " << csv::format(g.origin()[0]) << ' ' << csv::format(g.origin()[1]) << ' '
        << csv::format(g.origin()[2]) << '\n';
    out << "SPACING " << csv::format(g.hx()) << ' ' << csv::format(g.hy()) << ' ' << csv::format(g.hz()) << '\n';
    if (!s.point_data.empty()) {
        out << "POINT_DATA " << g.node_count() << '\n';
        detail::write_arrays(out, s.point_data);
    }
    if (!s.cell_data.empty()) {
        out << "CELL_DATA " << g.element_count() << '\n';
        detail::write_arrays(out, s.cell_data);
    }
    return out.str();
}

inline void write_vtk(const FieldSnapshot& s, const std::string& path, const std::string& title = "battopt") {
    const std::string text = vtk_string(s, title);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << text;
    if (!out) throw IoError("write failed for '" + path + "'");
}

/// Reads files produced by write_vtk (and the same subset of the format).
inline FieldSnapshot read_vtk(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    auto fail = [&](const std::string& msg) -> IoError { return IoError(path + ": " + msg); };

    std::string line;
    if (!std::getline(in, line) || line.rfind("# vtk DataFile", 0) != 0) throw fail("not a legacy VTK file");
    std::getline(in, line); // title
    in >> line;
    if (line != "ASCII") throw fail("only ASCII files are supported");
    std::string key, kind;
    in >> key >> kind;
    if (key != "DATASET" || kind != "STRUCTURED_POINTS") throw fail("expected DATASET STRUCTURED_POINTS");

    int dims[3] = {0, 0, 0};
    std::string tok[3];
    double origin[3] = {0, 0, 0}, spacing[3] = {0, 0, 0};
    auto number = [&](const std::string& t) { return csv::parse_double(t, path); };
    for (int field = 0; field < 3; ++field) {
        in >> key >> tok[0] >> tok[1] >> tok[2];
        if (!in) throw fail("truncated header");
        for (int c = 0; c < 3; ++c) {
            if (key == "DIMENSIONS") dims[c] = int(number(tok[c]));
            else if (key == "ORIGIN") origin[c] = number(tok[c]);
            else if (key == "SPACING") spacing[c] = number(tok[c]);
            else throw fail("unexpected header keyword '" + key + "'");
        }
    }
    if (dims[0] < 2 || dims[1] < 2 || dims[2] < 2) throw fail("DIMENSIONS must be at least 2 per axis");
    FieldSnapshot s(StructuredGrid(dims[0] - 1, dims[1] - 1, dims[2] - 1, spacing[0], spacing[1], spacing[2],
                                   {origin[0], origin[1], origin[2]}));

    std::vector<FieldArray>* target = nullptr;
    Index count = 0;
    while (in >> key) {
        if (key == "POINT_DATA" || key == "CELL_DATA") {
            in >> count;
            const bool point = key == "POINT_DATA";
            if (count != (point ? s.grid.node_count() : s.grid.element_count())) throw fail(key + " count mismatch");
            target = point ? &s.point_data : &s.cell_data;
            continue;
        }
        if (!target) throw fail("data array before POINT_DATA or CELL_DATA");
        FieldArray a;
        std::string type;
        if (key == "SCALARS") {
            std::string ncomp;
            in >> a.name >> type;
            // optional component count before LOOKUP_TABLE
            std::string next;
            in >> next;
            if (next != "LOOKUP_TABLE") {
                if (next != "1") throw fail("only single-component SCALARS are supported");
                in >> next;
            }
            if (next != "LOOKUP_TABLE") throw fail("expected LOOKUP_TABLE");
            in >> next;
            a.components = 1;
        } else if (key == "VECTORS") {
            in >> a.name >> type;
            a.components = 3;
        } else {
            throw fail("unsupported section '" + key + "'");
        }
        a.values.resize(count * Index(a.components));
        for (double& v : a.values) {
            std::string t;
            if (!(in >> t)) throw fail("array '" + a.name + "' is truncated");
            v = number(t);
        }
        target->push_back(std::move(a));
    }
    s.validate();
    return s;
}

} // namespace battopt

#endif // BATTOPT_VTK_HPP
