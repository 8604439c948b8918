#ifndef BATTOPT_GRID_HPP
#define BATTOPT_GRID_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "battopt/errors.hpp"

namespace battopt {

using Index = std::size_t;
using Vec3 = std::array<double, 3>;

inline double distance(const Vec3& a, const Vec3& b) {
    const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

struct GridConfig {
    int nx = 48, ny = 32, nz = 40;
    double lx = 0.078, ly = 0.052, lz = 0.070; // m
    Vec3 origin{0.0, 0.0, 0.0};
};

/// Fixed hexahedral lattice. Nodes and elements are numbered
/// lexicographically with x fastest, then y, then z.
class StructuredGrid {
public:
    StructuredGrid(int nx, int ny, int nz, double hx, double hy, double hz, Vec3 origin = {})
        : nx_(nx), ny_(ny), nz_(nz), h_{hx, hy, hz}, origin_(origin) {
        if (nx < 1 || ny < 1 || nz < 1)
            throw ConfigError("grid: element counts must be >= 1");
        if (!(hx > 0.0) || !(hy > 0.0) || !(hz > 0.0))
            throw ConfigError("grid: element sizes must be > 0");
    }

    int nx() const noexcept { return nx_; }
    int ny() const noexcept { return ny_; }
    int nz() const noexcept { return nz_; }
    const Vec3& spacing() const noexcept { return h_; }
    double hx() const noexcept { return h_[0]; }
    double hy() const noexcept { return h_[1]; }
    double hz() const noexcept { return h_[2]; }
    double h_min() const noexcept { return std::min({h_[0], h_[1], h_[2]}); }
    double h_max() const noexcept { return std::max({h_[0], h_[1], h_[2]}); }
    const Vec3& origin() const noexcept { return origin_; }
    Vec3 extent() const noexcept { return {nx_ * h_[0], ny_ * h_[1], nz_ * h_[2]}; }

    Index node_count() const noexcept { return Index(nx_ + 1) * Index(ny_ + 1) * Index(nz_ + 1); }
    Index element_count() const noexcept { return Index(nx_) * Index(ny_) * Index(nz_); }
    Index thermal_dofs() const noexcept { return node_count(); }
    Index elastic_dofs() const noexcept { return 3 * node_count(); }
    Index total_dofs() const noexcept { return thermal_dofs() + elastic_dofs(); }

    double element_volume() const noexcept { return h_[0] * h_[1] * h_[2]; }
    double domain_volume() const noexcept { return element_volume() * double(element_count()); }

    Index node_index(int i, int j, int k) const noexcept {
        return Index(i) + Index(nx_ + 1) * (Index(j) + Index(ny_ + 1) * Index(k));
    }
    std::array<int, 3> node_ijk(Index n) const noexcept {
        const Index sx = nx_ + 1, sy = ny_ + 1;
        return {int(n % sx), int((n / sx) % sy), int(n / (sx * sy))};
    }
    Index element_index(int i, int j, int k) const noexcept {
        return Index(i) + Index(nx_) * (Index(j) + Index(ny_) * Index(k));
    }
    std::array<int, 3> element_ijk(Index e) const noexcept {
        const Index sx = nx_, sy = ny_;
        return {int(e % sx), int((e / sx) % sy), int(e / (sx * sy))};
    }

    /// Local corner order: (0,0,0) (1,0,0) (1,1,0) (0,1,0) (0,0,1) (1,0,1) (1,1,1) (0,1,1).
    std::array<Index, 8> element_nodes(Index e) const noexcept {
        const auto [i, j, k] = element_ijk(e);
        return {node_index(i, j, k),         node_index(i + 1, j, k),
                node_index(i + 1, j + 1, k), node_index(i, j + 1, k),
                node_index(i, j, k + 1),     node_index(i + 1, j, k + 1),
                node_index(i + 1, j + 1, k + 1), node_index(i, j + 1, k + 1)};
    }

    Vec3 node_position(Index n) const noexcept {
        const auto [i, j, k] = node_ijk(n);
        return {origin_[0] + i * h_[0], origin_[1] + j * h_[1], origin_[2] + k * h_[2]};
    }
    Vec3 element_centroid(Index e) const noexcept {
        const auto [i, j, k] = element_ijk(e);
        return {origin_[0] + (i + 0.5) * h_[0], origin_[1] + (j + 0.5) * h_[1],
                origin_[2] + (k + 0.5) * h_[2]};
    }

    bool operator==(const StructuredGrid&) const = default;

private:
    int nx_, ny_, nz_;
    Vec3 h_;
    Vec3 origin_;
};

inline StructuredGrid build_grid(const GridConfig& config) {
    if (config.nx < 1 || config.ny < 1 || config.nz < 1)
        throw ConfigError("grid: element counts must be >= 1");
    if (!(config.lx > 0.0) || !(config.ly > 0.0) || !(config.lz > 0.0))
        throw ConfigError("grid: domain lengths must be > 0");
    return StructuredGrid(config.nx, config.ny, config.nz, config.lx / config.nx,
                          config.ly / config.ny, config.lz / config.nz, config.origin);
}

// ---------------------------------------------------------------------------
// Regions

enum class Region : unsigned char { design, cell };

/// Cylindrical cells on a cols x rows lattice (x by y), axis along z, centred
/// in the domain footprint and in height.
struct CellLayout {
    int rows = 2;
    int cols = 3;
    double pitch = 0.026;    // m
    double diameter = 0.021; // m
    double height = 0.070;   // m

    int cell_count() const noexcept { return rows * cols; }
};

struct Cylinder {
    double cx, cy;
    double z0, z1;
    double radius;

    bool contains(const Vec3& p) const noexcept {
        const double dx = p[0] - cx, dy = p[1] - cy;
        return dx * dx + dy * dy < radius * radius && p[2] > z0 && p[2] < z1;
    }
    double volume() const noexcept { return std::numbers::pi * radius * radius * (z1 - z0); }
};

inline std::vector<Cylinder> cell_cylinders(const StructuredGrid& grid, const CellLayout& layout) {
    if (layout.rows < 0 || layout.cols < 0)
        throw ConfigError("layout: rows and cols must be >= 0");
    std::vector<Cylinder> out;
    if (layout.cell_count() == 0) return out;
    if (!(layout.pitch > 0.0) || !(layout.diameter > 0.0) || !(layout.height > 0.0))
        throw ConfigError("layout: pitch, diameter and height must be > 0");

    const Vec3 ext = grid.extent();
    const double slack = 1e-12 * std::max({ext[0], ext[1], ext[2]});
    if (layout.cols * layout.pitch > ext[0] + slack || layout.rows * layout.pitch > ext[1] + slack)
        throw ConfigError("layout: cell lattice exceeds the domain footprint");
    if (layout.height > ext[2] + slack)
        throw ConfigError("layout: cell height exceeds the domain height");

    const Vec3& o = grid.origin();
    const double x0 = o[0] + 0.5 * (ext[0] - layout.cols * layout.pitch);
    const double y0 = o[1] + 0.5 * (ext[1] - layout.rows * layout.pitch);
    const double z0 = o[2] + 0.5 * (ext[2] - layout.height);
    for (int r = 0; r < layout.rows; ++r)
        for (int c = 0; c < layout.cols; ++c)
            out.push_back({x0 + (c + 0.5) * layout.pitch, y0 + (r + 0.5) * layout.pitch, z0,
                           z0 + layout.height, 0.5 * layout.diameter});
    return out;
}

class RegionMap {
public:
    RegionMap() = default;
    RegionMap(std::vector<Region> labels, CellLayout layout)
        : labels_(std::move(labels)), layout_(layout) {}

    /// All elements designable.
    static RegionMap all_design(const StructuredGrid& grid) {
        CellLayout none;
        none.rows = none.cols = 0;
        return RegionMap(std::vector<Region>(grid.element_count(), Region::design), none);
    }

    Region operator[](Index e) const { return labels_[e]; }
    bool is_cell(Index e) const { return labels_[e] == Region::cell; }
    Index size() const noexcept { return labels_.size(); }
    const std::vector<Region>& labels() const noexcept { return labels_; }
    const CellLayout& layout() const noexcept { return layout_; }
    Index cell_element_count() const {
        return Index(std::count(labels_.begin(), labels_.end(), Region::cell));
    }

    /// Nodes touched by at least one CELL element.
    std::vector<char> cell_node_mask(const StructuredGrid& grid) const {
        std::vector<char> mask(grid.node_count(), 0);
        for (Index e = 0; e < labels_.size(); ++e)
            if (labels_[e] == Region::cell)
                for (Index n : grid.element_nodes(e)) mask[n] = 1;
        return mask;
    }

    /// Nodes all of whose incident elements are CELL elements.
    std::vector<char> cell_interior_node_mask(const StructuredGrid& grid) const {
        std::vector<char> mask = cell_node_mask(grid);
        for (Index e = 0; e < labels_.size(); ++e)
            if (labels_[e] != Region::cell)
                for (Index n : grid.element_nodes(e)) mask[n] = 0;
        return mask;
    }

private:
    std::vector<Region> labels_;
    CellLayout layout_{};
};

/// An element is CELL iff its centroid lies strictly inside a cell cylinder.
inline RegionMap label_regions(const StructuredGrid& grid, const CellLayout& layout) {
    const auto cylinders = cell_cylinders(grid, layout);
    std::vector<Region> labels(grid.element_count(), Region::design);
    for (Index e = 0; e < labels.size(); ++e) {
        const Vec3 c = grid.element_centroid(e);
        for (const auto& cyl : cylinders)
            if (cyl.contains(c)) {
                labels[e] = Region::cell;
                break;
            }
    }
    return RegionMap(std::move(labels), layout);
}

// ---------------------------------------------------------------------------
// Boundary tags

enum class Face { x_minus, x_plus, y_minus, y_plus, z_minus, z_plus };

inline Face parse_face(std::string_view name) {
    if (name == "x-") return Face::x_minus;
    if (name == "x+") return Face::x_plus;
    if (name == "y-") return Face::y_minus;
    if (name == "y+") return Face::y_plus;
    if (name == "z-") return Face::z_minus;
    if (name == "z+") return Face::z_plus;
    throw ConfigError("unknown face name '" + std::string(name) + "' (expected x-, x+, y-, y+, z-, z+)");
}

inline std::string face_name(Face f) {
    static constexpr const char* names[] = {"x-", "x+", "y-", "y+", "z-", "z+"};
    return names[static_cast<int>(f)];
}

inline int face_axis(Face f) { return static_cast<int>(f) / 2; }
inline bool face_is_upper(Face f) { return static_cast<int>(f) % 2 == 1; }

inline std::vector<Index> face_nodes(const StructuredGrid& grid, Face f) {
    const int axis = face_axis(f);
    const std::array<int, 3> n{grid.nx(), grid.ny(), grid.nz()};
    const int fixed = face_is_upper(f) ? n[axis] : 0;
    std::vector<Index> out;
    for (int k = 0; k <= n[2]; ++k)
        for (int j = 0; j <= n[1]; ++j)
            for (int i = 0; i <= n[0]; ++i) {
                const std::array<int, 3> ijk{i, j, k};
                if (ijk[axis] == fixed) out.push_back(grid.node_index(i, j, k));
            }
    return out;
}

inline double face_area(const StructuredGrid& grid, Face f) {
    const Vec3 ext = grid.extent();
    const int axis = face_axis(f);
    return ext[(axis + 1) % 3] * ext[(axis + 2) % 3];
}

/// Consistent nodal forces for a uniform traction on a whole box face. Each
/// bilinear face quad contributes a quarter of its load to each corner.
inline std::vector<std::pair<Index, double>> face_load_weights(const StructuredGrid& grid, Face f) {
    const int axis = face_axis(f);
    const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
    const std::array<int, 3> n{grid.nx(), grid.ny(), grid.nz()};
    const Vec3& h = grid.spacing();
    const double quarter = 0.25 * h[a1] * h[a2];
    std::vector<double> w(grid.node_count(), 0.0);
    std::array<int, 3> ijk{};
    ijk[axis] = face_is_upper(f) ? n[axis] : 0;
    for (int q2 = 0; q2 < n[a2]; ++q2)
        for (int q1 = 0; q1 < n[a1]; ++q1)
            for (int c = 0; c < 4; ++c) {
                ijk[a1] = q1 + (c & 1);
                ijk[a2] = q2 + (c >> 1);
                w[grid.node_index(ijk[0], ijk[1], ijk[2])] += quarter;
            }
    std::vector<std::pair<Index, double>> out;
    for (Index i = 0; i < w.size(); ++i)
        if (w[i] != 0.0) out.emplace_back(i, w[i]);
    return out;
}

struct BcConfig {
    double sink_temperature = 298.15; // K
    std::vector<std::string> thermal_faces{"z-", "z+"};
    std::vector<std::string> clamp_faces{"x-"};
    std::vector<std::string> traction_faces{"x+"};
    Vec3 traction{0.0, 0.0, -15.0e6}; // N/m^2

    static BcConfig none() {
        BcConfig bc;
        bc.thermal_faces.clear();
        bc.clamp_faces.clear();
        bc.traction_faces.clear();
        return bc;
    }
};

struct FaceTraction {
    Face face;
    Vec3 traction;
};

struct BoundaryTags {
    /// (node, temperature K), sorted by node, unique.
    std::vector<std::pair<Index, double>> thermal_dirichlet;
    /// (elastic dof = 3*node + component, prescribed displacement m), sorted, unique.
    std::vector<std::pair<Index, double>> structural_dirichlet;
    std::vector<FaceTraction> tractions;
    double sink_temperature = 298.15;

    void add_thermal(Index node, double value) { thermal_dirichlet.emplace_back(node, value); }
    void add_structural(Index dof, double value) { structural_dirichlet.emplace_back(dof, value); }

    /// Sorts both Dirichlet sets; duplicate entries must agree.
    void normalize() {
        const auto tidy = [](std::vector<std::pair<Index, double>>& v, const char* what) {
            std::stable_sort(v.begin(), v.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
            std::vector<std::pair<Index, double>> out;
            for (const auto& p : v) {
                if (!out.empty() && out.back().first == p.first) {
                    if (out.back().second != p.second)
                        throw ConfigError(std::string(what) + ": conflicting values on one dof");
                    continue;
                }
                out.push_back(p);
            }
            v = std::move(out);
        };
        tidy(thermal_dirichlet, "thermal bc");
        tidy(structural_dirichlet, "structural bc");
    }
};

inline BoundaryTags tag_boundaries(const StructuredGrid& grid, const BcConfig& bc) {
    BoundaryTags tags;
    tags.sink_temperature = bc.sink_temperature;
    for (const auto& name : bc.thermal_faces)
        for (Index n : face_nodes(grid, parse_face(name))) tags.add_thermal(n, bc.sink_temperature);

    std::vector<Face> clamped;
    for (const auto& name : bc.clamp_faces) {
        const Face f = parse_face(name);
        clamped.push_back(f);
        for (Index n : face_nodes(grid, f))
            for (Index c = 0; c < 3; ++c) tags.add_structural(3 * n + c, 0.0);
    }
    for (const auto& name : bc.traction_faces) {
        const Face f = parse_face(name);
        if (std::find(clamped.begin(), clamped.end(), f) != clamped.end())
            throw ConfigError("bc: face " + name + " is both clamped and loaded");
        tags.tractions.push_back({f, bc.traction});
    }
    tags.normalize();
    return tags;
}

} // namespace battopt

#endif // BATTOPT_GRID_HPP
