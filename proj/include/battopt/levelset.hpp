#ifndef BATTOPT_LEVELSET_HPP
#define BATTOPT_LEVELSET_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "battopt/errors.hpp"
#include "battopt/grid.hpp"
#include "battopt/materials.hpp"

namespace battopt {

/// Nodal implicit function: phi >= 0 in solid, phi < 0 in void, zero on the
/// boundary.
struct LevelSetField {
    StructuredGrid grid;
    std::vector<double> phi;

    LevelSetField(StructuredGrid g, std::vector<double> values) : grid(g), phi(std::move(values)) {
        if (phi.size() != grid.node_count())
            throw PreconditionError("LevelSetField: value count does not match node count");
    }
    LevelSetField(StructuredGrid g, double value) : grid(g), phi(g.node_count(), value) {}

    double operator[](Index n) const { return phi[n]; }
    double& operator[](Index n) { return phi[n]; }

    std::array<double, 8> element_values(Index e) const {
        std::array<double, 8> v{};
        const auto nodes = grid.element_nodes(e);
        for (int a = 0; a < 8; ++a) v[a] = phi[nodes[a]];
        return v;
    }

    /// Trilinear interpolation; points outside the box are clamped onto it.
    double interpolate(const Vec3& x) const {
        std::array<int, 3> idx{};
        std::array<double, 3> t{};
        const std::array<int, 3> n{grid.nx(), grid.ny(), grid.nz()};
        for (int d = 0; d < 3; ++d) {
            double s = (x[d] - grid.origin()[d]) / grid.spacing()[d];
            s = std::clamp(s, 0.0, double(n[d]));
            idx[d] = std::min(int(std::floor(s)), n[d] - 1);
            t[d] = s - idx[d];
        }
        return trilinear(element_values(grid.element_index(idx[0], idx[1], idx[2])), t[0], t[1], t[2]);
    }

    /// Trilinear value at local coordinates (u, v, w) in [0, 1]^3.
    static double trilinear(const std::array<double, 8>& v, double u, double s, double w) {
        const double a = (1 - u) * (1 - s), b = u * (1 - s), c = u * s, d = (1 - u) * s;
        return (1 - w) * (a * v[0] + b * v[1] + c * v[2] + d * v[3]) +
               w * (a * v[4] + b * v[5] + c * v[6] + d * v[7]);
    }

    /// Gradient of the trilinear interpolant with respect to local coordinates.
    static std::array<double, 3> trilinear_gradient(const std::array<double, 8>& v, double u,
                                                    double s, double w) {
        const double bottom_u = (1 - s) * (v[1] - v[0]) + s * (v[2] - v[3]);
        const double top_u = (1 - s) * (v[5] - v[4]) + s * (v[6] - v[7]);
        const double bottom_s = (1 - u) * (v[3] - v[0]) + u * (v[2] - v[1]);
        const double top_s = (1 - u) * (v[7] - v[4]) + u * (v[6] - v[5]);
        const double a = (1 - u) * (1 - s), b = u * (1 - s), c = u * s, d = (1 - u) * s;
        const double bottom = a * v[0] + b * v[1] + c * v[2] + d * v[3];
        const double top = a * v[4] + b * v[5] + c * v[6] + d * v[7];
        return {(1 - w) * bottom_u + w * top_u, (1 - w) * bottom_s + w * top_s, top - bottom};
    }
};

// ---------------------------------------------------------------------------
// Initial designs

struct SeedSpec {
    enum class Kind { full_solid, hole_lattice } kind = Kind::hole_lattice;
    int holes_x = 4, holes_y = 3, holes_z = 3;
    double radius = 0.004; // m

    static SeedSpec full_solid() {
        SeedSpec s;
        s.kind = Kind::full_solid;
        return s;
    }
    static SeedSpec hole_lattice(int nx, int ny, int nz, double radius) {
        return {Kind::hole_lattice, nx, ny, nz, radius};
    }
};

inline double distance_to_box_boundary(const StructuredGrid& grid, const Vec3& x) {
    const Vec3 ext = grid.extent();
    double d = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        const double lo = x[a] - grid.origin()[a];
        d = std::min({d, lo, ext[a] - lo});
    }
    return d;
}

/// Centres of a regular lattice of spherical holes filling the box.
inline std::vector<Vec3> hole_centres(const StructuredGrid& grid, const SeedSpec& seed) {
    std::vector<Vec3> out;
    const Vec3 ext = grid.extent();
    for (int k = 0; k < seed.holes_z; ++k)
        for (int j = 0; j < seed.holes_y; ++j)
            for (int i = 0; i < seed.holes_x; ++i)
                out.push_back({grid.origin()[0] + (i + 0.5) * ext[0] / seed.holes_x,
                               grid.origin()[1] + (j + 0.5) * ext[1] / seed.holes_y,
                               grid.origin()[2] + (k + 0.5) * ext[2] / seed.holes_z});
    return out;
}

/// Keeps passive cells solid: nodes inside the CELL region get phi >= h_max.
/// Nodes on the cell surface stay free, otherwise the floor would pin a layer
/// of design material to every cell.
inline void enforce_passive(LevelSetField& field, const RegionMap& regions) {
    if (regions.cell_element_count() == 0) return;
    const double floor = field.grid.h_max();
    const auto mask = regions.cell_interior_node_mask(field.grid);
    for (Index n = 0; n < mask.size(); ++n)
        if (mask[n]) field.phi[n] = std::max(field.phi[n], floor);
}

inline LevelSetField initialize_design(const StructuredGrid& grid, const RegionMap& regions,
                                       const SeedSpec& seed) {
    std::vector<Vec3> centres;
    if (seed.kind == SeedSpec::Kind::hole_lattice) {
        if (!(seed.radius > 0.0)) throw ConfigError("seed: hole radius must be > 0");
        if (seed.holes_x < 1 || seed.holes_y < 1 || seed.holes_z < 1)
            throw ConfigError("seed: hole counts must be >= 1");
        centres = hole_centres(grid, seed);
    }
    LevelSetField field(grid, 0.0);
    for (Index n = 0; n < grid.node_count(); ++n) {
        const Vec3 x = grid.node_position(n);
        double v = distance_to_box_boundary(grid, x);
        for (const auto& c : centres) v = std::min(v, distance(x, c) - seed.radius);
        field.phi[n] = v;
    }
    enforce_passive(field, regions);
    return field;
}

// ---------------------------------------------------------------------------
// Volume fractions

/// γ_e by counting phi > 0 at an s^3 lattice of sub-cell centres of the
/// trilinear interpolant. CELL elements are forced to 1.
inline DesignState compute_volume_fractions(const LevelSetField& field, const RegionMap& regions,
                                            int subsamples = 4, double gamma_min = 1e-4) {
    if (subsamples < 1) throw PreconditionError("compute_volume_fractions: subsamples must be >= 1");
    const StructuredGrid& g = field.grid;
    DesignState state;
    state.gamma_min = gamma_min;
    state.gamma.assign(g.element_count(), 0.0);
    const int s = subsamples;
    const double inv = 1.0 / (double(s) * s * s);
    for (Index e = 0; e < g.element_count(); ++e) {
        if (regions.size() == g.element_count() && regions.is_cell(e)) {
            state.gamma[e] = 1.0;
            continue;
        }
        const auto v = field.element_values(e);
        const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
        if (*mn > 0.0) {
            state.gamma[e] = 1.0;
            continue;
        }
        if (*mx < 0.0) continue;
        int inside = 0;
        for (int k = 0; k < s; ++k)
            for (int j = 0; j < s; ++j)
                for (int i = 0; i < s; ++i)
                    if (LevelSetField::trilinear(v, (i + 0.5) / s, (j + 0.5) / s, (k + 0.5) / s) > 0.0)
                        ++inside;
        state.gamma[e] = inside * inv;
    }
    return state;
}

/// Solid volume over DESIGN elements, divided by the DESIGN volume.
inline double design_volume_fraction(const DesignState& state, const RegionMap& regions) {
    double solid = 0.0;
    Index count = 0;
    for (Index e = 0; e < state.gamma.size(); ++e) {
        if (regions.is_cell(e)) continue;
        solid += state.gamma[e];
        ++count;
    }
    return count ? solid / double(count) : 0.0;
}

// ---------------------------------------------------------------------------
// Hamilton-Jacobi update

/// phi_i <- phi_i - dt |grad phi_i| V_i with first-order Godunov upwinding.
/// V > 0 erodes the solid. Throws if max|V| dt exceeds cfl * h_min.
inline LevelSetField advect(const LevelSetField& field, const std::vector<double>& velocity,
                            double dt, double cfl = 0.5) {
    const StructuredGrid& g = field.grid;
    if (velocity.size() != g.node_count())
        throw PreconditionError("advect: one velocity per node required");
    if (!(dt > 0.0)) throw PreconditionError("advect: dt must be > 0");
    double vmax = 0.0;
    for (double v : velocity) vmax = std::max(vmax, std::abs(v));
    if (vmax * dt > cfl * g.h_min() * (1.0 + 1e-12))
        throw PreconditionError("advect: CFL violated, max|V| dt = " + std::to_string(vmax * dt) +
                                " > " + std::to_string(cfl * g.h_min()));

    LevelSetField out = field;
    const std::array<int, 3> n{g.nx(), g.ny(), g.nz()};
    for (Index node = 0; node < g.node_count(); ++node) {
        const double v = velocity[node];
        if (v == 0.0) continue;
        const auto ijk = g.node_ijk(node);
        double grad2 = 0.0;
        for (int d = 0; d < 3; ++d) {
            auto lo = ijk, hi = ijk;
            const bool has_lo = ijk[d] > 0, has_hi = ijk[d] < n[d];
            double dm = 0.0, dp = 0.0;
            if (has_lo) {
                --lo[d];
                dm = (field.phi[node] - field.phi[g.node_index(lo[0], lo[1], lo[2])]) / g.spacing()[d];
            }
            if (has_hi) {
                ++hi[d];
                dp = (field.phi[g.node_index(hi[0], hi[1], hi[2])] - field.phi[node]) / g.spacing()[d];
            }
            if (!has_lo) dm = dp;
            if (!has_hi) dp = dm;
            if (v > 0.0) {
                const double a = std::max(dm, 0.0), b = std::min(dp, 0.0);
                grad2 += a * a + b * b;
            } else {
                const double a = std::min(dm, 0.0), b = std::max(dp, 0.0);
                grad2 += a * a + b * b;
            }
        }
        out.phi[node] = field.phi[node] - dt * std::sqrt(grad2) * v;
    }
    return out;
}

} // namespace battopt

#endif // BATTOPT_LEVELSET_HPP
