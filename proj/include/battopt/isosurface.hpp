#ifndef BATTOPT_ISOSURFACE_HPP
#define BATTOPT_ISOSURFACE_HPP

#include <array>
#include <cmath>
#include <vector>

#include "battopt/grid.hpp"
#include "battopt/levelset.hpp"

namespace battopt {

struct Triangle {
    std::array<Vec3, 3> v;
    Vec3 normal; ///< unit, pointing toward phi < 0
    double area;

    Vec3 centroid() const {
        return {(v[0][0] + v[1][0] + v[2][0]) / 3.0, (v[0][1] + v[1][1] + v[2][1]) / 3.0,
                (v[0][2] + v[1][2] + v[2][2]) / 3.0};
    }
};

/// One sample of the zero isosurface: the cut patch of a single element.
struct BoundaryPoint {
    Vec3 position; ///< on the trilinear zero set of phi
    double area;   ///< m^2
    Vec3 normal;   ///< unit, toward phi < 0
    Index element;
};

using BoundaryPointSet = std::vector<BoundaryPoint>;

namespace detail {

inline Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 add(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 scale(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

/// Kuhn split of the hex into six tetrahedra sharing the 0-6 diagonal.
inline constexpr std::array<std::array<int, 4>, 6> kuhn_tets{{
    {0, 1, 2, 6}, {0, 2, 3, 6}, {0, 3, 7, 6}, {0, 7, 4, 6}, {0, 4, 5, 6}, {0, 5, 1, 6},
}};

inline constexpr std::array<std::array<int, 3>, 8> unit_corners{{
    {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1},
}};

} // namespace detail

/// Parameter t in [0, 1] of the zero crossing measured from `a` toward `b`,
/// for linear interpolation between phi_a >= 0 and phi_b < 0 (or vice versa).
inline double edge_crossing(double phi_a, double phi_b) { return phi_a / (phi_a - phi_b); }

/// Marching-tetrahedra triangles of one element's zero isosurface, solid being phi >= 0.
inline std::vector<Triangle> element_isosurface(const LevelSetField& field, Index e) {
    using namespace detail;
    const StructuredGrid& g = field.grid;
    const auto vals = field.element_values(e);
    std::vector<Triangle> out;
    bool any_in = false, any_out = false;
    for (double v : vals) (v >= 0.0 ? any_in : any_out) = true;
    if (!any_in || !any_out) return out;

    const auto [ei, ej, ek] = g.element_ijk(e);
    const Vec3 base{g.origin()[0] + ei * g.hx(), g.origin()[1] + ej * g.hy(),
                    g.origin()[2] + ek * g.hz()};
    std::array<Vec3, 8> pos{};
    for (int a = 0; a < 8; ++a)
        pos[a] = {base[0] + unit_corners[a][0] * g.hx(), base[1] + unit_corners[a][1] * g.hy(),
                  base[2] + unit_corners[a][2] * g.hz()};

    auto cut = [&](int a, int b) {
        const double t = edge_crossing(vals[a], vals[b]);
        return add(pos[a], scale(sub(pos[b], pos[a]), t));
    };
    auto emit = [&](const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& toward_void) {
        Vec3 n = cross(sub(p1, p0), sub(p2, p0));
        const double len = norm(n);
        if (len <= 0.0) return;
        n = scale(n, 1.0 / len);
        if (dot(n, toward_void) < 0.0) n = scale(n, -1.0);
        out.push_back({{p0, p1, p2}, n, 0.5 * len});
    };

    for (const auto& tet : kuhn_tets) {
        std::array<int, 4> in{}, ex{};
        int nin = 0, nex = 0;
        for (int a : tet) (vals[a] >= 0.0 ? in[nin++] : ex[nex++]) = a;
        if (nin == 0 || nex == 0) continue;
        // Any inside-to-outside edge direction points toward the void side.
        if (nin == 1) {
            const Vec3 dir = sub(pos[ex[0]], pos[in[0]]);
            emit(cut(in[0], ex[0]), cut(in[0], ex[1]), cut(in[0], ex[2]), dir);
        } else if (nex == 1) {
            const Vec3 dir = sub(pos[ex[0]], pos[in[0]]);
            emit(cut(in[0], ex[0]), cut(in[1], ex[0]), cut(in[2], ex[0]), dir);
        } else {
            const Vec3 dir = sub(add(pos[ex[0]], pos[ex[1]]), add(pos[in[0]], pos[in[1]]));
            const Vec3 p00 = cut(in[0], ex[0]), p01 = cut(in[0], ex[1]);
            const Vec3 p11 = cut(in[1], ex[1]), p10 = cut(in[1], ex[0]);
            emit(p00, p01, p11, dir);
            emit(p00, p11, p10, dir);
        }
    }
    return out;
}

namespace detail {

/// Moves x onto the trilinear zero set inside element e. Falls back to the
/// edge crossing nearest x when Newton stalls.
inline Vec3 project_to_zero(const LevelSetField& field, Index e, Vec3 x) {
    const StructuredGrid& g = field.grid;
    const auto vals = field.element_values(e);
    const auto [ei, ej, ek] = g.element_ijk(e);
    const Vec3 base{g.origin()[0] + ei * g.hx(), g.origin()[1] + ej * g.hy(),
                    g.origin()[2] + ek * g.hz()};
    const Vec3& h = g.spacing();
    const double target = 1e-14 * g.h_min();

    Vec3 loc{};
    for (int d = 0; d < 3; ++d) loc[d] = std::clamp((x[d] - base[d]) / h[d], 0.0, 1.0);
    for (int it = 0; it < 50; ++it) {
        const double f = LevelSetField::trilinear(vals, loc[0], loc[1], loc[2]);
        if (std::abs(f) <= target) {
            return {base[0] + loc[0] * h[0], base[1] + loc[1] * h[1], base[2] + loc[2] * h[2]};
        }
        const auto gl = LevelSetField::trilinear_gradient(vals, loc[0], loc[1], loc[2]);
        // Newton step in physical space, expressed in local coordinates.
        Vec3 gp{gl[0] / h[0], gl[1] / h[1], gl[2] / h[2]};
        const double g2 = dot(gp, gp);
        if (!(g2 > 0.0)) break;
        for (int d = 0; d < 3; ++d) loc[d] = std::clamp(loc[d] - f * gp[d] / g2 / h[d], 0.0, 1.0);
    }

    // Fallback: crossing on a sign-changing element edge nearest x.
    static constexpr std::array<std::array<int, 2>, 12> edges{{
        {0, 1}, {1, 2}, {3, 2}, {0, 3}, {4, 5}, {5, 6}, {7, 6}, {4, 7}, {0, 4}, {1, 5}, {2, 6}, {3, 7},
    }};
    Vec3 best = x;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& [a, b] : edges) {
        if ((vals[a] >= 0.0) == (vals[b] >= 0.0)) continue;
        const double t = edge_crossing(vals[a], vals[b]);
        Vec3 p{};
        for (int d = 0; d < 3; ++d) {
            const double ca = base[d] + unit_corners[a][d] * h[d];
            const double cb = base[d] + unit_corners[b][d] * h[d];
            p[d] = ca + t * (cb - ca);
        }
        const double dd = norm(sub(p, x));
        if (dd < best_d) {
            best_d = dd;
            best = p;
        }
    }
    return best;
}

} // namespace detail

/// One boundary point per cut DESIGN element: facet area, area-weighted
/// normal toward void, position = patch centroid projected onto phi = 0.
inline BoundaryPointSet extract_boundary(const LevelSetField& field, const RegionMap& regions) {
    using namespace detail;
    const StructuredGrid& g = field.grid;
    const bool have_regions = regions.size() == g.element_count();
    const double min_area = 1e-14 * g.h_min() * g.h_min();
    BoundaryPointSet out;
    for (Index e = 0; e < g.element_count(); ++e) {
        if (have_regions && regions.is_cell(e)) continue;
        const auto tris = element_isosurface(field, e);
        if (tris.empty()) continue;
        double area = 0.0;
        Vec3 c{0, 0, 0}, n{0, 0, 0};
        for (const auto& t : tris) {
            area += t.area;
            c = add(c, scale(t.centroid(), t.area));
            n = add(n, scale(t.normal, t.area));
        }
        if (area <= min_area) continue;
        c = scale(c, 1.0 / area);
        const double nl = norm(n);
        n = nl > 0.0 ? scale(n, 1.0 / nl) : tris.front().normal;
        out.push_back({project_to_zero(field, e, c), area, n, e});
    }
    return out;
}

/// All isosurface triangles, bucketed by element (empty buckets for uncut elements).
inline std::vector<std::vector<Triangle>> isosurface_by_element(const LevelSetField& field) {
    std::vector<std::vector<Triangle>> out(field.grid.element_count());
    for (Index e = 0; e < out.size(); ++e) out[e] = element_isosurface(field, e);
    return out;
}

/// Closest point on triangle (a, b, c) to p; Ericson, Real-Time Collision Detection 5.1.5.
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    using namespace detail;
    const Vec3 ab = sub(b, a), ac = sub(c, a), ap = sub(p, a);
    const double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0 && d2 <= 0) return a;
    const Vec3 bp = sub(p, b);
    const double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0 && d4 <= d3) return b;
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) return add(a, scale(ab, d1 / (d1 - d3)));
    const Vec3 cp = sub(p, c);
    const double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0 && d5 <= d6) return c;
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) return add(a, scale(ac, d2 / (d2 - d6)));
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
        return add(b, scale(sub(c, b), (d4 - d3) / ((d4 - d3) + (d5 - d6))));
    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom, w = vc * denom;
    return add(a, add(scale(ab, v), scale(ac, w)));
}

} // namespace battopt

#endif // BATTOPT_ISOSURFACE_HPP
