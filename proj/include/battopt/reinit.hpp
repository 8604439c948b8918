#ifndef BATTOPT_REINIT_HPP
#define BATTOPT_REINIT_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <utility>
#include <vector>

#include "battopt/errors.hpp"
#include "battopt/isosurface.hpp"
#include "battopt/levelset.hpp"

namespace battopt {

namespace detail {

/// First-order upwind eikonal update from the smallest accepted neighbour
/// value along each axis (infinity where none).
inline double eikonal_update(std::array<double, 3> a, std::array<double, 3> h) {
    std::array<int, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int x, int y) { return a[x] < a[y]; });
    double u = a[order[0]] + h[order[0]];
    double A = 0.0, B = 0.0, C = 0.0;
    for (int m = 0; m < 3; ++m) {
        const int d = order[m];
        if (!(a[d] < u)) break;
        const double w = 1.0 / (h[d] * h[d]);
        A += w;
        B += w * a[d];
        C += w * a[d] * a[d];
        const double disc = B * B - A * (C - 1.0);
        u = (B + std::sqrt(std::max(disc, 0.0))) / A;
    }
    return u;
}

} // namespace detail

/// Rebuilds phi as a signed distance to its current zero isosurface. Nodes of
/// cut elements get exact distances to the marching-tetrahedra surface; the
/// rest are filled by fast marching, then nodes within about four elements of the
/// surface are corrected to exact distances. Signs are preserved. Without any
/// isosurface the field is replaced by +/- the domain diagonal.
inline LevelSetField reinitialize(const LevelSetField& field, Diagnostics* diag = nullptr) {
    const StructuredGrid& g = field.grid;
    const Index nn = g.node_count();
    const auto tris = isosurface_by_element(field);
    const bool any = std::any_of(tris.begin(), tris.end(), [](const auto& t) { return !t.empty(); });

    const Vec3 ext = g.extent();
    const double far = std::sqrt(ext[0] * ext[0] + ext[1] * ext[1] + ext[2] * ext[2]);
    if (!any) {
        warn(diag, "reinitialize: no zero isosurface, field clamped to a constant");
        const bool solid = std::all_of(field.phi.begin(), field.phi.end(), [](double v) { return v >= 0.0; });
        return LevelSetField(g, solid ? far : -far);
    }

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(nn, inf);
    std::vector<char> accepted(nn, 0);

    // Band: every node of an element whose isosurface is non-empty.
    const int reach = 3;
    for (Index e = 0; e < tris.size(); ++e) {
        if (tris[e].empty()) continue;
        for (Index n : g.element_nodes(e)) {
            if (accepted[n]) continue;
            accepted[n] = 1;
            const Vec3 p = g.node_position(n);
            const auto [i, j, k] = g.node_ijk(n);
            double best = inf;
            for (int ez = std::max(0, k - reach); ez < std::min(g.nz(), k + reach); ++ez)
                for (int ey = std::max(0, j - reach); ey < std::min(g.ny(), j + reach); ++ey)
                    for (int ex = std::max(0, i - reach); ex < std::min(g.nx(), i + reach); ++ex)
                        for (const auto& t : tris[g.element_index(ex, ey, ez)]) {
                            const Vec3 q = closest_point_on_triangle(p, t.v[0], t.v[1], t.v[2]);
                            best = std::min(best, distance(p, q));
                        }
            dist[n] = best;
        }
    }

    using Entry = std::pair<double, Index>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    const std::array<int, 3> lim{g.nx(), g.ny(), g.nz()};
    const std::array<double, 3> h{g.hx(), g.hy(), g.hz()};

    auto relax_neighbours = [&](Index n) {
        const auto ijk = g.node_ijk(n);
        for (int d = 0; d < 3; ++d)
            for (int s : {-1, 1}) {
                auto q = ijk;
                q[d] += s;
                if (q[d] < 0 || q[d] > lim[d]) continue;
                const Index m = g.node_index(q[0], q[1], q[2]);
                if (accepted[m]) continue;
                std::array<double, 3> a{inf, inf, inf};
                for (int dd = 0; dd < 3; ++dd)
                    for (int ss : {-1, 1}) {
                        auto r = q;
                        r[dd] += ss;
                        if (r[dd] < 0 || r[dd] > lim[dd]) continue;
                        const Index o = g.node_index(r[0], r[1], r[2]);
                        if (accepted[o]) a[dd] = std::min(a[dd], dist[o]);
                    }
                const double u = detail::eikonal_update(a, h);
                if (u < dist[m]) {
                    dist[m] = u;
                    heap.emplace(u, m);
                }
            }
    };

    for (Index n = 0; n < nn; ++n)
        if (accepted[n]) relax_neighbours(n);
    while (!heap.empty()) {
        const auto [u, n] = heap.top();
        heap.pop();
        if (accepted[n] || u > dist[n]) continue;
        accepted[n] = 1;
        relax_neighbours(n);
    }

    // First-order marching under-estimates distances off the grid axes; redo
    // the near band with exact triangle distances so |grad phi| stays close to
    // one there.
    const double band = 5.0 * g.h_max();
    for (Index n = 0; n < nn; ++n) {
        if (!(dist[n] <= band) || dist[n] == 0.0) continue;
        const Vec3 p = g.node_position(n);
        const auto ijk = g.node_ijk(n);
        const double r = 1.25 * dist[n] + 2.0 * g.h_max();
        std::array<int, 3> lo{}, hi{};
        for (int d = 0; d < 3; ++d) {
            const int w = int(std::ceil(r / h[d]));
            lo[d] = std::max(0, ijk[d] - w);
            hi[d] = std::min(lim[d], ijk[d] + w);
        }
        double best = std::numeric_limits<double>::infinity();
        for (int ez = lo[2]; ez < hi[2]; ++ez)
            for (int ey = lo[1]; ey < hi[1]; ++ey)
                for (int ex = lo[0]; ex < hi[0]; ++ex)
                    for (const auto& t : tris[g.element_index(ex, ey, ez)])
                        best = std::min(best, distance(p, closest_point_on_triangle(p, t.v[0], t.v[1], t.v[2])));
        if (best < inf) dist[n] = best;
    }

    LevelSetField out(g, 0.0);
    for (Index n = 0; n < nn; ++n) out.phi[n] = field.phi[n] >= 0.0 ? dist[n] : -dist[n];
    return out;
}

} // namespace battopt

#endif // BATTOPT_REINIT_HPP
