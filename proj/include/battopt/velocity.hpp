#ifndef BATTOPT_VELOCITY_HPP
#define BATTOPT_VELOCITY_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "battopt/errors.hpp"
#include "battopt/grid.hpp"
#include "battopt/isosurface.hpp"

namespace battopt {

/// Boundary points bucketed by owning element for radius and nearest queries.
class PointBins {
public:
    PointBins(const StructuredGrid& grid, const BoundaryPointSet& points)
        : grid_(grid), points_(points), start_(grid.element_count() + 1, 0) {
        for (const auto& p : points) ++start_[p.element + 1];
        for (Index e = 0; e < grid.element_count(); ++e) start_[e + 1] += start_[e];
        order_.resize(points.size());
        std::vector<Index> fill(start_.begin(), start_.end() - 1);
        for (Index i = 0; i < points.size(); ++i) order_[fill[points[i].element]++] = i;
    }

    /// Calls f(point index, distance) for every point within `radius` of x.
    template <class F>
    void for_each_within(const Vec3& x, double radius, F&& f) const {
        std::array<int, 3> lo{}, hi{};
        const std::array<int, 3> n{grid_.nx(), grid_.ny(), grid_.nz()};
        for (int d = 0; d < 3; ++d) {
            const double s = (x[d] - grid_.origin()[d]) / grid_.spacing()[d];
            lo[d] = std::clamp(int(std::floor(s - radius / grid_.spacing()[d])), 0, n[d] - 1);
            hi[d] = std::clamp(int(std::floor(s + radius / grid_.spacing()[d])), 0, n[d] - 1);
        }
        for (int k = lo[2]; k <= hi[2]; ++k)
            for (int j = lo[1]; j <= hi[1]; ++j)
                for (int i = lo[0]; i <= hi[0]; ++i) {
                    const Index e = grid_.element_index(i, j, k);
                    for (Index s = start_[e]; s < start_[e + 1]; ++s) {
                        const Index pi = order_[s];
                        const double d = distance(x, points_[pi].position);
                        if (d <= radius) f(pi, d);
                    }
                }
    }

    /// Nearest point to x; ties go to the lowest index. Requires a non-empty set.
    Index nearest(const Vec3& x) const {
        const std::array<int, 3> n{grid_.nx(), grid_.ny(), grid_.nz()};
        std::array<int, 3> home{};
        for (int d = 0; d < 3; ++d)
            home[d] = std::clamp(int(std::floor((x[d] - grid_.origin()[d]) / grid_.spacing()[d])), 0,
                                 n[d] - 1);
        const int max_shell = std::max({n[0], n[1], n[2]});
        double best = std::numeric_limits<double>::infinity();
        Index best_i = points_.size();
        for (int s = 0; s <= max_shell; ++s) {
            for (int k = home[2] - s; k <= home[2] + s; ++k)
                for (int j = home[1] - s; j <= home[1] + s; ++j)
                    for (int i = home[0] - s; i <= home[0] + s; ++i) {
                        if (std::max({std::abs(i - home[0]), std::abs(j - home[1]), std::abs(k - home[2])}) != s)
                            continue;
                        if (i < 0 || j < 0 || k < 0 || i >= n[0] || j >= n[1] || k >= n[2]) continue;
                        const Index e = grid_.element_index(i, j, k);
                        for (Index q = start_[e]; q < start_[e + 1]; ++q) {
                            const Index pi = order_[q];
                            const double d = distance(x, points_[pi].position);
                            if (d < best || (d == best && pi < best_i)) {
                                best = d;
                                best_i = pi;
                            }
                        }
                    }
            // Anything in shell s+1 is at least s * h_min away from x.
            if (best_i < points_.size() && best < s * grid_.h_min()) break;
        }
        return best_i;
    }

private:
    const StructuredGrid& grid_;
    const BoundaryPointSet& points_;
    std::vector<Index> start_;
    std::vector<Index> order_;
};

/// Inverse-distance-squared weighted average of the values of all points within
/// `radius`; an exact hit returns that point's value, and no point in range
/// falls back to the nearest point.
inline double idw_sample(const PointBins& bins, const std::vector<double>& values, const Vec3& x,
                         double radius) {
    double wsum = 0.0, vsum = 0.0, exact_sum = 0.0;
    int exact = 0;
    bool found = false;
    bins.for_each_within(x, radius, [&](Index i, double d) {
        found = true;
        if (d == 0.0) {
            ++exact;
            exact_sum += values[i];
            return;
        }
        const double w = 1.0 / (d * d);
        wsum += w;
        vsum += w * values[i];
    });
    if (exact) return exact_sum / exact;
    if (found) return vsum / wsum;
    return values[bins.nearest(x)];
}

/// Extends per-point normal velocities to every grid node.
inline std::vector<double> extend_velocity(const BoundaryPointSet& points,
                                           const std::vector<double>& velocity,
                                           const StructuredGrid& grid) {
    if (points.empty()) throw PreconditionError("extend_velocity: empty boundary point set");
    if (velocity.size() != points.size())
        throw PreconditionError("extend_velocity: one velocity per boundary point required");
    const PointBins bins(grid, points);
    const double radius = 2.0 * grid.h_max();
    std::vector<double> out(grid.node_count());
    for (Index n = 0; n < out.size(); ++n)
        out[n] = idw_sample(bins, velocity, grid.node_position(n), radius);
    return out;
}

} // namespace battopt

#endif // BATTOPT_VELOCITY_HPP
