#ifndef BATTOPT_REDUCED_SYSTEM_HPP
#define BATTOPT_REDUCED_SYSTEM_HPP

#include <array>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "battopt/errors.hpp"
#include "battopt/grid.hpp"
#include "battopt/linear_solver.hpp"

namespace battopt {

/// A linear system with Dirichlet dofs eliminated symmetrically: only the
/// free-free block is stored, prescribed values are moved to the right-hand
/// side. Solvers are created on demand and cached so adjoint solves reuse a
/// factorization.
struct ReducedSystem {
    static constexpr Index npos = std::numeric_limits<Index>::max();

    Index dof_count = 0;
    std::vector<Index> free_dofs;  ///< reduced -> full
    std::vector<Index> reduced_of; ///< full -> reduced, npos when prescribed
    std::vector<std::pair<Index, double>> prescribed;
    SparseMatrix matrix;           ///< free-free block
    Vector lifting;                ///< -K_fd * u_d, free entries

    ReducedSystem() = default;
    ReducedSystem(Index n, const std::vector<std::pair<Index, double>>& fixed)
        : dof_count(n), reduced_of(n, 0), prescribed(fixed) {
        for (const auto& [d, v] : fixed) {
            if (d >= n) throw ConfigError("boundary condition refers to a dof outside the grid");
            reduced_of[d] = npos;
        }
        for (Index d = 0; d < n; ++d)
            if (reduced_of[d] != npos) {
                reduced_of[d] = free_dofs.size();
                free_dofs.push_back(d);
            }
        lifting = Vector::Zero(Index(free_dofs.size()));
    }

    Index free_count() const noexcept { return free_dofs.size(); }

    Vector restrict_to_free(const Vector& full) const {
        Vector r(free_dofs.size());
        for (Index i = 0; i < free_dofs.size(); ++i) r[i] = full[free_dofs[i]];
        return r;
    }

    /// Full vector from free values plus the prescribed data (or zeros).
    Vector expand(const Vector& free_values, bool homogeneous = false) const {
        Vector full = Vector::Zero(dof_count);
        for (Index i = 0; i < free_dofs.size(); ++i) full[free_dofs[i]] = free_values[i];
        if (!homogeneous)
            for (const auto& [d, v] : prescribed) full[d] = v;
        return full;
    }

    const SpdSolver& solver(const LinearSolveOptions& options) const {
        if (!solver_ || solver_->options().kind != options.kind ||
            solver_->options().tolerance != options.tolerance ||
            solver_->options().max_iterations != options.max_iterations)
            solver_ = std::make_shared<SpdSolver>(matrix, options);
        return *solver_;
    }

    /// Solves K_ff x = restrict(full_rhs) + lifting and returns the full vector.
    Vector solve(const Vector& full_rhs, const LinearSolveOptions& options, SolveStats* stats = nullptr,
                 const Vector* full_guess = nullptr) const {
        if (free_dofs.empty()) {
            if (stats) *stats = {};
            return expand(Vector());
        }
        const Vector b = restrict_to_free(full_rhs) + lifting;
        const auto& s = solver(options);
        Vector guess;
        if (full_guess) guess = restrict_to_free(*full_guess);
        Vector x = s.solve(b, full_guess ? &guess : nullptr);
        if (stats) *stats = s.last_stats();
        return expand(x);
    }

    /// Same operator, zero Dirichlet data: the adjoint problems.
    Vector solve_homogeneous(const Vector& full_rhs, const LinearSolveOptions& options,
                             SolveStats* stats = nullptr) const {
        if (free_dofs.empty()) return Vector::Zero(dof_count);
        const auto& s = solver(options);
        Vector x = s.solve(restrict_to_free(full_rhs));
        if (stats) *stats = s.last_stats();
        return expand(x, true);
    }

private:
    mutable std::shared_ptr<SpdSolver> solver_;
};

namespace detail {

/// Scatters element matrices (N x N, local dof a*dpn + c) into the reduced
/// system and accumulates the lifting of nonzero prescribed values.
template <int N, class ElementMatrix>
void assemble_matrix(ReducedSystem& sys, const StructuredGrid& grid, int dpn, ElementMatrix&& element_matrix) {
    static_assert(N == 8 || N == 24);
    std::vector<Eigen::Triplet<double, int>> trip;
    trip.reserve(grid.element_count() * N * N);
    std::array<Index, N> dofs{};
    for (Index e = 0; e < grid.element_count(); ++e) {
        const auto nodes = grid.element_nodes(e);
        for (int a = 0; a < 8; ++a)
            for (int c = 0; c < dpn; ++c) dofs[a * dpn + c] = nodes[a] * dpn + c;
        const Eigen::Matrix<double, N, N> ke = element_matrix(e);
        for (int a = 0; a < N; ++a) {
            const Index ra = sys.reduced_of[dofs[a]];
            if (ra == ReducedSystem::npos) continue;
            for (int b = 0; b < N; ++b) {
                const Index rb = sys.reduced_of[dofs[b]];
                if (rb != ReducedSystem::npos) {
                    trip.emplace_back(int(ra), int(rb), ke(a, b));
                }
            }
        }
    }
    sys.matrix.resize(Eigen::Index(sys.free_count()), Eigen::Index(sys.free_count()));
    sys.matrix.setFromTriplets(trip.begin(), trip.end());

    // Lifting of prescribed values: -K_fd u_d, element by element.
    if (sys.prescribed.empty()) return;
    Vector known = Vector::Zero(sys.dof_count);
    std::vector<char> is_known(sys.dof_count, 0);
    bool nonzero = false;
    for (const auto& [d, v] : sys.prescribed) {
        known[d] = v;
        is_known[d] = 1;
        nonzero = nonzero || v != 0.0;
    }
    if (!nonzero) return;
    for (Index e = 0; e < grid.element_count(); ++e) {
        const auto nodes = grid.element_nodes(e);
        for (int a = 0; a < 8; ++a)
            for (int c = 0; c < dpn; ++c) dofs[a * dpn + c] = nodes[a] * dpn + c;
        bool touches = false;
        for (Index d : dofs) touches = touches || (is_known[d] && known[d] != 0.0);
        if (!touches) continue;
        const Eigen::Matrix<double, N, N> ke = element_matrix(e);
        for (int a = 0; a < N; ++a) {
            const Index ra = sys.reduced_of[dofs[a]];
            if (ra == ReducedSystem::npos) continue;
            for (int b = 0; b < N; ++b)
                if (is_known[dofs[b]]) sys.lifting[Eigen::Index(ra)] -= ke(a, b) * known[dofs[b]];
        }
    }
}

} // namespace detail

} // namespace battopt

#endif // BATTOPT_REDUCED_SYSTEM_HPP
