#ifndef BATTOPT_LINEAR_SOLVER_HPP
#define BATTOPT_LINEAR_SOLVER_HPP

#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <utility>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "battopt/errors.hpp"

namespace battopt {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

/// conjugate_gradient uses a Jacobi preconditioner, ichol_cg an incomplete
/// Cholesky factor (natural ordering).
enum class SolverKind { conjugate_gradient, cholesky, ichol_cg };

inline SolverKind parse_solver_kind(const std::string& s) {
    if (s == "cg") return SolverKind::conjugate_gradient;
    if (s == "cholesky") return SolverKind::cholesky;
    if (s == "cg-ichol") return SolverKind::ichol_cg;
    throw ConfigError("unknown solver method '" + s + "' (expected cg, cg-ichol or cholesky)");
}

inline std::string solver_kind_name(SolverKind k) {
    switch (k) {
    case SolverKind::conjugate_gradient: return "cg";
    case SolverKind::cholesky: return "cholesky";
    case SolverKind::ichol_cg: return "cg-ichol";
    }
    return "cg";
}

struct LinearSolveOptions {
    SolverKind kind = SolverKind::conjugate_gradient;
    double tolerance = 1e-8;   ///< relative residual |b - Ax| / |b|
    long max_iterations = 0;   ///< 0: 100 * sqrt(n)
};

struct SolveStats {
    long iterations = 0;
    double residual = 0.0;
};

/// Symmetric positive definite solver over a fixed matrix. The CG path uses a
/// Jacobi preconditioner; the Cholesky path factors once and back-substitutes
/// for every right-hand side, which is what adjoint solves want.
class SpdSolver {
public:
    SpdSolver(SparseMatrix a, LinearSolveOptions options) : a_(std::move(a)), options_(options) {
        if (a_.rows() != a_.cols()) throw PreconditionError("SpdSolver: matrix not square");
        const long n = a_.rows();
        const long max_it = options_.max_iterations > 0
                                ? options_.max_iterations
                                : std::max(100L, long(std::ceil(100.0 * std::sqrt(double(n)))));
        if (options_.kind == SolverKind::conjugate_gradient) {
            cg_ = std::make_unique<Cg>();
            cg_->setTolerance(options_.tolerance);
            cg_->setMaxIterations(max_it);
            cg_->compute(a_);
        } else if (options_.kind == SolverKind::ichol_cg) {
            icg_ = std::make_unique<IcCg>();
            icg_->setTolerance(options_.tolerance);
            icg_->setMaxIterations(max_it);
            icg_->compute(a_);
            if (icg_->preconditioner().info() != Eigen::Success)
                throw SolverError("incomplete cholesky factorization failed");
        } else {
            llt_ = std::make_unique<Llt>();
            llt_->compute(a_);
            if (llt_->info() != Eigen::Success)
                throw SolverError("cholesky factorization failed: matrix not positive definite");
        }
    }

    SpdSolver(const SpdSolver&) = delete;
    SpdSolver& operator=(const SpdSolver&) = delete;

    Vector solve(const Vector& b, const Vector* guess = nullptr) const {
        if (b.size() != a_.rows()) throw PreconditionError("SpdSolver: rhs size mismatch");
        const double bnorm = b.norm();
        if (bnorm == 0.0) {
            stats_ = {};
            return Vector::Zero(b.size());
        }
        Vector x;
        if (cg_) {
            x = iterate(*cg_, b, guess, bnorm);
        } else if (icg_) {
            x = iterate(*icg_, b, guess, bnorm);
        } else {
            x = llt_->solve(b);
            stats_.iterations = 1;
            stats_.residual = (b - a_ * x).norm() / bnorm;
            if (x.allFinite() && stats_.residual > options_.tolerance) {
                x += llt_->solve(Vector(b - a_ * x));
                stats_.iterations = 2;
                stats_.residual = (b - a_ * x).norm() / bnorm;
            }
            if (!x.allFinite() || stats_.residual > options_.tolerance)
                throw SolverError("cholesky solve residual " + format_residual(stats_.residual) +
                                      " above tolerance",
                                  stats_.residual);
        }
        return x;
    }

    const SolveStats& last_stats() const noexcept { return stats_; }
    const LinearSolveOptions& options() const noexcept { return options_; }
    const SparseMatrix& matrix() const noexcept { return a_; }

private:
    template <class Solver>
    Vector iterate(Solver& cg, const Vector& b, const Vector* guess, double bnorm) const {
        Vector x = guess && guess->size() == b.size() ? Vector(cg.solveWithGuess(b, *guess)) : Vector(cg.solve(b));
        stats_.iterations = cg.iterations();
        stats_.residual = (b - a_ * x).norm() / bnorm;
        // The recursive residual can drift from the true one near round-off; restart from x.
        for (int restart = 0; restart < 3 && cg.info() == Eigen::Success && x.allFinite() &&
                              stats_.residual > options_.tolerance;
             ++restart) {
            const Vector x0 = x;
            x = cg.solveWithGuess(b, x0);
            stats_.iterations += cg.iterations();
            stats_.residual = (b - a_ * x).norm() / bnorm;
        }
        if (!x.allFinite() || cg.info() != Eigen::Success || stats_.residual > options_.tolerance)
            throw SolverError("conjugate gradient did not converge after " + std::to_string(stats_.iterations) +
                                  " iterations, relative residual " + format_residual(stats_.residual),
                              stats_.residual);
        return x;
    }

    static std::string format_residual(double r) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3e", r);
        return buf;
    }

    using Cg = Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                                        Eigen::DiagonalPreconditioner<double>>;
    using IcCg = Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                                          Eigen::IncompleteCholesky<double, Eigen::Lower, Eigen::NaturalOrdering<int>>>;
    using Llt = Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;

    const SparseMatrix a_; // the factorizations reference this, so the solver is pinned
    LinearSolveOptions options_;
    std::unique_ptr<Cg> cg_;
    std::unique_ptr<IcCg> icg_;
    std::unique_ptr<Llt> llt_;
    mutable SolveStats stats_;
};

} // namespace battopt

#endif // BATTOPT_LINEAR_SOLVER_HPP
