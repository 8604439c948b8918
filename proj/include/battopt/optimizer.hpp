#ifndef BATTOPT_OPTIMIZER_HPP
#define BATTOPT_OPTIMIZER_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "battopt/analysis.hpp"
#include "battopt/errors.hpp"
#include "battopt/isosurface.hpp"
#include "battopt/levelset.hpp"
#include "battopt/reinit.hpp"
#include "battopt/sensitivity.hpp"
#include "battopt/velocity.hpp"

namespace battopt {

struct MoveLimitStep {
    int iteration;   ///< first iteration using this fraction
    double fraction; ///< of h_min
};

struct OptimizationConfig {
    double k = 1.0;
    double xi = 0.3;
    int max_iterations = 200;
    std::vector<MoveLimitStep> move_limits{{0, 0.5}, {100, 0.25}};
    int normalization_period = 5;
    double approach_fraction = 0.25;
    int convergence_window = 10;
    double convergence_tolerance = 1e-3; ///< relative change of J over the window
    double volume_tolerance = 0.005;     ///< |vol - xi| for convergence
    double gamma_min = 1e-4;
    int subsamples = 4;
    double cfl = 0.5;
    bool coupled_sensitivity = true;
    bool solid_load_faces = true; ///< keep a one-element skin under tractions
    double step_scale = 0.15; ///< eta = step_scale * d_move / median |s_J|
    bool sensitivity_history = true; ///< average nodal sensitivities with the previous iteration
    LinearSolveOptions solver{SolverKind::ichol_cg, 1e-8, 0};

    void validate() const {
        if (!(k >= 0.0 && k <= 1.0)) throw ConfigError("optimizer.k must lie in [0, 1]");
        if (!(xi > 0.0 && xi <= 1.0)) throw ConfigError("optimizer.xi must lie in (0, 1]");
        if (max_iterations < 0) throw ConfigError("optimizer.max_iterations must be >= 0");
        if (move_limits.empty()) throw ConfigError("optimizer.move_limits must not be empty");
        for (std::size_t i = 0; i < move_limits.size(); ++i) {
            if (!(move_limits[i].fraction > 0.0 && move_limits[i].fraction <= 1.0))
                throw ConfigError("optimizer.move_limits fractions must lie in (0, 1]");
            if (i > 0 && move_limits[i].iteration <= move_limits[i - 1].iteration)
                throw ConfigError("optimizer.move_limits iterations must be strictly increasing");
        }
        if (normalization_period < 1) throw ConfigError("optimizer.normalization_period must be >= 1");
        if (!(approach_fraction > 0.0 && approach_fraction <= 1.0))
            throw ConfigError("optimizer.approach_fraction must lie in (0, 1]");
        if (convergence_window < 1) throw ConfigError("optimizer.convergence_window must be >= 1");
        if (!(convergence_tolerance >= 0.0)) throw ConfigError("optimizer.convergence_tolerance must be >= 0");
        if (!(volume_tolerance >= 0.0)) throw ConfigError("optimizer.volume_tolerance must be >= 0");
        if (!(gamma_min > 0.0 && gamma_min < 1.0)) throw ConfigError("optimizer.gamma_min must lie in (0, 1)");
        if (subsamples < 1) throw ConfigError("optimizer.subsamples must be >= 1");
        if (!(cfl > 0.0 && cfl <= 1.0)) throw ConfigError("optimizer.cfl must lie in (0, 1]");
        if (!(step_scale > 0.0)) throw ConfigError("optimizer.step_scale must be > 0");
    }

    /// Move limit as a fraction of h_min at iteration `iter`. Before the first
    /// scheduled iteration the first fraction applies.
    double move_fraction(int iter) const {
        double f = move_limits.front().fraction;
        for (const auto& s : move_limits)
            if (iter >= s.iteration) f = s.fraction;
        return f;
    }
};

struct ConvergenceRecord {
    int iteration = 0;
    double structural_compliance = 0.0;
    double thermal_compliance = 0.0;
    double objective = 0.0;
    double volume_fraction = 0.0;
    double max_displacement = 0.0;
    double max_temperature = 0.0;
    double lambda = 0.0;

    bool operator==(const ConvergenceRecord&) const = default;
};

// ---------------------------------------------------------------------------
// Objective and normalization

struct Normalizers {
    double structural = 0.0;
    double thermal = 0.0;
};

struct ObjectiveValue {
    double value;
    double structural_ratio; ///< C_S / C_S0
    double thermal_ratio;    ///< C_T / C_T0
};

inline ObjectiveValue evaluate_objective(double cs, double ct, const Normalizers& n, double k) {
    if (!(n.structural > 0.0) || !(n.thermal > 0.0))
        throw PreconditionError("evaluate_objective: normalizers must be > 0");
    const double rs = cs / n.structural, rt = ct / n.thermal;
    return {k * rs + (1.0 - k) * rt, rs, rt};
}

/// Resets the normalizers to the current compliances every `period`
/// iterations. A nonpositive compliance keeps the previous value (or 1 when
/// there is none) and leaves a warning.
inline Normalizers update_normalizers(int iter, double cs, double ct, const Normalizers& current, int period = 5,
                                      Diagnostics* diag = nullptr) {
    if (iter < 0) throw PreconditionError("update_normalizers: iteration must be >= 0");
    if (period < 1) throw PreconditionError("update_normalizers: period must be >= 1");
    if (iter % period != 0) return current;
    auto pick = [&](double value, double previous, const char* name) {
        if (value > 0.0 && std::isfinite(value)) return value;
        const double fallback = previous > 0.0 ? previous : 1.0;
        warn(diag, std::string("update_normalizers: nonpositive ") + name + " at iteration " + std::to_string(iter) +
                       ", keeping " + std::to_string(fallback));
        return fallback;
    };
    return {pick(cs, current.structural, "C_S"), pick(ct, current.thermal, "C_T")};
}

// ---------------------------------------------------------------------------
// Boundary movement subproblem

struct SubproblemResult {
    std::vector<double> movement; ///< z_i, positive grows the solid
    double lambda = 0.0;
    double volume_change = 0.0;   ///< sum area_i z_i
    bool at_bound = false;        ///< target unreachable, lambda pinned at the bound
};

inline constexpr double lambda_bound = 1e6;

/// Volume change the step should aim for: when over the target volume, a
/// fraction of the excess is removed; otherwise the remaining slack (>= 0) is
/// the most the step may add.
inline double volume_change_target(double volume_fraction, double xi, double design_volume,
                                   double approach_fraction) {
    const double gap = (volume_fraction - xi) * design_volume;
    if (gap > 0.0) return -std::min(approach_fraction * gap, gap);
    return -gap;
}

/// z_i = clamp(-eta (s_J,i + lambda s_V,i), -d, d) with the smallest lambda >= 0
/// such that sum area_i z_i <= target. The volume change is piecewise linear
/// and nonincreasing in lambda, so lambda is found exactly from the breakpoints.
inline SubproblemResult solve_subproblem(const std::vector<double>& s_j, const std::vector<double>& s_v,
                                         const std::vector<double>& areas, double target, double d_move,
                                         double eta) {
    const std::size_t n = s_j.size();
    if (s_v.size() != n || areas.size() != n)
        throw PreconditionError("solve_subproblem: s_J, s_V and areas must have equal length");
    if (!(d_move > 0.0)) throw PreconditionError("solve_subproblem: d_move must be > 0");
    if (!(eta > 0.0)) throw PreconditionError("solve_subproblem: eta must be > 0");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(areas[i] > 0.0)) throw PreconditionError("solve_subproblem: areas must be > 0");
        if (!(s_v[i] >= 0.0)) throw PreconditionError("solve_subproblem: s_V must be >= 0");
    }

    auto move = [&](std::size_t i, double lambda) {
        const double g = s_j[i] + lambda * s_v[i];
        if (g == 0.0) return 0.0;
        return std::clamp(-eta * g, -d_move, d_move);
    };
    auto change = [&](double lambda) {
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) v += areas[i] * move(i, lambda);
        return v;
    };
    auto finish = [&](double lambda, bool bound) {
        SubproblemResult r;
        r.lambda = lambda;
        r.at_bound = bound;
        r.movement.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            r.movement[i] = move(i, lambda);
            r.volume_change += areas[i] * r.movement[i];
        }
        return r;
    };

    if (n == 0 || change(0.0) <= target) return finish(0.0, false);

    std::vector<double> breaks;
    for (std::size_t i = 0; i < n; ++i) {
        if (s_v[i] == 0.0) continue;
        for (double edge : {-d_move / eta, d_move / eta}) {
            const double l = (edge - s_j[i]) / s_v[i];
            if (l > 0.0 && l < lambda_bound) breaks.push_back(l);
        }
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    breaks.push_back(lambda_bound);

    // First breakpoint where the target is met.
    std::size_t lo = 0, hi = breaks.size();
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (change(breaks[mid]) <= target) hi = mid;
        else lo = mid + 1;
    }
    if (lo == breaks.size()) return finish(lambda_bound, true);

    // Solve the linear piece on [left, right] directly.
    const double left = lo == 0 ? 0.0 : breaks[lo - 1], right = breaks[lo];
    const double probe = 0.5 * (left + right);
    double constant = 0.0, slope = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double raw = -eta * (s_j[i] + probe * s_v[i]);
        if (raw > -d_move && raw < d_move) {
            constant += areas[i] * (-eta * s_j[i]);
            slope += areas[i] * eta * s_v[i];
        } else {
            constant += areas[i] * (raw > 0.0 ? d_move : -d_move);
        }
    }
    double lambda = slope > 0.0 ? (constant - target) / slope : right;
    lambda = std::clamp(lambda, left, right);
    return finish(lambda, false);
}

/// Median of |values|, falling back to the largest magnitude, then to 1.
inline double sensitivity_scale(const std::vector<double>& values) {
    if (values.empty()) return 1.0;
    std::vector<double> a(values.size());
    std::transform(values.begin(), values.end(), a.begin(), [](double v) { return std::abs(v); });
    auto mid = a.begin() + std::ptrdiff_t(a.size() / 2);
    std::nth_element(a.begin(), mid, a.end());
    if (*mid > 0.0) return *mid;
    const double mx = *std::max_element(a.begin(), a.end());
    return mx > 0.0 ? mx : 1.0;
}

// ---------------------------------------------------------------------------
// Outer loop

struct OptimizationResult {
    LevelSetField design;
    std::vector<ConvergenceRecord> history;
    bool converged = false;
    Diagnostics diagnostics;
};

/// Called after each record is appended, with the design that produced it.
using IterationObserver =
    std::function<void(const ConvergenceRecord&, const LevelSetField&, const DesignResponse&)>;

namespace detail {

inline bool window_converged(const std::vector<ConvergenceRecord>& h, const OptimizationConfig& c,
                             const Normalizers& n) {
    const std::size_t w = std::size_t(c.convergence_window);
    if (h.size() <= w) return false;
    const auto& now = h.back();
    const auto& then = h[h.size() - 1 - w];
    if (std::abs(now.volume_fraction - c.xi) > c.volume_tolerance) return false;
    const double j_now = evaluate_objective(now.structural_compliance, now.thermal_compliance, n, c.k).value;
    const double j_then = evaluate_objective(then.structural_compliance, then.thermal_compliance, n, c.k).value;
    return std::abs(j_now - j_then) <= c.convergence_tolerance * std::max(std::abs(j_now), 1e-300);
}

/// Lower bounds on phi: inside cells, and (optionally) on traction faces so
/// the load never sits on void.
struct NodeFloor {
    std::vector<double> floor;

    NodeFloor(const StructuredGrid& g, const RegionMap& regions, const BoundaryTags& tags, bool load_faces)
        : floor(g.node_count(), -std::numeric_limits<double>::infinity()) {
        if (regions.cell_element_count() > 0) {
            const auto mask = regions.cell_interior_node_mask(g);
            for (Index n = 0; n < mask.size(); ++n)
                if (mask[n]) floor[n] = g.h_max();
        }
        if (load_faces)
            for (const auto& t : tags.tractions)
                for (Index n : face_nodes(g, t.face))
                    floor[n] = std::max(floor[n], g.spacing()[face_axis(t.face)]);
    }

    void apply(LevelSetField& phi) const {
        for (Index n = 0; n < floor.size(); ++n) phi.phi[n] = std::max(phi.phi[n], floor[n]);
    }
};

inline double design_fraction(const LevelSetField& phi, const RegionMap& regions, const OptimizationConfig& c) {
    return design_volume_fraction(compute_volume_fractions(phi, regions, c.subsamples, c.gamma_min), regions);
}

/// Hamilton-Jacobi update with nodal speed V = -z over unit pseudo-time,
/// split into substeps that respect the CFL bound.
inline LevelSetField move_boundary(const LevelSetField& phi, const NodeFloor& fixed, const std::vector<double>& z,
                                   double d_move, double cfl) {
    const double h = phi.grid.h_min();
    const int substeps = std::max(1, int(std::ceil(d_move / (cfl * h) - 1e-12)));
    std::vector<double> speed(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) speed[i] = -z[i];
    LevelSetField out = phi;
    for (int s = 0; s < substeps; ++s) out = advect(out, speed, 1.0 / substeps, cfl);
    fixed.apply(out);
    return out;
}

struct NodalStep {
    LevelSetField field;
    double lambda;
};

/// Nodal form of the clamped stationarity rule, z_n = clamp(-eta (s_n + lambda),
/// -d, d), with the smallest lambda >= 0 whose advected design changes the
/// volume fraction by at most `target_change`. The point-wise linear volume
/// model misjudges the change once growth and erosion interleave, so the
/// multiplier is bisected on the volume the advection actually produces.
inline NodalStep volume_matched_step(const LevelSetField& phi, const RegionMap& regions, const NodeFloor& fixed,
                                     const OptimizationConfig& c,
                                     const std::vector<double>& s, double d_move, double volume,
                                     double target_change) {
    auto field_at = [&](double lambda) {
        std::vector<double> z(s.size());
        for (std::size_t n = 0; n < s.size(); ++n) {
            const double g = s[n] + lambda;
            z[n] = g == 0.0 ? 0.0 : std::clamp(-c.step_scale * d_move * g, -d_move, d_move);
        }
        return move_boundary(phi, fixed, z, d_move, c.cfl);
    };
    auto meets = [&](const LevelSetField& f) { return design_fraction(f, regions, c) - volume <= target_change; };

    LevelSetField best = field_at(0.0);
    if (meets(best)) return {std::move(best), 0.0};
    // Beyond this every node erodes at the full move limit.
    const double hi_bound = 1.0 / c.step_scale - *std::min_element(s.begin(), s.end());
    if (!(hi_bound > 0.0)) return {std::move(best), 0.0};
    LevelSetField hi_field = field_at(hi_bound);
    if (!meets(hi_field)) return {std::move(hi_field), hi_bound};
    double lo = 0.0, hi = hi_bound;
    for (int i = 0; i < 40 && hi - lo > 1e-6 * hi_bound; ++i) {
        const double mid = 0.5 * (lo + hi);
        LevelSetField f = field_at(mid);
        if (meets(f)) {
            hi = mid;
            hi_field = std::move(f);
        } else {
            lo = mid;
        }
    }
    return {std::move(hi_field), hi};
}

/// Signed-distance rebuild that leaves the design untouched: nodes of cut
/// elements keep their values up to one global positive factor (which fixes
/// the trilinear zero set and so every gamma), all other nodes take the
/// rebuilt distance. A full rebuild rounds thin members a little each time,
/// and over many iterations that drift outpaces small descent steps.
inline LevelSetField reinitialize_keeping_interface(const LevelSetField& phi, Diagnostics* diag) {
    LevelSetField out = reinitialize(phi, diag);
    const StructuredGrid& g = phi.grid;
    std::vector<char> band(g.node_count(), 0);
    for (Index e = 0; e < g.element_count(); ++e) {
        // A node sitting exactly on zero counts on both sides.
        bool pos = false, neg = false;
        const auto nodes = g.element_nodes(e);
        for (Index n : nodes) {
            pos = pos || phi.phi[n] >= 0.0;
            neg = neg || phi.phi[n] <= 0.0;
        }
        if (pos && neg)
            for (Index n : nodes) band[n] = 1;
    }
    std::vector<double> ratio;
    const double small = 1e-3 * g.h_min();
    for (Index n = 0; n < band.size(); ++n)
        if (band[n] && std::abs(phi.phi[n]) > small) ratio.push_back(out.phi[n] / phi.phi[n]);
    if (ratio.empty()) return out;
    auto mid = ratio.begin() + std::ptrdiff_t(ratio.size() / 2);
    std::nth_element(ratio.begin(), mid, ratio.end());
    const double scale = *mid > 0.0 ? *mid : 1.0;
    for (Index n = 0; n < band.size(); ++n)
        if (band[n]) out.phi[n] = scale * phi.phi[n];
    return out;
}

/// Reinitialization moves the zero set slightly (faceted surfaces sit inside
/// curved ones). A uniform shift of the new distance field restores the
/// volume fraction it had before.
inline void restore_volume(LevelSetField& phi, const RegionMap& regions, const NodeFloor& fixed,
                           const OptimizationConfig& c, double volume) {
    const double h = phi.grid.h_min();
    auto shifted = [&](double shift) {
        LevelSetField f = phi;
        for (double& v : f.phi) v += shift;
        fixed.apply(f);
        return f;
    };
    double lo = -0.5 * h, hi = 0.5 * h;
    if (design_fraction(shifted(lo), regions, c) > volume || design_fraction(shifted(hi), regions, c) < volume) return;
    for (int i = 0; i < 30; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (design_fraction(shifted(mid), regions, c) < volume) lo = mid;
        else hi = mid;
    }
    const double shift = std::abs(lo) < std::abs(hi) ? lo : hi;
    const double base = design_fraction(phi, regions, c);
    if (std::abs(design_fraction(shifted(shift), regions, c) - volume) < std::abs(base - volume)) phi = shifted(shift);
}

} // namespace detail

/// Level-set optimization of the pack. Each iteration analyzes the current
/// design, records it, and (unless it is the last) moves the boundary. The
/// returned design is the one described by the last record.
inline OptimizationResult run_optimization(const OptimizationConfig& config, const PackProblem& problem,
                                           const LevelSetField& initial, const IterationObserver& observer = {}) {
    config.validate();
    const StructuredGrid& g = problem.grid;
    if (!(initial.grid == g)) throw PreconditionError("run_optimization: initial design is on another grid");

    OptimizationResult result{initial, {}, false, {}};
    LevelSetField& phi = result.design;
    const detail::NodeFloor fixed(g, problem.regions, problem.tags, config.solid_load_faces);
    // Seeds put phi = 0 on the box faces, which carry no isosurface. Rebuilding
    // the distance first makes the hole surfaces the only moving boundary.
    if (config.max_iterations > 0) {
        fixed.apply(phi);
        phi = reinitialize(phi, &result.diagnostics);
        fixed.apply(phi);
    }

    const double design_volume =
        double(g.element_count() - problem.regions.cell_element_count()) * g.element_volume();
    Normalizers norm;
    std::vector<double> previous_sensitivity;

    for (int it = 0; it < config.max_iterations; ++it) {
        const DesignResponse r = analyze_design(problem, phi, config.gamma_min, config.subsamples, config.solver);
        const double cs = r.displacement.compliance, ct = r.temperature.compliance;
        norm = update_normalizers(it, cs, ct, norm, config.normalization_period, &result.diagnostics);

        ConvergenceRecord rec;
        rec.iteration = it;
        rec.structural_compliance = cs;
        rec.thermal_compliance = ct;
        rec.objective = evaluate_objective(cs, ct, norm, config.k).value;
        rec.volume_fraction = r.volume_fraction;
        rec.max_displacement = r.displacement.max_magnitude();
        rec.max_temperature = r.temperature.max();

        const BoundaryPointSet points = extract_boundary(phi, problem.regions);
        const double d_move = config.move_fraction(it) * g.h_min();
        std::vector<double> nodal_sensitivity;
        double target = 0.0;
        if (!points.empty()) {
            std::vector<double> d_s(g.element_count(), 0.0), d_t(g.element_count(), 0.0);
            if (config.k > 0.0)
                d_s = structural_sensitivity(g, r.props, r.thermal, r.temperature, r.elastic, r.displacement,
                                             config.solver, config.coupled_sensitivity)
                          .density;
            if (config.k < 1.0) d_t = thermal_sensitivity(g, r.props, r.temperature, r.thermal.reference_temperature);
            SensitivityRecord sens = objective_sensitivity(g, problem.regions, d_s, d_t, config.k, norm.structural,
                                                           norm.thermal, points);
            const double scale = sensitivity_scale(sens.objective);
            for (double& v : sens.objective) v /= scale;
            nodal_sensitivity = extend_velocity(points, sens.objective, g);
            // Damps the two-cycle a fixed move limit otherwise settles into.
            if (config.sensitivity_history && previous_sensitivity.size() == nodal_sensitivity.size()) {
                const auto raw = nodal_sensitivity;
                for (Index n = 0; n < raw.size(); ++n)
                    nodal_sensitivity[n] = 0.5 * (raw[n] + previous_sensitivity[n]);
                previous_sensitivity = raw;
            } else {
                previous_sensitivity = nodal_sensitivity;
            }
            target = volume_change_target(r.volume_fraction, config.xi, design_volume, config.approach_fraction);
        } else {
            warn(&result.diagnostics, "iteration " + std::to_string(it) + ": no design boundary, step skipped");
        }

        const bool last = it + 1 == config.max_iterations;
        LevelSetField next = phi;
        if (!points.empty()) {
            const auto step = detail::volume_matched_step(phi, problem.regions, fixed, config, nodal_sensitivity, d_move,
                                                          r.volume_fraction, target / design_volume);
            rec.lambda = step.lambda;
            next = step.field;
        }

        result.history.push_back(rec);
        if (observer) observer(rec, phi, r);

        if (detail::window_converged(result.history, config, norm)) {
            result.converged = true;
            break;
        }
        if (last || points.empty()) continue;

        const double moved_volume = detail::design_fraction(next, problem.regions, config);
        phi = detail::reinitialize_keeping_interface(next, &result.diagnostics);
        fixed.apply(phi);
        detail::restore_volume(phi, problem.regions, fixed, config, moved_volume);
    }
    return result;
}

} // namespace battopt

#endif // BATTOPT_OPTIMIZER_HPP
