#ifndef BATTOPT_TRANSIENT_HPP
#define BATTOPT_TRANSIENT_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "battopt/analysis.hpp"
#include "battopt/csv.hpp"
#include "battopt/errors.hpp"
#include "battopt/heatgen.hpp"
#include "battopt/hex8.hpp"
#include "battopt/reduced_system.hpp"

namespace battopt {

struct TransientConfig {
    double dt = 0.0;         ///< s; 0 picks mission duration / 500
    double total_time = -1.0; ///< s; negative runs to the end of the heat series
    double initial_temperature = std::nan(""); ///< K; NaN starts at the sink temperature
    std::vector<double> snapshot_times;        ///< s after the mission start
    LinearSolveOptions solver{SolverKind::conjugate_gradient, 1e-10, 0};

    void validate() const {
        if (!(dt >= 0.0) || !std::isfinite(dt)) throw ConfigError("transient.dt must be >= 0");
        if (!std::isfinite(total_time)) throw ConfigError("transient.total_time must be finite");
        for (double t : snapshot_times)
            if (!(t >= 0.0)) throw ConfigError("transient.snapshots must be >= 0");
    }
};

/// Row-sum mass: each element hands (rho c_p)_e V_e / 8 to its nodes.
inline Vector lumped_mass(const StructuredGrid& grid, const std::vector<double>& heat_capacity) {
    if (heat_capacity.size() != grid.element_count())
        throw PreconditionError("lumped_mass: one heat capacity per element required");
    Vector m = Vector::Zero(Eigen::Index(grid.node_count()));
    const double share = grid.element_volume() / 8.0;
    for (Index e = 0; e < grid.element_count(); ++e) {
        if (!(heat_capacity[e] > 0.0)) throw PreconditionError("lumped_mass: heat capacity must be > 0");
        for (Index n : grid.element_nodes(e)) m[Eigen::Index(n)] += share * heat_capacity[e];
    }
    return m;
}

/// Conductivity matrix with the given sinks eliminated. Unlike the steady
/// assembly an insulated domain (no sinks) is allowed: the mass term keeps
/// the time-step operator definite.
inline ReducedSystem assemble_conduction(const StructuredGrid& grid, const std::vector<double>& conductivity,
                                         const std::vector<std::pair<Index, double>>& sinks) {
    if (conductivity.size() != grid.element_count())
        throw PreconditionError("assemble_conduction: one conductivity per element required");
    ReducedSystem sys(grid.node_count(), sinks);
    const hex8::Mat8 k0 = hex8::conductivity_matrix(grid.hx(), grid.hy(), grid.hz());
    detail::assemble_matrix<8>(sys, grid, 1, [&](Index e) -> hex8::Mat8 { return conductivity[e] * k0; });
    return sys;
}

/// Backward Euler for M dT/dt + K T = F with fixed dt:
/// (M/dt + K) T_{n+1} = (M/dt) T_n + F_{n+1}.
class ImplicitEuler {
public:
    ImplicitEuler(ReducedSystem conduction, Vector mass, double dt, LinearSolveOptions options = {})
        : sys_(std::move(conduction)), mass_(std::move(mass)), dt_(dt), options_(options) {
        if (!(dt_ > 0.0)) throw PreconditionError("ImplicitEuler: dt must be > 0");
        if (Index(mass_.size()) != sys_.dof_count) throw PreconditionError("ImplicitEuler: mass size mismatch");
        // Diagonal mass couples no free dof to a sink, so the lifting is unchanged.
        SparseMatrix diag(Eigen::Index(sys_.free_count()), Eigen::Index(sys_.free_count()));
        std::vector<Eigen::Triplet<double, int>> trip;
        for (Index i = 0; i < sys_.free_count(); ++i) {
            const double m = mass_[Eigen::Index(sys_.free_dofs[i])];
            if (!(m > 0.0)) throw PreconditionError("ImplicitEuler: lumped mass must be > 0 on free nodes");
            trip.emplace_back(int(i), int(i), m / dt_);
        }
        diag.setFromTriplets(trip.begin(), trip.end());
        if (sys_.matrix.rows() == 0) sys_.matrix.resize(diag.rows(), diag.cols());
        sys_.matrix = sys_.matrix + diag;
    }

    double dt() const noexcept { return dt_; }
    const Vector& mass() const noexcept { return mass_; }

    /// One step from the full nodal vector `t` under full nodal load `f`.
    Vector step(const Vector& t, const Vector& f, SolveStats* stats = nullptr) const {
        const Vector rhs = (mass_.array() / dt_ * t.array()).matrix() + f;
        return sys_.solve(rhs, options_, stats, &t);
    }

private:
    ReducedSystem sys_;
    Vector mass_;
    double dt_;
    LinearSolveOptions options_;
};

/// Forward Euler stability bound 2 / lambda_max(M^-1 K) over the free dofs,
/// lambda_max from power iteration on the symmetric form M^-1/2 K M^-1/2.
inline double explicit_step_limit(const ReducedSystem& conduction, const Vector& mass, int iterations = 500) {
    const Index n = conduction.free_count();
    if (n == 0) throw PreconditionError("explicit_step_limit: no free dofs");
    Vector inv_sqrt(static_cast<Eigen::Index>(n));
    for (Index i = 0; i < n; ++i) inv_sqrt[Eigen::Index(i)] = 1.0 / std::sqrt(mass[Eigen::Index(conduction.free_dofs[i])]);
    // Alternating start excites the highest modes first.
    Vector x(static_cast<Eigen::Index>(n));
    for (Index i = 0; i < n; ++i) x[Eigen::Index(i)] = (i % 2 ? -1.0 : 1.0) * (1.0 + 1e-3 * double(i % 7));
    x.normalize();
    double lambda = 0.0;
    for (int k = 0; k < iterations; ++k) {
        Vector y = inv_sqrt.cwiseProduct(conduction.matrix * inv_sqrt.cwiseProduct(x));
        const double next = x.dot(y);
        const double norm = y.norm();
        if (norm == 0.0) break;
        x = y / norm;
        if (k > 10 && std::abs(next - lambda) <= 1e-10 * std::abs(next)) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    if (!(lambda > 0.0)) throw SolverError("explicit_step_limit: conduction operator has no positive mode");
    return 2.0 / lambda;
}

struct TemperatureSample {
    double time;
    double max;
    double mean;
};

struct TemperatureHistory {
    std::vector<TemperatureSample> samples;
    double max_over_time = 0.0;
    Vector final_field;
    std::vector<std::pair<double, Vector>> snapshots;
};

/// Mission-level transient of one design: cell elements heat at Q(t) from the
/// series, linearly interpolated; sinks stay at the sink temperature.
inline TemperatureHistory run_transient(const PackProblem& problem, const DesignState& design,
                                        const HeatGenerationSeries& series, const TransientConfig& config,
                                        Diagnostics* diag = nullptr) {
    config.validate();
    if (series.samples.empty()) throw ConfigError("transient: heat series is empty");
    const StructuredGrid& g = problem.grid;
    const ElementProperties props = interpolate_properties(design, problem.regions, problem.materials);

    const double t0 = series.samples.front().time;
    const double duration = config.total_time >= 0.0 ? config.total_time : series.end_time() - t0;
    if (t0 + duration > series.end_time() * (1.0 + 1e-12) + 1e-12)
        warn(diag, "transient: heat series ends at " + csv::format(series.end_time()) + " s, last Q held to " +
                       csv::format(t0 + duration) + " s");

    const double sink = problem.tags.sink_temperature;
    const double start_t = std::isnan(config.initial_temperature) ? sink : config.initial_temperature;
    Vector temp = Vector::Constant(Eigen::Index(g.node_count()), start_t);
    for (const auto& [n, v] : problem.tags.thermal_dirichlet) temp[Eigen::Index(n)] = v;

    TemperatureHistory h;
    auto record = [&](double t) {
        h.samples.push_back({t, temp.maxCoeff(), temp.mean()});
        h.max_over_time = std::max(h.max_over_time, h.samples.back().max);
    };
    std::vector<double> pending = config.snapshot_times;
    std::sort(pending.begin(), pending.end());
    std::size_t next_snapshot = 0;
    auto snapshot = [&](double elapsed) {
        while (next_snapshot < pending.size() && pending[next_snapshot] <= elapsed + 1e-9) {
            h.snapshots.emplace_back(pending[next_snapshot], temp);
            ++next_snapshot;
        }
    };

    h.max_over_time = temp.maxCoeff();
    record(t0);
    snapshot(0.0);
    if (duration > 0.0) {
        const double dt_req = config.dt > 0.0 ? config.dt : duration / 500.0;
        const long steps = std::max(1L, long(std::ceil(duration / dt_req - 1e-9)));
        const double dt = duration / double(steps); // equal steps that land on the end time
        const ImplicitEuler stepper(assemble_conduction(g, props.conductivity, problem.tags.thermal_dirichlet),
                                    lumped_mass(g, props.heat_capacity), dt, config.solver);
        const Vector unit_load = thermal_load(g, cell_source(problem.regions, 1.0));
        for (long n = 1; n <= steps; ++n) {
            const double elapsed = n == steps ? duration : double(n) * dt;
            temp = stepper.step(temp, series.q_at(t0 + elapsed) * unit_load);
            record(t0 + elapsed);
            snapshot(elapsed);
        }
    }
    h.final_field = temp;
    return h;
}

inline void write_temperature_history(const TemperatureHistory& h, const std::string& path) {
    std::vector<std::vector<double>> rows;
    rows.reserve(h.samples.size());
    for (const auto& s : h.samples) rows.push_back({s.time, s.max, s.mean});
    csv::write(path, {"t", "max_T", "mean_T"}, rows);
}

} // namespace battopt

#endif // BATTOPT_TRANSIENT_HPP
