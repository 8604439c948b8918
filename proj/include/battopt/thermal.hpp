#ifndef BATTOPT_THERMAL_HPP
#define BATTOPT_THERMAL_HPP

#include <algorithm>
#include <vector>

#include "battopt/errors.hpp"
#include "battopt/grid.hpp"
#include "battopt/hex8.hpp"
#include "battopt/linear_solver.hpp"
#include "battopt/materials.hpp"
#include "battopt/reduced_system.hpp"

namespace battopt {

/// Steady conduction  div(kappa grad T) + Q = 0  on the fixed grid.
struct ThermalSystem {
    ReducedSystem system;
    Vector load;                        ///< F_T, nodal heat input (W)
    double reference_temperature = 0.0; ///< sink temperature; C_T is measured from it
};

struct TemperatureField {
    Vector values;             ///< nodal T (K)
    double compliance = 0.0;   ///< C_T = F_T . (T - T_ref) over free dofs (W K)
    SolveStats stats;

    double max() const { return values.size() ? values.maxCoeff() : 0.0; }
    double mean() const { return values.size() ? values.mean() : 0.0; }
};

/// Nodal heat input for a per-element volumetric source (W/m^3).
inline Vector thermal_load(const StructuredGrid& grid, const std::vector<double>& source) {
    if (source.size() != grid.element_count())
        throw PreconditionError("thermal_load: one source value per element required");
    Vector f = Vector::Zero(Eigen::Index(grid.node_count()));
    const double share = grid.element_volume() / 8.0;
    for (Index e = 0; e < grid.element_count(); ++e) {
        if (source[e] == 0.0) continue;
        for (Index n : grid.element_nodes(e)) f[Eigen::Index(n)] += share * source[e];
    }
    return f;
}

inline ThermalSystem assemble_thermal(const StructuredGrid& grid, const ElementProperties& props,
                                      const std::vector<double>& source, const BoundaryTags& tags) {
    if (tags.thermal_dirichlet.empty())
        throw SolverError("thermal system is singular: no Dirichlet temperatures (pure Neumann unsupported)");
    if (props.size() != grid.element_count())
        throw PreconditionError("assemble_thermal: property count does not match element count");
    for (double k : props.conductivity)
        if (!(k > 0.0)) throw PreconditionError("assemble_thermal: conductivity must be > 0");

    ThermalSystem sys;
    sys.reference_temperature = tags.sink_temperature;
    sys.system = ReducedSystem(grid.node_count(), tags.thermal_dirichlet);
    const hex8::Mat8 k0 = hex8::conductivity_matrix(grid.hx(), grid.hy(), grid.hz());
    detail::assemble_matrix<8>(sys.system, grid, 1,
                               [&](Index e) -> hex8::Mat8 { return props.conductivity[e] * k0; });
    sys.load = thermal_load(grid, source);
    return sys;
}

inline double thermal_compliance(const ThermalSystem& sys, const Vector& temperature) {
    double c = 0.0;
    for (Index d : sys.system.free_dofs)
        c += sys.load[Eigen::Index(d)] * (temperature[Eigen::Index(d)] - sys.reference_temperature);
    return c;
}

inline TemperatureField solve_thermal(const ThermalSystem& sys, const LinearSolveOptions& options = {},
                                      const Vector* guess = nullptr) {
    TemperatureField out;
    out.values = sys.system.solve(sys.load, options, &out.stats, guess);
    out.compliance = thermal_compliance(sys, out.values);
    return out;
}

/// Sum over elements of kappa_e * theta_e^T K0 theta_e, theta = T - shift.
inline double thermal_energy(const StructuredGrid& grid, const ElementProperties& props,
                             const Vector& temperature, double shift = 0.0) {
    const hex8::Mat8 k0 = hex8::conductivity_matrix(grid.hx(), grid.hy(), grid.hz());
    double total = 0.0;
    for (Index e = 0; e < grid.element_count(); ++e) {
        hex8::Vec8 t;
        const auto nodes = grid.element_nodes(e);
        for (int a = 0; a < 8; ++a) t[a] = temperature[Eigen::Index(nodes[a])] - shift;
        total += props.conductivity[e] * t.dot(k0 * t);
    }
    return total;
}

} // namespace battopt

#endif // BATTOPT_THERMAL_HPP
