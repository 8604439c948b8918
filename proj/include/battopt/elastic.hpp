#ifndef BATTOPT_ELASTIC_HPP
#define BATTOPT_ELASTIC_HPP

#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include "battopt/errors.hpp"
#include "battopt/grid.hpp"
#include "battopt/hex8.hpp"
#include "battopt/linear_solver.hpp"
#include "battopt/materials.hpp"
#include "battopt/reduced_system.hpp"

namespace battopt {

/// Unit-modulus element operators keyed by Poisson ratio; every element of a
/// structured grid has the same shape, so only the ratio varies.
class ElasticElementCache {
public:
    explicit ElasticElementCache(const StructuredGrid& grid) : h_(grid.spacing()) {}

    const hex8::Mat24& stiffness(double poisson) {
        auto it = stiffness_.find(poisson);
        if (it == stiffness_.end())
            it = stiffness_.emplace(poisson, hex8::stiffness_matrix(h_[0], h_[1], h_[2], poisson)).first;
        return it->second;
    }
    const hex8::Mat24x8& coupling(double poisson) {
        auto it = coupling_.find(poisson);
        if (it == coupling_.end())
            it = coupling_.emplace(poisson, hex8::thermal_coupling_matrix(h_[0], h_[1], h_[2], poisson)).first;
        return it->second;
    }

private:
    Vec3 h_;
    std::map<double, hex8::Mat24> stiffness_;
    std::map<double, hex8::Mat24x8> coupling_;
};

struct ElasticLoadOptions {
    std::optional<double> reference_temperature; ///< defaults to the sink temperature
    Vec3 body_force{0.0, 0.0, 0.0};              ///< N/m^3, applied to every element
    bool thermal_work_in_compliance = false;     ///< C_S = (F_S + F_th) . u instead of F_S . u
};

/// Linear elasticity with thermal strain, sigma = C : (eps - alpha dT 1).
struct ElasticSystem {
    ReducedSystem system;
    Vector mechanical_load;  ///< F_S: tractions and body force (N)
    Vector thermal_load;     ///< F_th(T) (N)
    Vector delta_t;          ///< nodal T - T_ref used for F_th
    double reference_temperature = 0.0;
    bool thermal_work_in_compliance = false;
};

struct DisplacementField {
    Vector values;           ///< 3 per node
    double compliance = 0.0; ///< C_S (J)
    SolveStats stats;

    Vec3 at(Index node) const {
        const auto i = Eigen::Index(3 * node);
        return {values[i], values[i + 1], values[i + 2]};
    }
    double max_magnitude() const {
        double m = 0.0;
        for (Eigen::Index i = 0; i + 2 < values.size(); i += 3)
            m = std::max(m, std::sqrt(values[i] * values[i] + values[i + 1] * values[i + 1] +
                                      values[i + 2] * values[i + 2]));
        return m;
    }
};

inline std::array<Index, 24> element_dofs(const StructuredGrid& grid, Index e) {
    std::array<Index, 24> d{};
    const auto nodes = grid.element_nodes(e);
    for (int a = 0; a < 8; ++a)
        for (int c = 0; c < 3; ++c) d[3 * a + c] = 3 * nodes[a] + c;
    return d;
}

inline Vector mechanical_load(const StructuredGrid& grid, const BoundaryTags& tags, const Vec3& body_force) {
    Vector f = Vector::Zero(Eigen::Index(grid.elastic_dofs()));
    for (const auto& tr : tags.tractions)
        for (const auto& [n, w] : face_load_weights(grid, tr.face))
            for (int c = 0; c < 3; ++c) f[Eigen::Index(3 * n + c)] += w * tr.traction[c];
    if (body_force[0] != 0.0 || body_force[1] != 0.0 || body_force[2] != 0.0) {
        const double share = grid.element_volume() / 8.0;
        for (Index e = 0; e < grid.element_count(); ++e)
            for (Index n : grid.element_nodes(e))
                for (int c = 0; c < 3; ++c) f[Eigen::Index(3 * n + c)] += share * body_force[c];
    }
    return f;
}

/// F_th = sum_e E_e alpha_e G(nu_e) dT_e.
inline Vector thermal_expansion_load(const StructuredGrid& grid, const ElementProperties& props,
                                     const Vector& delta_t, ElasticElementCache& cache) {
    Vector f = Vector::Zero(Eigen::Index(grid.elastic_dofs()));
    for (Index e = 0; e < grid.element_count(); ++e) {
        const auto nodes = grid.element_nodes(e);
        hex8::Vec8 t;
        bool any = false;
        for (int a = 0; a < 8; ++a) {
            t[a] = delta_t[Eigen::Index(nodes[a])];
            any = any || t[a] != 0.0;
        }
        if (!any) continue;
        const hex8::Vec24 fe = props.youngs[e] * props.expansion[e] * (cache.coupling(props.poisson[e]) * t);
        const auto dofs = element_dofs(grid, e);
        for (int i = 0; i < 24; ++i) f[Eigen::Index(dofs[i])] += fe[i];
    }
    return f;
}

inline ElasticSystem assemble_elastic(const StructuredGrid& grid, const ElementProperties& props,
                                      const BoundaryTags& tags, const Vector& temperature,
                                      const ElasticLoadOptions& options = {}) {
    if (tags.structural_dirichlet.empty())
        throw SolverError("elastic system is singular: no clamped dofs");
    if (props.size() != grid.element_count())
        throw PreconditionError("assemble_elastic: property count does not match element count");
    if (temperature.size() != Eigen::Index(grid.node_count()))
        throw PreconditionError("assemble_elastic: one temperature per node required");
    for (Index e = 0; e < props.size(); ++e) {
        if (!(props.youngs[e] > 0.0)) throw PreconditionError("assemble_elastic: Young's modulus must be > 0");
        if (!(props.poisson[e] > 0.0 && props.poisson[e] < 0.5))
            throw PreconditionError("assemble_elastic: Poisson ratio must lie in (0, 0.5)");
    }

    ElasticElementCache cache(grid);
    ElasticSystem sys;
    sys.reference_temperature = options.reference_temperature.value_or(tags.sink_temperature);
    sys.thermal_work_in_compliance = options.thermal_work_in_compliance;
    sys.system = ReducedSystem(grid.elastic_dofs(), tags.structural_dirichlet);
    detail::assemble_matrix<24>(sys.system, grid, 3, [&](Index e) -> hex8::Mat24 {
        return props.youngs[e] * cache.stiffness(props.poisson[e]);
    });
    sys.mechanical_load = mechanical_load(grid, tags, options.body_force);
    sys.delta_t = temperature.array() - sys.reference_temperature;
    sys.thermal_load = thermal_expansion_load(grid, props, sys.delta_t, cache);
    return sys;
}

inline double structural_compliance(const ElasticSystem& sys, const Vector& u) {
    if (sys.thermal_work_in_compliance) return (sys.mechanical_load + sys.thermal_load).dot(u);
    return sys.mechanical_load.dot(u);
}

inline DisplacementField solve_elastic(const ElasticSystem& sys, const LinearSolveOptions& options = {},
                                       const Vector* guess = nullptr) {
    DisplacementField out;
    const Vector rhs = sys.mechanical_load + sys.thermal_load;
    out.values = sys.system.solve(rhs, options, &out.stats, guess);
    out.compliance = structural_compliance(sys, out.values);
    return out;
}

/// K u assembled element by element over the full (unconstrained) dof set.
inline Vector internal_forces(const StructuredGrid& grid, const ElementProperties& props, const Vector& u) {
    ElasticElementCache cache(grid);
    Vector f = Vector::Zero(u.size());
    for (Index e = 0; e < grid.element_count(); ++e) {
        const auto dofs = element_dofs(grid, e);
        hex8::Vec24 ue;
        for (int i = 0; i < 24; ++i) ue[i] = u[Eigen::Index(dofs[i])];
        const hex8::Vec24 fe = props.youngs[e] * (cache.stiffness(props.poisson[e]) * ue);
        for (int i = 0; i < 24; ++i) f[Eigen::Index(dofs[i])] += fe[i];
    }
    return f;
}

/// Reactions at prescribed dofs: (K u - F_S - F_th) restricted to them.
inline std::vector<std::pair<Index, double>> reaction_forces(const StructuredGrid& grid,
                                                             const ElementProperties& props,
                                                             const ElasticSystem& sys, const Vector& u) {
    const Vector r = internal_forces(grid, props, u) - sys.mechanical_load - sys.thermal_load;
    std::vector<std::pair<Index, double>> out;
    for (const auto& [d, v] : sys.system.prescribed) out.emplace_back(d, r[Eigen::Index(d)]);
    return out;
}

/// Elastic energy 1/2 int (eps - eps_T) : C : (eps - eps_T) dV with 2x2x2 Gauss.
inline double stress_energy(const StructuredGrid& grid, const ElementProperties& props, const Vector& u,
                            const Vector& delta_t) {
    const double det = grid.element_volume() / 8.0;
    const hex8::Vec6 m = hex8::unit_volumetric();
    const auto gps = hex8::gauss_2x2x2();
    std::array<hex8::Mat6x24, 8> bs;
    std::array<hex8::Vec8, 8> ns;
    for (int g = 0; g < 8; ++g) {
        bs[g] = hex8::strain_matrix(
            hex8::shape_gradient(gps[g].xi, gps[g].eta, gps[g].zeta, grid.hx(), grid.hy(), grid.hz()));
        ns[g] = hex8::shape(gps[g].xi, gps[g].eta, gps[g].zeta);
    }
    double energy = 0.0;
    for (Index e = 0; e < grid.element_count(); ++e) {
        const auto dofs = element_dofs(grid, e);
        const auto nodes = grid.element_nodes(e);
        hex8::Vec24 ue;
        hex8::Vec8 te;
        for (int i = 0; i < 24; ++i) ue[i] = u[Eigen::Index(dofs[i])];
        for (int a = 0; a < 8; ++a) te[a] = delta_t[Eigen::Index(nodes[a])];
        const hex8::Mat6 c = hex8::isotropic_elasticity(props.youngs[e], props.poisson[e]);
        for (int g = 0; g < 8; ++g) {
            const hex8::Vec6 eps = bs[g] * ue - props.expansion[e] * ns[g].dot(te) * m;
            energy += 0.5 * gps[g].weight * det * eps.dot(c * eps);
        }
    }
    return energy;
}

} // namespace battopt

#endif // BATTOPT_ELASTIC_HPP
