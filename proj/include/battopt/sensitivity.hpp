#ifndef BATTOPT_SENSITIVITY_HPP
#define BATTOPT_SENSITIVITY_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "battopt/elastic.hpp"
#include "battopt/errors.hpp"
#include "battopt/grid.hpp"
#include "battopt/hex8.hpp"
#include "battopt/isosurface.hpp"
#include "battopt/materials.hpp"
#include "battopt/thermal.hpp"

namespace battopt {

// Densities below are derivatives with respect to the element fraction γ_e of
// the fixed-grid model. Negative means adding material lowers the functional.

namespace detail {

inline hex8::Vec8 gather8(const StructuredGrid& grid, Index e, const Vector& v, double shift = 0.0) {
    hex8::Vec8 out;
    const auto nodes = grid.element_nodes(e);
    for (int a = 0; a < 8; ++a) out[a] = v[Eigen::Index(nodes[a])] - shift;
    return out;
}

inline hex8::Vec24 gather24(const StructuredGrid& grid, Index e, const Vector& v) {
    hex8::Vec24 out;
    const auto dofs = element_dofs(grid, e);
    for (int i = 0; i < 24; ++i) out[i] = v[Eigen::Index(dofs[i])];
    return out;
}

} // namespace detail

/// dC_T/dγ_e = -(dkappa_e/dγ_e) theta_e^T K0 theta_e, theta = T - T_sink. The
/// source lives on passive cells only, so F_T carries no design dependence.
inline std::vector<double> thermal_sensitivity(const StructuredGrid& grid, const ElementProperties& props,
                                               const TemperatureField& temperature, double sink_temperature) {
    if (temperature.values.size() != Eigen::Index(grid.node_count()))
        throw PreconditionError("thermal_sensitivity: temperature field not solved on this grid");
    const hex8::Mat8 k0 = hex8::conductivity_matrix(grid.hx(), grid.hy(), grid.hz());
    std::vector<double> d(grid.element_count(), 0.0);
    for (Index e = 0; e < d.size(); ++e) {
        if (props.d_conductivity[e] == 0.0) continue;
        const hex8::Vec8 t = detail::gather8(grid, e, temperature.values, sink_temperature);
        d[e] = -props.d_conductivity[e] * t.dot(k0 * t);
    }
    return d;
}

struct StructuralSensitivity {
    std::vector<double> density;     ///< total dC_S/dγ_e
    std::vector<double> stiffness;   ///< term from dK/dγ_e
    std::vector<double> expansion;   ///< term from dF_th/dγ_e
    std::vector<double> conduction;  ///< coupled term through the temperature field
};

/// dC_S/dγ_e for the coupled thermo-elastic state.
///
/// With K u = F_S + G(γ) θ and K_T θ = F_T, the adjoints are
///   K λ = dC_S/du           (λ = solution under F_S alone, or 2u when C_S counts F_th)
///   K_T μ = G^T λ
/// and the density is  -a λ^T K'_e u + λ^T G'_e θ - μ^T K'_T,e θ  with a = 1
/// (a = 1/2 for the thermal-work convention, where λ = 2u).
inline StructuralSensitivity structural_sensitivity(const StructuredGrid& grid, const ElementProperties& props,
                                                    const ThermalSystem& thermal, const TemperatureField& temperature,
                                                    const ElasticSystem& elastic, const DisplacementField& displacement,
                                                    const LinearSolveOptions& options = {}, bool coupled = true) {
    if (displacement.values.size() != Eigen::Index(grid.elastic_dofs()) ||
        temperature.values.size() != Eigen::Index(grid.node_count()))
        throw PreconditionError("structural_sensitivity: states not solved on this grid");

    const Vector& u = displacement.values;
    Vector lambda;
    double a = 1.0;
    if (elastic.thermal_work_in_compliance) {
        lambda = 2.0 * u;
        a = 0.5;
    } else {
        lambda = elastic.system.solve_homogeneous(elastic.mechanical_load, options);
    }

    ElasticElementCache cache(grid);
    const hex8::Mat8 kt0 = hex8::conductivity_matrix(grid.hx(), grid.hy(), grid.hz());
    const Index ne = grid.element_count();

    // G^T λ for the thermal adjoint.
    Vector mu = Vector::Zero(Eigen::Index(grid.node_count()));
    if (coupled) {
        Vector gt_lambda = Vector::Zero(Eigen::Index(grid.node_count()));
        for (Index e = 0; e < ne; ++e) {
            const double s = props.youngs[e] * props.expansion[e];
            if (s == 0.0) continue;
            const hex8::Vec8 fe = s * (cache.coupling(props.poisson[e]).transpose() * detail::gather24(grid, e, lambda));
            const auto nodes = grid.element_nodes(e);
            for (int i = 0; i < 8; ++i) gt_lambda[Eigen::Index(nodes[i])] += fe[i];
        }
        mu = thermal.system.solve_homogeneous(gt_lambda, options);
    }

    StructuralSensitivity out;
    out.density.assign(ne, 0.0);
    out.stiffness.assign(ne, 0.0);
    out.expansion.assign(ne, 0.0);
    out.conduction.assign(ne, 0.0);
    for (Index e = 0; e < ne; ++e) {
        const double dE = props.d_youngs[e];
        const double dk = props.d_conductivity[e];
        if (dE == 0.0 && dk == 0.0) continue;
        const hex8::Vec24 le = detail::gather24(grid, e, lambda);
        const hex8::Vec24 ue = detail::gather24(grid, e, u);
        const hex8::Vec8 te = detail::gather8(grid, e, elastic.delta_t);
        if (dE != 0.0) {
            out.stiffness[e] = -a * dE * le.dot(cache.stiffness(props.poisson[e]) * ue);
            out.expansion[e] = dE * props.expansion[e] * le.dot(cache.coupling(props.poisson[e]) * te);
        }
        if (coupled && dk != 0.0) {
            const hex8::Vec8 me = detail::gather8(grid, e, mu);
            const hex8::Vec8 th = detail::gather8(grid, e, temperature.values, thermal.reference_temperature);
            out.conduction[e] = -dk * me.dot(kt0 * th);
        }
        out.density[e] = out.stiffness[e] + out.expansion[e] + out.conduction[e];
    }
    return out;
}

/// Gradient of k C_S/C_S0 + (1-k) C_T/C_T0 for one pair of shape densities.
inline double combine_sensitivity(double s_structural, double s_thermal, double k, double cs0, double ct0) {
    return k * s_structural / cs0 + (1.0 - k) * s_thermal / ct0;
}

struct SensitivityRecord {
    std::vector<double> objective;          ///< s_J per boundary point (per m^3 of boundary movement)
    std::vector<double> volume;             ///< s_V per boundary point, always 1
    std::vector<double> structural_density; ///< raw dC_S/dγ_e
    std::vector<double> thermal_density;    ///< raw dC_T/dγ_e
};

/// Value of a per-element field at x, inverse-distance-squared weighted over
/// DESIGN element centroids within `radius` (nearest DESIGN centroid otherwise).
inline double sample_element_field(const StructuredGrid& grid, const RegionMap& regions,
                                   const std::vector<double>& field, const Vec3& x, double radius) {
    const std::array<int, 3> n{grid.nx(), grid.ny(), grid.nz()};
    std::array<int, 3> lo{}, hi{};
    for (int d = 0; d < 3; ++d) {
        const double s = (x[d] - grid.origin()[d]) / grid.spacing()[d] - 0.5;
        lo[d] = std::clamp(int(std::ceil(s - radius / grid.spacing()[d])), 0, n[d] - 1);
        hi[d] = std::clamp(int(std::floor(s + radius / grid.spacing()[d])), 0, n[d] - 1);
    }
    double wsum = 0.0, vsum = 0.0;
    for (int k = lo[2]; k <= hi[2]; ++k)
        for (int j = lo[1]; j <= hi[1]; ++j)
            for (int i = lo[0]; i <= hi[0]; ++i) {
                const Index e = grid.element_index(i, j, k);
                if (regions.is_cell(e)) continue;
                const double d = distance(x, grid.element_centroid(e));
                if (d > radius) continue;
                if (d == 0.0) return field[e];
                const double w = 1.0 / (d * d);
                wsum += w;
                vsum += w * field[e];
            }
    if (wsum > 0.0) return vsum / wsum;
    double best = std::numeric_limits<double>::infinity();
    double value = 0.0;
    for (Index e = 0; e < grid.element_count(); ++e) {
        if (regions.is_cell(e)) continue;
        const double d = distance(x, grid.element_centroid(e));
        if (d < best) {
            best = d;
            value = field[e];
        }
    }
    return value;
}

/// Maps element densities to boundary points and forms the objective
/// gradient. Moving a point of area A outward by z changes γ_e by A z / V_e,
/// so the per-area shape density is (dC/dγ_e) / V_e.
inline SensitivityRecord objective_sensitivity(const StructuredGrid& grid, const RegionMap& regions,
                                               const std::vector<double>& d_structural,
                                               const std::vector<double>& d_thermal, double k, double cs0,
                                               double ct0, const BoundaryPointSet& points) {
    if (!(cs0 > 0.0) || !(ct0 > 0.0))
        throw PreconditionError("objective_sensitivity: normalizers must be > 0");
    if (k < 0.0 || k > 1.0) throw PreconditionError("objective_sensitivity: k must lie in [0, 1]");
    SensitivityRecord rec;
    rec.structural_density = d_structural;
    rec.thermal_density = d_thermal;
    const double inv_v = 1.0 / grid.element_volume();
    std::vector<double> ss(d_structural.size()), st(d_thermal.size());
    for (Index e = 0; e < ss.size(); ++e) ss[e] = d_structural[e] * inv_v;
    for (Index e = 0; e < st.size(); ++e) st[e] = d_thermal[e] * inv_v;
    const double radius = 2.0 * grid.h_max();
    rec.objective.reserve(points.size());
    for (const auto& p : points) {
        const double s_s = k != 0.0 ? sample_element_field(grid, regions, ss, p.position, radius) : 0.0;
        const double s_t = k != 1.0 ? sample_element_field(grid, regions, st, p.position, radius) : 0.0;
        rec.objective.push_back(combine_sensitivity(s_s, s_t, k, cs0, ct0));
    }
    rec.volume.assign(points.size(), 1.0);
    return rec;
}

} // namespace battopt

#endif // BATTOPT_SENSITIVITY_HPP
