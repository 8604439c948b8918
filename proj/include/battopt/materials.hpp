#ifndef BATTOPT_MATERIALS_HPP
#define BATTOPT_MATERIALS_HPP

#include <vector>

#include "battopt/errors.hpp"
#include "battopt/grid.hpp"

namespace battopt {

struct Material {
    double conductivity;  // W/(m K)
    double youngs;        // Pa
    double poisson;       // -
    double expansion;     // 1/K
    double heat_capacity; // volumetric rho*c_p, J/(m^3 K)
};

inline Material aluminum() { return {220.0, 68.0e9, 0.32, 21.0e-6, 2'430'000.0}; }
inline Material battery_cell() { return {1.25, 1.5e9, 0.2, 10.0e-6, 1'767'574.0}; }

struct MaterialSet {
    Material pack = aluminum();
    Material cell = battery_cell();
};

/// Per-element γ_e. CELL elements always carry γ_e = 1.
struct DesignState {
    std::vector<double> gamma;
    double gamma_min = 1e-4;

    /// Ersatz scaling γ_min(1 - γ) + γ.
    double scale(Index e) const { return gamma_min * (1.0 - gamma[e]) + gamma[e]; }
};

/// Per-element material data after interpolation, plus d(property)/dγ_e for
/// the designable entries (zero on CELL elements).
struct ElementProperties {
    std::vector<double> conductivity;
    std::vector<double> youngs;
    std::vector<double> poisson;
    std::vector<double> expansion;
    std::vector<double> heat_capacity;
    std::vector<double> d_conductivity;
    std::vector<double> d_youngs;
    std::vector<double> d_heat_capacity;

    Index size() const noexcept { return conductivity.size(); }

    /// Same material everywhere, no design dependence. Handy for verification problems.
    static ElementProperties uniform(Index n, const Material& m) {
        ElementProperties p;
        p.conductivity.assign(n, m.conductivity);
        p.youngs.assign(n, m.youngs);
        p.poisson.assign(n, m.poisson);
        p.expansion.assign(n, m.expansion);
        p.heat_capacity.assign(n, m.heat_capacity);
        p.d_conductivity.assign(n, 0.0);
        p.d_youngs.assign(n, 0.0);
        p.d_heat_capacity.assign(n, 0.0);
        return p;
    }
};

inline ElementProperties interpolate_properties(const DesignState& state, const RegionMap& regions,
                                                const MaterialSet& base) {
    if (!(state.gamma_min > 0.0 && state.gamma_min < 1.0))
        throw PreconditionError("interpolate_properties: gamma_min must lie in (0, 1)");
    if (state.gamma.size() != regions.size())
        throw PreconditionError("interpolate_properties: design/region size mismatch");
    const Index n = state.gamma.size();
    ElementProperties p = ElementProperties::uniform(n, base.pack);
    const double dscale = 1.0 - state.gamma_min;
    for (Index e = 0; e < n; ++e) {
        if (regions.is_cell(e)) {
            p.conductivity[e] = base.cell.conductivity;
            p.youngs[e] = base.cell.youngs;
            p.poisson[e] = base.cell.poisson;
            p.expansion[e] = base.cell.expansion;
            p.heat_capacity[e] = base.cell.heat_capacity;
            continue;
        }
        const double s = state.scale(e);
        p.conductivity[e] = s * base.pack.conductivity;
        p.youngs[e] = s * base.pack.youngs;
        p.heat_capacity[e] = s * base.pack.heat_capacity;
        p.d_conductivity[e] = dscale * base.pack.conductivity;
        p.d_youngs[e] = dscale * base.pack.youngs;
        p.d_heat_capacity[e] = dscale * base.pack.heat_capacity;
    }
    return p;
}

} // namespace battopt

#endif // BATTOPT_MATERIALS_HPP
