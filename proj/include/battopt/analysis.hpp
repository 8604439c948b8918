#ifndef BATTOPT_ANALYSIS_HPP
#define BATTOPT_ANALYSIS_HPP

#include <vector>

#include "battopt/elastic.hpp"
#include "battopt/grid.hpp"
#include "battopt/levelset.hpp"
#include "battopt/materials.hpp"
#include "battopt/thermal.hpp"

namespace battopt {

/// Everything fixed across design iterations.
struct PackProblem {
    StructuredGrid grid;
    RegionMap regions;
    BoundaryTags tags;
    MaterialSet materials;
    std::vector<double> source; ///< W/m^3 per element
    ElasticLoadOptions load;
};

/// Uniform Q over CELL elements, zero elsewhere.
inline std::vector<double> cell_source(const RegionMap& regions, double q) {
    std::vector<double> s(regions.size(), 0.0);
    for (Index e = 0; e < s.size(); ++e)
        if (regions.is_cell(e)) s[e] = q;
    return s;
}

inline PackProblem make_pack_problem(const StructuredGrid& grid, const CellLayout& layout, const BcConfig& bc,
                                     const MaterialSet& materials, double q_cell) {
    PackProblem p{grid, label_regions(grid, layout), tag_boundaries(grid, bc), materials, {}, {}};
    p.source = cell_source(p.regions, q_cell);
    return p;
}

/// Steady thermal then elastic state of one design.
struct DesignResponse {
    DesignState design;
    ElementProperties props;
    ThermalSystem thermal;
    TemperatureField temperature;
    ElasticSystem elastic;
    DisplacementField displacement;
    double volume_fraction = 0.0;
};

inline DesignResponse analyze_design(const PackProblem& problem, const LevelSetField& field, double gamma_min,
                                     int subsamples, const LinearSolveOptions& solver) {
    DesignResponse r;
    r.design = compute_volume_fractions(field, problem.regions, subsamples, gamma_min);
    r.volume_fraction = design_volume_fraction(r.design, problem.regions);
    r.props = interpolate_properties(r.design, problem.regions, problem.materials);
    r.thermal = assemble_thermal(problem.grid, r.props, problem.source, problem.tags);
    r.temperature = solve_thermal(r.thermal, solver);
    r.elastic = assemble_elastic(problem.grid, r.props, problem.tags, r.temperature.values, problem.load);
    r.displacement = solve_elastic(r.elastic, solver);
    return r;
}

} // namespace battopt

#endif // BATTOPT_ANALYSIS_HPP
