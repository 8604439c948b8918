#include <gtest/gtest.h>

#include <random>

#include "battopt/sensitivity.hpp"

using namespace battopt;

namespace {

LinearSolveOptions tight() {
    LinearSolveOptions o;
    o.kind = SolverKind::cholesky;
    o.tolerance = 1e-12;
    return o;
}

// A small coupled problem: a few passive heat-producing elements, the rest
// designable with random fractions.
struct Problem {
    StructuredGrid grid;
    RegionMap regions;
    BoundaryTags tags;
    DesignState design;
    std::vector<double> source;
    ElasticLoadOptions load;

    struct Result {
        double cs, ct;
        ElementProperties props;
        ThermalSystem thermal;
        TemperatureField temperature;
        ElasticSystem elastic;
        DisplacementField displacement;
    };

    Result solve(const DesignState& d) const {
        Result r;
        r.props = interpolate_properties(d, regions, MaterialSet{});
        r.thermal = assemble_thermal(grid, r.props, source, tags);
        r.temperature = solve_thermal(r.thermal, tight());
        r.elastic = assemble_elastic(grid, r.props, tags, r.temperature.values, load);
        r.displacement = solve_elastic(r.elastic, tight());
        r.cs = r.displacement.compliance;
        r.ct = r.temperature.compliance;
        return r;
    }
};

Problem make_problem(int nx, int ny, int nz, double q, Vec3 traction, unsigned seed) {
    const StructuredGrid g(nx, ny, nz, 0.01, 0.01, 0.01);
    std::vector<Region> labels(g.element_count(), Region::design);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    // Passive heat sources in the middle layer.
    for (int j = 0; j < ny; ++j)
        for (int i = 1; i < nx - 1; i += 2) labels[g.element_index(i, j, nz / 2)] = Region::cell;
    Problem p{g, RegionMap(labels, CellLayout{}), {}, {}, {}, {}};
    BcConfig bc;
    bc.traction = traction;
    p.tags = tag_boundaries(g, bc);
    p.design.gamma.resize(g.element_count());
    p.source.assign(g.element_count(), 0.0);
    for (Index e = 0; e < g.element_count(); ++e) {
        p.design.gamma[e] = p.regions.is_cell(e) ? 1.0 : 0.2 + 0.8 * u(rng);
        if (p.regions.is_cell(e)) p.source[e] = q;
    }
    return p;
}

// Central differences of f over every DESIGN element.
template <class F>
std::vector<double> central_difference(const Problem& p, F&& f, double step = 1e-6) {
    std::vector<double> out(p.grid.element_count(), 0.0);
    for (Index e = 0; e < out.size(); ++e) {
        if (p.regions.is_cell(e)) continue;
        DesignState plus = p.design, minus = p.design;
        plus.gamma[e] += step;
        minus.gamma[e] -= step;
        out[e] = (f(p.solve(plus)) - f(p.solve(minus))) / (2 * step);
    }
    return out;
}

double relative_error(const std::vector<double>& a, const std::vector<double>& ref) {
    double num = 0.0, den = 0.0;
    for (Index i = 0; i < a.size(); ++i) {
        num = std::max(num, std::abs(a[i] - ref[i]));
        den = std::max(den, std::abs(ref[i]));
    }
    return num / den;
}

} // namespace

TEST(ThermalSensitivity, TwoElementRodDensity) {
    // Ends held at 0 and 1, unit length, unit conductivity: grad T = 1.
    const StructuredGrid g(2, 1, 1, 0.5, 1.0, 1.0);
    BoundaryTags tags;
    for (Index n : face_nodes(g, Face::x_minus)) tags.add_thermal(n, 0.0);
    for (Index n : face_nodes(g, Face::x_plus)) tags.add_thermal(n, 1.0);
    tags.sink_temperature = 0.0;
    tags.normalize();
    MaterialSet m;
    m.pack.conductivity = 1.0;
    DesignState d;
    d.gamma = {1.0, 1.0};
    const auto props = interpolate_properties(d, RegionMap::all_design(g), m);
    const auto t = solve_thermal(assemble_thermal(g, props, {0.0, 0.0}, tags), tight());
    const auto dens = thermal_sensitivity(g, props, t, 0.0);
    for (double v : dens) EXPECT_NEAR(v, -(1 - 1e-4) * 1.0 * 1.0 * g.element_volume(), 1e-12);
}

TEST(ThermalSensitivity, SourceDrivenRodMatchesFiniteDifference) {
    // Both ends at the sink, heat produced in between.
    const StructuredGrid g(2, 1, 1, 0.5, 1.0, 1.0);
    BoundaryTags tags;
    for (Index n : face_nodes(g, Face::x_minus)) tags.add_thermal(n, 0.0);
    for (Index n : face_nodes(g, Face::x_plus)) tags.add_thermal(n, 0.0);
    tags.sink_temperature = 0.0;
    tags.normalize();
    MaterialSet m;
    m.pack.conductivity = 1.0;
    const auto regions = RegionMap::all_design(g);
    const auto compliance = [&](const DesignState& d) {
        const auto props = interpolate_properties(d, regions, m);
        return solve_thermal(assemble_thermal(g, props, {3.0, 1.0}, tags), tight()).compliance;
    };
    DesignState d;
    d.gamma = {0.7, 0.4};
    const auto props = interpolate_properties(d, regions, m);
    const auto t = solve_thermal(assemble_thermal(g, props, {3.0, 1.0}, tags), tight());
    const auto dens = thermal_sensitivity(g, props, t, 0.0);
    for (Index e = 0; e < 2; ++e) {
        DesignState p = d, q = d;
        p.gamma[e] += 1e-6;
        q.gamma[e] -= 1e-6;
        const double fd = (compliance(p) - compliance(q)) / 2e-6;
        EXPECT_NEAR(dens[e], fd, 1e-4 * std::abs(fd));
        EXPECT_LT(dens[e], 0.0);
    }
}

TEST(ThermalSensitivity, ZeroGradientAndQuadraticScaling) {
    const StructuredGrid g(3, 2, 2, 0.01, 0.01, 0.01);
    const auto props = ElementProperties::uniform(g.element_count(), aluminum());
    auto p2 = props;
    for (auto& v : p2.d_conductivity) v = 100.0;
    TemperatureField flat;
    flat.values = Vector::Constant(Eigen::Index(g.node_count()), 310.0);
    for (double v : thermal_sensitivity(g, p2, flat, 310.0)) EXPECT_EQ(v, 0.0);

    std::mt19937 rng(4);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    TemperatureField t, t2;
    t.values.resize(Eigen::Index(g.node_count()));
    for (auto& v : t.values) v = 298.15 + u(rng);
    t2.values = 298.15 + 2.0 * (t.values.array() - 298.15);
    const auto a = thermal_sensitivity(g, p2, t, 298.15);
    const auto b = thermal_sensitivity(g, p2, t2, 298.15);
    for (Index e = 0; e < a.size(); ++e) EXPECT_NEAR(b[e], 4.0 * a[e], 1e-12 * std::abs(b[e]));

    TemperatureField unsolved;
    EXPECT_THROW(thermal_sensitivity(g, p2, unsolved, 0.0), PreconditionError);
}

TEST(ThermalSensitivity, CoupledGridMatchesFiniteDifference) {
    const auto p = make_problem(6, 4, 4, 2.0e6, {0, 0, -1.0e5}, 1);
    const auto base = p.solve(p.design);
    const auto dens = thermal_sensitivity(p.grid, base.props, base.temperature, p.tags.sink_temperature);
    const auto fd = central_difference(p, [](const Problem::Result& r) { return r.ct; });
    EXPECT_LT(relative_error(dens, fd), 1e-4);
    for (Index e = 0; e < dens.size(); ++e) {
        if (p.regions.is_cell(e)) {
            EXPECT_EQ(dens[e], 0.0);
        }
    }
}

TEST(StructuralSensitivity, DecoupledLimitIsSelfAdjoint) {
    // No heat: the density reduces to -u^T K'_e u, which never favours removing material.
    auto p = make_problem(4, 2, 2, 0.0, {0, 0, -1.0e6}, 2);
    BcConfig cold;
    cold.sink_temperature = 0.0;
    cold.traction = {0, 0, -1.0e6};
    p.tags = tag_boundaries(p.grid, cold);
    const auto base = p.solve(p.design);
    ASSERT_EQ(base.elastic.thermal_load.norm(), 0.0);
    const auto s = structural_sensitivity(p.grid, base.props, base.thermal, base.temperature, base.elastic,
                                          base.displacement, tight());
    ElasticElementCache cache(p.grid);
    for (Index e = 0; e < s.density.size(); ++e) {
        EXPECT_EQ(s.expansion[e], 0.0);
        EXPECT_EQ(s.conduction[e], 0.0);
        EXPECT_LE(s.density[e], 0.0);
        const auto ue = detail::gather24(p.grid, e, base.displacement.values);
        const double direct = -base.props.d_youngs[e] * ue.dot(cache.stiffness(base.props.poisson[e]) * ue);
        EXPECT_NEAR(s.density[e], direct, 1e-10 * std::abs(direct) + 1e-300);
    }
    const auto fd = central_difference(p, [](const Problem::Result& r) { return r.cs; });
    EXPECT_LT(relative_error(s.density, fd), 1e-3);
}

TEST(StructuralSensitivity, CoupledDensityMatchesFiniteDifference) {
    const auto p = make_problem(4, 2, 2, 4.0e7, {0, 0, -2.0e6}, 3);
    const auto base = p.solve(p.design);
    const double rise = base.temperature.max() - p.tags.sink_temperature;
    EXPECT_GT(rise, 1.0);
    const auto fd = central_difference(p, [](const Problem::Result& r) { return r.cs; });

    const auto full = structural_sensitivity(p.grid, base.props, base.thermal, base.temperature, base.elastic,
                                             base.displacement, tight());
    EXPECT_LT(relative_error(full.density, fd), 1e-3);
    for (double v : full.density) EXPECT_TRUE(std::isfinite(v));

    // Dropping the temperature adjoint is visibly wrong.
    const auto ablated = structural_sensitivity(p.grid, base.props, base.thermal, base.temperature,
                                                base.elastic, base.displacement, tight(), false);
    EXPECT_GT(relative_error(ablated.density, fd), 1e-2);
}

TEST(StructuralSensitivity, ThermalWorkConventionMatchesFiniteDifference) {
    auto p = make_problem(4, 2, 2, 4.0e7, {0, 0, -2.0e6}, 5);
    p.load.thermal_work_in_compliance = true;
    const auto base = p.solve(p.design);
    const auto fd = central_difference(p, [](const Problem::Result& r) { return r.cs; });
    const auto s = structural_sensitivity(p.grid, base.props, base.thermal, base.temperature, base.elastic,
                                          base.displacement, tight());
    EXPECT_LT(relative_error(s.density, fd), 1e-3);
}

TEST(StructuralSensitivity, DefaultSolverSettingsStayAccurate) {
    // Iterative adjoints at the default tolerance are consistent with the forward solves.
    const auto p = make_problem(6, 4, 4, 4.0e7, {0, 0, -2.0e6}, 6);
    const auto base = p.solve(p.design);
    const auto fd = central_difference(p, [](const Problem::Result& r) { return r.cs; });
    LinearSolveOptions cg;
    cg.tolerance = 1e-10;
    const auto s = structural_sensitivity(p.grid, base.props, base.thermal, base.temperature, base.elastic,
                                          base.displacement, cg);
    EXPECT_LT(relative_error(s.density, fd), 1e-3);
}

TEST(ObjectiveSensitivity, WeightedCombination) {
    EXPECT_DOUBLE_EQ(combine_sensitivity(2.0, 4.0, 0.5, 1.0, 1.0), 3.0);
    EXPECT_DOUBLE_EQ(combine_sensitivity(2.0, 4.0, 1.0, 1.0, 1.0), 2.0);
    EXPECT_DOUBLE_EQ(combine_sensitivity(2.0, 4.0, 1.0, 2.0, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(combine_sensitivity(2.0, 4.0, 0.0, 2.0, 8.0), 0.5);
}

TEST(ObjectiveSensitivity, BoundaryPointSampling) {
    const StructuredGrid g(4, 4, 4, 1.0, 1.0, 1.0);
    const auto regions = RegionMap::all_design(g);
    std::vector<double> ds(g.element_count()), dt(g.element_count());
    for (Index e = 0; e < ds.size(); ++e) {
        ds[e] = -2.0 * g.element_volume();
        dt[e] = -4.0 * g.element_volume() * (1.0 + double(e % 3));
    }
    BoundaryPointSet pts;
    pts.push_back({g.element_centroid(5), 1.0, {1, 0, 0}, 5});
    pts.push_back({{1.7, 2.2, 0.4}, 1.0, {0, 1, 0}, g.element_index(1, 2, 0)});

    const auto r1 = objective_sensitivity(g, regions, ds, dt, 1.0, 1.0, 1.0, pts);
    for (double v : r1.objective) EXPECT_DOUBLE_EQ(v, -2.0);
    const auto r2 = objective_sensitivity(g, regions, ds, dt, 1.0, 2.0, 1.0, pts);
    for (Index i = 0; i < pts.size(); ++i) EXPECT_DOUBLE_EQ(r2.objective[i], 0.5 * r1.objective[i]);
    for (double v : r2.volume) EXPECT_EQ(v, 1.0);

    // A point on a centroid takes that element's value exactly.
    const auto r3 = objective_sensitivity(g, regions, ds, dt, 0.5, 1.0, 1.0, pts);
    EXPECT_DOUBLE_EQ(r3.objective[0], 0.5 * -2.0 + 0.5 * dt[5]);

    // Linear in the densities.
    std::vector<double> ds3 = ds, dt3 = dt;
    for (auto& v : ds3) v *= 3.0;
    for (auto& v : dt3) v *= 3.0;
    const auto r4 = objective_sensitivity(g, regions, ds3, dt3, 0.3, 1.5, 0.7, pts);
    const auto r5 = objective_sensitivity(g, regions, ds, dt, 0.3, 1.5, 0.7, pts);
    for (Index i = 0; i < pts.size(); ++i) EXPECT_NEAR(r4.objective[i], 3.0 * r5.objective[i], 1e-12);

    EXPECT_THROW(objective_sensitivity(g, regions, ds, dt, 0.5, 0.0, 1.0, pts), PreconditionError);
    EXPECT_THROW(objective_sensitivity(g, regions, ds, dt, 0.5, 1.0, 0.0, pts), PreconditionError);
    EXPECT_THROW(objective_sensitivity(g, regions, ds, dt, 1.5, 1.0, 1.0, pts), PreconditionError);
}

TEST(ObjectiveSensitivity, CellElementsAreNotSampled) {
    const StructuredGrid g(3, 1, 1, 1.0, 1.0, 1.0);
    const RegionMap regions({Region::design, Region::cell, Region::design}, CellLayout{});
    const std::vector<double> ds{-1.0, -100.0, -3.0}, dt{0.0, 0.0, 0.0};
    BoundaryPointSet pts{{{1.5, 0.5, 0.5}, 1.0, {1, 0, 0}, 0}};
    const auto r = objective_sensitivity(g, regions, ds, dt, 1.0, 1.0, 1.0, pts);
    EXPECT_DOUBLE_EQ(r.objective[0], -2.0); // equal weights on the two design neighbours
}
