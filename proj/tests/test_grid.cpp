#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "battopt/grid.hpp"

using namespace battopt;

TEST(Grid, DefaultGridReproducesDofCount) {
    const auto g = build_grid(GridConfig{});
    EXPECT_EQ(g.element_count(), 48u * 32u * 40u);
    EXPECT_EQ(g.node_count(), 66'297u);
    EXPECT_EQ(g.thermal_dofs(), 66'297u);
    EXPECT_EQ(g.elastic_dofs(), 3u * 66'297u);
    EXPECT_EQ(g.total_dofs(), 265'188u);
    EXPECT_DOUBLE_EQ(g.hx(), 0.078 / 48);
    EXPECT_DOUBLE_EQ(g.hz(), 0.070 / 40);
}

TEST(Grid, SmallCounts) {
    const auto one = build_grid({1, 1, 1, 1.0, 1.0, 1.0});
    EXPECT_EQ(one.node_count(), 8u);
    EXPECT_EQ(one.element_count(), 1u);
    EXPECT_EQ(one.thermal_dofs(), 8u);
    EXPECT_EQ(one.elastic_dofs(), 24u);

    const auto two = build_grid({2, 1, 1, 2.0, 1.0, 1.0});
    EXPECT_EQ(two.node_count(), 12u);
    EXPECT_EQ(two.element_count(), 2u);
}

TEST(Grid, RejectsNonPositiveDimensions) {
    EXPECT_THROW(build_grid({0, 1, 1}), ConfigError);
    EXPECT_THROW(build_grid({1, -2, 1}), ConfigError);
    EXPECT_THROW(build_grid({1, 1, 1, 0.0, 1.0, 1.0}), ConfigError);
    EXPECT_THROW(build_grid({1, 1, 1, 1.0, 1.0, -1.0}), ConfigError);
}

TEST(Grid, NodeIndexingIsLexicographicXFastest) {
    const auto g = build_grid({2, 3, 4, 2.0, 3.0, 4.0});
    EXPECT_EQ(g.node_index(1, 0, 0), 1u);
    EXPECT_EQ(g.node_index(0, 1, 0), 3u);
    EXPECT_EQ(g.node_index(0, 0, 1), 12u);
    for (Index n = 0; n < g.node_count(); ++n) {
        const auto [i, j, k] = g.node_ijk(n);
        EXPECT_EQ(g.node_index(i, j, k), n);
    }
}

TEST(Grid, ConnectivityMatchesBruteForceCorners) {
    for (int nx = 1; nx <= 5; ++nx)
        for (int ny = 1; ny <= 5; ny += 2)
            for (int nz = 1; nz <= 5; nz += 2) {
                const auto g = build_grid({nx, ny, nz, 0.5 * nx, 0.7 * ny, 0.3 * nz});
                for (Index e = 0; e < g.element_count(); ++e) {
                    const auto nodes = g.element_nodes(e);
                    const Vec3 c = g.element_centroid(e);
                    std::set<Index> unique(nodes.begin(), nodes.end());
                    ASSERT_EQ(unique.size(), 8u);
                    // Brute force: the nodes at half an element from the centroid on every axis.
                    std::set<Index> expected;
                    for (Index n = 0; n < g.node_count(); ++n) {
                        const Vec3 p = g.node_position(n);
                        bool corner = true;
                        for (int d = 0; d < 3; ++d)
                            corner = corner && std::abs(std::abs(p[d] - c[d]) - 0.5 * g.spacing()[d]) < 1e-12;
                        if (corner) expected.insert(n);
                    }
                    ASSERT_EQ(unique, expected);
                }
            }
}

TEST(Regions, EmptyLayoutIsAllDesign) {
    const auto g = build_grid({4, 3, 2, 0.04, 0.03, 0.02});
    CellLayout none;
    none.rows = 0;
    const auto r = label_regions(g, none);
    EXPECT_EQ(r.cell_element_count(), 0u);
}

TEST(Regions, CoveringCylinderMakesEverythingCell) {
    const auto g = build_grid({6, 6, 4, 0.06, 0.06, 0.04});
    CellLayout cover{1, 1, 0.06, 0.06 * std::sqrt(2.0) * 1.001, 0.04};
    const auto r = label_regions(g, cover);
    EXPECT_EQ(r.cell_element_count(), g.element_count());
}

TEST(Regions, DefaultPackLayoutMatchesFrozenCount) {
    const auto g = build_grid(GridConfig{});
    const auto r = label_regions(g, CellLayout{});
    // 744 CELL elements per z-layer, counted independently by brute force.
    EXPECT_EQ(r.cell_element_count(), 744u * 40u);

    // Centroid sampling can only miss elements that straddle a circle.
    const double r_cell = 0.0105;
    const double analytic = 6 * std::numbers::pi * r_cell * r_cell;
    const double band = 6 * 2 * std::numbers::pi * r_cell * (g.hx() + g.hy());
    const double sampled = 744 * g.hx() * g.hy();
    EXPECT_LT(std::abs(sampled - analytic), band);
    EXPECT_NEAR(analytic / (0.078 * 0.052), 0.512, 5e-4);
}

TEST(Regions, LabelingIsPureFunctionOfGeometry) {
    const auto g = build_grid({24, 16, 20, 0.078, 0.052, 0.070});
    const auto a = label_regions(g, CellLayout{});
    const auto b = label_regions(g, CellLayout{});
    EXPECT_EQ(a.labels(), b.labels());
    // Mirror symmetry of the centred lattice.
    for (int k = 0; k < g.nz(); ++k)
        for (int j = 0; j < g.ny(); ++j)
            for (int i = 0; i < g.nx(); ++i)
                EXPECT_EQ(a[g.element_index(i, j, k)], a[g.element_index(g.nx() - 1 - i, j, k)]);
}

TEST(Regions, OversizedLayoutIsRejected) {
    const auto g = build_grid({8, 8, 8, 0.05, 0.05, 0.05});
    EXPECT_THROW(label_regions(g, CellLayout{1, 3, 0.026, 0.021, 0.04}), ConfigError);
    EXPECT_THROW(label_regions(g, CellLayout{1, 1, 0.026, 0.021, 0.06}), ConfigError);
}

TEST(Boundaries, DefaultTags) {
    const auto g = build_grid({4, 3, 2, 0.078, 0.052, 0.070});
    const auto tags = tag_boundaries(g, BcConfig{});
    // z- and z+ faces: 2 * 5 * 4 nodes.
    EXPECT_EQ(tags.thermal_dirichlet.size(), 40u);
    for (const auto& [n, t] : tags.thermal_dirichlet) {
        const auto [i, j, k] = g.node_ijk(n);
        EXPECT_TRUE(k == 0 || k == g.nz());
        EXPECT_DOUBLE_EQ(t, 298.15);
    }
    // x- face clamped in all components: 4 * 3 nodes.
    EXPECT_EQ(tags.structural_dirichlet.size(), 3u * 12u);
    for (const auto& [d, v] : tags.structural_dirichlet) {
        EXPECT_EQ(g.node_ijk(d / 3)[0], 0);
        EXPECT_EQ(v, 0.0);
    }
    ASSERT_EQ(tags.tractions.size(), 1u);
    EXPECT_EQ(tags.tractions[0].face, Face::x_plus);
    EXPECT_EQ(tags.tractions[0].traction[2], -15.0e6);
}

TEST(Boundaries, EmptyConfigGivesEmptySets) {
    const auto g = build_grid({2, 2, 2, 1.0, 1.0, 1.0});
    const auto tags = tag_boundaries(g, BcConfig::none());
    EXPECT_TRUE(tags.thermal_dirichlet.empty());
    EXPECT_TRUE(tags.structural_dirichlet.empty());
    EXPECT_TRUE(tags.tractions.empty());
}

TEST(Boundaries, UnknownFaceAndConflictsRejected) {
    const auto g = build_grid({2, 2, 2, 1.0, 1.0, 1.0});
    BcConfig bad;
    bad.clamp_faces = {"w+"};
    EXPECT_THROW(tag_boundaries(g, bad), ConfigError);
    BcConfig both;
    both.traction_faces = {"x-"};
    EXPECT_THROW(tag_boundaries(g, both), ConfigError);
}

TEST(Boundaries, TractionFaceWeightsIntegrateToArea) {
    const auto g = build_grid({5, 4, 6, 0.078, 0.052, 0.070});
    double total = 0.0;
    for (const auto& [n, w] : face_load_weights(g, Face::x_plus)) {
        EXPECT_EQ(g.node_ijk(n)[0], g.nx());
        total += w;
    }
    EXPECT_NEAR(total, 0.052 * 0.070, 1e-15);
    // 15 N/mm^2 over 52 mm x 70 mm.
    EXPECT_NEAR(15.0 * 52.0 * 70.0, 54'600.0, 1e-9);
    EXPECT_NEAR(total * 15.0e6, 54'600.0, 1e-7);
}
