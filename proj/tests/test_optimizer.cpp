#include <gtest/gtest.h>

#include <random>

#include "battopt/optimizer.hpp"

using namespace battopt;

namespace {

// Coarse version of the pack: same box, cells three elements across.
PackProblem small_pack(double q) {
    const auto g = build_grid({12, 8, 10, 0.078, 0.052, 0.070});
    return make_pack_problem(g, CellLayout{}, BcConfig{}, MaterialSet{}, q);
}

OptimizationConfig small_config(double k, int iterations) {
    OptimizationConfig c;
    c.k = k;
    c.max_iterations = iterations;
    c.solver = {SolverKind::ichol_cg, 1e-10, 0};
    return c;
}

LevelSetField small_seed(const PackProblem& p) {
    return initialize_design(p.grid, p.regions, SeedSpec::hole_lattice(4, 3, 3, 0.007));
}

double volume_of(const SubproblemResult& r, const std::vector<double>& areas) {
    double v = 0.0;
    for (std::size_t i = 0; i < areas.size(); ++i) v += areas[i] * r.movement[i];
    return v;
}

} // namespace

TEST(Objective, WeightedSumExamples) {
    EXPECT_EQ(evaluate_objective(2.0, 5.0, {1.0, 1.0}, 1.0).value, 2.0);
    const auto j = evaluate_objective(4.0, 3.0, {2.0, 3.0}, 0.7);
    EXPECT_NEAR(j.value, 1.7, 1e-15);
    EXPECT_EQ(j.structural_ratio, 2.0);
    EXPECT_EQ(j.thermal_ratio, 1.0);
    EXPECT_EQ(evaluate_objective(6.0, 9.0, {6.0, 9.0}, 0.5).value, 1.0);
    EXPECT_THROW(evaluate_objective(1.0, 1.0, {0.0, 1.0}, 0.5), PreconditionError);
}

TEST(Normalizers, ResetEveryPeriod) {
    Normalizers n = update_normalizers(0, 7.5, 2.0, {});
    EXPECT_EQ(n.structural, 7.5);
    EXPECT_EQ(n.thermal, 2.0);
    const Normalizers kept = update_normalizers(3, 1.0, 1.0, n);
    EXPECT_EQ(kept.structural, 7.5);
    EXPECT_EQ(kept.thermal, 2.0);

    const double cs[] = {4.0, 3.0, 2.5};
    std::vector<double> trace;
    for (int it = 5, i = 0; it <= 15; ++it) {
        const bool reset = it % 5 == 0;
        n = update_normalizers(it, reset ? cs[i] : 100.0 + it, 1.0, n);
        if (reset) trace.push_back(n.structural), ++i;
    }
    EXPECT_EQ(trace, (std::vector<double>{4.0, 3.0, 2.5}));
}

TEST(Normalizers, NonpositiveComplianceFallsBackWithWarning) {
    Diagnostics diag;
    const Normalizers n = update_normalizers(5, 0.0, 3.0, {2.0, 1.0}, 5, &diag);
    EXPECT_EQ(n.structural, 2.0);
    EXPECT_EQ(n.thermal, 3.0);
    ASSERT_EQ(diag.size(), 1u);
    EXPECT_NE(diag[0].find("C_S"), std::string::npos);

    const Normalizers first = update_normalizers(0, 5.0, -1.0, {}, 5, &diag);
    EXPECT_EQ(first.thermal, 1.0);
    EXPECT_EQ(diag.size(), 2u);
}

TEST(Subproblem, TwoPointHandExample) {
    const std::vector<double> sj{-1.0, -2.0}, sv{1.0, 1.0}, areas{1.0, 1.0};
    const auto r = solve_subproblem(sj, sv, areas, -0.05, 0.1, 0.05);
    EXPECT_NEAR(r.lambda, 2.0, 1e-12);
    EXPECT_NEAR(r.movement[0], -0.05, 1e-12);
    EXPECT_NEAR(r.movement[1], 0.0, 1e-12);
    EXPECT_NEAR(r.volume_change, -0.05, 1e-12);
    EXPECT_FALSE(r.at_bound);
}

TEST(Subproblem, FeasibleDesignTakesPureDescent) {
    const std::vector<double> sj{-1.0, -2.0}, sv{1.0, 1.0}, areas{1.0, 1.0};
    const auto r = solve_subproblem(sj, sv, areas, 1.0, 0.1, 0.05);
    EXPECT_EQ(r.lambda, 0.0);
    EXPECT_NEAR(r.movement[0], 0.05, 1e-15);
    EXPECT_EQ(r.movement[1], 0.1);
}

TEST(Subproblem, ZeroSensitivityDoesNotMove) {
    const std::vector<double> sj(5, 0.0), sv(5, 1.0), areas(5, 0.3);
    const auto r = solve_subproblem(sj, sv, areas, 0.0, 0.1, 0.05);
    EXPECT_EQ(r.lambda, 0.0);
    for (double z : r.movement) EXPECT_EQ(z, 0.0);
}

TEST(Subproblem, EmptyBoundaryIsNoOp) {
    const auto r = solve_subproblem({}, {}, {}, -1.0, 0.1, 0.05);
    EXPECT_TRUE(r.movement.empty());
    EXPECT_EQ(r.lambda, 0.0);
}

TEST(Subproblem, UnreachableTargetPinsLambdaAtBound) {
    const std::vector<double> sj{-1.0, -2.0}, sv{1.0, 1.0}, areas{1.0, 1.0};
    const auto r = solve_subproblem(sj, sv, areas, -5.0, 0.1, 0.05);
    EXPECT_TRUE(r.at_bound);
    EXPECT_EQ(r.lambda, lambda_bound);
    EXPECT_EQ(r.movement[0], -0.1);
    EXPECT_EQ(r.movement[1], -0.1);
}

TEST(Subproblem, RejectsBadInputs) {
    EXPECT_THROW(solve_subproblem({1.0}, {1.0}, {1.0}, 0.0, 0.0, 1.0), PreconditionError);
    EXPECT_THROW(solve_subproblem({1.0}, {1.0}, {0.0}, 0.0, 0.1, 1.0), PreconditionError);
    EXPECT_THROW(solve_subproblem({1.0}, {1.0, 1.0}, {1.0}, 0.0, 0.1, 1.0), PreconditionError);
}

TEST(Subproblem, RandomInstancesRespectLimitsTargetAndMinimality) {
    std::mt19937 rng(7);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit(0.1, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 40;
        std::vector<double> sj(n), sv(n), areas(n);
        for (std::size_t i = 0; i < n; ++i) {
            sj[i] = normal(rng);
            sv[i] = unit(rng);
            areas[i] = unit(rng);
        }
        const double d = 0.1, eta = 0.05;
        double total = 0.0;
        for (double a : areas) total += a;
        const double target = (unit(rng) - 0.6) * d * total;
        const auto r = solve_subproblem(sj, sv, areas, target, d, eta);
        for (double z : r.movement) EXPECT_LE(std::abs(z), d);
        EXPECT_NEAR(volume_of(r, areas), r.volume_change, 1e-12);
        if (r.at_bound) continue;
        EXPECT_LE(r.volume_change, target + 0.01 * std::abs(target) + 1e-12);
        if (r.lambda > 0.0) {
            EXPECT_NEAR(r.volume_change, target, 0.01 * std::abs(target) + 1e-12);
            const auto smaller = solve_subproblem(sj, sv, areas, r.volume_change + 0.02 * std::abs(target) + 1e-9, d, eta);
            EXPECT_LE(smaller.lambda, r.lambda);
        }
    }
}

TEST(Subproblem, VolumeTargetSign) {
    EXPECT_NEAR(volume_change_target(0.5, 0.3, 10.0, 0.25), -0.5, 1e-15);
    // Small excess: the full excess, not a quarter of it, when that is smaller.
    EXPECT_NEAR(volume_change_target(0.31, 0.3, 10.0, 1.0), -0.1, 1e-12);
    EXPECT_NEAR(volume_change_target(0.2, 0.3, 10.0, 0.25), 1.0, 1e-12);
}

TEST(SensitivityScale, MedianMagnitude) {
    EXPECT_EQ(sensitivity_scale({-3.0, 1.0, 2.0}), 2.0);
    EXPECT_EQ(sensitivity_scale({0.0, 0.0, 0.0, 4.0}), 4.0);
    EXPECT_EQ(sensitivity_scale({}), 1.0);
    EXPECT_EQ(sensitivity_scale({0.0}), 1.0);
}

TEST(OptimizerConfig, ValidationNamesTheKey) {
    OptimizationConfig c;
    c.k = 1.3;
    try {
        c.validate();
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("optimizer.k"), std::string::npos);
    }
    c = {};
    c.move_limits = {{0, 0.5}, {0, 0.25}};
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.move_limits = {{0, 1.5}};
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.xi = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(OptimizerConfig, MoveLimitSchedule) {
    const OptimizationConfig c;
    EXPECT_EQ(c.move_fraction(0), 0.5);
    EXPECT_EQ(c.move_fraction(99), 0.5);
    EXPECT_EQ(c.move_fraction(100), 0.25);
    EXPECT_EQ(c.move_fraction(180), 0.25);
}

TEST(Reinit, KeepingInterfaceLeavesEveryGammaAlone) {
    const auto p = small_pack(0.0);
    auto field = small_seed(p);
    // Distort away from a distance function so the rebuild has work to do.
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> stretch(0.5, 2.0);
    for (double& v : field.phi) v *= stretch(rng);
    const auto before = compute_volume_fractions(field, p.regions);
    const auto out = detail::reinitialize_keeping_interface(field, nullptr);
    const auto after = compute_volume_fractions(out, p.regions);
    EXPECT_EQ(before.gamma, after.gamma);
    for (Index n = 0; n < field.phi.size(); ++n) EXPECT_EQ(field.phi[n] > 0.0, out.phi[n] > 0.0) << n;
}

TEST(RunOptimization, ZeroIterationsReturnsInitialDesign) {
    const auto p = small_pack(2e5);
    const auto seed = small_seed(p);
    const auto r = run_optimization(small_config(1.0, 0), p, seed);
    EXPECT_TRUE(r.history.empty());
    EXPECT_EQ(r.design.phi, seed.phi);
}

TEST(RunOptimization, FullSolidWithoutVolumePressureStaysPut) {
    const auto p = small_pack(0.0);
    auto c = small_config(1.0, 10);
    c.xi = 1.0;
    c.convergence_tolerance = 0.0;
    const auto r = run_optimization(c, p, initialize_design(p.grid, p.regions, SeedSpec::full_solid()));
    ASSERT_EQ(r.history.size(), 10u);
    const double first = r.history.front().structural_compliance;
    for (const auto& rec : r.history) EXPECT_NEAR(rec.structural_compliance, first, 0.01 * first);
}

class SmallRun : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        problem_ = new PackProblem(small_pack(2e5));
        config_ = small_config(0.7, 40);
        config_.convergence_tolerance = 0.0;
        result_ = new OptimizationResult(run_optimization(config_, *problem_, small_seed(*problem_)));
    }
    static void TearDownTestSuite() {
        delete result_;
        delete problem_;
    }
    static PackProblem* problem_;
    static OptimizationConfig config_;
    static OptimizationResult* result_;
};

PackProblem* SmallRun::problem_ = nullptr;
OptimizationConfig SmallRun::config_;
OptimizationResult* SmallRun::result_ = nullptr;

TEST_F(SmallRun, OneFiniteRecordPerIteration) {
    ASSERT_EQ(result_->history.size(), 40u);
    for (std::size_t i = 0; i < result_->history.size(); ++i) {
        const auto& r = result_->history[i];
        EXPECT_EQ(r.iteration, int(i));
        for (double v : {r.structural_compliance, r.thermal_compliance, r.objective, r.volume_fraction,
                         r.max_displacement, r.max_temperature, r.lambda})
            EXPECT_TRUE(std::isfinite(v));
        EXPECT_GE(r.lambda, 0.0);
    }
}

TEST_F(SmallRun, VolumeReachesAndTracksTarget) {
    const auto& h = result_->history;
    EXPECT_GT(h.front().volume_fraction, config_.xi + 0.05);
    std::size_t first = h.size();
    for (std::size_t i = 0; i < h.size(); ++i)
        if (std::abs(h[i].volume_fraction - config_.xi) <= 0.005) {
            first = i;
            break;
        }
    ASSERT_LT(first, h.size());
    for (std::size_t i = first; i < h.size(); ++i) EXPECT_LE(std::abs(h[i].volume_fraction - config_.xi), 0.01);
}

TEST_F(SmallRun, ReturnedDesignMatchesLastRecord) {
    const auto r = analyze_design(*problem_, result_->design, config_.gamma_min, config_.subsamples, config_.solver);
    const auto& last = result_->history.back();
    EXPECT_NEAR(r.displacement.compliance, last.structural_compliance, 1e-6 * last.structural_compliance);
    EXPECT_NEAR(r.temperature.compliance, last.thermal_compliance, 1e-6 * last.thermal_compliance);
    EXPECT_NEAR(r.volume_fraction, last.volume_fraction, 1e-12);
}

TEST_F(SmallRun, CellsStaySolid) {
    const auto state = compute_volume_fractions(result_->design, problem_->regions, config_.subsamples,
                                                config_.gamma_min);
    for (Index e = 0; e < problem_->regions.size(); ++e)
        if (problem_->regions.is_cell(e)) {
            EXPECT_EQ(state.gamma[e], 1.0);
        }
}

TEST_F(SmallRun, Deterministic) {
    const auto again = run_optimization(config_, *problem_, small_seed(*problem_));
    EXPECT_EQ(again.history, result_->history);
    EXPECT_EQ(again.design.phi, result_->design.phi);
}
