#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "battopt/config.hpp"

using namespace battopt;

namespace {

std::string message_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST(Config, EmptyFileGivesReferenceProblem) {
    const RunConfig c = parse_config("");
    EXPECT_EQ(c.materials.pack.conductivity, 220.0);
    EXPECT_EQ(c.materials.cell.conductivity, 1.25);
    EXPECT_EQ(c.materials.pack.youngs, 68e9);
    EXPECT_EQ(c.materials.cell.youngs, 1.5e9);
    EXPECT_EQ(c.materials.pack.poisson, 0.32);
    EXPECT_EQ(c.materials.cell.poisson, 0.2);
    EXPECT_EQ(c.materials.pack.expansion, 21e-6);
    EXPECT_EQ(c.materials.cell.expansion, 10e-6);
    EXPECT_EQ(c.materials.pack.heat_capacity, 2'430'000.0);
    EXPECT_EQ(c.materials.cell.heat_capacity, 1'767'574.0);
    EXPECT_EQ(c.grid.nx, 48);
    EXPECT_EQ(c.grid.ny, 32);
    EXPECT_EQ(c.grid.nz, 40);
    EXPECT_EQ(c.dof_count(), 265'188u);
    EXPECT_EQ(c.layout.cell_count(), 6);
    EXPECT_EQ(c.bc.traction[2], -15e6);
    EXPECT_EQ(c.optimizer.gamma_min, 1e-4);
}

TEST(Config, OutOfRangeNamesKey) {
    EXPECT_NE(message_of("[optimizer]\nk = 1.3\n").find("optimizer.k"), std::string::npos);
    EXPECT_NE(message_of("[grid]\nlx = -1\n").find("grid.lx"), std::string::npos);
    EXPECT_NE(message_of("[materials]\npack.poisson = 0.7\n").find("materials.pack.poisson"), std::string::npos);
    EXPECT_NE(message_of("[optimizer]\nxi = abc\n").find("optimizer.xi"), std::string::npos);
    EXPECT_NE(message_of("[grid]\nnx = 2.5\n").find("grid.nx"), std::string::npos);
}

TEST(Config, UnknownAndRepeatedKeysAreRejected) {
    EXPECT_NE(message_of("[optimizer]\nkk = 1\n").find("optimizer.kk"), std::string::npos);
    EXPECT_NE(message_of("[optimiser]\nk = 1\n").find("optimiser.k"), std::string::npos);
    EXPECT_NE(message_of("[optimizer]\nk = 1\nk = 0.5\n").find("repeated"), std::string::npos);
    EXPECT_FALSE(message_of("[optimizer\nk = 1\n").empty());
    EXPECT_FALSE(message_of("[optimizer]\njust words\n").empty());
}

TEST(Config, ParsesEveryKind) {
    const RunConfig c = parse_config(R"(# desk problem
[grid]
nx = 24   # half resolution
ny = 16
nz = 20
[materials]
pack.conductivity = 200
cell.heat_capacity = 1.8e6
[bc]
thermal_faces = z-
traction = 0, 1e6, -1e6
[optimizer]
k = 0.5
move_limits = 0:0.4, 50:0.2
coupled_sensitivity = false
solver = cholesky
seed = solid
[transient]
snapshots = 10, 20.5
[output]
directory = /tmp/runs
dump_every = 5
)");
    EXPECT_EQ(c.grid.nx, 24);
    EXPECT_EQ(c.dof_count(), Index(25 * 17 * 21 * 4));
    EXPECT_EQ(c.materials.pack.conductivity, 200.0);
    EXPECT_EQ(c.materials.cell.heat_capacity, 1.8e6);
    EXPECT_EQ(c.bc.thermal_faces, std::vector<std::string>{"z-"});
    EXPECT_EQ(c.bc.traction[1], 1e6);
    EXPECT_EQ(c.optimizer.k, 0.5);
    ASSERT_EQ(c.optimizer.move_limits.size(), 2u);
    EXPECT_EQ(c.optimizer.move_limits[1].iteration, 50);
    EXPECT_EQ(c.optimizer.move_limits[1].fraction, 0.2);
    EXPECT_FALSE(c.optimizer.coupled_sensitivity);
    EXPECT_EQ(c.optimizer.solver.kind, SolverKind::cholesky);
    EXPECT_EQ(c.seed.kind, SeedSpec::Kind::full_solid);
    EXPECT_EQ(c.transient.snapshot_times, (std::vector<double>{10.0, 20.5}));
    EXPECT_EQ(c.output.directory, "/tmp/runs");
    EXPECT_EQ(c.output.dump_every, 5);
}

TEST(Config, BadFaceAndSolverNames) {
    EXPECT_NE(message_of("[bc]\nclamp_faces = x*\n").find("x*"), std::string::npos);
    EXPECT_NE(message_of("[optimizer]\nsolver = lu\n").find("optimizer.solver"), std::string::npos);
    EXPECT_NE(message_of("[optimizer]\nmove_limits = 0.5\n").find("optimizer.move_limits"), std::string::npos);
}

TEST(Config, ReferencedFilesResolveRelativeToConfig) {
    const auto dir = std::filesystem::temp_directory_path() / "battopt_config_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream(dir / "ocv.csv") << "soc,ocv\n0,3.0\n1,4.2\n";
        std::ofstream(dir / "run.cfg") << "[heatgen]\nocv = ocv.csv\n[output]\ndirectory = out\n";
    }
    const RunConfig c = load_config((dir / "run.cfg").string());
    EXPECT_NEAR(c.heatgen.cell.ocv(0.5), 3.6, 1e-15);
    EXPECT_EQ(std::filesystem::path(c.output.directory), dir / "out");

    {
        std::ofstream(dir / "missing.cfg") << "[heatgen]\nprofile = nope.csv\n";
    }
    EXPECT_THROW(load_config((dir / "missing.cfg").string()), ConfigError);
    EXPECT_THROW(load_config((dir / "absent.cfg").string()), ConfigError);
    std::filesystem::remove_all(dir);
}

TEST(Config, HeatSeriesFromCellModelOrDirectFile) {
    const RunConfig c = parse_config("");
    const auto s = heat_series(c);
    EXPECT_GT(s.q_worst, 0.0);
    EXPECT_EQ(s.samples.front().time, 0.0);

    const auto path = (std::filesystem::temp_directory_path() / "battopt_q.csv").string();
    std::ofstream(path) << "t,Q\n0,100\n10,400\n";
    const RunConfig d = parse_config("[heatgen]\nheat_series = " + path + "\n");
    EXPECT_EQ(heat_series(d).q_worst, 400.0);
    std::remove(path.c_str());
}

TEST(Config, KeyListIsSortedAndDotted) {
    const auto keys = config_keys();
    EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
    for (const auto& k : keys) EXPECT_NE(k.find('.'), std::string::npos);
}
