#ifndef BATTOPT_CLI_HPP
#define BATTOPT_CLI_HPP

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "battopt/analysis.hpp"
#include "battopt/config.hpp"
#include "battopt/csv.hpp"
#include "battopt/heatgen.hpp"
#include "battopt/optimizer.hpp"
#include "battopt/transient.hpp"
#include "battopt/vtk.hpp"

namespace battopt {

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_config = 2, exit_solver = 3 };

// ---------------------------------------------------------------------------
// Convergence CSV

inline const std::vector<std::string>& convergence_header() {
    static const std::vector<std::string> h{"iter", "C_S", "C_T", "J", "volfrac", "max_disp", "max_temp", "lambda"};
    return h;
}

inline std::vector<double> convergence_row(const ConvergenceRecord& r) {
    return {double(r.iteration), r.structural_compliance, r.thermal_compliance, r.objective,
            r.volume_fraction,   r.max_displacement,      r.max_temperature,    r.lambda};
}

inline void write_convergence(const std::vector<ConvergenceRecord>& h, const std::string& path) {
    std::vector<std::vector<double>> rows;
    for (const auto& r : h) rows.push_back(convergence_row(r));
    csv::write(path, convergence_header(), rows);
}

inline std::vector<ConvergenceRecord> read_convergence(const std::string& path) {
    const auto t = csv::read(path, convergence_header());
    std::vector<ConvergenceRecord> out;
    for (const auto& r : t.rows) out.push_back({int(r[0]), r[1], r[2], r[3], r[4], r[5], r[6], r[7]});
    return out;
}

// ---------------------------------------------------------------------------
// Field export

inline FieldSnapshot design_snapshot(const PackProblem& problem, const LevelSetField& phi, const DesignState& design,
                                     const Vector* temperature = nullptr, const Vector* displacement = nullptr) {
    FieldSnapshot s(problem.grid);
    s.add_point("phi", phi.phi);
    if (temperature) s.add_point("T", std::vector<double>(temperature->data(), temperature->data() + temperature->size()));
    if (displacement) {
        std::vector<double> u(displacement->data(), displacement->data() + displacement->size());
        std::vector<double> mag(problem.grid.node_count());
        for (Index n = 0; n < mag.size(); ++n)
            mag[n] = std::sqrt(u[3 * n] * u[3 * n] + u[3 * n + 1] * u[3 * n + 1] + u[3 * n + 2] * u[3 * n + 2]);
        s.add_point("u", std::move(u), 3).add_point("u_mag", std::move(mag));
    }
    std::vector<double> region(problem.regions.size());
    for (Index e = 0; e < region.size(); ++e) region[e] = problem.regions.is_cell(e) ? 1.0 : 0.0;
    s.add_cell("gamma", design.gamma).add_cell("region", std::move(region));
    return s;
}

inline FieldSnapshot response_snapshot(const PackProblem& problem, const LevelSetField& phi, const DesignResponse& r) {
    return design_snapshot(problem, phi, r.design, &r.temperature.values, &r.displacement.values);
}

/// The phi array of a dump written by `optimize`, checked against the grid.
inline LevelSetField read_design(const std::string& path, const StructuredGrid& grid) {
    const FieldSnapshot s = read_vtk(path);
    if (!(s.grid == grid)) throw ConfigError(path + ": design grid does not match the configured grid");
    const FieldArray* phi = s.find("phi");
    if (!phi || phi->components != 1 || phi->values.size() != grid.node_count())
        throw ConfigError(path + ": no nodal 'phi' array");
    return LevelSetField(grid, phi->values);
}

// ---------------------------------------------------------------------------
// Commands

struct RunSummary {
    double k = 0.0;
    ConvergenceRecord initial, final;
};

inline PackProblem problem_for(const RunConfig& c, double q) {
    return make_pack_problem(build_grid(c.grid), c.layout, c.bc, c.materials, q);
}

inline std::string iteration_name(int it) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "design_iter_%04d.vtk", it);
    return buf;
}

/// Full optimization into `dir`: convergence.csv, design_final.vtk and the
/// optional per-iteration dumps.
inline RunSummary optimize_into(const RunConfig& c, const std::filesystem::path& dir, std::ostream& log) {
    std::filesystem::create_directories(dir);
    Diagnostics diag;
    const double q = heat_series(c, &diag).q_worst;
    const PackProblem problem = problem_for(c, q);
    const LevelSetField seed = initialize_design(problem.grid, problem.regions, c.seed);

    std::optional<Vector> last_t, last_u;
    std::optional<DesignState> last_design;
    auto observer = [&](const ConvergenceRecord& rec, const LevelSetField& phi, const DesignResponse& r) {
        last_t = r.temperature.values;
        last_u = r.displacement.values;
        last_design = r.design;
        if (c.output.dump_every > 0 && rec.iteration % c.output.dump_every == 0)
            write_vtk(response_snapshot(problem, phi, r), (dir / iteration_name(rec.iteration)).string());
    };
    const OptimizationResult result = run_optimization(c.optimizer, problem, seed, observer);
    for (const auto& d : result.diagnostics) diag.push_back(d);

    write_convergence(result.history, (dir / "convergence.csv").string());
    if (last_design) {
        write_vtk(design_snapshot(problem, result.design, *last_design, &*last_t, &*last_u),
                  (dir / "design_final.vtk").string());
    } else {
        const DesignState d =
            compute_volume_fractions(result.design, problem.regions, c.optimizer.subsamples, c.optimizer.gamma_min);
        write_vtk(design_snapshot(problem, result.design, d), (dir / "design_final.vtk").string());
    }
    for (const auto& d : diag) log << "warning: " << d << '\n';
    log << "optimize: k = " << csv::format(c.optimizer.k) << ", " << result.history.size() << " iterations"
        << (result.converged ? " (converged)" : "") << ", Q_worst = " << csv::format(q) << " W/m^3\n";

    RunSummary s;
    s.k = c.optimizer.k;
    if (!result.history.empty()) {
        s.initial = result.history.front();
        s.final = result.history.back();
    }
    return s;
}

inline std::string k_directory(double k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "k_%.3f", k);
    return buf;
}

/// One row per k in descending order. Displacement and temperature rise are
/// normalized twice: by the k = 1 run (when present) and by each run's own
/// initial design.
inline void write_pareto(std::vector<RunSummary> runs, double sink, const std::string& path) {
    std::sort(runs.begin(), runs.end(), [](const RunSummary& a, const RunSummary& b) { return a.k > b.k; });
    const RunSummary* ref = nullptr;
    for (const auto& r : runs)
        if (r.k == 1.0) ref = &r;
    const double nan = std::nan("");
    auto ratio = [](double a, double b) { return b != 0.0 ? a / b : std::nan(""); };
    std::vector<std::vector<double>> rows;
    for (const auto& r : runs) {
        const double rise = r.final.max_temperature - sink;
        rows.push_back({r.k, r.final.structural_compliance, r.final.thermal_compliance, r.final.max_displacement,
                        r.final.max_temperature,
                        ref ? ratio(r.final.max_displacement, ref->final.max_displacement) : nan,
                        ref ? ratio(rise, ref->final.max_temperature - sink) : nan,
                        ratio(r.final.max_displacement, r.initial.max_displacement),
                        ratio(rise, r.initial.max_temperature - sink)});
    }
    csv::write(path,
               {"k", "C_S", "C_T", "max_disp", "max_temp", "max_disp_rel_k1", "temp_rise_rel_k1",
                "max_disp_rel_initial", "temp_rise_rel_initial"},
               rows);
}

inline constexpr const char* default_sweep_weights = "1.0,0.9,0.7,0.5,0.3";

inline std::vector<double> parse_k_list(const std::string& text) {
    std::vector<double> ks;
    for (const auto& s : csv::split(text)) {
        const double k = detail::to_number("--k", s);
        if (!(k >= 0.0 && k <= 1.0)) throw ConfigError("--k: weights must lie in [0, 1]");
        ks.push_back(k);
    }
    if (ks.empty()) throw ConfigError("--k: empty list");
    return ks;
}

// ---------------------------------------------------------------------------
// Entry point

/// The `battopt` command line. Never throws; returns the exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Level-set thermo-mechanical design of battery pack housings"};
    app.require_subcommand(1);
    std::string config_path, out_dir, design_path, k_list;
    std::optional<double> k_override;
    std::optional<int> max_iter, dump_every;

    auto common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "run configuration file");
        sub->add_option("-o,--out", out_dir, "output directory (overrides output.directory)");
    };
    auto* heatgen = app.add_subcommand("heatgen", "power profile -> heat generation series CSV");
    common(heatgen);
    auto* optimize = app.add_subcommand("optimize", "run the level-set optimization");
    common(optimize);
    optimize->add_option("--k", k_override, "structural weight in [0, 1]");
    optimize->add_option("--max-iter", max_iter, "iteration limit");
    optimize->add_option("--dump-every", dump_every, "write a VTK dump every N iterations");
    auto* analyze = app.add_subcommand("analyze", "steady thermal and elastic analysis of a design dump");
    common(analyze);
    analyze->add_option("-d,--design", design_path, "VTK dump with a nodal phi array")->required();
    auto* transient = app.add_subcommand("transient", "mission transient of a design dump");
    common(transient);
    transient->add_option("-d,--design", design_path, "VTK dump with a nodal phi array")->required();
    auto* sweep = app.add_subcommand("sweep", "optimize for several weights and summarize the trade-off");
    common(sweep);
    sweep->add_option("--k", k_list, "comma-separated weights")->default_str(default_sweep_weights);
    sweep->add_option("--max-iter", max_iter, "iteration limit");
    sweep->add_option("--dump-every", dump_every, "write a VTK dump every N iterations");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return exit_usage;
    }

    try {
        RunConfig c = config_path.empty() ? parse_config("") : load_config(config_path);
        if (!out_dir.empty()) c.output.directory = out_dir;
        if (max_iter) c.optimizer.max_iterations = *max_iter;
        if (dump_every) c.output.dump_every = *dump_every;
        if (k_override) c.optimizer.k = *k_override;
        validate_config(c);
        const std::filesystem::path dir(c.output.directory);

        if (*heatgen) {
            std::filesystem::create_directories(dir);
            Diagnostics diag;
            const auto series = heat_series(c, &diag);
            for (const auto& d : diag) err << "warning: " << d << '\n';
            const auto path = dir / "heat_series.csv";
            write_heat_series(series, path.string());
            out << "heatgen: " << series.samples.size() << " samples, Q_worst = " << csv::format(series.q_worst)
                << " W/m^3 -> " << path.string() << '\n';
        } else if (*optimize) {
            optimize_into(c, dir, out);
        } else if (*analyze) {
            std::filesystem::create_directories(dir);
            const double q = heat_series(c).q_worst;
            const PackProblem problem = problem_for(c, q);
            const LevelSetField phi = read_design(design_path, problem.grid);
            const auto r = analyze_design(problem, phi, c.optimizer.gamma_min, c.optimizer.subsamples, c.optimizer.solver);
            write_vtk(response_snapshot(problem, phi, r), (dir / "analysis.vtk").string());
            csv::write((dir / "analysis.csv").string(), {"C_S", "C_T", "volfrac", "max_disp", "max_temp"},
                       {{r.displacement.compliance, r.temperature.compliance, r.volume_fraction,
                         r.displacement.max_magnitude(), r.temperature.max()}});
            out << "analyze: C_S = " << csv::format(r.displacement.compliance)
                << ", C_T = " << csv::format(r.temperature.compliance) << ", max T = " << csv::format(r.temperature.max())
                << " K\n";
        } else if (*transient) {
            std::filesystem::create_directories(dir);
            Diagnostics diag;
            const auto series = heat_series(c, &diag);
            const PackProblem problem = problem_for(c, series.q_worst);
            const LevelSetField phi = read_design(design_path, problem.grid);
            const DesignState design =
                compute_volume_fractions(phi, problem.regions, c.optimizer.subsamples, c.optimizer.gamma_min);
            const auto h = run_transient(problem, design, series, c.transient, &diag);
            for (const auto& d : diag) err << "warning: " << d << '\n';
            write_temperature_history(h, (dir / "transient_history.csv").string());
            for (const auto& [t, field] : h.snapshots) {
                char name[64];
                std::snprintf(name, sizeof name, "transient_%010.3f.vtk", t);
                write_vtk(design_snapshot(problem, phi, design, &field), (dir / name).string());
            }
            out << "transient: " << h.samples.size() << " samples, max T over mission = "
                << csv::format(h.max_over_time) << " K\n";
        } else if (*sweep) {
            const auto ks = parse_k_list(k_list.empty() ? default_sweep_weights : k_list);
            std::vector<RunSummary> runs;
            for (double k : ks) {
                RunConfig rc = c;
                rc.optimizer.k = k;
                runs.push_back(optimize_into(rc, dir / k_directory(k), out));
            }
            write_pareto(runs, c.bc.sink_temperature, (dir / "pareto.csv").string());
            out << "sweep: " << runs.size() << " runs -> " << (dir / "pareto.csv").string() << '\n';
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << '\n';
        return exit_config;
    } catch (const InfeasibleProfileError& e) {
        err << "heat generation: " << e.what() << '\n';
        return exit_config;
    } catch (const SolverError& e) {
        err << "solver failure: " << e.what() << '\n';
        return exit_solver;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "io error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_solver;
    }
    return exit_ok;
}

} // namespace battopt

#endif // BATTOPT_CLI_HPP
