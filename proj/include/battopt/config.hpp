#ifndef BATTOPT_CONFIG_HPP
#define BATTOPT_CONFIG_HPP

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "battopt/csv.hpp"
#include "battopt/errors.hpp"
#include "battopt/grid.hpp"
#include "battopt/heatgen.hpp"
#include "battopt/levelset.hpp"
#include "battopt/materials.hpp"
#include "battopt/optimizer.hpp"
#include "battopt/transient.hpp"

namespace battopt {

struct HeatgenSettings {
    std::string profile;     ///< t,P csv; empty uses the built-in mission
    std::string heat_series; ///< t,Q csv; bypasses the cell model when set
    std::string ocv;         ///< soc,ocv csv
    std::string entropic;    ///< soc,dudt csv
    CellModel cell;
    double cell_temperature = 298.15;
    double dt = 1.0;
};

struct OutputSettings {
    std::string directory = "out";
    int dump_every = 0;
};

struct RunConfig {
    GridConfig grid;
    CellLayout layout;
    MaterialSet materials;
    BcConfig bc;
    OptimizationConfig optimizer;
    SeedSpec seed;
    HeatgenSettings heatgen;
    TransientConfig transient;
    OutputSettings output;

    Index dof_count() const { return build_grid(grid).total_dofs(); }
};

namespace detail {

inline double to_number(const std::string& key, const std::string& v) {
    try {
        const double d = csv::parse_double(v, key);
        if (!std::isfinite(d)) throw IoError("");
        return d;
    } catch (const IoError&) {
        throw ConfigError(key + ": expected a finite number, got '" + v + "'");
    }
}

inline int to_int(const std::string& key, const std::string& v) {
    const double d = to_number(key, v);
    if (d != std::floor(d) || std::abs(d) > 1e9) throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return int(d);
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

inline std::vector<std::string> to_list(const std::string& v) {
    std::vector<std::string> out;
    if (csv::trim(v).empty()) return out;
    for (auto& s : csv::split(v)) out.push_back(s);
    return out;
}

inline std::vector<double> to_numbers(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& s : to_list(v)) out.push_back(to_number(key, s));
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

template <class T>
Setter number(T RunConfig::*block, double T::*field) {
    return [=](RunConfig& c, const std::string& k, const std::string& v) { c.*block.*field = to_number(k, v); };
}

template <class T>
Setter integer(T RunConfig::*block, int T::*field) {
    return [=](RunConfig& c, const std::string& k, const std::string& v) { c.*block.*field = to_int(k, v); };
}

inline void material_keys(std::map<std::string, Setter>& m, const std::string& prefix, Material MaterialSet::*which) {
    const std::pair<const char*, double Material::*> fields[] = {
        {"conductivity", &Material::conductivity}, {"youngs", &Material::youngs},
        {"poisson", &Material::poisson},           {"expansion", &Material::expansion},
        {"heat_capacity", &Material::heat_capacity}};
    for (const auto& [name, field] : fields)
        m[prefix + name] = [which, field](RunConfig& c, const std::string& k, const std::string& v) {
            c.materials.*which.*field = to_number(k, v);
        };
}

inline const std::map<std::string, Setter>& schema() {
    static const std::map<std::string, Setter> keys = [] {
        std::map<std::string, Setter> m;
        m["grid.nx"] = integer(&RunConfig::grid, &GridConfig::nx);
        m["grid.ny"] = integer(&RunConfig::grid, &GridConfig::ny);
        m["grid.nz"] = integer(&RunConfig::grid, &GridConfig::nz);
        m["grid.lx"] = number(&RunConfig::grid, &GridConfig::lx);
        m["grid.ly"] = number(&RunConfig::grid, &GridConfig::ly);
        m["grid.lz"] = number(&RunConfig::grid, &GridConfig::lz);

        m["layout.rows"] = integer(&RunConfig::layout, &CellLayout::rows);
        m["layout.cols"] = integer(&RunConfig::layout, &CellLayout::cols);
        m["layout.pitch"] = number(&RunConfig::layout, &CellLayout::pitch);
        m["layout.diameter"] = number(&RunConfig::layout, &CellLayout::diameter);
        m["layout.height"] = number(&RunConfig::layout, &CellLayout::height);

        material_keys(m, "materials.pack.", &MaterialSet::pack);
        material_keys(m, "materials.cell.", &MaterialSet::cell);

        m["bc.sink_temperature"] = number(&RunConfig::bc, &BcConfig::sink_temperature);
        m["bc.thermal_faces"] = [](RunConfig& c, const std::string&, const std::string& v) {
            c.bc.thermal_faces = to_list(v);
        };
        m["bc.clamp_faces"] = [](RunConfig& c, const std::string&, const std::string& v) {
            c.bc.clamp_faces = to_list(v);
        };
        m["bc.traction_faces"] = [](RunConfig& c, const std::string&, const std::string& v) {
            c.bc.traction_faces = to_list(v);
        };
        m["bc.traction"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            const auto t = to_numbers(k, v);
            if (t.size() != 3) throw ConfigError(k + ": expected three components");
            c.bc.traction = {t[0], t[1], t[2]};
        };

        using O = OptimizationConfig;
        m["optimizer.k"] = number(&RunConfig::optimizer, &O::k);
        m["optimizer.xi"] = number(&RunConfig::optimizer, &O::xi);
        m["optimizer.max_iterations"] = integer(&RunConfig::optimizer, &O::max_iterations);
        m["optimizer.move_limits"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.optimizer.move_limits.clear();
            for (const auto& item : to_list(v)) {
                const auto colon = item.find(':');
                if (colon == std::string::npos) throw ConfigError(k + ": entries look like iteration:fraction");
                c.optimizer.move_limits.push_back(
                    {to_int(k, csv::trim(item.substr(0, colon))), to_number(k, csv::trim(item.substr(colon + 1)))});
            }
        };
        m["optimizer.normalization_period"] = integer(&RunConfig::optimizer, &O::normalization_period);
        m["optimizer.approach_fraction"] = number(&RunConfig::optimizer, &O::approach_fraction);
        m["optimizer.convergence_window"] = integer(&RunConfig::optimizer, &O::convergence_window);
        m["optimizer.convergence_tolerance"] = number(&RunConfig::optimizer, &O::convergence_tolerance);
        m["optimizer.volume_tolerance"] = number(&RunConfig::optimizer, &O::volume_tolerance);
        m["optimizer.gamma_min"] = number(&RunConfig::optimizer, &O::gamma_min);
        m["optimizer.subsamples"] = integer(&RunConfig::optimizer, &O::subsamples);
        m["optimizer.cfl"] = number(&RunConfig::optimizer, &O::cfl);
        m["optimizer.step_scale"] = number(&RunConfig::optimizer, &O::step_scale);
        m["optimizer.coupled_sensitivity"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.optimizer.coupled_sensitivity = to_bool(k, v);
        };
        m["optimizer.solid_load_faces"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.optimizer.solid_load_faces = to_bool(k, v);
        };
        m["optimizer.sensitivity_history"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.optimizer.sensitivity_history = to_bool(k, v);
        };
        m["optimizer.solver"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            try {
                c.optimizer.solver.kind = parse_solver_kind(v);
            } catch (const ConfigError&) {
                throw ConfigError(k + ": unknown solver '" + v + "' (cg, cg-ichol, cholesky)");
            }
        };
        m["optimizer.solver_tolerance"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.optimizer.solver.tolerance = to_number(k, v);
        };
        m["optimizer.seed"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            if (v == "solid") c.seed.kind = SeedSpec::Kind::full_solid;
            else if (v == "holes") c.seed.kind = SeedSpec::Kind::hole_lattice;
            else throw ConfigError(k + ": expected holes or solid, got '" + v + "'");
        };
        m["optimizer.seed_holes"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            const auto h = to_numbers(k, v);
            if (h.size() != 3) throw ConfigError(k + ": expected three hole counts");
            c.seed.holes_x = to_int(k, csv::format(h[0]));
            c.seed.holes_y = to_int(k, csv::format(h[1]));
            c.seed.holes_z = to_int(k, csv::format(h[2]));
        };
        m["optimizer.seed_radius"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.seed.radius = to_number(k, v);
        };

        auto path = [](std::string HeatgenSettings::*field) -> Setter {
            return [field](RunConfig& c, const std::string&, const std::string& v) { c.heatgen.*field = v; };
        };
        m["heatgen.profile"] = path(&HeatgenSettings::profile);
        m["heatgen.heat_series"] = path(&HeatgenSettings::heat_series);
        m["heatgen.ocv"] = path(&HeatgenSettings::ocv);
        m["heatgen.entropic"] = path(&HeatgenSettings::entropic);
        auto cell = [](double CellModel::*field) -> Setter {
            return [field](RunConfig& c, const std::string& k, const std::string& v) {
                c.heatgen.cell.*field = to_number(k, v);
            };
        };
        m["heatgen.capacity_ah"] = cell(&CellModel::capacity_ah);
        m["heatgen.resistance"] = cell(&CellModel::resistance);
        m["heatgen.cell_volume"] = cell(&CellModel::volume);
        m["heatgen.initial_soc"] = cell(&CellModel::initial_soc);
        m["heatgen.nominal_energy_wh"] = cell(&CellModel::nominal_energy_wh);
        m["heatgen.cell_temperature"] = number(&RunConfig::heatgen, &HeatgenSettings::cell_temperature);
        m["heatgen.dt"] = number(&RunConfig::heatgen, &HeatgenSettings::dt);

        m["transient.dt"] = number(&RunConfig::transient, &TransientConfig::dt);
        m["transient.total_time"] = number(&RunConfig::transient, &TransientConfig::total_time);
        m["transient.initial_temperature"] = number(&RunConfig::transient, &TransientConfig::initial_temperature);
        m["transient.snapshots"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.transient.snapshot_times = to_numbers(k, v);
        };
        m["transient.solver_tolerance"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.transient.solver.tolerance = to_number(k, v);
        };

        m["output.directory"] = [](RunConfig& c, const std::string&, const std::string& v) {
            c.output.directory = v;
        };
        m["output.dump_every"] = integer(&RunConfig::output, &OutputSettings::dump_every);
        return m;
    }();
    return keys;
}

inline void require_positive(double v, const std::string& key) {
    if (!(v > 0.0)) throw ConfigError(key + " must be > 0");
}

} // namespace detail

/// Every key the file format accepts, sorted.
inline std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& [k, _] : detail::schema()) out.push_back(k);
    return out;
}

/// Range checks for everything, naming the offending key.
inline void validate_config(const RunConfig& c) {
    using detail::require_positive;
    if (c.grid.nx < 1 || c.grid.ny < 1 || c.grid.nz < 1) throw ConfigError("grid.nx, grid.ny, grid.nz must be >= 1");
    require_positive(c.grid.lx, "grid.lx");
    require_positive(c.grid.ly, "grid.ly");
    require_positive(c.grid.lz, "grid.lz");
    if (c.layout.rows < 0 || c.layout.cols < 0) throw ConfigError("layout.rows and layout.cols must be >= 0");
    require_positive(c.layout.pitch, "layout.pitch");
    require_positive(c.layout.diameter, "layout.diameter");
    require_positive(c.layout.height, "layout.height");
    for (const auto& [name, m] : {std::pair{"pack", &c.materials.pack}, std::pair{"cell", &c.materials.cell}}) {
        const std::string p = std::string("materials.") + name + ".";
        require_positive(m->conductivity, p + "conductivity");
        require_positive(m->youngs, p + "youngs");
        if (!(m->poisson > -1.0 && m->poisson < 0.5)) throw ConfigError(p + "poisson must lie in (-1, 0.5)");
        if (!std::isfinite(m->expansion)) throw ConfigError(p + "expansion must be finite");
        require_positive(m->heat_capacity, p + "heat_capacity");
    }
    for (const auto* list : {&c.bc.thermal_faces, &c.bc.clamp_faces, &c.bc.traction_faces})
        for (const auto& f : *list) {
            try {
                parse_face(f);
            } catch (const ConfigError&) {
                throw ConfigError("bc: unknown face '" + f + "' (x-, x+, y-, y+, z-, z+)");
            }
        }
    if (c.bc.thermal_faces.empty()) throw ConfigError("bc.thermal_faces must name at least one sink face");
    c.optimizer.validate();
    if (!(c.optimizer.solver.tolerance > 0.0 && c.optimizer.solver.tolerance < 1.0))
        throw ConfigError("optimizer.solver_tolerance must lie in (0, 1)");
    if (c.seed.kind == SeedSpec::Kind::hole_lattice) {
        if (c.seed.holes_x < 1 || c.seed.holes_y < 1 || c.seed.holes_z < 1)
            throw ConfigError("optimizer.seed_holes must be >= 1 each");
        require_positive(c.seed.radius, "optimizer.seed_radius");
    }
    if (c.heatgen.heat_series.empty()) c.heatgen.cell.validate();
    require_positive(c.heatgen.cell_temperature, "heatgen.cell_temperature");
    require_positive(c.heatgen.dt, "heatgen.dt");
    c.transient.validate();
    if (!(c.transient.solver.tolerance > 0.0 && c.transient.solver.tolerance < 1.0))
        throw ConfigError("transient.solver_tolerance must lie in (0, 1)");
    if (c.output.directory.empty()) throw ConfigError("output.directory must not be empty");
    if (c.output.dump_every < 0) throw ConfigError("output.dump_every must be >= 0");
}

/// Sectioned key = value text:
///
///   # comment
///   [optimizer]
///   k = 0.5
///   move_limits = 0:0.5, 100:0.25
///
/// Keys are `section.key`; unknown keys and repeated keys are errors.
/// Relative file paths resolve against `base_dir`, and referenced files must
/// exist.
inline RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {}) {
    RunConfig c;
    std::istringstream in(text);
    std::string line, section;
    std::map<std::string, int> seen;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        const std::string s = csv::trim(hash == std::string::npos ? line : line.substr(0, hash));
        const std::string where = "line " + std::to_string(lineno);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError(where + ": malformed section header");
            section = csv::trim(s.substr(1, s.size() - 2));
            if (section.empty()) throw ConfigError(where + ": empty section name");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        const std::string name = csv::trim(s.substr(0, eq));
        const std::string key = section.empty() ? name : section + "." + name;
        const auto it = detail::schema().find(key);
        if (it == detail::schema().end()) throw ConfigError(key + ": unknown key (" + where + ")");
        if (seen.count(key)) throw ConfigError(key + ": repeated (" + where + ")");
        seen[key] = lineno;
        it->second(c, key, csv::trim(s.substr(eq + 1)));
    }

    for (auto* p : {&c.heatgen.profile, &c.heatgen.heat_series, &c.heatgen.ocv, &c.heatgen.entropic}) {
        if (p->empty()) continue;
        std::filesystem::path fp(*p);
        if (fp.is_relative() && !base_dir.empty()) fp = base_dir / fp;
        *p = fp.string();
        if (!std::filesystem::exists(fp)) throw ConfigError("heatgen: referenced file '" + *p + "' does not exist");
    }
    if (!c.output.directory.empty()) {
        std::filesystem::path out(c.output.directory);
        if (out.is_relative() && !base_dir.empty()) c.output.directory = (base_dir / out).string();
    }
    if (!c.heatgen.ocv.empty()) c.heatgen.cell.ocv = read_soc_table(c.heatgen.ocv, "ocv");
    if (!c.heatgen.entropic.empty()) c.heatgen.cell.entropic = read_soc_table(c.heatgen.entropic, "dudt");
    validate_config(c);
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), std::filesystem::path(path).parent_path());
}

/// Q(t) for the configured cell: a direct series when given, otherwise the
/// equivalent-circuit model over the profile.
inline HeatGenerationSeries heat_series(const RunConfig& c, Diagnostics* diag = nullptr) {
    if (!c.heatgen.heat_series.empty()) return read_heat_series(c.heatgen.heat_series);
    const PowerProfile profile = c.heatgen.profile.empty() ? default_mission_profile()
                                                           : read_power_profile(c.heatgen.profile);
    return simulate_heat(profile, c.heatgen.cell, c.heatgen.cell_temperature, c.heatgen.dt, diag);
}

} // namespace battopt

#endif // BATTOPT_CONFIG_HPP
