#ifndef BATTOPT_HEATGEN_HPP
#define BATTOPT_HEATGEN_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "battopt/csv.hpp"
#include "battopt/errors.hpp"
#include "battopt/grid.hpp"

namespace battopt {

/// Piecewise-linear y(x) over strictly increasing x, held constant outside.
struct Table1D {
    std::vector<double> x, y;

    static Table1D constant(double v) { return {{0.0}, {v}}; }

    void validate(const std::string& name) const {
        if (x.empty() || x.size() != y.size()) throw ConfigError(name + ": table needs matching, nonempty columns");
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw ConfigError(name + ": table values must be finite");
            if (i > 0 && !(x[i] > x[i - 1])) throw ConfigError(name + ": abscissae must be strictly increasing");
        }
    }

    double operator()(double v) const {
        if (v <= x.front()) return y.front();
        if (v >= x.back()) return y.back();
        const auto it = std::upper_bound(x.begin(), x.end(), v);
        const std::size_t i = std::size_t(it - x.begin());
        const double t = (v - x[i - 1]) / (x[i] - x[i - 1]);
        return y[i - 1] + t * (y[i] - y[i - 1]);
    }
};

struct PowerSample {
    double time;  // s
    double power; // W per cell, discharge positive
};

struct PowerProfile {
    std::vector<PowerSample> samples;

    void validate() const {
        if (samples.empty()) throw ConfigError("power profile is empty");
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (!std::isfinite(samples[i].time) || !std::isfinite(samples[i].power))
                throw ConfigError("power profile: non-finite sample");
            if (i > 0 && !(samples[i].time > samples[i - 1].time))
                throw ConfigError("power profile: times must be strictly increasing");
        }
    }

    double start() const { return samples.front().time; }
    double end() const { return samples.back().time; }

    double power(double t) const {
        if (t <= samples.front().time) return samples.front().power;
        if (t >= samples.back().time) return samples.back().power;
        const auto it = std::upper_bound(samples.begin(), samples.end(), t,
                                         [](double v, const PowerSample& s) { return v < s.time; });
        const auto& b = *it;
        const auto& a = *(it - 1);
        return a.power + (t - a.time) / (b.time - a.time) * (b.power - a.power);
    }
};

/// Synthetic take-off / cruise / landing mission for one 21700 cell.
inline PowerProfile default_mission_profile() {
    return {{{0.0, 60.0},
             {90.0, 60.0},
             {120.0, 25.0},
             {1320.0, 25.0},
             {1350.0, 65.0},
             {1440.0, 65.0}}};
}

struct CellModel {
    double capacity_ah = 17.8 / 3.6;
    double resistance = 0.02; // ohm
    Table1D ocv = Table1D::constant(3.6);
    Table1D entropic = Table1D::constant(0.0); // dU/dT, V/K
    double volume = std::numbers::pi * 0.0105 * 0.0105 * 0.070; // m^3
    double initial_soc = 1.0;
    double nominal_energy_wh = 17.8;

    void validate() const {
        if (!(capacity_ah > 0.0)) throw ConfigError("heatgen.capacity_ah must be > 0");
        if (!(resistance >= 0.0)) throw ConfigError("heatgen.resistance must be >= 0");
        if (!(volume > 0.0)) throw ConfigError("heatgen.cell_volume must be > 0");
        if (!(initial_soc >= 0.0 && initial_soc <= 1.0)) throw ConfigError("heatgen.initial_soc must lie in [0, 1]");
        ocv.validate("heatgen.ocv");
        entropic.validate("heatgen.entropic");
        for (std::size_t i = 1; i < ocv.y.size(); ++i)
            if (ocv.y[i] < ocv.y[i - 1]) throw ConfigError("heatgen.ocv: OCV must be nondecreasing in SOC");
    }
};

struct HeatSample {
    double time;
    double q;       ///< (Q_irr + Q_rev) / cell volume, W/m^3
    double current; ///< A
    double voltage; ///< terminal, V
    double soc;
    double q_irr;   ///< W/m^3
    double q_rev;   ///< W/m^3
};

struct HeatGenerationSeries {
    std::vector<HeatSample> samples;
    double q_worst = 0.0; ///< W/m^3

    /// Q(t), linear between samples, held at the ends.
    double q_at(double t) const {
        if (samples.empty()) return 0.0;
        if (t <= samples.front().time) return samples.front().q;
        if (t >= samples.back().time) return samples.back().q;
        const auto it = std::upper_bound(samples.begin(), samples.end(), t,
                                         [](double v, const HeatSample& s) { return v < s.time; });
        const auto& b = *it;
        const auto& a = *(it - 1);
        return a.q + (t - a.time) / (b.time - a.time) * (b.q - a.q);
    }
    double end_time() const { return samples.empty() ? 0.0 : samples.back().time; }
};

/// Current drawing power p from open-circuit voltage u through r0: the root
/// of r0 I^2 - u I + p = 0 below the power peak, in cancellation-free form.
inline double solve_current(double p, double u, double r0, double time) {
    if (p == 0.0) return 0.0;
    const double disc = u * u - 4.0 * r0 * p;
    if (disc < 0.0)
        throw InfeasibleProfileError("power " + csv::format(p) + " W at t = " + csv::format(time) +
                                         " s exceeds the deliverable peak " + csv::format(u * u / (4.0 * r0)) + " W",
                                     time);
    return 2.0 * p / (u + std::sqrt(disc));
}

inline double series_worst(const std::vector<HeatSample>& s) {
    double w = 0.0;
    for (const auto& x : s) w = std::max({w, x.q, x.q_irr});
    return w;
}

/// Zero-order equivalent circuit plus entropic heat, stepped at fixed dt from
/// the first to the last profile time. Each sample reports the state at the
/// start of its step; the last one sits at the final time.
inline HeatGenerationSeries simulate_heat(const PowerProfile& profile, const CellModel& cell,
                                          double cell_temperature = 298.15, double dt = 1.0,
                                          Diagnostics* diag = nullptr) {
    if (!(dt > 0.0)) throw ConfigError("heatgen.dt must be > 0");
    profile.validate();
    cell.validate();
    HeatGenerationSeries out;
    double soc = cell.initial_soc;
    const double t0 = profile.start(), t1 = profile.end();
    const long steps = t1 > t0 ? long(std::ceil((t1 - t0) / dt - 1e-9)) : 0;
    bool clamped = false;
    for (long n = 0; n <= steps; ++n) {
        const double t = n == steps ? t1 : t0 + double(n) * dt;
        const double u = cell.ocv(soc);
        const double i = solve_current(profile.power(t), u, cell.resistance, t);
        const double q_irr = i * i * cell.resistance;
        const double q_rev = i * cell_temperature * cell.entropic(soc);
        out.samples.push_back({t, (q_irr + q_rev) / cell.volume, i, u - i * cell.resistance, soc,
                               q_irr / cell.volume, q_rev / cell.volume});
        if (n == steps) break;
        const double h = std::min(dt, t1 - t);
        soc -= i * h / (3600.0 * cell.capacity_ah);
        if (soc < 0.0 || soc > 1.0) {
            if (!clamped)
                warn(diag, "heatgen: state of charge left [0, 1] at t = " + csv::format(t + h) + " s, clamped");
            clamped = true;
            soc = std::clamp(soc, 0.0, 1.0);
        }
    }
    out.q_worst = series_worst(out.samples);
    return out;
}

/// Series from a direct (t, Q) listing. Electrical columns are unknown (NaN)
/// and the whole Q is booked as irreversible.
inline HeatGenerationSeries direct_series(const std::vector<std::pair<double, double>>& tq) {
    if (tq.empty()) throw ConfigError("heat series is empty");
    HeatGenerationSeries out;
    const double nan = std::nan("");
    for (std::size_t i = 0; i < tq.size(); ++i) {
        if (i > 0 && !(tq[i].first > tq[i - 1].first)) throw ConfigError("heat series: times must be strictly increasing");
        out.samples.push_back({tq[i].first, tq[i].second, nan, nan, nan, tq[i].second, 0.0});
    }
    out.q_worst = series_worst(out.samples);
    return out;
}

/// Uniform Q_worst on CELL elements, zero elsewhere.
inline std::vector<double> worst_case_source(const HeatGenerationSeries& series, const RegionMap& regions) {
    if (series.samples.empty()) throw PreconditionError("worst_case_source: empty series");
    std::vector<double> s(regions.size(), 0.0);
    for (Index e = 0; e < s.size(); ++e)
        if (regions.is_cell(e)) s[e] = series.q_worst;
    return s;
}

// CSV ingestion and output

inline PowerProfile read_power_profile(const std::string& path) {
    const auto t = csv::read(path, {"t", "P"});
    PowerProfile p;
    for (const auto& r : t.rows) p.samples.push_back({r[0], r[1]});
    p.validate();
    return p;
}

inline HeatGenerationSeries read_heat_series(const std::string& path) {
    const auto t = csv::read(path);
    const std::size_t ct = t.column("t"), cq = t.column("Q");
    std::vector<std::pair<double, double>> tq;
    for (const auto& r : t.rows) tq.emplace_back(r[ct], r[cq]);
    return direct_series(tq);
}

/// Two-column table (SOC, value) such as an OCV or dU/dT curve.
inline Table1D read_soc_table(const std::string& path, const std::string& value_column) {
    const auto t = csv::read(path, {"soc", value_column});
    Table1D tab;
    for (const auto& r : t.rows) {
        tab.x.push_back(r[0]);
        tab.y.push_back(r[1]);
    }
    tab.validate(path);
    return tab;
}

inline void write_heat_series(const HeatGenerationSeries& s, const std::string& path) {
    std::vector<std::vector<double>> rows;
    rows.reserve(s.samples.size());
    for (const auto& x : s.samples) rows.push_back({x.time, x.q, x.current, x.voltage, x.soc});
    csv::write(path, {"t", "Q", "I", "V", "soc"}, rows);
}

} // namespace battopt

#endif // BATTOPT_HEATGEN_HPP
