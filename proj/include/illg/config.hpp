#pragma once

// Run configuration and its flat "key = value" file format.

#include "illg/amm.hpp"
#include "illg/field.hpp"
#include "illg/mesh.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <system_error>

namespace illg {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Scheme { tps, amm, llg_tps };
enum class Preset { blowup, nutation };
enum class ModelKind { core, thinfilm };

struct RunConfig {
    Preset preset = Preset::blowup;
    Scheme scheme = Scheme::amm;
    std::optional<ModelKind> model;  // defaults to the preset's model

    // mesh: a file wins over the generated meshes
    std::string mesh_file;
    int level = 5;
    DiagonalPattern diagonal = DiagonalPattern::fixed;
    int ellipse_rings = 32;

    // time-step and horizon; exactly one of k / k_over_h / dt_seconds is used
    std::optional<double> k;
    std::optional<double> k_over_h;
    std::optional<double> dt_seconds;
    std::optional<double> t_final;
    std::optional<double> t_final_seconds;

    // fixed-point iteration
    std::optional<double> epsilon;
    std::optional<double> epsilon_over_h;
    int max_iterations = 1000;
    IncrementMeasure measure = IncrementMeasure::norm_sum;

    // dimensionless damping and inertia of the core model
    double alpha = 1.0;
    double tau = 1.0;

    PhysicalParams material;
    PulseParams pulse;  // time_unit is filled in by the preset

    double solver_tolerance = 1e-10;
    int solver_max_iterations = 500;
    std::size_t dense_threshold = 200;

    std::string csv;
    std::string vtk_prefix;
    int cadence = 1;
    int snapshot_cadence = 0;
    bool strict = false;

    void validate() const
    {
        if (k && !(*k > 0.0)) throw ConfigError("k must be positive");
        if (k_over_h && !(*k_over_h > 0.0)) throw ConfigError("k_over_h must be positive");
        if (dt_seconds && !(*dt_seconds > 0.0)) throw ConfigError("dt_seconds must be positive");
        if (t_final && !(*t_final > 0.0)) throw ConfigError("t_final must be positive");
        if (t_final_seconds && !(*t_final_seconds > 0.0)) throw ConfigError("t_final_seconds must be positive");
        if (epsilon && !(*epsilon > 0.0)) throw ConfigError("epsilon must be positive");
        if (epsilon_over_h && !(*epsilon_over_h > 0.0)) throw ConfigError("epsilon_over_h must be positive");
        if (static_cast<int>(k.has_value()) + static_cast<int>(k_over_h.has_value())
                + static_cast<int>(dt_seconds.has_value()) > 1) {
            throw ConfigError("give at most one of k, k_over_h, dt_seconds");
        }
        if (t_final && t_final_seconds) throw ConfigError("give at most one of t_final, t_final_seconds");
        if (epsilon && epsilon_over_h) throw ConfigError("give at most one of epsilon, epsilon_over_h");
        if (cadence < 1) throw ConfigError("cadence must be at least 1");
        if (snapshot_cadence < 0) throw ConfigError("snapshot_cadence must be nonnegative");
        if (max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
        if (level < 1 || level > 14) throw ConfigError("level must be in [1, 14]");
        if (ellipse_rings < 1) throw ConfigError("ellipse_rings must be at least 1");
        if (!(alpha > 0.0) || !(tau > 0.0)) throw ConfigError("alpha and tau must be positive");
        if (!(solver_tolerance > 0.0) || solver_max_iterations < 1) throw ConfigError("bad linear solver settings");
    }
};

inline const char* to_string(Scheme s)
{
    switch (s) {
    case Scheme::tps: return "tps";
    case Scheme::amm: return "amm";
    case Scheme::llg_tps: return "llg-tps";
    }
    return "?";
}

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v)
{
    double x = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
    return x;
}

inline int to_int(const std::string& key, const std::string& v)
{
    int x = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    }
    return x;
}

inline bool to_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

} // namespace detail

inline Scheme parse_scheme(const std::string& v)
{
    if (v == "tps") return Scheme::tps;
    if (v == "amm") return Scheme::amm;
    if (v == "llg-tps") return Scheme::llg_tps;
    throw ConfigError("scheme: expected tps, amm or llg-tps, got '" + v + "'");
}

inline DiagonalPattern parse_diagonal(const std::string& v)
{
    if (v == "fixed") return DiagonalPattern::fixed;
    if (v == "alternating") return DiagonalPattern::alternating;
    throw ConfigError("diagonal: expected fixed or alternating, got '" + v + "'");
}

inline IncrementMeasure parse_measure(const std::string& v)
{
    if (v == "norm-sum") return IncrementMeasure::norm_sum;
    if (v == "squared-sum") return IncrementMeasure::squared_sum;
    throw ConfigError("increment_measure: expected norm-sum or squared-sum, got '" + v + "'");
}

inline void apply_setting(RunConfig& c, const std::string& key, const std::string& v)
{
    using namespace detail;
    if (key == "preset") {
        if (v == "blowup") c.preset = Preset::blowup;
        else if (v == "nutation") c.preset = Preset::nutation;
        else throw ConfigError("preset: expected blowup or nutation, got '" + v + "'");
    } else if (key == "scheme") {
        c.scheme = parse_scheme(v);
    } else if (key == "model") {
        if (v == "core") c.model = ModelKind::core;
        else if (v == "thinfilm") c.model = ModelKind::thinfilm;
        else throw ConfigError("model: expected core or thinfilm, got '" + v + "'");
    } else if (key == "mesh_file") {
        c.mesh_file = v;
    } else if (key == "level") {
        c.level = to_int(key, v);
    } else if (key == "diagonal") {
        c.diagonal = parse_diagonal(v);
    } else if (key == "ellipse_rings") {
        c.ellipse_rings = to_int(key, v);
    } else if (key == "k") {
        c.k = to_double(key, v);
    } else if (key == "k_over_h") {
        c.k_over_h = to_double(key, v);
    } else if (key == "dt_seconds") {
        c.dt_seconds = to_double(key, v);
    } else if (key == "t_final") {
        c.t_final = to_double(key, v);
    } else if (key == "t_final_seconds") {
        c.t_final_seconds = to_double(key, v);
    } else if (key == "epsilon") {
        c.epsilon = to_double(key, v);
    } else if (key == "epsilon_over_h") {
        c.epsilon_over_h = to_double(key, v);
    } else if (key == "max_iterations") {
        c.max_iterations = to_int(key, v);
    } else if (key == "increment_measure") {
        c.measure = parse_measure(v);
    } else if (key == "alpha") {
        c.alpha = to_double(key, v);
    } else if (key == "tau") {
        c.tau = to_double(key, v);
    } else if (key == "saturation_magnetization") {
        c.material.saturation_magnetization = to_double(key, v);
    } else if (key == "exchange_stiffness") {
        c.material.exchange_stiffness = to_double(key, v);
    } else if (key == "anisotropy_constant") {
        c.material.anisotropy_constant = to_double(key, v);
    } else if (key == "material_alpha") {
        c.material.alpha = to_double(key, v);
    } else if (key == "gamma0") {
        c.material.gamma0 = to_double(key, v);
    } else if (key == "relaxation_time") {
        c.material.tau = to_double(key, v);
    } else if (key == "semi_axis_a") {
        c.material.semi_axis_a = to_double(key, v);
    } else if (key == "semi_axis_b") {
        c.material.semi_axis_b = to_double(key, v);
    } else if (key == "pulse_amplitude") {
        c.pulse.amplitude = to_double(key, v);
    } else if (key == "pulse_frequency") {
        c.pulse.frequency = to_double(key, v);
    } else if (key == "pulse_window") {
        c.pulse.window = to_double(key, v);
    } else if (key == "solver_tolerance") {
        c.solver_tolerance = to_double(key, v);
    } else if (key == "solver_max_iterations") {
        c.solver_max_iterations = to_int(key, v);
    } else if (key == "dense_threshold") {
        c.dense_threshold = static_cast<std::size_t>(to_int(key, v));
    } else if (key == "csv") {
        c.csv = v;
    } else if (key == "vtk_prefix") {
        c.vtk_prefix = v;
    } else if (key == "cadence") {
        c.cadence = to_int(key, v);
    } else if (key == "snapshot_cadence") {
        c.snapshot_cadence = to_int(key, v);
    } else if (key == "strict") {
        c.strict = to_bool(key, v);
    } else {
        throw ConfigError("unknown key '" + key + "'");
    }
}

inline RunConfig parse_config(std::istream& in)
{
    RunConfig c;
    std::map<std::string, std::size_t> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        line = detail::trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
        }
        if (auto it = seen.find(key); it != seen.end()) {
            throw ConfigError("line " + std::to_string(lineno) + ": '" + key + "' already set on line "
                              + std::to_string(it->second));
        }
        seen[key] = lineno;
        try {
            apply_setting(c, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    c.validate();
    return c;
}

inline RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config " + path);
    }
    return parse_config(in);
}

} // namespace illg
