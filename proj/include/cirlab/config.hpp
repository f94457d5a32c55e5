#pragma once

// Experiment configuration: line-oriented `key = value` documents with
// `[section]` headers and `#` comments. Every key has a default; unknown
// sections or keys are rejected with the line number.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cirlab/cdyn.hpp"
#include "cirlab/errors.hpp"
#include "cirlab/mc.hpp"
#include "cirlab/model.hpp"
#include "cirlab/quantum.hpp"
#include "cirlab/semiclassics.hpp"

namespace cirlab {

enum class Mode { ClassicalSweep, QuantumSweep, FreespaceTheta, DensityMap, Convergence, BohrSommerfeld, ScatteringLength };

inline std::string_view to_string(Mode m) {
    switch (m) {
    case Mode::ClassicalSweep: return "classical-sweep";
    case Mode::QuantumSweep: return "quantum-sweep";
    case Mode::FreespaceTheta: return "freespace-theta";
    case Mode::DensityMap: return "density-map";
    case Mode::Convergence: return "convergence";
    case Mode::BohrSommerfeld: return "bohr-sommerfeld";
    case Mode::ScatteringLength: return "scattering-length";
    }
    return "?";
}

inline Mode parse_mode(std::string_view s) {
    for (Mode m : {Mode::ClassicalSweep, Mode::QuantumSweep, Mode::FreespaceTheta, Mode::DensityMap, Mode::Convergence,
                   Mode::BohrSommerfeld, Mode::ScatteringLength})
        if (to_string(m) == s) return m;
    throw ArgumentError("unknown mode '" + std::string(s) + "'");
}

enum class GridSpacing { Log, Linear, List };

struct SweepConfig {
    SweepAxis axis = SweepAxis::V0;
    GridSpacing spacing = GridSpacing::Log;
    double lo = 1e-3;
    double hi = 20.0;
    int points = 40;
    std::vector<double> values;  // used when spacing = list

    bool operator==(const SweepConfig&) const = default;

    std::vector<double> grid() const {
        switch (spacing) {
        case GridSpacing::Log: return log_grid(lo, hi, std::size_t(points));
        case GridSpacing::Linear: return linear_grid(lo, hi, std::size_t(points));
        case GridSpacing::List: return values;
        }
        return {};
    }
};

struct DensityConfig {
    std::vector<double> v0_values{0.01, 9.0};
    double x_half = 4.0;
    double z_half = 4.0;
    int nx = 80;
    int nz = 80;
    double central_half = 2.0;  // half-width of the interaction-region box
    bool theta_sweep = false;   // also write the confined winding angle over the sweep grid

    bool operator==(const DensityConfig&) const = default;
};

struct ConvergenceConfig {
    std::vector<double> v0_values{0.006, 0.043, 20.0};
    std::vector<double> sizes{100, 400, 1600};
    int repeats = 20;

    bool operator==(const ConvergenceConfig&) const = default;
};

struct FreespaceConfig {
    double s = 4.0;
    double energy = 0.1;

    bool operator==(const FreespaceConfig&) const = default;
};

struct BohrConfig {
    int n_max = 5;
    int lz = 0;

    bool operator==(const BohrConfig&) const = default;
};

struct ExperimentConfig {
    Mode mode = Mode::ClassicalSweep;
    std::string output = "out";
    std::uint64_t master_seed = 42;
    int workers = 1;

    ScatterParams params;
    PotentialSpec potential{PotentialKind::Yukawa, 0.0, 1.0};
    UnitSystem units;
    OrbitSamplingConfig sampling;
    IntegratorConfig integrator;
    int n_events = 1600;
    int max_attempts = 3;
    double excluded_budget = 0.05;
    SweepConfig sweep;
    QuantumNumerics quantum;
    FreespaceConfig freespace;
    DensityConfig density;
    ConvergenceConfig convergence;
    BohrConfig bohr;

    bool operator==(const ExperimentConfig&) const = default;

    EnsembleSpec ensemble() const {
        EnsembleSpec e;
        e.params = params;
        e.potential = potential;
        e.n_events = std::size_t(n_events);
        e.master_seed = master_seed;
        e.integrator = integrator;
        e.sampling = sampling;
        e.units = units;
        e.max_attempts = max_attempts;
        e.excluded_budget = excluded_budget;
        return e;
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);  // shortest round-trip form
    return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& s) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v))
        throw ArgumentError("expected a finite number, got '" + s + "'");
    return v;
}

inline long long parse_int(const std::string& s) {
    long long v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ArgumentError("expected an integer, got '" + s + "'");
    return v;
}

inline std::uint64_t parse_u64(const std::string& s) {
    std::uint64_t v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw ArgumentError("expected a non-negative integer, got '" + s + "'");
    return v;
}

inline bool parse_bool(const std::string& s) {
    if (s == "true") return true;
    if (s == "false") return false;
    throw ArgumentError("expected true or false, got '" + s + "'");
}

inline std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    if (trim(s).empty()) return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item)));
    return out;
}

inline std::string format_list(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += format_double(v[i]);
    }
    return out;
}

struct ConfigKey {
    std::string section, key;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

template <class T>
ConfigKey dbl(std::string sec, std::string key, T getter) {
    return {sec, key, [getter](const ExperimentConfig& c) { return format_double(getter(const_cast<ExperimentConfig&>(c))); },
            [getter](ExperimentConfig& c, const std::string& v) { getter(c) = parse_double(v); }};
}

template <class T>
ConfigKey integer(std::string sec, std::string key, T getter) {
    return {sec, key, [getter](const ExperimentConfig& c) { return std::to_string(getter(const_cast<ExperimentConfig&>(c))); },
            [getter](ExperimentConfig& c, const std::string& v) {
                using I = std::remove_reference_t<decltype(getter(c))>;
                getter(c) = static_cast<I>(parse_int(v));
            }};
}

template <class T>
ConfigKey boolean(std::string sec, std::string key, T getter) {
    return {sec, key, [getter](const ExperimentConfig& c) { return std::string(getter(const_cast<ExperimentConfig&>(c)) ? "true" : "false"); },
            [getter](ExperimentConfig& c, const std::string& v) { getter(c) = parse_bool(v); }};
}

template <class T>
ConfigKey list(std::string sec, std::string key, T getter) {
    return {sec, key, [getter](const ExperimentConfig& c) { return format_list(getter(const_cast<ExperimentConfig&>(c))); },
            [getter](ExperimentConfig& c, const std::string& v) { getter(c) = parse_list(v); }};
}

inline const std::vector<ConfigKey>& config_keys() {
    using C = ExperimentConfig;
    static const std::vector<ConfigKey> keys = {
        {"run", "mode", [](const C& c) { return std::string(to_string(c.mode)); },
         [](C& c, const std::string& v) { c.mode = parse_mode(v); }},
        {"run", "output", [](const C& c) { return c.output; }, [](C& c, const std::string& v) { c.output = v; }},
        {"run", "master_seed", [](const C& c) { return std::to_string(c.master_seed); },
         [](C& c, const std::string& v) { c.master_seed = parse_u64(v); }},
        integer("run", "workers", [](C& c) -> int& { return c.workers; }),

        dbl("physics", "e_perp", [](C& c) -> double& { return c.params.e_perp; }),
        dbl("physics", "e_par", [](C& c) -> double& { return c.params.e_par; }),
        integer("physics", "lz", [](C& c) -> int& { return c.params.lz; }),
        integer("physics", "n", [](C& c) -> int& { return c.params.n; }),
        dbl("physics", "omega", [](C& c) -> double& { return c.units.omega; }),
        {"physics", "kind", [](const C& c) { return std::string(to_string(c.potential.kind)); },
         [](C& c, const std::string& v) { c.potential.kind = parse_potential_kind(v); }},
        dbl("physics", "v0", [](C& c) -> double& { return c.potential.v0; }),
        dbl("physics", "range", [](C& c) -> double& { return c.potential.range; }),

        dbl("sampling", "delta_max", [](C& c) -> double& { return c.sampling.delta_max; }),
        dbl("sampling", "z0", [](C& c) -> double& { return c.sampling.z0; }),
        boolean("sampling", "random_orientation", [](C& c) -> bool& { return c.sampling.random_orientation; }),

        dbl("integrator", "atol", [](C& c) -> double& { return c.integrator.atol; }),
        dbl("integrator", "rtol", [](C& c) -> double& { return c.integrator.rtol; }),
        dbl("integrator", "h_init", [](C& c) -> double& { return c.integrator.h_init; }),
        dbl("integrator", "h_min", [](C& c) -> double& { return c.integrator.h_min; }),
        dbl("integrator", "h_max", [](C& c) -> double& { return c.integrator.h_max; }),
        integer("integrator", "max_steps", [](C& c) -> long& { return c.integrator.max_steps; }),
        dbl("integrator", "z_cut", [](C& c) -> double& { return c.integrator.z_cut; }),
        dbl("integrator", "t_max", [](C& c) -> double& { return c.integrator.t_max; }),
        {"integrator", "branch_policy",
         [](const C& c) { return std::string(c.integrator.branch_policy == BranchPolicy::Continue ? "continue" : "terminate"); },
         [](C& c, const std::string& v) {
             if (v == "continue") c.integrator.branch_policy = BranchPolicy::Continue;
             else if (v == "terminate") c.integrator.branch_policy = BranchPolicy::Terminate;
             else throw ArgumentError("expected continue or terminate, got '" + v + "'");
         }},
        boolean("integrator", "local_extrapolation", [](C& c) -> bool& { return c.integrator.local_extrapolation; }),

        integer("ensemble", "n_events", [](C& c) -> int& { return c.n_events; }),
        integer("ensemble", "max_attempts", [](C& c) -> int& { return c.max_attempts; }),
        dbl("ensemble", "excluded_budget", [](C& c) -> double& { return c.excluded_budget; }),

        {"sweep", "axis", [](const C& c) { return std::string(to_string(c.sweep.axis)); },
         [](C& c, const std::string& v) { c.sweep.axis = parse_axis(v); }},
        {"sweep", "spacing",
         [](const C& c) {
             return std::string(c.sweep.spacing == GridSpacing::Log ? "log"
                                : c.sweep.spacing == GridSpacing::Linear ? "linear" : "list");
         },
         [](C& c, const std::string& v) {
             if (v == "log") c.sweep.spacing = GridSpacing::Log;
             else if (v == "linear") c.sweep.spacing = GridSpacing::Linear;
             else if (v == "list") c.sweep.spacing = GridSpacing::List;
             else throw ArgumentError("expected log, linear or list, got '" + v + "'");
         }},
        dbl("sweep", "lo", [](C& c) -> double& { return c.sweep.lo; }),
        dbl("sweep", "hi", [](C& c) -> double& { return c.sweep.hi; }),
        integer("sweep", "points", [](C& c) -> int& { return c.sweep.points; }),
        list("sweep", "values", [](C& c) -> std::vector<double>& { return c.sweep.values; }),

        integer("quantum", "n_theta", [](C& c) -> int& { return c.quantum.n_theta; }),
        integer("quantum", "n_r", [](C& c) -> int& { return c.quantum.n_r; }),
        dbl("quantum", "r_m", [](C& c) -> double& { return c.quantum.r_m; }),
        dbl("quantum", "gamma", [](C& c) -> double& { return c.quantum.gamma; }),
        dbl("quantum", "max_condition", [](C& c) -> double& { return c.quantum.max_condition; }),
        boolean("quantum", "richardson", [](C& c) -> bool& { return c.quantum.richardson; }),

        dbl("freespace", "s", [](C& c) -> double& { return c.freespace.s; }),
        dbl("freespace", "energy", [](C& c) -> double& { return c.freespace.energy; }),

        list("density", "v0_values", [](C& c) -> std::vector<double>& { return c.density.v0_values; }),
        dbl("density", "x_half", [](C& c) -> double& { return c.density.x_half; }),
        dbl("density", "z_half", [](C& c) -> double& { return c.density.z_half; }),
        integer("density", "nx", [](C& c) -> int& { return c.density.nx; }),
        integer("density", "nz", [](C& c) -> int& { return c.density.nz; }),
        dbl("density", "central_half", [](C& c) -> double& { return c.density.central_half; }),
        boolean("density", "theta_sweep", [](C& c) -> bool& { return c.density.theta_sweep; }),

        list("convergence", "v0_values", [](C& c) -> std::vector<double>& { return c.convergence.v0_values; }),
        list("convergence", "sizes", [](C& c) -> std::vector<double>& { return c.convergence.sizes; }),
        integer("convergence", "repeats", [](C& c) -> int& { return c.convergence.repeats; }),

        integer("bohr", "n_max", [](C& c) -> int& { return c.bohr.n_max; }),
        integer("bohr", "lz", [](C& c) -> int& { return c.bohr.lz; }),
    };
    return keys;
}

inline void require(bool ok, const std::string& key, const std::string& msg) {
    if (!ok) throw ValidationError(key + ": " + msg);
}

} // namespace detail

/// Checks every field; the message starts with the offending `section.key`.
inline void validate_config(const ExperimentConfig& c) {
    using detail::require;
    require(!c.output.empty(), "run.output", "must not be empty");
    require(c.workers >= 0, "run.workers", "must be >= 0 (0 = all cores)");
    require(c.units.omega > 0.0, "physics.omega", "must be > 0");
    require(c.params.e_par > 0.0, "physics.e_par", "must be > 0");
    require(c.params.n >= 0, "physics.n", "must be >= 0");
    require(c.params.e_perp >= std::abs(c.params.lz) * c.units.omega, "physics.e_perp",
            "must be >= |lz|*omega = " + detail::format_double(std::abs(c.params.lz) * c.units.omega));
    require(c.potential.v0 >= 0.0, "physics.v0", "must be >= 0");
    require(c.potential.range > 0.0, "physics.range", "must be > 0");
    require(c.sampling.delta_max >= 0.0, "sampling.delta_max", "must be >= 0");
    require(c.sampling.z0 < 0.0, "sampling.z0", "must be negative");
    require(c.integrator.atol > 0.0, "integrator.atol", "must be > 0");
    require(c.integrator.rtol > 0.0, "integrator.rtol", "must be > 0");
    require(c.integrator.h_min > 0.0 && c.integrator.h_min <= c.integrator.h_init, "integrator.h_min",
            "must satisfy 0 < h_min <= h_init");
    require(c.integrator.h_init <= c.integrator.h_max, "integrator.h_init", "must be <= h_max");
    require(c.integrator.max_steps >= 1, "integrator.max_steps", "must be >= 1");
    require(c.integrator.z_cut > std::abs(c.sampling.z0), "integrator.z_cut", "must exceed |sampling.z0|");
    require(c.integrator.t_max > 0.0, "integrator.t_max", "must be > 0");
    require(c.n_events >= 1, "ensemble.n_events", "must be >= 1");
    require(c.max_attempts >= 1, "ensemble.max_attempts", "must be >= 1");
    require(c.excluded_budget >= 0.0 && c.excluded_budget < 1.0, "ensemble.excluded_budget", "must be in [0, 1)");
    if (c.sweep.spacing == GridSpacing::List) {
        require(!c.sweep.values.empty(), "sweep.values", "must be non-empty for spacing = list");
        for (std::size_t i = 1; i < c.sweep.values.size(); ++i)
            require(c.sweep.values[i] > c.sweep.values[i - 1], "sweep.values", "must be strictly increasing");
    } else {
        require(c.sweep.points >= 2, "sweep.points", "must be >= 2");
        require(c.sweep.hi > c.sweep.lo, "sweep.hi", "must exceed sweep.lo");
        if (c.sweep.spacing == GridSpacing::Log) require(c.sweep.lo > 0.0, "sweep.lo", "must be > 0 for log spacing");
    }
    require(c.quantum.n_theta >= 4 && c.quantum.n_theta % 2 == 0, "quantum.n_theta", "must be even and >= 4");
    require(c.quantum.n_r >= 50, "quantum.n_r", "must be >= 50");
    require(c.quantum.r_m > 0.0, "quantum.r_m", "must be > 0");
    require(c.quantum.gamma > 0.0, "quantum.gamma", "must be > 0");
    require(c.quantum.max_condition > 1.0, "quantum.max_condition", "must be > 1");
    require(c.freespace.s >= 0.0, "freespace.s", "must be >= 0");
    require(c.freespace.energy > 0.0, "freespace.energy", "must be > 0");
    require(!c.density.v0_values.empty(), "density.v0_values", "must be non-empty");
    for (double v : c.density.v0_values) require(v >= 0.0, "density.v0_values", "entries must be >= 0");
    require(c.density.x_half > 0.0, "density.x_half", "must be > 0");
    require(c.density.z_half > 0.0, "density.z_half", "must be > 0");
    require(c.density.nx >= 1, "density.nx", "must be >= 1");
    require(c.density.nz >= 1, "density.nz", "must be >= 1");
    require(c.density.central_half > 0.0, "density.central_half", "must be > 0");
    require(!c.convergence.v0_values.empty(), "convergence.v0_values", "must be non-empty");
    require(!c.convergence.sizes.empty(), "convergence.sizes", "must be non-empty");
    for (double s : c.convergence.sizes)
        require(s >= 1.0 && s == std::floor(s), "convergence.sizes", "entries must be positive integers");
    require(c.convergence.repeats >= 2, "convergence.repeats", "must be >= 2");
    require(c.bohr.n_max >= 0, "bohr.n_max", "must be >= 0");
}

/// Parses a configuration document; missing keys keep their defaults.
inline ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig cfg;
    const auto& keys = detail::config_keys();
    std::string section;
    std::vector<std::string> seen;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        std::string line = detail::trim(raw);
        if (const auto hash = line.find('#'); hash != std::string::npos) line = detail::trim(line.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            bool known = false;
            for (const auto& k : keys) known = known || k.section == section;
            if (!known) throw ParseError(line_no, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(line_no, "expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (section.empty()) throw ParseError(line_no, "key '" + key + "' outside any section");
        const detail::ConfigKey* match = nullptr;
        for (const auto& k : keys)
            if (k.section == section && k.key == key) match = &k;
        if (!match) throw ParseError(line_no, "unknown key '" + section + "." + key + "'");
        const std::string full = section + "." + key;
        for (const auto& s : seen)
            if (s == full) throw ParseError(line_no, "duplicate key '" + full + "'");
        seen.push_back(full);
        try {
            match->set(cfg, value);
        } catch (const ArgumentError& ex) {
            throw ParseError(line_no, full + ": " + ex.what());
        }
    }
    validate_config(cfg);
    return cfg;
}

/// Complete document with every key, in a form parse_config reads back exactly.
inline std::string serialize(const ExperimentConfig& cfg) {
    std::string out, section;
    for (const auto& k : detail::config_keys()) {
        if (k.section != section) {
            if (!section.empty()) out += '\n';
            section = k.section;
            out += "[" + section + "]\n";
        }
        out += k.key + " = " + k.get(cfg) + "\n";
    }
    return out;
}

} // namespace cirlab
