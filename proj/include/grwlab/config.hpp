#pragma once

// Flat key/value run configuration. Sources are layered
// defaults < config file < command-line flags, every key is checked against
// the scenario's key table, and every failure names the offending key.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "grwlab/errors.hpp"
#include "grwlab/scenarios.hpp"
#include "grwlab/spin.hpp"

#ifndef GRWLAB_DEFAULT_RAYS
#define GRWLAB_DEFAULT_RAYS "data/ks33.rays"
#endif

namespace grwlab {

enum class KeyKind { Unsigned, Integer, Real, Bool, Text, Vector3, Format };

struct KeySpec {
    std::string name;
    std::string default_value;  // empty: no default
    std::string help;
    KeyKind kind = KeyKind::Real;
};

struct ScenarioSpec {
    std::string name;
    std::string description;
    bool stochastic = true;
    std::vector<KeySpec> keys;  // scenario keys; common keys are appended by scenario_keys()
};

inline const std::vector<KeySpec>& common_keys() {
    static const std::vector<KeySpec> keys{
        {"seed", "", "master seed (required when writing a report with out)", KeyKind::Unsigned},
        {"out", "", "report path; the report goes to stdout when unset", KeyKind::Text},
        {"csv", "", "per-trial CSV path", KeyKind::Text},
        {"format", "json", "stdout format: json or csv", KeyKind::Format},
        {"workers", "1", "worker threads; results do not depend on this", KeyKind::Unsigned},
        {"timing", "false", "add wall_time_seconds to the report (breaks byte identity)", KeyKind::Bool},
    };
    return keys;
}

/// Shortest text that parses back to the same double.
inline std::string default_text(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::vector<KeySpec> two_peak_keys(const TwoPeakSetup& d) {
    return {
        {"points", std::to_string(d.points), "grid points", KeyKind::Unsigned},
        {"spacing", default_text(d.spacing), "grid spacing", KeyKind::Real},
        {"alpha", default_text(d.alpha), "localization parameter (inverse length squared)", KeyKind::Real},
        {"lambda", default_text(d.lambda), "jump rate per particle", KeyKind::Real},
        {"horizon", default_text(d.horizon), "final time", KeyKind::Real},
        {"mass", default_text(d.mass), "particle mass; 0 switches the Hamiltonian off", KeyKind::Real},
        {"peak1", std::to_string(d.peak1), "grid index of the first packet", KeyKind::Unsigned},
        {"peak2", std::to_string(d.peak2), "grid index of the second packet", KeyKind::Unsigned},
        {"width", default_text(d.width), "packet width", KeyKind::Real},
        {"weight1", default_text(d.weight1), "squared amplitude of the first packet", KeyKind::Real},
    };
}

inline const std::vector<ScenarioSpec>& scenario_specs() {
    static const std::vector<ScenarioSpec> specs = [] {
        std::vector<ScenarioSpec> s;
        s.push_back({"singlet",
                     "spin-1 pair in the spin-0 state; B measures a triple, then A",
                     true,
                     {
                         {"trials", "10000", "number of trials", KeyKind::Unsigned},
                         {"a_axis", "0,0,1", "a direction in A's triple", KeyKind::Vector3},
                         {"a_angle", "0", "rotation of A's triple about a_axis (radians)", KeyKind::Real},
                         {"b_axis", "0,0,1", "a direction in B's triple", KeyKind::Vector3},
                         {"b_angle", "0", "rotation of B's triple about b_axis (radians)", KeyKind::Real},
                         {"same_triples", "false", "B uses A's triple", KeyKind::Bool},
                     }});
        const EprConfig e;
        s.push_back({"epr",
                     "position-entangled pair; A's pointer reads particle a's region and localizes",
                     true,
                     {
                         {"delta1", default_text(e.delta1), "center of region D1 (particle a)", KeyKind::Real},
                         {"delta2", default_text(e.delta2), "center of region D2 (particle b)", KeyKind::Real},
                         {"delta3", default_text(e.delta3), "center of region D3 (particle a)", KeyKind::Real},
                         {"delta4", default_text(e.delta4), "center of region D4 (particle b)", KeyKind::Real},
                         {"packet_width", default_text(e.packet_width), "packet width", KeyKind::Real},
                         {"pointer_points", std::to_string(e.pointer_points), "pointer grid points", KeyKind::Unsigned},
                         {"spacing", default_text(e.spacing), "pointer grid spacing", KeyKind::Real},
                         {"alpha", default_text(e.alpha), "localization parameter", KeyKind::Real},
                         {"lambda", default_text(e.lambda), "jump rate per constituent", KeyKind::Real},
                         {"amplification", default_text(e.amplification), "pointer constituents N", KeyKind::Real},
                         {"horizon", default_text(e.horizon), "evolution time after coupling", KeyKind::Real},
                         {"coupling", default_text(e.coupling), "pointer displacement g; 0 switches A off", KeyKind::Real},
                         {"trials", std::to_string(e.trials), "number of trials", KeyKind::Unsigned},
                         {"control", "true", "also run with the coupling off", KeyKind::Bool},
                         {"oracle", "true", "integrate the ensemble law for b's reduced state", KeyKind::Bool},
                     }});
        GrwRunConfig g;
        auto grw_keys = two_peak_keys(g.setup);
        grw_keys.push_back({"trials", std::to_string(g.trials), "number of trajectories", KeyKind::Unsigned});
        grw_keys.push_back({"shift", "0", "translate the state and the center sampling by this many sites", KeyKind::Integer});
        grw_keys.push_back({"single_peak_threshold", default_text(g.single_peak_threshold),
                            "mass a peak must hold to count as single-peak", KeyKind::Real});
        s.push_back({"grw-run", "two-peak superposition under localization jumps", true, grw_keys});
        OracleConfig o;
        auto oracle_keys = two_peak_keys(o.setup);
        oracle_keys.push_back({"k", std::to_string(o.ensemble), "ensemble size (>= 100)", KeyKind::Unsigned});
        s.push_back({"oracle-compare", "trajectory ensemble against the integrated ensemble law", true, oracle_keys});
        s.push_back({"ks-check",
                     "101-colorability of a ray set",
                     false,
                     {
                         {"rays", GRWLAB_DEFAULT_RAYS, "ray file", KeyKind::Text},
                         {"minimal", "false", "also compute a deletion-minimal conflict", KeyKind::Bool},
                     }});
        s.push_back({"ck-trace",
                     "checked chain from the spin-0 pair to a contradiction over an uncolorable ray set",
                     false,
                     {
                         {"rays", GRWLAB_DEFAULT_RAYS, "ray file", KeyKind::Text},
                     }});
        return s;
    }();
    return specs;
}

inline const ScenarioSpec& scenario_spec(const std::string& name) {
    for (const auto& s : scenario_specs())
        if (s.name == name) return s;
    throw ConfigError("scenario", "unknown scenario '" + name + "'");
}

inline std::vector<KeySpec> scenario_keys(const ScenarioSpec& s) {
    std::vector<KeySpec> k = s.keys;
    k.insert(k.end(), common_keys().begin(), common_keys().end());
    return k;
}

inline std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

/// Closest known key within edit distance 2, if any.
inline std::optional<std::string> suggest_key(const std::string& key, const std::vector<KeySpec>& keys) {
    std::optional<std::string> best;
    std::size_t best_d = 3;
    for (const auto& k : keys) {
        const std::size_t d = edit_distance(key, k.name);
        if (d < best_d) {
            best_d = d;
            best = k.name;
        }
    }
    return best;
}

using KeyValues = std::vector<std::pair<std::string, std::string>>;

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// `key = value` lines; `#` starts a comment; blank lines are ignored.
inline KeyValues parse_key_values(std::istream& in, const std::string& source = "config") {
    KeyValues out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("", source + " line " + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::replace(key.begin(), key.end(), '-', '_');
        if (key.empty()) throw ConfigError("", source + " line " + std::to_string(lineno) + ": empty key");
        out.emplace_back(key, trim(line.substr(eq + 1)));
    }
    return out;
}

inline KeyValues read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open '" + path + "'");
    return parse_key_values(in, path);
}

/// Validated configuration for one scenario; values stay text until read.
class RunConfig {
public:
    RunConfig(const ScenarioSpec& spec, std::map<std::string, std::string> values, std::map<std::string, bool> explicit_keys)
        : spec_(&spec), values_(std::move(values)), explicit_(std::move(explicit_keys)) {}

    const std::string& scenario() const { return spec_->name; }
    const ScenarioSpec& spec() const { return *spec_; }
    const std::map<std::string, std::string>& values() const { return values_; }

    bool has(const std::string& key) const {
        const auto it = values_.find(key);
        return it != values_.end() && !it->second.empty();
    }

    bool is_explicit(const std::string& key) const { return explicit_.count(key) > 0; }

    const std::string& text(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError(key, "not a key of scenario " + scenario());
        return it->second;
    }

    double real(const std::string& key) const { return parse_real(key, text(key)); }

    std::uint64_t unsigned_value(const std::string& key) const { return parse_unsigned(key, text(key)); }

    std::size_t size(const std::string& key) const { return static_cast<std::size_t>(unsigned_value(key)); }

    long integer(const std::string& key) const { return parse_integer(key, text(key)); }

    bool flag(const std::string& key) const { return parse_bool(key, text(key)); }

    Direction direction(const std::string& key) const { return parse_direction(key, text(key)); }

    std::uint64_t seed() const { return has("seed") ? unsigned_value("seed") : 1; }

    static double parse_real(const std::string& key, const std::string& v) {
        std::size_t pos = 0;
        double d = 0.0;
        try {
            d = std::stod(v, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (v.empty() || pos != v.size() || !std::isfinite(d)) throw ConfigError(key, "expected a number, got '" + v + "'");
        return d;
    }

    static long parse_integer(const std::string& key, const std::string& v) {
        std::size_t pos = 0;
        long x = 0;
        try {
            x = std::stol(v, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (v.empty() || pos != v.size()) throw ConfigError(key, "expected an integer, got '" + v + "'");
        return x;
    }

    static std::uint64_t parse_unsigned(const std::string& key, const std::string& v) {
        std::size_t pos = 0;
        unsigned long long x = 0;
        const bool digits = !v.empty() && std::all_of(v.begin(), v.end(), [](char c) { return c >= '0' && c <= '9'; });
        if (digits) {
            try {
                x = std::stoull(v, &pos);
            } catch (const std::exception&) {
                pos = 0;
            }
        }
        if (!digits || pos != v.size()) throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
        return x;
    }

    static bool parse_bool(const std::string& key, const std::string& v) {
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        throw ConfigError(key, "expected true or false, got '" + v + "'");
    }

    static Direction parse_direction(const std::string& key, const std::string& v) {
        std::string s = v;
        std::replace(s.begin(), s.end(), ',', ' ');
        std::istringstream in(s);
        std::vector<std::string> toks;
        for (std::string t; in >> t;) toks.push_back(t);
        if (toks.size() != 3) throw ConfigError(key, "expected three components 'x,y,z', got '" + v + "'");
        const Vec3 x(parse_real(key, toks[0]), parse_real(key, toks[1]), parse_real(key, toks[2]));
        if (x.norm() < 1e-12) throw ConfigError(key, "direction must be nonzero");
        return Direction(x);
    }

private:
    const ScenarioSpec* spec_;
    std::map<std::string, std::string> values_;
    std::map<std::string, bool> explicit_;
};

class RunConfig;
inline EprConfig epr_config(const RunConfig& c);
inline TwoPeakSetup two_peak_setup(const RunConfig& c);
inline SingletConfig singlet_config(const RunConfig& c);

/// Layer defaults < file < flags, reject unknown keys and ill-typed values,
/// then check the scenario's own constraints.
inline RunConfig parse_config(const std::string& scenario, const KeyValues& file, const KeyValues& flags) {
    const ScenarioSpec& spec = scenario_spec(scenario);
    const std::vector<KeySpec> keys = scenario_keys(spec);
    std::map<std::string, std::string> values;
    std::map<std::string, bool> explicit_keys;
    for (const auto& k : keys) values[k.name] = k.default_value;
    auto apply = [&](const KeyValues& kv) {
        for (const auto& [key, value] : kv) {
            if (!values.count(key)) {
                const auto s = suggest_key(key, keys);
                throw ConfigError(key, "unknown key for " + scenario + (s ? " (did you mean '" + *s + "'?)" : ""));
            }
            values[key] = value;
            explicit_keys[key] = true;
        }
    };
    apply(file);
    apply(flags);

    for (const auto& k : keys) {
        const std::string& v = values[k.name];
        if (v.empty()) continue;
        switch (k.kind) {
            case KeyKind::Unsigned: RunConfig::parse_unsigned(k.name, v); break;
            case KeyKind::Integer: RunConfig::parse_integer(k.name, v); break;
            case KeyKind::Real: RunConfig::parse_real(k.name, v); break;
            case KeyKind::Bool: RunConfig::parse_bool(k.name, v); break;
            case KeyKind::Vector3: RunConfig::parse_direction(k.name, v); break;
            case KeyKind::Format:
                if (v != "json" && v != "csv") throw ConfigError(k.name, "expected json or csv, got '" + v + "'");
                break;
            case KeyKind::Text: break;
        }
    }
    RunConfig cfg(spec, std::move(values), std::move(explicit_keys));

    auto non_negative = [&](const char* key) {
        if (cfg.values().count(key) && cfg.real(key) < 0.0) throw ConfigError(key, "must be >= 0");
    };
    auto positive = [&](const char* key) {
        if (cfg.values().count(key) && !(cfg.real(key) > 0.0)) throw ConfigError(key, "must be > 0");
    };
    for (const char* k : {"lambda", "mass", "horizon", "alpha", "spacing", "width", "packet_width", "amplification"}) {
        if (std::string(k) == "lambda" || std::string(k) == "mass")
            non_negative(k);
        else
            positive(k);
    }
    for (const char* k : {"trials", "k", "points", "pointer_points", "workers"})
        if (cfg.values().count(k) && cfg.size(k) == 0) throw ConfigError(k, "must be > 0");
    if (cfg.values().count("weight1")) {
        const double w = cfg.real("weight1");
        if (w < 0.0 || w > 1.0) throw ConfigError("weight1", "must lie in [0, 1]");
    }
    if (cfg.values().count("k") && cfg.size("k") < kMinEnsemble) throw ConfigError("k", "ensemble size must be >= 100");
    if (spec.stochastic && cfg.has("out") && !cfg.has("seed"))
        throw ConfigError("seed", "a seed is required when recording a report (out is set)");
    if (scenario == "epr") epr_config(cfg);
    if (scenario == "grw-run" || scenario == "oracle-compare") two_peak_setup(cfg);
    if (scenario == "singlet") singlet_config(cfg);
    return cfg;
}

// ---- scenario configs from a RunConfig ----------------------------------------

inline SingletConfig singlet_config(const RunConfig& c) {
    SingletConfig s;
    s.triple_a = OrthoTriple::containing(c.direction("a_axis"), c.real("a_angle"));
    s.triple_b = c.flag("same_triples") ? s.triple_a : OrthoTriple::containing(c.direction("b_axis"), c.real("b_angle"));
    s.trials = c.size("trials");
    s.seed = c.seed();
    s.workers = c.size("workers");
    return s;
}

inline EprConfig epr_config(const RunConfig& c) {
    EprConfig e;
    e.delta1 = c.real("delta1");
    e.delta2 = c.real("delta2");
    e.delta3 = c.real("delta3");
    e.delta4 = c.real("delta4");
    e.packet_width = c.real("packet_width");
    e.pointer_points = c.size("pointer_points");
    e.spacing = c.real("spacing");
    e.alpha = c.real("alpha");
    e.lambda = c.real("lambda");
    e.amplification = c.real("amplification");
    e.horizon = c.real("horizon");
    e.coupling = c.real("coupling");
    e.trials = c.size("trials");
    e.control = c.flag("control");
    e.oracle = c.flag("oracle");
    e.seed = c.seed();
    e.workers = c.size("workers");
    e.validate();
    return e;
}

inline TwoPeakSetup two_peak_setup(const RunConfig& c) {
    TwoPeakSetup s;
    s.points = c.size("points");
    s.spacing = c.real("spacing");
    s.alpha = c.real("alpha");
    s.lambda = c.real("lambda");
    s.horizon = c.real("horizon");
    s.mass = c.real("mass");
    s.peak1 = c.size("peak1");
    s.peak2 = c.size("peak2");
    s.width = c.real("width");
    s.weight1 = c.real("weight1");
    s.validate();
    return s;
}

inline GrwRunConfig grw_run_config(const RunConfig& c) {
    GrwRunConfig g;
    g.setup = two_peak_setup(c);
    g.trials = c.size("trials");
    g.shift = c.integer("shift");
    g.single_peak_threshold = c.real("single_peak_threshold");
    g.seed = c.seed();
    g.workers = c.size("workers");
    return g;
}

inline OracleConfig oracle_config(const RunConfig& c) {
    OracleConfig o;
    o.setup = two_peak_setup(c);
    o.ensemble = c.size("k");
    o.seed = c.seed();
    o.workers = c.size("workers");
    return o;
}

}  // namespace grwlab
