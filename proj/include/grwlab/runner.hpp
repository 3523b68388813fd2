#pragma once

// Dispatch from a validated RunConfig to a scenario, and the exit-code map.

#include <chrono>
#include <filesystem>
#include <string>

#include "grwlab/ck_trace.hpp"
#include "grwlab/config.hpp"
#include "grwlab/errors.hpp"
#include "grwlab/ks.hpp"
#include "grwlab/report.hpp"
#include "grwlab/scenarios.hpp"

namespace grwlab {

inline Json to_json(const ks::SearchCertificate& c) {
    Json j;
    j["verdict"] = c.colorable ? "Colorable" : "Uncolorable";
    j["nodes_explored"] = c.nodes_explored;
    j["propagation_steps"] = c.propagation_steps;
    if (c.witness) {
        Json w = Json::array();
        for (std::size_t i = 0; i < c.witness->size(); ++i) w.push_back(c.witness->raw(i));
        j["witness"] = w;
    }
    j["conflict_core_size"] = c.conflict_constraints.size();
    return j;
}

inline Json to_json(const ks::MinimalConflict& m) {
    Json t = Json::array(), p = Json::array();
    for (const auto& x : m.triples) t.push_back(Json::array({x[0], x[1], x[2]}));
    for (const auto& x : m.pairs) p.push_back(Json::array({x[0], x[1]}));
    return {{"triples", t}, {"pairs", p}, {"searches", m.searches}};
}

inline ks::RaySet load_rays(const RunConfig& c) {
    const std::string& path = c.text("rays");
    if (!std::filesystem::exists(path)) throw ConfigError("rays", "no such file '" + path + "'");
    return ks::RaySet::load(path);
}

inline ExperimentReport run_ks_check(const RunConfig& c) {
    const ks::RaySet rays = load_rays(c);
    const ks::OrthogonalityStructure s = ks::build_structure(rays);
    const ks::SearchCertificate cert = ks::search_coloring(rays);
    ExperimentReport rep;
    rep.scenario = "ks-check";
    rep.config = {{"rays", c.text("rays")}, {"minimal", c.flag("minimal")}};
    rep.results = {{"ray_count", rays.size()}, {"pair_count", s.pairs.size()}, {"triple_count", s.triples.size()}};
    const Json cj = to_json(cert);
    for (const auto& [k, v] : cj.items()) rep.results[k] = v;
    if (cert.witness) {
        const auto bad = ks::check_assignment(*cert.witness, s);
        if (bad) throw InvariantViolation("search returned an invalid witness: " + bad->describe());
        rep.results["witness_valid"] = true;
    }
    if (c.flag("minimal") && !cert.colorable) rep.results["minimal_conflict"] = to_json(ks::minimal_conflict(rays));
    rep.results["contradiction_available"] = !cert.colorable;
    return rep;
}

inline ExperimentReport run_ck_trace(const RunConfig& c) {
    const ks::RaySet rays = load_rays(c);
    const ks::ArgumentTrace tr = ks::ck_argument_trace(rays);
    ExperimentReport rep;
    rep.scenario = "ck-trace";
    rep.config = {{"rays", c.text("rays")}};
    Json steps = Json::array();
    for (const auto& st : tr.steps)
        steps.push_back({{"name", st.name}, {"claim", st.claim}, {"verified", st.verified},
                         {"checks", st.checks}, {"max_deviation", st.max_deviation}});
    rep.results = {{"ray_count", tr.ray_count},     {"pair_count", tr.pair_count},
                   {"triple_count", tr.triple_count}, {"shared_rays", tr.shared_rays},
                   {"steps", steps},                 {"certificate", to_json(tr.certificate)},
                   {"minimal_conflict", to_json(tr.conflict)}, {"contradiction", tr.contradiction},
                   {"conclusion", tr.conclusion},    {"resolution", tr.resolution}};
    return rep;
}

inline ExperimentReport run_scenario(const RunConfig& c) {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentReport rep;
    const std::string& s = c.scenario();
    if (s == "singlet")
        rep = run_singlet_spacetime(singlet_config(c));
    else if (s == "epr")
        rep = run_epr_position(epr_config(c));
    else if (s == "grw-run")
        rep = run_grw(grw_run_config(c));
    else if (s == "oracle-compare")
        rep = run_oracle_comparison(oracle_config(c));
    else if (s == "ks-check")
        rep = run_ks_check(c);
    else if (s == "ck-trace")
        rep = run_ck_trace(c);
    else
        throw ConfigError("scenario", "unknown scenario '" + s + "'");
    if (c.flag("timing")) rep.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3, kExitInternal = 4 };

/// Exit status for an exception escaping a run.
inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const PreconditionError*>(&e)) return kExitConfig;
    if (dynamic_cast<const GridInadequateError*>(&e) || dynamic_cast<const ZeroNormError*>(&e) ||
        dynamic_cast<const NumericalError*>(&e))
        return kExitNumerical;
    return kExitInternal;
}

}  // namespace grwlab
