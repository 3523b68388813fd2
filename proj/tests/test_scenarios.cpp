#include <catch_amalgamated.hpp>

#include <cmath>
#include <string>

#include "grwlab/config.hpp"
#include "grwlab/runner.hpp"
#include "grwlab/scenarios.hpp"

using namespace grwlab;

namespace {

const std::string kData = GRWLAB_DATA_DIR;

double periodic_gap(double a, double b, double extent) {
    double d = std::fmod(std::abs(a - b), extent);
    return std::min(d, extent - d);
}

EprConfig small_epr() {
    EprConfig e;
    e.pointer_points = 64;
    e.coupling = 16.0;
    e.trials = 300;
    e.oracle = false;
    e.seed = 21;
    return e;
}

}  // namespace

// ---- singlet ----

TEST_CASE("singlet with identical triples agrees on every trial") {
    SingletConfig c;
    c.triple_a = c.triple_b = OrthoTriple::containing(Direction(1, 2, 3), 0.7);
    c.trials = 3000;
    c.seed = 7;
    const ExperimentReport r = run_singlet_spacetime(c);
    CHECK(r.results["agreement_frequency"].get<double>() == 1.0);
    const Json& f = r.results["joint_frequencies"];
    const Json& ex = r.results["joint_exact"];
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            if (i != j) {
                CHECK(f[i][j].get<double>() == 0.0);
                CHECK(std::abs(ex[i][j].get<double>()) <= 1e-12);
            }
    CHECK(r.results["min_post_fidelity"].get<double>() >= 1.0 - 1e-12);
    CHECK(r.trials.rows.size() == 3000);
}

TEST_CASE("singlet frequencies follow the squared-cosine table") {
    SingletConfig c;
    c.triple_a = OrthoTriple::standard();
    c.triple_b = OrthoTriple::containing(Direction(1, 1, 1), 0.2);
    c.trials = 20000;
    c.seed = 3;
    const ExperimentReport r = run_singlet_spacetime(c);
    const Json& f = r.results["joint_frequencies"];
    const Json& ex = r.results["joint_exact"];
    double total = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            const double d = c.triple_a.axis(i).dot(c.triple_b.axis(j));
            const double p = d * d / 3.0;
            CHECK(std::abs(ex[i][j].get<double>() - p) <= 1e-12);
            const double sigma = std::sqrt(std::max(p * (1 - p), 1e-12) / 20000.0);
            CHECK(std::abs(f[i][j].get<double>() - p) <= 4.0 * sigma);
            total += f[i][j].get<double>();
        }
    CHECK(std::abs(total - 1.0) <= 1e-12);
    // A's marginal is unchanged by B measuring first
    CHECK(r.results["a_marginal_within_3sigma"].get<bool>());
    CHECK(r.results["a_marginal_exact_deviation"].get<double>() <= 1e-12);
    for (std::size_t i = 0; i < 3; ++i) {
        const double sigma = stats::binomial_sigma(2.0 / 3.0, c.trials);
        CHECK(std::abs(r.results["b_p1"][i].get<double>() - 2.0 / 3.0) <= 3.0 * sigma);
    }
}

TEST_CASE("singlet report is independent of worker count") {
    SingletConfig c;
    c.triple_b = OrthoTriple::containing(Direction(0, 1, 1), 0.3);
    c.trials = 1500;
    c.seed = 99;
    const ExperimentReport a = run_singlet_spacetime(c);
    c.workers = 4;
    const ExperimentReport b = run_singlet_spacetime(c);
    CHECK(a.json_text() == b.json_text());
    CHECK(a.trials.to_csv() == b.trials.to_csv());
    c.seed = 100;
    CHECK(run_singlet_spacetime(c).json_text() != a.json_text());
}

// ---- epr ----

TEST_CASE("momentum shift moves a packet by whole sites") {
    const Grid g(64, 1.0);
    const StateVector psi = gaussian_packet(g, 20, 1.5);
    const Operator p = momentum_operator(g);
    CHECK(max_abs_difference(p.matrix(), p.matrix().adjoint()) <= 1e-12);
    for (long s : {-7L, 3L, 16L}) {
        const Vector moved = unitary_propagator(p, static_cast<double>(s)).matrix() * psi.amplitudes();
        CHECK(max_abs_difference(moved, translate(psi, g, s).amplitudes()) <= 1e-10);
    }
}

TEST_CASE("split weights assign each site to the nearer center") {
    const Grid g(10, 1.0);
    std::vector<double> w(10, 0.1);
    const auto s = split_weights(w, g, 2, 7);
    CHECK(std::abs(s[0] + s[1] - 1.0) <= 1e-15);
    CHECK(std::abs(s[0] - 0.5) <= 1e-15);  // sites 0..4 (ties go to the first center) vs 5..9
    w.assign(10, 0.0);
    w[9] = 1.0;  // periodically next to 0, nearer to 7 than to 2
    CHECK(split_weights(w, g, 2, 7)[1] == 1.0);
}

TEST_CASE("epr coupled state puts the pointer at ready -+ g") {
    const EprConfig e = small_epr();
    const EprSetup s = epr_setup(e, e.coupling);
    const std::vector<double> wa = position_weights(s.coupled, 0);
    CHECK(std::abs(wa[0] - 0.5) <= 1e-12);
    const std::vector<double> wp = position_weights(s.coupled, 2);
    const auto split = split_weights(wp, s.pointer, s.ready - 16, s.ready + 16);
    CHECK(std::abs(split[0] - 0.5) <= 1e-12);
    CHECK(std::abs(s.coupled.norm() - 1.0) <= 1e-12);
    // g = 0 leaves the state alone
    const EprSetup z = epr_setup(e, 0.0);
    CHECK(max_abs_difference(z.coupled.amplitudes(), z.initial.amplitudes()) <= 1e-12);
}

TEST_CASE("epr: A's pointer outcome fixes b's region") {
    const EprConfig e = small_epr();
    const ExperimentReport r = run_epr_position(e);
    const Json& res = r.results;
    CHECK(res["measured"].get<bool>());
    const auto conclusive = res["conclusive_trials"].get<std::size_t>();
    CHECK(conclusive + res["inconclusive_trials"].get<std::size_t>() == e.trials);
    CHECK(conclusive >= 0.99 * e.trials);
    CHECK(res["b_localization_correct"].get<double>() >= 0.99);
    CHECK(std::abs(res["a_split_z"].get<double>()) <= 3.0);
    CHECK(res["control"]["within_3sigma"].get<bool>());
    CHECK(r.trials.rows.size() == e.trials);
}

TEST_CASE("epr without coupling reports no A outcome") {
    EprConfig e = small_epr();
    e.coupling = 0.0;
    e.trials = 100;
    const ExperimentReport r = run_epr_position(e);
    CHECK_FALSE(r.results["measured"].get<bool>());
    CHECK_FALSE(r.results.contains("conclusive_trials"));
    CHECK_FALSE(r.results.contains("control"));
}

TEST_CASE("epr ensemble law leaves b maximally mixed") {
    EprConfig e = small_epr();
    e.trials = 20;
    e.control = false;
    e.oracle = true;
    const ExperimentReport r = run_epr_position(e);
    CHECK(r.results["oracle_b_state"]["max_deviation"].get<double>() <= 1e-10);
}

TEST_CASE("epr report is independent of worker count") {
    EprConfig e = small_epr();
    e.trials = 60;
    const std::string a = run_epr_position(e).json_text();
    e.workers = 3;
    CHECK(run_epr_position(e).json_text() == a);
}

TEST_CASE("epr validation") {
    EprConfig e = small_epr();
    e.amplification = 10.0;  // N lambda T = 2.5
    CHECK_THROWS_AS(e.validate(), ConfigError);
    e = small_epr();
    e.coupling = 4.0;
    CHECK_THROWS_AS(e.validate(), ConfigError);
    e = small_epr();
    e.alpha = 1e-4;
    CHECK_THROWS_AS(e.validate(), GridInadequateError);
}

// ---- oracle comparison ----

TEST_CASE("oracle comparison without jumps agrees to integration accuracy") {
    OracleConfig c;
    c.setup.lambda = 0.0;
    c.ensemble = 100;
    const ExperimentReport r = run_oracle_comparison(c);
    for (const auto& row : r.results["distances"]) CHECK(row["distance"].get<double>() <= 1e-8);
}

TEST_CASE("oracle comparison reports four checkpoints with 5/sqrt(K) thresholds") {
    OracleConfig c;
    c.ensemble = 400;
    c.seed = 5;
    const ExperimentReport r = run_oracle_comparison(c);
    const Json& rows = r.results["distances"];
    REQUIRE(rows.size() == 4);
    const std::vector<double> times{1.25, 2.5, 3.75, 5.0};
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(rows[i]["time"].get<double>() == times[i]);
        CHECK(rows[i]["threshold"].get<double>() == 5.0 / std::sqrt(400.0));
        CHECK(rows[i]["within"].get<bool>());
    }
    CHECK(r.trials.rows.size() == 400);
}

TEST_CASE("oracle comparison refuses small ensembles") {
    OracleConfig c;
    c.ensemble = 99;
    CHECK_THROWS_AS(run_oracle_comparison(c), ConfigError);
}

// ---- grw-run ----

TEST_CASE("two-peak runs collapse onto one peak with Born frequencies") {
    GrwRunConfig c;
    c.setup.weight1 = 0.3;
    c.trials = 600;
    c.seed = 17;
    const ExperimentReport r = run_grw(c);
    CHECK(r.results["single_peak_fraction"].get<double>() >= 0.99);
    CHECK(std::abs(r.results["branch_z"].get<double>()) <= 3.0);
    // lambda T = 20
    CHECK(std::abs(r.results["mean_jumps"].get<double>() - 20.0) <= 4.0 * std::sqrt(20.0 / 600.0));
}

TEST_CASE("shifted grw runs are the seed-matched runs translated") {
    GrwRunConfig c;
    c.setup.mass = 2.0;
    c.setup.lambda = 4.0;
    c.trials = 40;
    c.seed = 8;
    const std::vector<GrwRunTrial> base = grw_run_trials(c);
    for (long s : {5L, -13L}) {
        c.shift = s;
        const std::vector<GrwRunTrial> moved = grw_run_trials(c);
        for (std::size_t t = 0; t < base.size(); ++t) {
            CHECK(moved[t].jumps == base[t].jumps);
            CHECK(std::abs(moved[t].mass1 - base[t].mass1) <= 1e-12);
            CHECK(std::abs(moved[t].mass2 - base[t].mass2) <= 1e-12);
            CHECK(periodic_gap(moved[t].mean_position, base[t].mean_position + static_cast<double>(s), 64.0) <= 1e-9);
        }
    }
}

TEST_CASE("grw report is independent of worker count") {
    GrwRunConfig c;
    c.trials = 100;
    const std::string a = run_grw(c).json_text();
    c.workers = 2;
    CHECK(run_grw(c).json_text() == a);
}

// ---- dispatch ----

TEST_CASE("ks-check report through the runner") {
    const RunConfig c = parse_config("ks-check", {{"rays", kData + "/ks33.rays"}, {"minimal", "true"}}, {});
    const ExperimentReport r = run_scenario(c);
    CHECK(r.results["verdict"] == "Uncolorable");
    CHECK(r.results["nodes_explored"].get<std::uint64_t>() == 23);
    CHECK(r.results["contradiction_available"].get<bool>());
    CHECK(r.results["minimal_conflict"]["triples"].size() == 16);
    CHECK(r.results["minimal_conflict"]["pairs"].size() == 24);
    CHECK(r.to_json()["seed"].is_null());

    const ExperimentReport a = run_scenario(parse_config("ks-check", {{"rays", kData + "/axes.rays"}}, {}));
    CHECK(a.results["verdict"] == "Colorable");
    CHECK(a.results["witness_valid"].get<bool>());
}

TEST_CASE("ck-trace report through the runner") {
    const ExperimentReport r = run_scenario(parse_config("ck-trace", {{"rays", kData + "/ks33.rays"}}, {}));
    CHECK(r.results["contradiction"].get<bool>());
    CHECK(r.results["steps"].size() == 4);
    CHECK(r.results["shared_rays"].get<std::size_t>() == 9);
    CHECK_THROWS_AS(run_scenario(parse_config("ck-trace", {{"rays", kData + "/axes.rays"}}, {})), PreconditionError);
    CHECK_THROWS_AS(run_scenario(parse_config("ks-check", {{"rays", kData + "/none.rays"}}, {})), ConfigError);
}

TEST_CASE("timing is opt-in and the only non-deterministic field") {
    const ExperimentReport plain = run_scenario(parse_config("singlet", {{"trials", "50"}}, {}));
    CHECK_FALSE(plain.to_json().contains("wall_time_seconds"));
    const ExperimentReport timed = run_scenario(parse_config("singlet", {{"trials", "50"}, {"timing", "true"}}, {}));
    Json j = timed.to_json();
    REQUIRE(j.contains("wall_time_seconds"));
    j.erase("wall_time_seconds");
    CHECK(to_json_text(j) == plain.json_text());
}

// ---- report format ----

TEST_CASE("report doubles round-trip through 17 digits") {
    for (double v : {0.1, 1.0 / 3.0, 2.0 / 3.0, 1e-300, 6.02214076e23, -0.0, 5.0}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(format_double(5.0) == "5.0");
    CHECK(format_double(std::nan("")) == "null");
    Json j = {{"x", 0.1}, {"v", {1.0, 2.5}}, {"n", 3}};
    const std::string text = to_json_text(j);
    CHECK(text.find("0.10000000000000001") != std::string::npos);
    CHECK(Json::parse(text)["x"].get<double>() == 0.1);
    CHECK(Json::parse(text)["n"].get<int>() == 3);
}

TEST_CASE("trial table csv") {
    TrialTable t;
    t.header = {"a", "b"};
    t.add({cell(std::size_t{1}), cell(0.5)});
    CHECK(t.to_csv() == "a,b\n1,0.5\n");
}
