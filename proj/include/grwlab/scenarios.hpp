#pragma once

// End-to-end experiments. Each returns an ExperimentReport whose content is
// a deterministic function of the configuration and master seed: trial k
// always draws from stream (seed, k) and aggregation runs in trial order.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "grwlab/errors.hpp"
#include "grwlab/grw.hpp"
#include "grwlab/hilbert.hpp"
#include "grwlab/lindblad.hpp"
#include "grwlab/parallel.hpp"
#include "grwlab/report.hpp"
#include "grwlab/rng.hpp"
#include "grwlab/spin.hpp"
#include "grwlab/stats.hpp"

namespace grwlab {

inline Json to_json(const Direction& d) { return Json::array({d[0], d[1], d[2]}); }

inline Json to_json(const OrthoTriple& t) { return Json::array({to_json(t.axis(0)), to_json(t.axis(1)), to_json(t.axis(2))}); }

template <std::size_t N>
Json to_json(const std::array<double, N>& a) {
    Json j = Json::array();
    for (double v : a) j.push_back(v);
    return j;
}

inline Json to_json(const JointTable& t) { return Json::array({to_json(t[0]), to_json(t[1]), to_json(t[2])}); }

// ---- singlet ----------------------------------------------------------------

inline constexpr double kPostStateTol = 1e-12;

struct SingletConfig {
    OrthoTriple triple_a = OrthoTriple::standard();
    OrthoTriple triple_b = OrthoTriple::standard();
    std::size_t trials = 10000;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
};

/// B measures its triple first, the pair collapses to a product of zero
/// kets on B's zero axis, then A measures. A control run measures A alone.
inline ExperimentReport run_singlet_spacetime(const SingletConfig& cfg) {
    if (cfg.trials == 0) throw PreconditionError("trials must be > 0");
    const OrthoTriple& ta = cfg.triple_a;
    const OrthoTriple& tb = cfg.triple_b;
    bool same = true;
    for (std::size_t i = 0; i < 3; ++i) same = same && (ta.axis(i).vector() - tb.axis(i).vector()).norm() <= 1e-12;

    struct Trial {
        std::size_t b_zero = 0, a_zero = 0, a_alone_zero = 0;
        double fidelity = 0.0;
    };
    std::vector<Trial> out(cfg.trials);
    std::array<StateVector, 3> product_kets;
    for (std::size_t k = 0; k < 3; ++k) {
        const StateVector z(SubsystemShape{3}, zero_ket(tb.axis(k)));
        product_kets[k] = tensor_product(z, z);
    }
    parallel_for(cfg.trials, cfg.workers, [&](std::size_t t) {
        Rng rng = Rng::stream(cfg.seed, t);
        const TripleMeasurement mb = triple_measurement(singlet_state(), 1, tb, rng);
        Trial& tr = out[t];
        tr.b_zero = mb.outcome.zero_axis();
        tr.fidelity = fidelity(mb.post, product_kets[tr.b_zero]);
        tr.a_zero = triple_measurement(mb.post, 0, ta, rng).outcome.zero_axis();
        Rng control = Rng::stream(cfg.seed, cfg.trials + t);
        tr.a_alone_zero = triple_measurement(singlet_state(), 0, ta, control).outcome.zero_axis();
    });

    ExperimentReport rep;
    rep.scenario = "singlet";
    rep.seed = cfg.seed;
    rep.config = {{"triple_a", to_json(ta)}, {"triple_b", to_json(tb)}, {"same_triples", same},
                  {"trials", cfg.trials}, {"order", "b_then_a"}};
    rep.trials.header = {"trial", "b_zero_axis", "a_zero_axis", "agree", "post_fidelity", "a_alone_zero_axis"};

    std::array<std::array<std::size_t, 3>, 3> counts{};
    std::array<std::size_t, 3> a_zero{}, a_alone_zero{}, b_zero{};
    std::size_t agree = 0;
    double min_fid = 1.0;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        const Trial& tr = out[t];
        ++counts[tr.a_zero][tr.b_zero];
        ++a_zero[tr.a_zero];
        ++b_zero[tr.b_zero];
        ++a_alone_zero[tr.a_alone_zero];
        const bool ok = tr.a_zero == tr.b_zero;
        if (ok) ++agree;
        min_fid = std::min(min_fid, tr.fidelity);
        rep.trials.add({cell(t), cell(tr.b_zero), cell(tr.a_zero), cell(ok ? 1 : 0), cell(tr.fidelity), cell(tr.a_alone_zero)});
        if (tr.fidelity < 1.0 - kPostStateTol)
            throw InvariantViolation("post-measurement state is not the product of zero kets (fidelity " +
                                     format_double(tr.fidelity) + ")");
        if (same && !ok) throw InvariantViolation("identical triples gave different outcomes in trial " + std::to_string(t));
    }

    const double n = static_cast<double>(cfg.trials);
    JointTable freq{};
    double total = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) total += (freq[i][j] = static_cast<double>(counts[i][j]) / n);
    if (std::abs(total - 1.0) > 1e-12) throw InvariantViolation("joint frequencies do not sum to 1");

    std::array<double, 3> a_with{}, a_without{}, b_one{};
    double max_z = 0.0;
    const double sigma = stats::difference_sigma(2.0 / 3.0, cfg.trials, cfg.trials);
    for (std::size_t i = 0; i < 3; ++i) {
        a_with[i] = 1.0 - static_cast<double>(a_zero[i]) / n;
        a_without[i] = 1.0 - static_cast<double>(a_alone_zero[i]) / n;
        b_one[i] = 1.0 - static_cast<double>(b_zero[i]) / n;
        max_z = std::max(max_z, std::abs(a_with[i] - a_without[i]) / sigma);
    }
    double exact_pi = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
        exact_pi = std::max(exact_pi, parameter_independence_check(tb, ta.axis(i)).max_deviation);

    Json& r = rep.results;
    r["agreement_frequency"] = static_cast<double>(agree) / n;
    r["joint_frequencies"] = to_json(freq);
    r["joint_exact"] = to_json(exact_joint_table(singlet_state(), ta, tb));
    r["a_p1_after_b"] = to_json(a_with);
    r["a_p1_without_b"] = to_json(a_without);
    r["b_p1"] = to_json(b_one);
    r["a_marginal_sigma"] = sigma;
    r["a_marginal_max_z"] = max_z;
    r["a_marginal_within_3sigma"] = max_z <= 3.0;
    r["a_marginal_exact_deviation"] = exact_pi;
    r["min_post_fidelity"] = min_fid;
    return rep;
}

// ---- position EPR -------------------------------------------------------------

/// Two particles with two-region supports (a: D1 or D3, b: D2 or D4) in the
/// state (|D1 D2> + |D3 D4>)/sqrt2, and a pointer on a periodic grid that
/// starts in a "ready" packet at the grid center. The coupling
/// exp(-i g Z_a P) moves the pointer by -g for D1 and +g for D3; the pointer
/// then localizes at rate N lambda.
struct EprConfig {
    double delta1 = -40.0, delta2 = 40.0, delta3 = -10.0, delta4 = 10.0;
    double packet_width = 1.0;
    std::size_t pointer_points = 128;
    double spacing = 1.0;
    double alpha = 1.0 / 16.0;
    double lambda = 0.1;
    double amplification = 100.0;
    double horizon = 2.5;
    double coupling = 24.0;
    std::size_t trials = 1000;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    bool control = true;   // also run with the coupling switched off
    bool oracle = true;    // integrate the ensemble law for b's reduced state

    void validate() const {
        const double sep = 10.0 * packet_width;
        if (!(packet_width > 0.0)) throw ConfigError("packet_width", "must be > 0");
        if (std::abs(delta1 - delta3) < sep) throw ConfigError("delta3", "regions D1 and D3 closer than 10 packet widths");
        if (std::abs(delta2 - delta4) < sep) throw ConfigError("delta4", "regions D2 and D4 closer than 10 packet widths");
        if (!(amplification > 0.0)) throw ConfigError("amplification", "must be > 0");
        if (!(lambda > 0.0)) throw ConfigError("lambda", "must be > 0");
        if (!(horizon > 0.0)) throw ConfigError("horizon", "must be > 0");
        if (amplification * lambda * horizon < 20.0)
            throw ConfigError("amplification", "N * lambda * horizon must be >= 20 for the pointer to collapse");
        if (trials == 0) throw ConfigError("trials", "must be > 0");
        const Grid g(pointer_points, spacing);
        if (!grid_resolves(g, alpha)) throw GridInadequateError("alpha: pointer grid does not resolve the localization width");
        if (coupling != 0.0) {
            if (2.0 * std::abs(coupling) < sep)
                throw ConfigError("coupling", "pointer branches closer than 10 packet widths");
            if (std::abs(coupling) + 5.0 * packet_width > 0.5 * g.extent())
                throw ConfigError("coupling", "pointer branches do not fit on the grid");
        }
    }
};

/// Momentum operator on a periodic grid, diagonal in the discrete Fourier basis.
inline Operator momentum_operator(const Grid& grid, double hbar = 1.0) {
    const auto m = static_cast<Eigen::Index>(grid.points());
    Matrix f(m, m);
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index k = 0; k < m; ++k)
            f(j, k) = std::exp(cplx{0.0, 2.0 * std::numbers::pi * static_cast<double>(j * k) / static_cast<double>(m)}) /
                      std::sqrt(static_cast<double>(m));
    std::vector<double> p(grid.points());
    for (std::size_t k = 0; k < grid.points(); ++k) {
        long kk = static_cast<long>(k);
        if (kk >= m / 2) kk -= m;
        p[k] = hbar * 2.0 * std::numbers::pi * static_cast<double>(kk) / grid.extent();
    }
    return Operator(f * Operator::diagonal(p).matrix() * f.adjoint());
}

struct EprSetup {
    Grid pointer;
    SubsystemShape shape;
    std::size_t ready = 0;
    StateVector initial;  // before coupling
    StateVector coupled;
};

inline EprSetup epr_setup(const EprConfig& cfg, double coupling) {
    const Grid g(cfg.pointer_points, cfg.spacing);
    const SubsystemShape shape{2, 2, cfg.pointer_points};
    const std::size_t ready = cfg.pointer_points / 2;
    const StateVector pointer = gaussian_packet(g, ready, cfg.packet_width);
    Vector pair = Vector::Zero(4);
    pair(0) = pair(3) = 1.0 / std::sqrt(2.0);  // |D1 D2> + |D3 D4>
    const StateVector initial = tensor_product(StateVector(SubsystemShape{2, 2}, pair), pointer);

    // exp(-i g Z_a P) is block diagonal in a's region: exp(+i g P) for D1, exp(-i g P) for D3.
    const Operator p = momentum_operator(g);
    const std::array<Matrix, 2> shift{unitary_propagator(p, -coupling).matrix(), unitary_propagator(p, coupling).matrix()};
    Vector out(initial.amplitudes().size());
    const auto m = static_cast<Eigen::Index>(cfg.pointer_points);
    for (Eigen::Index a = 0; a < 2; ++a)
        for (Eigen::Index b = 0; b < 2; ++b) {
            const Eigen::Index off = (a * 2 + b) * m;
            out.segment(off, m) = shift[static_cast<std::size_t>(a)] * initial.amplitudes().segment(off, m);
        }
    return {g, shape, ready, initial, StateVector(shape, out)};
}

/// Weight of `w` on sites closer (periodically) to `first` than to `second`.
inline std::array<double, 2> split_weights(const std::vector<double>& w, const Grid& g, std::size_t first, std::size_t second) {
    std::array<double, 2> out{};
    for (std::size_t q = 0; q < w.size(); ++q) out[g.periodic_distance(q, first) <= g.periodic_distance(q, second) ? 0 : 1] += w[q];
    return out;
}

inline constexpr double kBranchThreshold = 0.01;

struct EprTrial {
    int a_outcome = -1;  // 0: D1, 1: D3, -1: inconclusive or no measurement
    int b_region = 0;    // 0: D2, 1: D4
    std::array<double, 2> pointer{};
    std::size_t jumps = 0;
};

inline std::vector<EprTrial> run_epr_trials(const EprConfig& cfg, const EprSetup& setup, double coupling,
                                            std::uint64_t stream_offset) {
    const GrwParams params{cfg.alpha, cfg.lambda};
    const GrwEvolver ev(Operator(Matrix::Zero(static_cast<Eigen::Index>(setup.shape.total()),
                                              static_cast<Eigen::Index>(setup.shape.total()))),
                        params, {{2, setup.pointer, cfg.amplification}}, setup.shape);
    const auto shift = static_cast<long>(std::lround(coupling / cfg.spacing));
    const std::size_t left = setup.pointer.shifted(setup.ready, -shift), right = setup.pointer.shifted(setup.ready, shift);
    std::vector<EprTrial> out(cfg.trials);
    parallel_for(cfg.trials, cfg.workers, [&](std::size_t t) {
        Rng rng = Rng::stream(cfg.seed, stream_offset + t);
        const Trajectory tr = ev.evolve(setup.coupled, cfg.horizon, cfg.horizon, rng, {{cfg.horizon}});
        const StateVector& fin = tr.states.back();
        EprTrial& o = out[t];
        o.jumps = tr.jumps.size();
        if (coupling != 0.0) {
            o.pointer = split_weights(position_weights(fin, 2), setup.pointer, left, right);
            if (o.pointer[0] <= kBranchThreshold)
                o.a_outcome = 1;
            else if (o.pointer[1] <= kBranchThreshold)
                o.a_outcome = 0;
        }
        const std::vector<double> wb = position_weights(fin, 1);
        o.b_region = rng.uniform() < wb[0] ? 0 : 1;
    });
    return out;
}

/// b's reduced density matrix after the ensemble law has run for the horizon.
inline Matrix epr_oracle_b_state(const EprConfig& cfg, const EprSetup& setup) {
    const GrwParams params{cfg.alpha, cfg.lambda};
    const auto n = static_cast<Eigen::Index>(setup.shape.total());
    const LindbladGenerator gen(Operator(Matrix::Zero(n, n)), params, {{2, setup.pointer, cfg.amplification}}, setup.shape);
    const DensityMatrix rho0 = DensityMatrix::pure(setup.coupled);
    const DensityMatrix rho = integrate_checkpoints(rho0, gen, {gen.max_step(), cfg.horizon}, {cfg.horizon}).front();
    return partial_trace(rho, {1}).matrix();
}

inline ExperimentReport run_epr_position(const EprConfig& cfg) {
    cfg.validate();
    const EprSetup setup = epr_setup(cfg, cfg.coupling);
    const std::vector<EprTrial> trials = run_epr_trials(cfg, setup, cfg.coupling, 0);

    ExperimentReport rep;
    rep.scenario = "epr";
    rep.seed = cfg.seed;
    rep.config = {{"delta", {cfg.delta1, cfg.delta2, cfg.delta3, cfg.delta4}},
                  {"packet_width", cfg.packet_width},
                  {"pointer_points", cfg.pointer_points},
                  {"spacing", cfg.spacing},
                  {"alpha", cfg.alpha},
                  {"lambda", cfg.lambda},
                  {"amplification", cfg.amplification},
                  {"effective_rate", cfg.amplification * cfg.lambda},
                  {"horizon", cfg.horizon},
                  {"coupling", cfg.coupling},
                  {"trials", cfg.trials},
                  {"control", cfg.control},
                  {"oracle", cfg.oracle}};
    rep.trials.header = {"trial", "a_outcome", "b_region", "pointer_weight_left", "pointer_weight_right", "jumps"};
    static const char* a_names[] = {"D1", "D3"};
    static const char* b_names[] = {"D2", "D4"};

    const bool measured = cfg.coupling != 0.0;
    std::size_t inconclusive = 0, d1 = 0, d3 = 0, d1_d2 = 0, d3_d4 = 0, b_d2 = 0;
    for (std::size_t t = 0; t < trials.size(); ++t) {
        const EprTrial& o = trials[t];
        if (o.b_region == 0) ++b_d2;
        if (measured) {
            if (o.a_outcome < 0) ++inconclusive;
            if (o.a_outcome == 0) {
                ++d1;
                if (o.b_region == 0) ++d1_d2;
            }
            if (o.a_outcome == 1) {
                ++d3;
                if (o.b_region == 1) ++d3_d4;
            }
        }
        rep.trials.add({cell(t), cell(o.a_outcome < 0 ? (measured ? "inconclusive" : "none") : a_names[o.a_outcome]),
                        cell(b_names[o.b_region]), cell(o.pointer[0]), cell(o.pointer[1]), cell(o.jumps)});
    }
    const double n = static_cast<double>(cfg.trials);
    Json& r = rep.results;
    r["measured"] = measured;
    if (measured) {
        const std::size_t conclusive = d1 + d3;
        r["inconclusive_trials"] = inconclusive;
        r["conclusive_trials"] = conclusive;
        if (conclusive > 0) {
            const double f1 = static_cast<double>(d1) / static_cast<double>(conclusive);
            const double sigma = stats::binomial_sigma(0.5, conclusive);
            r["a_frequencies"] = {{"D1", f1}, {"D3", 1.0 - f1}};
            r["a_split_sigma"] = sigma;
            r["a_split_z"] = (f1 - 0.5) / sigma;
            const double correct = static_cast<double>(d1_d2 + d3_d4) / static_cast<double>(conclusive);
            r["b_given_a"] = {{"D2_given_D1", d1 ? static_cast<double>(d1_d2) / static_cast<double>(d1) : 0.0},
                              {"D4_given_D3", d3 ? static_cast<double>(d3_d4) / static_cast<double>(d3) : 0.0}};
            r["b_localization_correct"] = correct;
        }
    }
    const double pb = static_cast<double>(b_d2) / n;
    r["b_frequencies"] = {{"D2", pb}, {"D4", 1.0 - pb}};
    r["b_sigma"] = stats::binomial_sigma(0.5, cfg.trials);

    if (cfg.control && measured) {
        const EprSetup free_setup = epr_setup(cfg, 0.0);
        const std::vector<EprTrial> ctrl = run_epr_trials(cfg, free_setup, 0.0, cfg.trials);
        std::size_t c_d2 = 0;
        for (const auto& o : ctrl)
            if (o.b_region == 0) ++c_d2;
        const double pc = static_cast<double>(c_d2) / n;
        const double sigma = stats::difference_sigma(0.5, cfg.trials, cfg.trials);
        r["control"] = {{"b_frequencies", {{"D2", pc}, {"D4", 1.0 - pc}}},
                        {"difference", pb - pc},
                        {"difference_sigma", sigma},
                        {"within_3sigma", std::abs(pb - pc) <= 3.0 * sigma}};
    }
    if (cfg.oracle) {
        auto b_state = [](const Matrix& rb) { return Json::array({rb(0, 0).real(), rb(1, 1).real(), std::abs(rb(0, 1))}); };
        const Matrix with = epr_oracle_b_state(cfg, setup);
        const Matrix without = epr_oracle_b_state(cfg, epr_setup(cfg, 0.0));
        const Matrix half = 0.5 * Matrix::Identity(2, 2);
        r["oracle_b_state"] = {{"coupled", b_state(with)},
                               {"uncoupled", b_state(without)},
                               {"max_deviation", std::max(max_abs_difference(with, half), max_abs_difference(without, half))}};
    }
    return rep;
}

// ---- trajectories vs ensemble law ------------------------------------------------

struct TwoPeakSetup {
    std::size_t points = 64;
    double spacing = 1.0;
    double alpha = 1.0 / 16.0;
    double lambda = 1.0;
    double mass = 4.0;  // 0 switches the Hamiltonian off
    std::size_t peak1 = 16, peak2 = 48;
    double width = 1.0;
    double weight1 = 0.5;  // |amplitude of peak 1|^2
    double horizon = 5.0;

    Grid grid() const { return Grid(points, spacing); }

    void validate() const {
        GrwParams{alpha, lambda, 1.0, mass > 0.0 ? mass : 1.0}.validate();
        if (mass < 0.0) throw ConfigError("mass", "must be >= 0");
        if (peak1 >= points) throw ConfigError("peak1", "must be a grid index");
        if (peak2 >= points) throw ConfigError("peak2", "must be a grid index");
        if (!(width > 0.0)) throw ConfigError("width", "must be > 0");
        if (!(weight1 >= 0.0 && weight1 <= 1.0)) throw ConfigError("weight1", "must lie in [0, 1]");
        if (!(horizon > 0.0)) throw ConfigError("horizon", "must be > 0");
        if (!grid_resolves(grid(), alpha)) throw GridInadequateError("alpha: grid does not resolve the localization width");
    }

    StateVector initial() const {
        const Grid g = grid();
        return superpose(gaussian_packet(g, peak1, width), std::sqrt(weight1), gaussian_packet(g, peak2, width),
                         std::sqrt(1.0 - weight1));
    }

    Operator hamiltonian() const {
        if (mass == 0.0) return Operator(Matrix::Zero(static_cast<Eigen::Index>(points), static_cast<Eigen::Index>(points)));
        return free_particle_hamiltonian(grid(), mass);
    }

    GrwParams params() const { return {alpha, lambda, 1.0, mass > 0.0 ? mass : 1.0}; }

    Json to_json() const {
        return {{"points", points}, {"spacing", spacing}, {"alpha", alpha}, {"lambda", lambda},
                {"mass", mass},     {"peak1", peak1},     {"peak2", peak2}, {"width", width},
                {"weight1", weight1}, {"horizon", horizon}};
    }
};

struct OracleConfig {
    TwoPeakSetup setup;
    std::size_t ensemble = 10000;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
};

inline std::vector<double> oracle_times(double horizon) { return {0.25 * horizon, 0.5 * horizon, 0.75 * horizon, horizon}; }

inline constexpr std::size_t kMinEnsemble = 100;

inline ExperimentReport run_oracle_comparison(const OracleConfig& cfg) {
    cfg.setup.validate();
    if (cfg.ensemble < kMinEnsemble) throw ConfigError("k", "ensemble size must be >= 100");
    const TwoPeakSetup& s = cfg.setup;
    const Grid g = s.grid();
    const StateVector psi0 = s.initial();
    const Operator h = s.hamiltonian();
    const std::vector<CollapsingParticle> particles{{0, g}};
    const std::vector<double> times = oracle_times(s.horizon);

    const GrwEvolver ev(h, s.params(), particles, psi0.shape());
    const double traj_dt = std::min(ev.max_step(), s.horizon);
    const std::vector<Trajectory> trs = ev.ensemble(psi0, s.horizon, traj_dt, cfg.ensemble, cfg.seed, {times}, cfg.workers);

    const LindbladGenerator gen(h, s.params(), particles, psi0.shape());
    const double oracle_dt = std::min(gen.max_step(), s.horizon);
    const std::vector<DensityMatrix> oracle =
        integrate_checkpoints(DensityMatrix::pure(psi0), gen, {oracle_dt, s.horizon}, times);

    ExperimentReport rep;
    rep.scenario = "oracle-compare";
    rep.seed = cfg.seed;
    rep.config = s.to_json();
    rep.config["k"] = cfg.ensemble;
    rep.config["trajectory_dt"] = traj_dt;
    rep.config["oracle_dt"] = oracle_dt;
    rep.trials.header = {"trajectory", "jumps", "final_mean_position"};
    for (std::size_t k = 0; k < trs.size(); ++k)
        rep.trials.add({cell(k), cell(trs[k].jumps.size()), cell(circular_mean_position(trs[k].states.back(), 0, g))});

    Json rows = Json::array();
    bool all_within = true;
    double worst = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const TraceDistanceReport d = ensemble_compare(trs, oracle[i], times[i]);
        all_within = all_within && d.within_threshold();
        worst = std::max(worst, d.distance);
        rows.push_back({{"time", d.at}, {"distance", d.distance}, {"threshold", d.threshold},
                        {"within", d.within_threshold()}});
    }
    rep.results["distances"] = rows;
    rep.results["max_distance"] = worst;
    rep.results["all_within_threshold"] = all_within;
    return rep;
}

// ---- two-peak collapse runs ------------------------------------------------------

struct GrwRunConfig {
    TwoPeakSetup setup{64, 1.0, 1.0 / 16.0, 20.0, 0.0, 16, 48, 1.0, 0.5, 1.0};
    std::size_t trials = 1000;
    long shift = 0;  // translate the initial state and the center sampling by this many sites
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    double single_peak_threshold = 0.99;
};

struct GrwRunTrial {
    std::size_t jumps = 0;
    double mass1 = 0.0, mass2 = 0.0;
    double mean_position = 0.0;
};

inline std::vector<GrwRunTrial> grw_run_trials(const GrwRunConfig& cfg) {
    cfg.setup.validate();
    const TwoPeakSetup& s = cfg.setup;
    const Grid g = s.grid();
    const StateVector psi0 = translate(s.initial(), g, cfg.shift);
    const GrwEvolver ev(s.hamiltonian(), s.params(), {{0, g}}, psi0.shape());
    const double dt = std::min(ev.max_step(), s.horizon);
    const std::size_t p1 = g.shifted(s.peak1, cfg.shift), p2 = g.shifted(s.peak2, cfg.shift);
    const TrajectoryOptions opts{{s.horizon}, g.shifted(0, cfg.shift)};
    std::vector<GrwRunTrial> out(cfg.trials);
    parallel_for(cfg.trials, cfg.workers, [&](std::size_t t) {
        Rng rng = Rng::stream(cfg.seed, t);
        const Trajectory tr = ev.evolve(psi0, s.horizon, dt, rng, opts);
        const StateVector& fin = tr.states.back();
        const auto m = split_weights(position_weights(fin, 0), g, p1, p2);
        out[t] = {tr.jumps.size(), m[0], m[1], circular_mean_position(fin, 0, g)};
    });
    return out;
}

inline ExperimentReport run_grw(const GrwRunConfig& cfg) {
    if (cfg.trials == 0) throw ConfigError("trials", "must be > 0");
    const std::vector<GrwRunTrial> out = grw_run_trials(cfg);
    ExperimentReport rep;
    rep.scenario = "grw-run";
    rep.seed = cfg.seed;
    rep.config = cfg.setup.to_json();
    rep.config["trials"] = cfg.trials;
    rep.config["shift"] = cfg.shift;
    rep.config["single_peak_threshold"] = cfg.single_peak_threshold;
    rep.trials.header = {"trial", "jumps", "mass_peak1", "mass_peak2", "mean_position", "winner"};
    std::size_t single = 0, first = 0, jumps = 0;
    for (std::size_t t = 0; t < out.size(); ++t) {
        const GrwRunTrial& o = out[t];
        if (std::max(o.mass1, o.mass2) >= cfg.single_peak_threshold) ++single;
        if (o.mass1 > o.mass2) ++first;
        jumps += o.jumps;
        rep.trials.add({cell(t), cell(o.jumps), cell(o.mass1), cell(o.mass2), cell(o.mean_position),
                        cell(o.mass1 > o.mass2 ? 1 : 2)});
    }
    const double n = static_cast<double>(cfg.trials);
    const double f1 = static_cast<double>(first) / n;
    const double w = cfg.setup.weight1;
    const double sigma = stats::binomial_sigma(w, cfg.trials);
    rep.results["single_peak_fraction"] = static_cast<double>(single) / n;
    rep.results["branch_frequencies"] = {f1, 1.0 - f1};
    rep.results["expected_frequencies"] = {w, 1.0 - w};
    rep.results["branch_sigma"] = sigma;
    rep.results["branch_z"] = sigma > 0.0 ? (f1 - w) / sigma : 0.0;
    rep.results["mean_jumps"] = static_cast<double>(jumps) / n;
    return rep;
}

}  // namespace grwlab
