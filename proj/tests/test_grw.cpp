#include <catch_amalgamated.hpp>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <cmath>
#include <numbers>

#include "grwlab/grw.hpp"

using namespace grwlab;

namespace {

// alpha^{-1/2} = 4 dx
constexpr double kAlpha = 1.0 / 16.0;

double peak_mass(const std::vector<double>& p, const Grid& g, std::size_t site, double radius) {
    double s = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k)
        if (g.periodic_distance(k, site) <= radius) s += p[k];
    return s;
}

}  // namespace

TEST_CASE("grid geometry") {
    CHECK_THROWS_AS(Grid(4, 1.0), PreconditionError);
    CHECK_THROWS_AS(Grid(16, 0.0), PreconditionError);
    const Grid g(16, 0.5, -4.0);
    CHECK(g.coordinate(0) == -4.0);
    CHECK(g.index_of(-3.5) == 1);
    CHECK_THROWS_AS(g.index_of(-3.75), PreconditionError);
    CHECK_THROWS_AS(g.index_of(4.0), PreconditionError);
    CHECK(g.offset(0, 15) == -1);
    CHECK(g.offset(15, 0) == 1);
    CHECK(g.offset(0, 8) == -8);
    CHECK(g.periodic_distance(1, 14) == 1.5);
    CHECK(g.shifted(2, -5) == 13);
}

TEST_CASE("params validation") {
    CHECK_THROWS_AS((GrwParams{0.0, 1.0}.validate()), PreconditionError);
    CHECK_THROWS_AS((GrwParams{1.0, -1.0}.validate()), PreconditionError);
    CHECK_THROWS_AS((GrwParams{1.0, 1.0, 0.0}.validate()), PreconditionError);
    CHECK_THROWS_AS((GrwParams{1.0, 1.0, 1.0, -2.0}.validate()), PreconditionError);
    CHECK_NOTHROW((GrwParams{1.0, 0.0}.validate()));
}

TEST_CASE("localization operator entries") {
    const Grid g(64, 1.0);
    const Operator l = localization_operator(g, kAlpha, 10.0);
    CHECK(std::abs(l(10, 10).real() - std::pow(kAlpha / std::numbers::pi, 0.25)) <= 1e-15);
    for (std::size_t q = 0; q < 64; ++q) {
        const double d = g.periodic_distance(q, 10);
        const double expect = std::pow(kAlpha / std::numbers::pi, 0.25) * std::exp(-0.5 * kAlpha * d * d);
        CHECK(std::abs(l(q, q).real() - expect) <= 1e-15);
        // even about the center under periodic reflection
        CHECK(l(g.shifted(10, static_cast<long>(q)), g.shifted(10, static_cast<long>(q))) ==
              l(g.shifted(10, -static_cast<long>(q)), g.shifted(10, -static_cast<long>(q))));
    }
    CHECK(l.is_hermitian());
    CHECK_THROWS_AS(localization_operator(g, kAlpha, 10.5), PreconditionError);
}

TEST_CASE("localization completeness on adequate grids") {
    for (const auto& [m, dx, alpha] : {std::tuple{64u, 1.0, 1.0 / 16.0}, std::tuple{128u, 0.5, 0.4},
                                       std::tuple{32u, 1.0, 0.1}}) {
        const Grid g(m, dx);
        REQUIRE(grid_resolves(g, alpha));
        Matrix sum = Matrix::Zero(m, m);
        for (std::size_t k = 0; k < m; ++k) {
            const Matrix l = localization_operator(g, alpha, g.coordinate(k)).matrix();
            sum += l * l * dx;
        }
        CHECK(max_abs_difference(sum, Matrix::Identity(m, m)) <= 1e-6);
    }
}

TEST_CASE("jump density of a sharply peaked state") {
    const Grid g(64, 1.0);
    const GrwParams params{kAlpha, 1.0};
    const StateVector psi = StateVector::basis(SubsystemShape{64}, 20);
    const std::vector<double> p = jump_density(psi, 0, g, params);
    // oracle: direct summation of L(x_k)^2 at the occupied site
    double raw_total = 0.0;
    std::vector<double> raw(64);
    for (std::size_t k = 0; k < 64; ++k) {
        const double d = g.periodic_distance(k, 20);
        raw[k] = std::sqrt(kAlpha / std::numbers::pi) * std::exp(-kAlpha * d * d);
        raw_total += raw[k];
    }
    CHECK(std::abs(raw_total - 1.0) <= 1e-6);
    double mean_offset = 0.0, sum = 0.0;
    for (std::size_t k = 0; k < 64; ++k) {
        CHECK(std::abs(p[k] - raw[k] / raw_total) <= 1e-14);
        mean_offset += p[k] * static_cast<double>(g.offset(20, k));
        sum += p[k];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-14);
    CHECK(std::abs(mean_offset) <= 1.0);
    CHECK(std::max_element(p.begin(), p.end()) - p.begin() == 20);
}

TEST_CASE("jump density of a two-peak superposition splits evenly") {
    const Grid g(128, 1.0);
    const GrwParams params{kAlpha, 1.0};
    const StateVector psi = superpose(gaussian_packet(g, 32, 1.0), 1.0, gaussian_packet(g, 96, 1.0), 1.0);
    const std::vector<double> p = jump_density(psi, 0, g, params);
    CHECK(std::abs(peak_mass(p, g, 32, 31.5) - 0.5) <= 1e-3);
    CHECK(std::abs(peak_mass(p, g, 96, 31.5) - 0.5) <= 1e-3);
}

TEST_CASE("jump density of a uniform state is uniform") {
    const Grid g(64, 1.0);
    const StateVector psi(SubsystemShape{64}, Vector::Constant(64, cplx{0.125}));
    const std::vector<double> p = jump_density(psi, 0, g, GrwParams{kAlpha, 1.0});
    for (double v : p) CHECK(std::abs(v - 1.0 / 64.0) <= 1e-9);
}

TEST_CASE("jump density flags an inadequate grid") {
    // kernel much narrower than the spacing: the grid sum misses the integral
    const Grid g(16, 1.0);
    const StateVector psi = StateVector::basis(SubsystemShape{16}, 3);
    CHECK_THROWS_AS(jump_density(psi, 0, g, GrwParams{25.0, 1.0}), GridInadequateError);
    // kernel wider than the grid
    CHECK_THROWS_AS(jump_density(psi, 0, g, GrwParams{1e-4, 1.0}), GridInadequateError);
}

TEST_CASE("jump density marginalizes the other factors") {
    const Grid g(32, 1.0);
    const SubsystemShape shape{2, 32};
    const StateVector psi = tensor_product(StateVector::basis(SubsystemShape{2}, 1), gaussian_packet(g, 5, 1.0));
    const std::vector<double> p = jump_density(psi, 1, g, GrwParams{0.1, 1.0});
    const std::vector<double> q = jump_density(gaussian_packet(g, 5, 1.0), 0, g, GrwParams{0.1, 1.0});
    for (std::size_t k = 0; k < 32; ++k) CHECK(std::abs(p[k] - q[k]) <= 1e-15);
    CHECK_THROWS_AS(jump_density(psi, 0, g, GrwParams{0.1, 1.0}), DimensionError);
}

TEST_CASE("jump on a narrow packet at its center barely changes it") {
    const Grid g(64, 1.0);
    for (double sigma : {0.5, 0.8, 1.0}) {
        const StateVector psi = gaussian_packet(g, 30, sigma);
        const StateVector out = apply_jump(psi, 0, 30.0, g, GrwParams{kAlpha, 1.0});
        CHECK(out.is_normalized());
        CHECK(fidelity(out, psi) >= 1.0 - kAlpha * sigma * sigma);
    }
}

TEST_CASE("jump on one peak of a wide superposition selects it") {
    const Grid g(128, 1.0);
    const double separation = 10.0 / std::sqrt(kAlpha);
    const std::size_t a = 24, b = a + static_cast<std::size_t>(separation);
    const StateVector psi = superpose(gaussian_packet(g, a, 1.0), 1.0, gaussian_packet(g, b, 1.0), 1.0);
    const StateVector out = apply_jump(psi, 0, static_cast<double>(a), g, GrwParams{kAlpha, 1.0});
    CHECK(mass_near(out, 0, g, a, separation / 2.0) >= 1.0 - 1e-6);
}

TEST_CASE("jump leaves the other factor of a product state unchanged") {
    const Grid g(32, 1.0);
    Vector spin(3);
    spin << cplx{0.6, 0.0}, cplx{0.0, 0.48}, cplx{0.64, 0.0};
    const StateVector other(SubsystemShape{3}, spin);
    const StateVector packet = superpose(gaussian_packet(g, 4, 1.5), 1.0, gaussian_packet(g, 20, 1.5), cplx{0.0, 1.0});
    const StateVector psi = tensor_product(other, packet);
    const StateVector out = apply_jump(psi, 1, 6.0, g, GrwParams{0.1, 1.0});
    const StateVector jumped = apply_jump(packet, 0, 6.0, g, GrwParams{0.1, 1.0});
    const StateVector expect = tensor_product(other, jumped);
    CHECK(max_abs_difference(out.amplitudes(), expect.amplitudes()) <= 1e-15);
}

TEST_CASE("jump at a zero-probability center is an error") {
    const Grid g(64, 1.0);
    const StateVector psi = StateVector::basis(SubsystemShape{64}, 0);
    CHECK_THROWS_AS(apply_jump(psi, 0, 32.0, g, GrwParams{1.0, 1.0}), ZeroNormError);
}

TEST_CASE("inverse-CDF center sampling") {
    const std::vector<double> t{0.0, 0.25, 0.0, 0.5, 0.25};
    CHECK(sample_center(t, 0.0) == 1);
    CHECK(sample_center(t, 0.2499) == 1);
    CHECK(sample_center(t, 0.25) == 3);
    CHECK(sample_center(t, 0.9999999) == 4);
    CHECK(sample_center(t, 0.0, 3) == 3);
    CHECK(sample_center(t, 0.8, 3) == 1);
}

TEST_CASE("zero rate gives no jumps") {
    Rng rng(1);
    CHECK(sample_jump_times(0.0, 3, 10.0, rng).empty());
    CHECK_THROWS_AS(sample_jump_times(1.0, 1, 0.0, rng), PreconditionError);
}

TEST_CASE("jump counts have the Poisson mean") {
    Rng rng(2024);
    const std::size_t runs = 10000;
    double total = 0.0;
    for (std::size_t r = 0; r < runs; ++r) {
        const auto jumps = sample_jump_times(2.0, 1, 5.0, rng);
        for (std::size_t i = 1; i < jumps.size(); ++i) REQUIRE(jumps[i - 1].time <= jumps[i].time);
        total += static_cast<double>(jumps.size());
    }
    const double mean = total / static_cast<double>(runs);
    CHECK(std::abs(mean - 10.0) <= 3.0 * std::sqrt(10.0) / 100.0);
}

TEST_CASE("two merged processes are Poisson(2 lambda T) by chi-square") {
    Rng rng(99);
    const double lambda = 1.0, horizon = 2.0, mu = 2.0 * lambda * horizon;
    const std::size_t runs = 10000, top = 10;  // bins 0..9 and >= 10
    std::vector<double> observed(top + 1, 0.0);
    for (std::size_t r = 0; r < runs; ++r) {
        const auto jumps = sample_jump_times(lambda, 2, horizon, rng);
        for (std::size_t i = 1; i < jumps.size(); ++i) REQUIRE(jumps[i - 1].time <= jumps[i].time);
        observed[std::min(jumps.size(), top)] += 1.0;
    }
    const boost::math::poisson_distribution<double> pois(mu);
    double chi2 = 0.0;
    for (std::size_t k = 0; k <= top; ++k) {
        const double p = k < top ? boost::math::pdf(pois, static_cast<double>(k))
                                 : boost::math::cdf(boost::math::complement(pois, static_cast<double>(top - 1)));
        const double expected = p * static_cast<double>(runs);
        chi2 += (observed[k] - expected) * (observed[k] - expected) / expected;
    }
    const boost::math::chi_squared_distribution<double> dist(static_cast<double>(top));
    CHECK(chi2 <= boost::math::quantile(dist, 0.99));
}

TEST_CASE("trajectory is constant without dynamics") {
    const Grid g(32, 1.0);
    const StateVector psi = superpose(gaussian_packet(g, 5, 1.0), 1.0, gaussian_packet(g, 20, 1.0), 1.0);
    const Operator h(Matrix::Zero(32, 32));
    Rng rng(3);
    const Trajectory tr = evolve_trajectory(psi, h, GrwParams{0.1, 0.0}, {{0, g}}, 2.0, 0.1, rng);
    CHECK(tr.jumps.empty());
    CHECK(tr.states.size() == tr.sample_times.size());
    CHECK(tr.sample_times.size() == 21);
    for (const auto& s : tr.states) CHECK(max_abs_difference(s.amplitudes(), psi.amplitudes()) == 0.0);
}

TEST_CASE("unitary evolution conserves the norm and matches the propagator") {
    const Grid g(32, 1.0);
    const Operator h = free_particle_hamiltonian(g, 1.0);
    const StateVector psi = gaussian_packet(g, 10, 1.5);
    Rng rng(4);
    GrwEvolver ev(h, GrwParams{0.1, 0.0}, {{0, g}}, psi.shape());
    const double dt = ev.max_step();
    const Trajectory tr = ev.evolve(psi, 1.0, dt, rng);
    for (const auto& s : tr.states) CHECK(std::abs(s.norm() - 1.0) <= 1e-10);
    const Vector expect = unitary_propagator(h, 1.0).matrix() * psi.amplitudes();
    CHECK(max_abs_difference(tr.states.back().amplitudes(), expect) <= 1e-10);
}

TEST_CASE("step size above 0.01 hbar/||H|| is rejected") {
    const Grid g(32, 1.0);
    const Operator h = free_particle_hamiltonian(g, 1.0);
    GrwEvolver ev(h, GrwParams{0.1, 1.0}, {{0, g}}, SubsystemShape{32});
    CHECK(std::abs(ev.max_step() - 0.01 / 2.0) <= 1e-12);  // ||H|| = 2 / (m dx^2) = 2
    Rng rng(1);
    CHECK_THROWS_AS(ev.evolve(gaussian_packet(g, 3, 1.0), 1.0, 0.0051, rng), NumericalError);
}

TEST_CASE("non-normalized initial state is rejected") {
    const Grid g(16, 1.0);
    const StateVector psi(SubsystemShape{16}, Vector::Constant(16, cplx{1.0}));
    Rng rng(1);
    CHECK_THROWS_AS(evolve_trajectory(psi, Operator(Matrix::Zero(16, 16)), GrwParams{0.1, 1.0}, {{0, g}}, 1.0, 0.1, rng),
                    PreconditionError);
}

TEST_CASE("trajectories stay normalized with jumps sorted in time") {
    const Grid g(64, 1.0);
    const Operator h = free_particle_hamiltonian(g, 4.0);
    const StateVector psi = superpose(gaussian_packet(g, 16, 1.0), 1.0, gaussian_packet(g, 48, 1.0), 1.0);
    GrwEvolver ev(h, GrwParams{kAlpha, 4.0}, {{0, g}}, psi.shape());
    Rng rng(8);
    for (int rep = 0; rep < 20; ++rep) {
        const Trajectory tr = ev.evolve(psi, 2.0, 0.01, rng, {{0.5, 1.0, 1.5, 2.0}});
        for (const auto& s : tr.states) CHECK(std::abs(s.norm() - 1.0) <= 1e-9);
        for (std::size_t i = 1; i < tr.jumps.size(); ++i) CHECK(tr.jumps[i - 1].time <= tr.jumps[i].time);
        for (const auto& j : tr.jumps) {
            CHECK(j.time >= 0.0);
            CHECK(j.time <= 2.0);
            CHECK_NOTHROW(g.index_of(j.center));
        }
    }
}

TEST_CASE("strong collapse picks one peak with Born frequencies") {
    const Grid g(64, 1.0);
    const double w1 = 0.3;
    const StateVector psi =
        superpose(gaussian_packet(g, 16, 1.0), std::sqrt(w1), gaussian_packet(g, 48, 1.0), std::sqrt(1.0 - w1));
    GrwEvolver ev(Operator(Matrix::Zero(64, 64)), GrwParams{kAlpha, 20.0}, {{0, g}}, psi.shape());
    const std::size_t runs = 400;
    const auto trs = ev.ensemble(psi, 1.0, 0.1, runs, 555, {{1.0}});
    std::size_t single = 0, first = 0;
    for (const auto& tr : trs) {
        const double m1 = mass_near(tr.states.back(), 0, g, 16, 15.5);
        const double m2 = mass_near(tr.states.back(), 0, g, 48, 15.5);
        if (std::max(m1, m2) >= 0.99) ++single;
        if (m1 > m2) ++first;
    }
    CHECK(static_cast<double>(single) >= 0.99 * runs);
    const double sigma = std::sqrt(w1 * (1 - w1) / runs);
    CHECK(std::abs(static_cast<double>(first) / runs - w1) <= 3.0 * sigma);
}

TEST_CASE("translated seed-matched runs are exact translates") {
    const Grid g(64, 1.0);
    const Operator h = free_particle_hamiltonian(g, 2.0);
    const StateVector psi = superpose(gaussian_packet(g, 10, 1.0), 1.0, gaussian_packet(g, 35, 2.0), cplx{0.0, 0.7});
    GrwEvolver ev(h, GrwParams{kAlpha, 3.0}, {{0, g}}, psi.shape());
    for (long s : {1L, 7L, 32L, -13L}) {
        Rng r1(42), r2(42);
        const Trajectory a = ev.evolve(psi, 2.0, 0.005, r1, {{0.5, 1.0, 2.0}, 0});
        const Trajectory b =
            ev.evolve(translate(psi, g, s), 2.0, 0.005, r2, {{0.5, 1.0, 2.0}, g.shifted(0, s)});
        REQUIRE(a.jumps.size() == b.jumps.size());
        REQUIRE(!a.jumps.empty());
        for (std::size_t i = 0; i < a.jumps.size(); ++i) {
            CHECK(a.jumps[i].time == b.jumps[i].time);
            CHECK(g.shifted(g.index_of(a.jumps[i].center), s) == g.index_of(b.jumps[i].center));
        }
        for (std::size_t i = 0; i < a.states.size(); ++i) {
            const Vector moved = translate(a.states[i], g, s).amplitudes();
            CHECK((moved.array() == b.states[i].amplitudes().array()).all());
        }
    }
}

TEST_CASE("ensembles do not depend on the worker count") {
    const Grid g(32, 1.0);
    const StateVector psi = superpose(gaussian_packet(g, 4, 1.0), 1.0, gaussian_packet(g, 20, 1.0), 1.0);
    GrwEvolver ev(free_particle_hamiltonian(g, 1.0), GrwParams{0.1, 2.0}, {{0, g}}, psi.shape());
    const auto a = ev.ensemble(psi, 1.0, 0.004, 12, 9, {{0.5, 1.0}}, 1);
    const auto b = ev.ensemble(psi, 1.0, 0.004, 12, 9, {{0.5, 1.0}}, 3);
    for (std::size_t k = 0; k < 12; ++k) {
        CHECK(a[k].jumps.size() == b[k].jumps.size());
        CHECK((a[k].states.back().amplitudes().array() == b[k].states.back().amplitudes().array()).all());
    }
}

TEST_CASE("grid and particle validation") {
    const Grid g(16, 1.0);
    const Operator h(Matrix::Zero(16, 16));
    CHECK_THROWS_AS(GrwEvolver(h, GrwParams{0.1, 1.0}, {{1, g}}, SubsystemShape{16}), DimensionError);
    CHECK_THROWS_AS(GrwEvolver(h, GrwParams{0.1, 1.0}, {{0, Grid(32, 1.0)}}, SubsystemShape{16}), DimensionError);
    CHECK_THROWS_AS(GrwEvolver(h, GrwParams{0.1, 1.0}, {{0, g}, {0, g}}, SubsystemShape{16}), PreconditionError);
}
