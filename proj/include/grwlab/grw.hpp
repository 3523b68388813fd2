#pragma once

// Stochastic localization dynamics on periodic 1D position grids.
//
// A trajectory alternates exact unitary evolution with Gaussian
// localization jumps L(x) psi / ||L(x) psi||. Jump times are independent
// Poisson processes per collapsing particle; the jump center is drawn from
// p(x_k) = ||L(x_k) psi||^2 dx over the grid points.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "grwlab/errors.hpp"
#include "grwlab/hilbert.hpp"
#include "grwlab/parallel.hpp"
#include "grwlab/rng.hpp"

namespace grwlab {

struct GrwParams {
    double alpha = 1.0;   // inverse length squared; localization width is alpha^{-1/2}
    double lambda = 0.0;  // jumps per particle per unit time
    double hbar = 1.0;
    double mass = 1.0;

    void validate() const {
        if (!(alpha > 0.0)) throw PreconditionError("alpha must be > 0");
        if (!(lambda >= 0.0)) throw PreconditionError("lambda must be >= 0");
        if (!(hbar > 0.0)) throw PreconditionError("hbar must be > 0");
        if (!(mass > 0.0)) throw PreconditionError("mass must be > 0");
    }
};

class Grid {
public:
    static constexpr std::size_t kMinPoints = 8;

    Grid(std::size_t points, double spacing, double origin = 0.0) : points_(points), spacing_(spacing), origin_(origin) {
        if (points < kMinPoints) throw PreconditionError("grid needs at least 8 points");
        if (!(spacing > 0.0)) throw PreconditionError("grid spacing must be > 0");
    }

    std::size_t points() const noexcept { return points_; }
    double spacing() const noexcept { return spacing_; }
    double origin() const noexcept { return origin_; }
    double extent() const noexcept { return static_cast<double>(points_) * spacing_; }
    double coordinate(std::size_t k) const { return origin_ + static_cast<double>(k) * spacing_; }

    /// Grid index of a coordinate that lies on a grid point.
    std::size_t index_of(double x) const {
        const double r = (x - origin_) / spacing_;
        const double k = std::round(r);
        if (std::abs(r - k) > 1e-9 || k < 0.0 || k >= static_cast<double>(points_))
            throw PreconditionError("coordinate " + std::to_string(x) + " is not on the grid");
        return static_cast<std::size_t>(k);
    }

    /// Minimal-image site offset from i to j, in [-M/2, M/2).
    long offset(std::size_t i, std::size_t j) const {
        const long m = static_cast<long>(points_);
        long d = (static_cast<long>(j) - static_cast<long>(i)) % m;
        if (d < 0) d += m;
        if (d >= m - m / 2) d -= m;
        return d;
    }

    double periodic_distance(std::size_t i, std::size_t j) const {
        return std::abs(static_cast<double>(offset(i, j))) * spacing_;
    }

    /// Index shifted by s sites, periodically.
    std::size_t shifted(std::size_t k, long s) const {
        const long m = static_cast<long>(points_);
        long r = (static_cast<long>(k) + s) % m;
        if (r < 0) r += m;
        return static_cast<std::size_t>(r);
    }

private:
    std::size_t points_;
    double spacing_;
    double origin_;
};

/// The grid resolves the localization kernel well enough that the discrete
/// completeness sum matches 1 to ~1e-6: alpha dx^2 <= 0.1 and extent >= 10 alpha^{-1/2}.
inline bool grid_resolves(const Grid& grid, double alpha) {
    return alpha * grid.spacing() * grid.spacing() <= 0.1 && grid.extent() >= 10.0 / std::sqrt(alpha);
}

/// Kernel values by site offset m = 0..M-1: (alpha/pi)^{1/4} exp(-alpha/2 d_m^2),
/// d_m the minimal-image distance. This is the 1D normalization, so that
/// the integral of L(x)^2 over x is 1.
inline std::vector<double> localization_kernel(const Grid& grid, double alpha) {
    const double prefactor = std::pow(alpha / std::numbers::pi, 0.25);
    std::vector<double> f(grid.points());
    for (std::size_t m = 0; m < grid.points(); ++m) {
        const double d = grid.periodic_distance(0, m);
        f[m] = prefactor * std::exp(-0.5 * alpha * d * d);
    }
    return f;
}

inline Operator localization_operator(const Grid& grid, double alpha, double center) {
    const std::size_t c = grid.index_of(center);
    const std::vector<double> f = localization_kernel(grid, alpha);
    std::vector<double> diag(grid.points());
    for (std::size_t q = 0; q < grid.points(); ++q) diag[q] = f[grid.shifted(q, -static_cast<long>(c))];
    return Operator::diagonal(diag);
}

/// A subsystem that undergoes localization jumps, with its grid and a
/// multiplier on the base rate (pointer amplification).
struct CollapsingParticle {
    std::size_t subsystem = 0;
    Grid grid;
    double rate_multiplier = 1.0;
};

inline void validate_particles(const SubsystemShape& shape, const std::vector<CollapsingParticle>& particles) {
    std::vector<bool> seen(shape.factors(), false);
    for (const auto& p : particles) {
        if (p.subsystem >= shape.factors()) throw DimensionError("collapsing particle refers to a missing subsystem");
        if (shape.dim(p.subsystem) != p.grid.points())
            throw DimensionError("grid size does not match subsystem dimension");
        if (seen[p.subsystem]) throw PreconditionError("subsystem listed twice as collapsing particle");
        if (!(p.rate_multiplier >= 0.0)) throw PreconditionError("rate multiplier must be >= 0");
        seen[p.subsystem] = true;
    }
}

/// |psi|^2 summed over every factor except `subsystem`.
inline std::vector<double> position_weights(const StateVector& psi, std::size_t subsystem) {
    const SubsystemShape& shape = psi.shape();
    const std::size_t d = shape.dim(subsystem);
    const std::size_t right = shape.stride(subsystem);
    const std::size_t left = shape.total() / (d * right);
    std::vector<double> w(d, 0.0);
    for (std::size_t l = 0; l < left; ++l)
        for (std::size_t q = 0; q < d; ++q)
            for (std::size_t r = 0; r < right; ++r) w[q] += std::norm(psi[(l * d + q) * right + r]);
    return w;
}

inline constexpr double kGridAdequacyTol = 1e-3;

/// p(x_k) = ||L(x_k) psi||^2 dx over all grid points, renormalized to sum
/// to one. Throws GridInadequateError if the raw sum is off by more than 1e-3.
inline std::vector<double> jump_density(const StateVector& psi, std::size_t subsystem, const Grid& grid,
                                        const GrwParams& params) {
    if (subsystem >= psi.shape().factors()) throw DimensionError("jump_density: subsystem out of range");
    if (psi.shape().dim(subsystem) != grid.points()) throw DimensionError("jump_density: grid does not match subsystem");
    const std::size_t m = grid.points();
    const std::vector<double> w = position_weights(psi, subsystem);
    std::vector<double> f2 = localization_kernel(grid, params.alpha);
    for (double& v : f2) v *= v;

    // Offset-indexed accumulation: every center sees its neighbourhood in
    // the same order, so translating psi translates p bit for bit.
    std::vector<double> p(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        double acc = 0.0;
        for (std::size_t off = 0; off < m; ++off) acc += f2[off] * w[(k + off) % m];
        p[k] = acc * grid.spacing();
    }
    const double total = permutation_invariant_sum(p);
    if (std::abs(total - 1.0) > kGridAdequacyTol)
        throw GridInadequateError("jump table sums to " + std::to_string(total) +
                                  "; grid does not resolve the localization width");
    for (double& v : p) v /= total;
    return p;
}

inline constexpr double kZeroNormTol = 1e-14;

inline StateVector apply_jump_at_index(const StateVector& psi, std::size_t subsystem, std::size_t center,
                                       const Grid& grid, double alpha) {
    const SubsystemShape& shape = psi.shape();
    if (subsystem >= shape.factors() || shape.dim(subsystem) != grid.points())
        throw DimensionError("apply_jump: grid does not match subsystem");
    if (center >= grid.points()) throw PreconditionError("apply_jump: center index off grid");
    const std::vector<double> f = localization_kernel(grid, alpha);
    Vector out(psi.amplitudes().size());
    for (std::size_t i = 0; i < shape.total(); ++i) {
        const std::size_t q = shape.digit(i, subsystem);
        out(static_cast<Eigen::Index>(i)) = psi[i] * f[grid.shifted(q, -static_cast<long>(center))];
    }
    StateVector hit(shape, std::move(out));
    const double n = hit.norm();
    if (n < kZeroNormTol) throw ZeroNormError("jump at a center with zero probability");
    return StateVector(shape, hit.amplitudes() / n);
}

/// L(center) psi / ||L(center) psi|| on the given subsystem.
inline StateVector apply_jump(const StateVector& psi, std::size_t subsystem, double center, const Grid& grid,
                              const GrwParams& params) {
    return apply_jump_at_index(psi, subsystem, grid.index_of(center), grid, params.alpha);
}

/// Inverse-CDF draw from a probability table, accumulating from `origin`
/// and wrapping around. u in [0, 1).
inline std::size_t sample_center(const std::vector<double>& table, double u, std::size_t origin = 0) {
    const std::size_t m = table.size();
    double cum = 0.0;
    std::size_t last_positive = origin % m;
    for (std::size_t j = 0; j < m; ++j) {
        const std::size_t k = (origin + j) % m;
        if (table[k] > 0.0) last_positive = k;
        cum += table[k];
        if (u < cum && table[k] > 0.0) return k;
    }
    return last_positive;  // rounding left u just above the final cumulative value
}

struct ScheduledJump {
    double time = 0.0;
    std::size_t particle = 0;  // position in the rate list
};

/// Merged arrivals of independent Poisson processes, one per entry of
/// `rates`, on [0, horizon). Draws are consumed particle by particle.
inline std::vector<ScheduledJump> sample_jump_times(const std::vector<double>& rates, double horizon, Rng& rng) {
    if (!(horizon > 0.0)) throw PreconditionError("horizon must be > 0");
    std::vector<ScheduledJump> out;
    for (std::size_t p = 0; p < rates.size(); ++p) {
        if (!(rates[p] > 0.0)) continue;
        double t = rng.exponential(rates[p]);
        while (t < horizon) {
            out.push_back({t, p});
            t += rng.exponential(rates[p]);
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
    return out;
}

inline std::vector<ScheduledJump> sample_jump_times(double lambda, std::size_t n_particles, double horizon, Rng& rng) {
    return sample_jump_times(std::vector<double>(n_particles, lambda), horizon, rng);
}

/// Exact propagator exp(-i H tau / hbar) for arbitrary tau, from a single
/// eigendecomposition. Single-grid translation-invariant Hamiltonians are
/// applied as a circular convolution so that translated inputs give
/// translated outputs bit for bit.
class Propagator {
public:
    Propagator(const Operator& hamiltonian, const SubsystemShape& shape, double hbar = 1.0) : hbar_(hbar) {
        if (hamiltonian.dim() != shape.total()) throw DimensionError("Hamiltonian dimension does not match shape");
        trivial_ = hamiltonian.is_zero();
        if (trivial_) return;
        Eigensystem es = hermitian_eig(hamiltonian);
        values_ = std::move(es.values);
        vectors_ = std::move(es.vectors);
        radius_ = std::max(std::abs(values_.front()), std::abs(values_.back()));
        circulant_ = shape.factors() == 1 && is_circulant(hamiltonian.matrix());
    }

    double spectral_radius() const noexcept { return radius_; }
    bool circulant() const noexcept { return circulant_; }

    StateVector advance(const StateVector& psi, double tau) const {
        if (trivial_ || tau == 0.0) return psi;
        const auto n = static_cast<Eigen::Index>(values_.size());
        Vector phases(n);
        for (Eigen::Index l = 0; l < n; ++l)
            phases(l) = std::exp(cplx{0.0, -values_[static_cast<std::size_t>(l)] * tau / hbar_});
        if (circulant_) {
            // First column of U(tau); U(i, j) = c[(i - j) mod n].
            const Vector c = vectors_ * phases.cwiseProduct(vectors_.row(0).adjoint());
            const Vector& in = psi.amplitudes();
            Vector out(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                cplx acc{};
                for (Eigen::Index m = 0; m < n; ++m) acc += c(m) * in((i - m + n) % n);
                out(i) = acc;
            }
            return StateVector(psi.shape(), std::move(out));
        }
        Vector coeffs = vectors_.adjoint() * psi.amplitudes();
        return StateVector(psi.shape(), vectors_ * phases.cwiseProduct(coeffs));
    }

private:
    static bool is_circulant(const Matrix& h) {
        const Eigen::Index n = h.rows();
        const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                if (std::abs(h(i, j) - h((i + 1) % n, (j + 1) % n)) > 1e-13 * scale) return false;
        return true;
    }

    double hbar_;
    bool trivial_ = false;
    bool circulant_ = false;
    double radius_ = 0.0;
    std::vector<double> values_;
    Matrix vectors_;
};

struct JumpEvent {
    double time = 0.0;
    std::size_t particle = 0;  // subsystem index
    double center = 0.0;
};

struct Trajectory {
    std::vector<double> sample_times;
    std::vector<StateVector> states;
    std::vector<JumpEvent> jumps;
    std::uint64_t seed = 0;

    /// State recorded at `t` (matched within 1e-12), if sampled.
    const StateVector* state_at(double t) const {
        for (std::size_t i = 0; i < sample_times.size(); ++i)
            if (std::abs(sample_times[i] - t) <= 1e-12) return &states[i];
        return nullptr;
    }
};

struct TrajectoryOptions {
    /// Times at which to record the state; empty means every dt from 0 to T.
    std::vector<double> sample_times;
    /// Site at which the inverse-CDF center draw starts accumulating. A run
    /// translated by s sites with origin shifted by s reproduces the
    /// untranslated run exactly.
    std::size_t sampling_origin = 0;
};

inline constexpr double kStepSafety = 0.01;

inline std::vector<double> default_sample_times(double horizon, double dt) {
    std::vector<double> t;
    const auto n = static_cast<std::size_t>(std::floor(horizon / dt + 1e-9));
    for (std::size_t k = 0; k <= n; ++k) t.push_back(static_cast<double>(k) * dt);
    if (horizon - t.back() > 1e-12) t.push_back(horizon);
    return t;
}

/// Reusable trajectory engine: the propagator and kernels are built once
/// and shared read-only between trajectories.
class GrwEvolver {
public:
    GrwEvolver(const Operator& hamiltonian, const GrwParams& params, std::vector<CollapsingParticle> particles,
               const SubsystemShape& shape)
        : params_(params), particles_(std::move(particles)), shape_(shape), propagator_(hamiltonian, shape, params.hbar) {
        params_.validate();
        validate_particles(shape_, particles_);
        for (const auto& p : particles_) rates_.push_back(params_.lambda * p.rate_multiplier);
    }

    const GrwParams& params() const noexcept { return params_; }
    const std::vector<CollapsingParticle>& particles() const noexcept { return particles_; }
    const Propagator& propagator() const noexcept { return propagator_; }
    const SubsystemShape& shape() const noexcept { return shape_; }

    double max_step() const {
        const double r = propagator_.spectral_radius();
        return r > 0.0 ? kStepSafety * params_.hbar / r : std::numeric_limits<double>::infinity();
    }

    Trajectory evolve(const StateVector& psi0, double horizon, double dt, Rng& rng,
                      const TrajectoryOptions& options = {}) const {
        if (!(psi0.shape() == shape_)) throw DimensionError("initial state shape does not match evolver");
        if (!psi0.is_normalized(1e-10)) throw PreconditionError("initial state must be normalized");
        if (!(horizon > 0.0)) throw PreconditionError("horizon must be > 0");
        if (!(dt > 0.0)) throw PreconditionError("dt must be > 0");
        if (dt > max_step() * (1.0 + 1e-12))
            throw NumericalError("dt " + std::to_string(dt) + " exceeds 0.01*hbar/||H|| = " + std::to_string(max_step()));

        Trajectory tr;
        tr.seed = rng.seed();
        tr.sample_times = options.sample_times.empty() ? default_sample_times(horizon, dt) : options.sample_times;
        for (std::size_t i = 0; i < tr.sample_times.size(); ++i) {
            const double t = tr.sample_times[i];
            if (t < 0.0 || t > horizon + 1e-12 || (i > 0 && t < tr.sample_times[i - 1]))
                throw PreconditionError("sample times must be ascending within [0, T]");
        }

        const std::vector<ScheduledJump> jumps = sample_jump_times(rates_, horizon, rng);
        StateVector state = psi0;
        double now = 0.0;
        std::size_t s = 0, j = 0;
        while (s < tr.sample_times.size() || j < jumps.size()) {
            const bool take_sample = j == jumps.size() || (s < tr.sample_times.size() && tr.sample_times[s] <= jumps[j].time);
            const double t_next = take_sample ? tr.sample_times[s] : jumps[j].time;
            state = propagator_.advance(state, t_next - now);
            now = t_next;
            if (take_sample) {
                tr.states.push_back(state);
                ++s;
                continue;
            }
            const CollapsingParticle& p = particles_[jumps[j].particle];
            const std::vector<double> table = jump_density(state, p.subsystem, p.grid, params_);
            const std::size_t c = sample_center(table, rng.uniform(), options.sampling_origin % p.grid.points());
            state = apply_jump_at_index(state, p.subsystem, c, p.grid, params_.alpha);
            tr.jumps.push_back({now, p.subsystem, p.grid.coordinate(c)});
            ++j;
        }
        return tr;
    }

    /// K independent trajectories on streams (master_seed, k).
    std::vector<Trajectory> ensemble(const StateVector& psi0, double horizon, double dt, std::size_t count,
                                     std::uint64_t master_seed, const TrajectoryOptions& options = {},
                                     std::size_t workers = 1) const {
        std::vector<Trajectory> out(count);
        parallel_for(count, workers, [&](std::size_t k) {
            Rng rng = Rng::stream(master_seed, k);
            out[k] = evolve(psi0, horizon, dt, rng, options);
        });
        return out;
    }

private:
    GrwParams params_;
    std::vector<CollapsingParticle> particles_;
    SubsystemShape shape_;
    Propagator propagator_;
    std::vector<double> rates_;
};

inline Trajectory evolve_trajectory(const StateVector& psi0, const Operator& hamiltonian, const GrwParams& params,
                                    const std::vector<CollapsingParticle>& particles, double horizon, double dt,
                                    Rng& rng, const TrajectoryOptions& options = {}) {
    return GrwEvolver(hamiltonian, params, particles, psi0.shape()).evolve(psi0, horizon, dt, rng, options);
}

// ---- grid state helpers ----------------------------------------------------

/// -(hbar^2 / 2m) times the periodic second difference.
inline Operator free_particle_hamiltonian(const Grid& grid, double mass, double hbar = 1.0) {
    const auto m = static_cast<Eigen::Index>(grid.points());
    const double c = hbar * hbar / (2.0 * mass * grid.spacing() * grid.spacing());
    Matrix h = Matrix::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        h(i, i) = 2.0 * c;
        h(i, (i + 1) % m) = -c;
        h(i, (i + m - 1) % m) = -c;
    }
    return Operator(std::move(h));
}

/// Normalized Gaussian amplitude profile exp(-d^2 / (4 width^2)) around a
/// grid site, using minimal-image distances.
inline StateVector gaussian_packet(const Grid& grid, std::size_t center, double width) {
    Vector v(static_cast<Eigen::Index>(grid.points()));
    for (std::size_t q = 0; q < grid.points(); ++q) {
        const double d = grid.periodic_distance(q, center);
        v(static_cast<Eigen::Index>(q)) = std::exp(-d * d / (4.0 * width * width));
    }
    return StateVector(SubsystemShape{grid.points()}, v).normalized();
}

/// Normalized a*first + b*second.
inline StateVector superpose(const StateVector& first, cplx a, const StateVector& second, cplx b) {
    if (!(first.shape() == second.shape())) throw DimensionError("superpose: shape mismatch");
    return StateVector(first.shape(), a * first.amplitudes() + b * second.amplitudes()).normalized();
}

/// Cyclic translation of a single-grid state by s sites.
inline StateVector translate(const StateVector& psi, const Grid& grid, long s) {
    if (psi.shape().factors() != 1 || psi.dim() != grid.points()) throw DimensionError("translate: single-grid state expected");
    Vector out(psi.amplitudes().size());
    for (std::size_t q = 0; q < grid.points(); ++q) out(static_cast<Eigen::Index>(grid.shifted(q, s))) = psi[q];
    return StateVector(psi.shape(), std::move(out));
}

/// Mean position on the circle, in [origin, origin + extent).
inline double circular_mean_position(const StateVector& psi, std::size_t subsystem, const Grid& grid) {
    const std::vector<double> w = position_weights(psi, subsystem);
    cplx z{};
    const double m = static_cast<double>(grid.points());
    for (std::size_t q = 0; q < w.size(); ++q)
        z += w[q] * std::exp(cplx{0.0, 2.0 * std::numbers::pi * static_cast<double>(q) / m});
    double phase = std::arg(z);
    if (phase < 0.0) phase += 2.0 * std::numbers::pi;
    return grid.origin() + phase / (2.0 * std::numbers::pi) * grid.extent();
}

/// Probability mass within `radius` (periodic) of a site.
inline double mass_near(const StateVector& psi, std::size_t subsystem, const Grid& grid, std::size_t site, double radius) {
    const std::vector<double> w = position_weights(psi, subsystem);
    double s = 0.0;
    for (std::size_t q = 0; q < w.size(); ++q)
        if (grid.periodic_distance(q, site) <= radius) s += w[q];
    return s;
}

}  // namespace grwlab
