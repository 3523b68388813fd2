#pragma once

// Ensemble law of the localization dynamics:
//
//   d rho/dt = -(i/hbar)[H, rho] - sum_n rate_n (rho - sum_k L_n(x_k) rho L_n(x_k) dx)
//
// The x integral is the same dx-weighted grid sum the trajectory sampler
// uses. Because every L_n is diagonal in its factor's position basis, the
// collapse part is an entrywise product rho(i, j) * G_n(q_i, q_j) with
// G_n(q, q') = sum_k L(x_k; q) L(x_k; q') dx.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "grwlab/errors.hpp"
#include "grwlab/grw.hpp"
#include "grwlab/hilbert.hpp"

namespace grwlab {

struct LindbladConfig {
    double dt = 0.01;
    double horizon = 1.0;
};

inline constexpr double kLindbladStepBound = 0.05;

/// G(q, q') by direct quadrature over the grid centers.
inline std::vector<std::vector<double>> overlap_kernel(const Grid& grid, double alpha) {
    const std::size_t m = grid.points();
    const std::vector<double> f = localization_kernel(grid, alpha);
    std::vector<std::vector<double>> g(m, std::vector<double>(m, 0.0));
    for (std::size_t q = 0; q < m; ++q)
        for (std::size_t r = 0; r < m; ++r) {
            double acc = 0.0;
            for (std::size_t k = 0; k < m; ++k)
                acc += f[grid.shifted(k, -static_cast<long>(q))] * f[grid.shifted(k, -static_cast<long>(r))];
            g[q][r] = acc * grid.spacing();
        }
    return g;
}

/// Right-hand side of the master equation with kernels precomputed.
class LindbladGenerator {
public:
    LindbladGenerator(const Operator& hamiltonian, const GrwParams& params,
                      const std::vector<CollapsingParticle>& particles, const SubsystemShape& shape)
        : h_(hamiltonian.matrix()), hbar_(params.hbar), shape_(shape) {
        params.validate();
        validate_particles(shape, particles);
        if (hamiltonian.dim() != shape.total()) throw DimensionError("Hamiltonian dimension does not match shape");
        if (!hamiltonian.is_hermitian(kSpectralTol)) throw NumericalError("Hamiltonian is not Hermitian");
        unitary_ = !hamiltonian.is_zero();
        h_norm_ = unitary_ ? spectral_radius(hamiltonian) : 0.0;
        for (const auto& p : particles) {
            const double rate = params.lambda * p.rate_multiplier;
            total_rate_ += rate;
            if (rate == 0.0) continue;
            Channel c;
            c.rate = rate;
            c.kernel = overlap_kernel(p.grid, params.alpha);
            c.digits.resize(shape.total());
            for (std::size_t i = 0; i < shape.total(); ++i) c.digits[i] = shape.digit(i, p.subsystem);
            channels_.push_back(std::move(c));
        }
    }

    double total_rate() const noexcept { return total_rate_; }
    double hamiltonian_norm() const noexcept { return h_norm_; }

    /// The step condition dt (sum of rates + ||H|| / hbar) <= 0.05.
    double max_step() const {
        const double s = total_rate_ + h_norm_ / hbar_;
        return s > 0.0 ? kLindbladStepBound / s : std::numeric_limits<double>::infinity();
    }

    Matrix operator()(const Matrix& rho) const {
        const Eigen::Index n = rho.rows();
        Matrix out = Matrix::Zero(n, n);
        if (unitary_) out = cplx{0.0, -1.0 / hbar_} * (h_ * rho - rho * h_);
        for (const auto& c : channels_)
            for (Eigen::Index j = 0; j < n; ++j) {
                const std::size_t qj = c.digits[static_cast<std::size_t>(j)];
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double g = c.kernel[c.digits[static_cast<std::size_t>(i)]][qj];
                    out(i, j) += c.rate * (g - 1.0) * rho(i, j);
                }
            }
        return out;
    }

private:
    struct Channel {
        double rate = 0.0;
        std::vector<std::vector<double>> kernel;
        std::vector<std::size_t> digits;
    };

    Matrix h_;
    double hbar_;
    SubsystemShape shape_;
    bool unitary_ = false;
    double h_norm_ = 0.0;
    double total_rate_ = 0.0;
    std::vector<Channel> channels_;
};

inline Matrix lindblad_rhs(const DensityMatrix& rho, const Operator& hamiltonian, const GrwParams& params,
                           const std::vector<CollapsingParticle>& particles) {
    return LindbladGenerator(hamiltonian, params, particles, rho.shape())(rho.matrix());
}

inline constexpr double kIntegratorTraceTol = 1e-8;
inline constexpr double kIntegratorHermitianTol = 1e-8;
inline constexpr double kIntegratorPositivityTol = 1e-6;

/// Fixed-step classical RK4, reporting the state at each requested time
/// (ascending, within (0, horizon]). Each segment between checkpoints is
/// split into equal steps no larger than config.dt.
inline std::vector<DensityMatrix> integrate_checkpoints(const DensityMatrix& rho0, const LindbladGenerator& rhs,
                                                        const LindbladConfig& config,
                                                        const std::vector<double>& times) {
    if (!(config.dt > 0.0) || !(config.horizon > 0.0)) throw PreconditionError("dt and horizon must be > 0");
    if (config.dt > rhs.max_step() * (1.0 + 1e-12))
        throw NumericalError("Lindblad step condition violated: dt = " + std::to_string(config.dt) +
                             " but dt*(rates + ||H||/hbar) must be <= 0.05 (max dt " + std::to_string(rhs.max_step()) + ")");

    std::vector<DensityMatrix> out;
    Matrix rho = rho0.matrix();
    double now = 0.0;
    for (double target : times) {
        if (target < now || target > config.horizon + 1e-12) throw PreconditionError("checkpoint times must be ascending within [0, T]");
        const double span = target - now;
        const auto steps = static_cast<long>(std::ceil(span / config.dt - 1e-9));
        if (steps > 0) {
            const double h = span / static_cast<double>(steps);
            for (long s = 0; s < steps; ++s) {
                const Matrix k1 = rhs(rho);
                const Matrix k2 = rhs(rho + 0.5 * h * k1);
                const Matrix k3 = rhs(rho + 0.5 * h * k2);
                const Matrix k4 = rhs(rho + h * k3);
                rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
        }
        now = target;

        const double herm = max_abs_difference(rho, rho.adjoint());
        const double tr = std::abs(rho.trace() - cplx{1.0});
        if (herm > kIntegratorHermitianTol) throw NumericalError("integrator lost Hermiticity");
        if (tr > kIntegratorTraceTol) throw NumericalError("integrator lost trace: deviation " + std::to_string(tr));
        DensityMatrix snapshot(rho0.shape(), rho, kIntegratorHermitianTol, kIntegratorTraceTol);
        if (snapshot.min_eigenvalue() < -kIntegratorPositivityTol) throw NumericalError("integrator lost positivity");
        out.push_back(std::move(snapshot));
    }
    return out;
}

inline DensityMatrix integrate(const DensityMatrix& rho0, const Operator& hamiltonian, const GrwParams& params,
                               const std::vector<CollapsingParticle>& particles, const LindbladConfig& config) {
    const LindbladGenerator rhs(hamiltonian, params, particles, rho0.shape());
    return integrate_checkpoints(rho0, rhs, config, {config.horizon}).front();
}

struct TraceDistanceReport {
    double at = 0.0;
    std::size_t ensemble_size = 0;
    double distance = 0.0;
    double threshold = 0.0;  // 5 / sqrt(K)

    bool within_threshold() const { return distance <= threshold; }
};

/// Empirical density matrix (1/K) sum |psi_k><psi_k| at time `at`.
inline Matrix ensemble_density(const std::vector<Trajectory>& trajectories, double at) {
    if (trajectories.empty()) throw PreconditionError("ensemble is empty");
    const StateVector* first = trajectories.front().state_at(at);
    if (!first) throw PreconditionError("trajectory not sampled at requested time");
    const auto n = static_cast<Eigen::Index>(first->dim());
    Matrix acc = Matrix::Zero(n, n);
    for (const auto& tr : trajectories) {
        const StateVector* s = tr.state_at(at);
        if (!s) throw PreconditionError("trajectory not sampled at requested time");
        acc.noalias() += s->amplitudes() * s->amplitudes().adjoint();
    }
    return acc / static_cast<double>(trajectories.size());
}

inline TraceDistanceReport ensemble_compare(const std::vector<Trajectory>& trajectories,
                                            const DensityMatrix& rho_oracle, double at) {
    const Matrix mc = ensemble_density(trajectories, at);
    if (mc.rows() != rho_oracle.matrix().rows()) throw DimensionError("ensemble and oracle dimensions differ");
    TraceDistanceReport r;
    r.at = at;
    r.ensemble_size = trajectories.size();
    r.distance = trace_distance(mc, rho_oracle.matrix());
    r.threshold = 5.0 / std::sqrt(static_cast<double>(trajectories.size()));
    return r;
}

}  // namespace grwlab
