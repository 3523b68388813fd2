#pragma once

// Spin-1 squared-spin measurements and the total-spin-0 pair.
//
// Basis convention for one spin-1 factor: index 0, 1, 2 <-> S_z = +1, 0, -1.
// The squared spins along an orthogonal triple commute; their joint
// eigenbasis is the three kets |a.S = 0> for the triple's axes a, and the
// outcome "zero on axis a" is the rank-1 projection onto |a.S = 0>.

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "grwlab/errors.hpp"
#include "grwlab/hilbert.hpp"
#include "grwlab/rng.hpp"

namespace grwlab {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

class Direction {
public:
    Direction() : v_(0.0, 0.0, 1.0) {}

    explicit Direction(const Vec3& v) {
        const double n = v.norm();
        if (!(n > 0.0)) throw PreconditionError("direction must be non-zero");
        v_ = v / n;
    }

    Direction(double x, double y, double z) : Direction(Vec3(x, y, z)) {}

    static Direction random(Rng& rng) {
        Vec3 v;
        do v = Vec3(rng.normal(), rng.normal(), rng.normal());
        while (v.norm() < 1e-6);
        return Direction(v);
    }

    const Vec3& vector() const noexcept { return v_; }
    double operator[](int i) const { return v_(i); }
    double dot(const Direction& o) const { return v_.dot(o.v_); }

private:
    Vec3 v_;
};

/// Rotation by `angle` about `axis` (Rodrigues).
inline Mat3 rotation_matrix(const Direction& axis, double angle) {
    return Eigen::AngleAxisd(angle, axis.vector()).toRotationMatrix();
}

class OrthoTriple {
public:
    static constexpr double kOrthogonalityTol = 1e-10;

    /// Left-handed input is mirrored by flipping the third axis; squared
    /// spins are parity-even so the measurement is unchanged.
    OrthoTriple(const Direction& x, const Direction& y, const Direction& z) : axes_{x, y, z} {
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j)
                if (std::abs(axes_[i].dot(axes_[j])) > kOrthogonalityTol)
                    throw PreconditionError("triple axes are not orthogonal");
        if (determinant() < 0.0) axes_[2] = Direction(-axes_[2].vector());
    }

    static OrthoTriple standard() { return OrthoTriple({1, 0, 0}, {0, 1, 0}, {0, 0, 1}); }

    /// Columns of a rotation matrix.
    static OrthoTriple from_rotation(const Mat3& r) {
        return OrthoTriple(Direction(Vec3(r.col(0))), Direction(Vec3(r.col(1))), Direction(Vec3(r.col(2))));
    }

    /// Uniformly random orientation (normalized Gaussian quaternion).
    static OrthoTriple random(Rng& rng) {
        Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
        q.normalize();
        return from_rotation(q.toRotationMatrix());
    }

    /// A triple whose first axis is n; the other two are rotated about n by `angle`.
    static OrthoTriple containing(const Direction& n, double angle = 0.0) {
        const Vec3& a = n.vector();
        const Vec3 helper = std::abs(a.x()) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
        Vec3 y = (helper - helper.dot(a) * a).normalized();
        y = rotation_matrix(n, angle) * y;
        const Vec3 z = a.cross(y);
        return OrthoTriple(n, Direction(y), Direction(z));
    }

    const Direction& axis(std::size_t i) const { return axes_.at(i); }
    const std::array<Direction, 3>& axes() const noexcept { return axes_; }

    double determinant() const {
        return axes_[0].vector().dot(axes_[1].vector().cross(axes_[2].vector()));
    }

    OrthoTriple rotated(const Mat3& r) const {
        return OrthoTriple(Direction(Vec3(r * axes_[0].vector())), Direction(Vec3(r * axes_[1].vector())),
                           Direction(Vec3(r * axes_[2].vector())));
    }

private:
    std::array<Direction, 3> axes_;
};

/// Squared-spin values on a triple's axes: one 0 and two 1s.
class TripleOutcome {
public:
    static TripleOutcome zero_at(std::size_t axis) {
        if (axis > 2) throw PreconditionError("axis index out of range");
        TripleOutcome o;
        o.zero_axis_ = axis;
        return o;
    }

    std::size_t zero_axis() const noexcept { return zero_axis_; }
    int value(std::size_t axis) const { return axis == zero_axis_ ? 0 : 1; }
    std::array<int, 3> values() const { return {value(0), value(1), value(2)}; }

    bool operator==(const TripleOutcome&) const = default;

private:
    std::size_t zero_axis_ = 0;
};

struct SpinMatrices {
    Operator x, y, z;
};

inline SpinMatrices spin_matrices() {
    const double s = 1.0 / std::numbers::sqrt2;
    const cplx i{0.0, 1.0};
    Matrix sx(3, 3), sy(3, 3), sz(3, 3);
    sx << 0, s, 0, s, 0, s, 0, s, 0;
    sy << 0, -i * s, 0, i * s, 0, -i * s, 0, i * s, 0;
    sz << 1, 0, 0, 0, 0, 0, 0, 0, -1;
    return {Operator(sx), Operator(sy), Operator(sz)};
}

/// n . S
inline Operator spin_component(const Direction& n) {
    static const SpinMatrices s = spin_matrices();
    return Operator(n[0] * s.x.matrix() + n[1] * s.y.matrix() + n[2] * s.z.matrix());
}

/// (n . S)^2, spectrum {0, 1, 1}.
inline Operator squared_spin(const Direction& n) {
    const Operator c = spin_component(n);
    return c * c;
}

/// exp(-i angle (axis . S)), the spin-1 image of the rotation about `axis`.
inline Operator rotation_operator(const Direction& axis, double angle) {
    return unitary_propagator(spin_component(axis), angle);
}

/// Normalized |n . S = 0>, phase as returned by the eigensolver.
inline Vector zero_ket(const Direction& n) {
    const Eigensystem es = hermitian_eig(spin_component(n));
    return es.vectors.col(1);  // eigenvalues ascending: -1, 0, +1
}

inline Operator zero_projector(const Direction& n) {
    const Vector k = zero_ket(n);
    return Operator(k * k.adjoint());
}

inline const SubsystemShape& spin_pair_shape() {
    static const SubsystemShape shape{3, 3};
    return shape;
}

/// (|+1,-1> + |-1,+1> - |0,0>) / sqrt(3) in the S_z basis.
inline StateVector singlet_state() {
    Vector v = Vector::Zero(9);
    const double a = 1.0 / std::sqrt(3.0);
    v(0 * 3 + 2) = a;
    v(2 * 3 + 0) = a;
    v(1 * 3 + 1) = -a;
    return StateVector(spin_pair_shape(), v);
}

/// The same combination written with |S_n = m> kets, where the kets are
/// the rotated S_z kets U(R)|m> for a rotation R taking z to n.
inline StateVector singlet_in_basis(const Direction& n) {
    const Vec3 z(0, 0, 1);
    const Vec3 axis = z.cross(n.vector());
    const double angle = std::atan2(axis.norm(), z.dot(n.vector()));
    const Operator u = axis.norm() < 1e-15 ? (n[2] > 0 ? Operator::identity(3) : rotation_operator(Direction(1, 0, 0), std::numbers::pi))
                                           : rotation_operator(Direction(axis), angle);
    const Vector plus = u.matrix().col(0), zero = u.matrix().col(1), minus = u.matrix().col(2);
    auto pair = [](const Vector& a, const Vector& b) {
        Vector out(9);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) out(i * 3 + j) = a(i) * b(j);
        return out;
    };
    const Vector v = (pair(plus, minus) + pair(minus, plus) - pair(zero, zero)) / std::sqrt(3.0);
    return StateVector(spin_pair_shape(), v);
}

inline constexpr double kProbabilityTableTol = 1e-10;

/// Born weights of the three outcomes "zero on axis i" for one spin-1 factor.
inline std::array<double, 3> triple_probabilities(const StateVector& psi, std::size_t particle, const OrthoTriple& triple) {
    if (particle >= psi.shape().factors() || psi.shape().dim(particle) != 3)
        throw DimensionError("triple measurement needs a spin-1 factor");
    std::array<double, 3> p{};
    for (std::size_t i = 0; i < 3; ++i) p[i] = apply_on_subsystem(zero_projector(triple.axis(i)), particle, psi).norm();
    for (double& v : p) v *= v;
    const double total = p[0] + p[1] + p[2];
    if (std::abs(total - 1.0) > kProbabilityTableTol)
        throw InvariantViolation("triple probability table sums to " + std::to_string(total));
    return p;
}

struct TripleMeasurement {
    TripleOutcome outcome;
    StateVector post;
    std::array<double, 3> probabilities{};
};

inline std::size_t sample_index(const std::array<double, 3>& p, double u) {
    double cum = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        if (p[i] <= 0.0) continue;
        last = i;
        cum += p[i];
        if (u < cum) return i;
    }
    return last;
}

/// Projective measurement of the three squared spins of one factor.
inline TripleMeasurement triple_measurement(const StateVector& psi, std::size_t particle, const OrthoTriple& triple,
                                            Rng& rng) {
    if (!psi.is_normalized(1e-10)) throw PreconditionError("state must be normalized");
    TripleMeasurement m;
    m.probabilities = triple_probabilities(psi, particle, triple);
    const std::size_t k = sample_index(m.probabilities, rng.uniform());
    m.outcome = TripleOutcome::zero_at(k);
    m.post = apply_on_subsystem(zero_projector(triple.axis(k)), particle, psi).normalized();
    return m;
}

/// p[i][j] = P(zero on A's axis i, zero on B's axis j) for particles 0 (A) and 1 (B).
using JointTable = std::array<std::array<double, 3>, 3>;

inline JointTable exact_joint_table(const StateVector& psi, const OrthoTriple& triple_a, const OrthoTriple& triple_b) {
    if (!(psi.shape() == spin_pair_shape())) throw DimensionError("joint table needs a (3,3) state");
    JointTable t{};
    for (std::size_t i = 0; i < 3; ++i) {
        const Vector a = zero_ket(triple_a.axis(i));
        for (std::size_t j = 0; j < 3; ++j) {
            const Vector b = zero_ket(triple_b.axis(j));
            cplx amp{};
            for (int k = 0; k < 3; ++k)
                for (int l = 0; l < 3; ++l) amp += std::conj(a(k)) * std::conj(b(l)) * psi[static_cast<std::size_t>(3 * k + l)];
            t[i][j] = std::norm(amp);
        }
    }
    return t;
}

/// Joint table built by measuring one wing, collapsing, then the other.
inline JointTable sequential_joint_table(const StateVector& psi, const OrthoTriple& triple_a,
                                         const OrthoTriple& triple_b, bool a_first) {
    JointTable t{};
    const std::size_t first = a_first ? 0 : 1, second = a_first ? 1 : 0;
    const OrthoTriple& t1 = a_first ? triple_a : triple_b;
    const OrthoTriple& t2 = a_first ? triple_b : triple_a;
    const auto p1 = triple_probabilities(psi, first, t1);
    for (std::size_t i = 0; i < 3; ++i) {
        if (p1[i] <= 1e-300) continue;
        const StateVector post = apply_on_subsystem(zero_projector(t1.axis(i)), first, psi).normalized();
        const auto p2 = triple_probabilities(post, second, t2);
        for (std::size_t j = 0; j < 3; ++j) {
            const double v = p1[i] * p2[j];
            if (a_first)
                t[i][j] = v;
            else
                t[j][i] = v;
        }
    }
    return t;
}

struct JointMeasurement {
    std::optional<TripleOutcome> a;
    TripleOutcome b;
    StateVector post;
};

/// Measures the singlet: particle a first (if a triple is given), then b.
inline JointMeasurement singlet_joint_measure(const std::optional<OrthoTriple>& triple_a, const OrthoTriple& triple_b,
                                              Rng& rng) {
    JointMeasurement out;
    StateVector psi = singlet_state();
    if (triple_a) {
        TripleMeasurement ma = triple_measurement(psi, 0, *triple_a, rng);
        out.a = ma.outcome;
        psi = std::move(ma.post);
    }
    TripleMeasurement mb = triple_measurement(psi, 1, triple_b, rng);
    out.b = mb.outcome;
    out.post = std::move(mb.post);
    return out;
}

/// (P(value 0), P(value 1)) of S^2_n on one factor of rho.
inline std::array<double, 2> squared_spin_marginal(const Matrix& rho, const SubsystemShape& shape, std::size_t particle,
                                                   const Direction& n) {
    const Operator q0 = embed(zero_projector(n), particle, shape);
    const double p0 = (q0.matrix() * rho).trace().real();
    return {p0, 1.0 - p0};
}

struct ParameterIndependenceReport {
    std::array<double, 2> b_marginal_without{};  // P(S^2_{b:n} = 0), P(= 1), a untouched
    std::array<double, 2> b_marginal_with{};     // same after non-selective measurement of a
    std::array<std::array<double, 2>, 3> a_weights{};  // per axis of triple A: P(1), P(0)
    double max_deviation = 0.0;
};

/// Exact comparison of b's S^2_n law with and without a non-selective
/// triple measurement on a.
inline ParameterIndependenceReport parameter_independence_check(const OrthoTriple& triple_a, const Direction& n) {
    const SubsystemShape& shape = spin_pair_shape();
    const StateVector psi = singlet_state();
    const Matrix rho = psi.amplitudes() * psi.amplitudes().adjoint();

    ParameterIndependenceReport r;
    r.b_marginal_without = squared_spin_marginal(rho, shape, 1, n);

    Matrix mixed = Matrix::Zero(9, 9);
    for (std::size_t i = 0; i < 3; ++i) {
        const Matrix p = embed(zero_projector(triple_a.axis(i)), 0, shape).matrix();
        mixed += p * rho * p;
        const double p0 = (p * rho).trace().real();
        r.a_weights[i] = {1.0 - p0, p0};
    }
    r.b_marginal_with = squared_spin_marginal(mixed, shape, 1, n);
    r.max_deviation = std::max(std::abs(r.b_marginal_with[0] - r.b_marginal_without[0]),
                               std::abs(r.b_marginal_with[1] - r.b_marginal_without[1]));
    return r;
}

struct SampledParameterIndependence {
    double freq_zero_without = 0.0;
    double freq_zero_with = 0.0;
    double sigma = 0.0;  // standard error of the difference under the null
    std::size_t samples = 0;
};

/// Frequency of S^2_{b:n} = 0 with and without measuring a along triple A.
inline SampledParameterIndependence sampled_parameter_independence(const OrthoTriple& triple_a, const Direction& n,
                                                                   std::size_t samples, Rng& rng) {
    const OrthoTriple triple_b = OrthoTriple::containing(n);
    std::size_t zero_without = 0, zero_with = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        if (singlet_joint_measure(std::nullopt, triple_b, rng).b.value(0) == 0) ++zero_without;
        if (singlet_joint_measure(triple_a, triple_b, rng).b.value(0) == 0) ++zero_with;
    }
    SampledParameterIndependence r;
    r.samples = samples;
    r.freq_zero_without = static_cast<double>(zero_without) / static_cast<double>(samples);
    r.freq_zero_with = static_cast<double>(zero_with) / static_cast<double>(samples);
    r.sigma = std::sqrt(2.0 * (1.0 / 3.0) * (2.0 / 3.0) / static_cast<double>(samples));
    return r;
}

struct OutcomeIndependenceTable {
    std::array<std::array<double, 2>, 2> joint{};        // [u][v] = P(S^2_{a:n} = u, S^2_{b:n} = v)
    std::array<std::array<double, 2>, 2> conditional{};  // [u][v] = P(S^2_{b:n} = v | S^2_{a:n} = u)
    std::array<double, 2> a_marginal{};
    std::array<double, 2> b_marginal{};  // unconditional
};

inline OutcomeIndependenceTable outcome_independence_check(const Direction& n) {
    const StateVector psi = singlet_state();
    const Matrix q0 = zero_projector(n).matrix();
    const Matrix q1 = Matrix::Identity(3, 3) - q0;
    const std::array<Matrix, 2> q{q0, q1};

    OutcomeIndependenceTable t;
    for (int u = 0; u < 2; ++u)
        for (int v = 0; v < 2; ++v) {
            const Operator proj = kron(Operator(q[u]), Operator(q[v]));
            t.joint[u][v] = psi.amplitudes().dot(proj.matrix() * psi.amplitudes()).real();
        }
    for (int u = 0; u < 2; ++u) {
        t.a_marginal[u] = t.joint[u][0] + t.joint[u][1];
        t.b_marginal[u] = t.joint[0][u] + t.joint[1][u];
    }
    for (int u = 0; u < 2; ++u)
        for (int v = 0; v < 2; ++v) t.conditional[u][v] = t.a_marginal[u] > 0.0 ? t.joint[u][v] / t.a_marginal[u] : 0.0;
    return t;
}

}  // namespace grwlab
