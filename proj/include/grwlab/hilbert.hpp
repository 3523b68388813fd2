#pragma once

// Dense linear algebra over small composite Hilbert spaces.
//
// Index convention: a composite basis index is row-major over the subsystem
// digits, first factor slowest. For dims (d0, d1, d2) the basis state
// |i0 i1 i2> sits at ((i0 * d1) + i1) * d2 + i2.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "grwlab/errors.hpp"

namespace grwlab {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr double kAlgebraicTol = 1e-12;
inline constexpr double kSpectralTol = 1e-10;
inline constexpr double kReconstructionTol = 1e-9;
inline constexpr std::size_t kMaxDimension = 4096;

/// Sum that does not depend on the order of the inputs: the values are
/// sorted before accumulation, so any permutation of the same multiset
/// produces the same bits.
inline double permutation_invariant_sum(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc;
}

class SubsystemShape {
public:
    SubsystemShape() = default;

    explicit SubsystemShape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
        if (dims_.empty()) throw DimensionError("subsystem shape must have at least one factor");
        total_ = 1;
        for (std::size_t d : dims_) {
            if (d < 2) throw DimensionError("every subsystem dimension must be >= 2");
            total_ *= d;
            if (total_ > kMaxDimension)
                throw DimensionError("total dimension exceeds " + std::to_string(kMaxDimension));
        }
    }

    SubsystemShape(std::initializer_list<std::size_t> dims)
        : SubsystemShape(std::vector<std::size_t>(dims)) {}

    std::size_t factors() const noexcept { return dims_.size(); }
    std::size_t dim(std::size_t k) const { return dims_.at(k); }
    std::size_t total() const noexcept { return total_; }
    const std::vector<std::size_t>& dims() const noexcept { return dims_; }

    /// Product of the dimensions strictly after factor k.
    std::size_t stride(std::size_t k) const {
        std::size_t s = 1;
        for (std::size_t j = k + 1; j < dims_.size(); ++j) s *= dims_[j];
        return s;
    }

    /// Digit of factor k in composite index i.
    std::size_t digit(std::size_t index, std::size_t k) const {
        return (index / stride(k)) % dims_.at(k);
    }

    SubsystemShape concat(const SubsystemShape& other) const {
        std::vector<std::size_t> d = dims_;
        d.insert(d.end(), other.dims_.begin(), other.dims_.end());
        return SubsystemShape(std::move(d));
    }

    bool operator==(const SubsystemShape& o) const { return dims_ == o.dims_; }

private:
    std::vector<std::size_t> dims_;
    std::size_t total_ = 0;
};

class StateVector {
public:
    StateVector() = default;

    StateVector(SubsystemShape shape, Vector amplitudes)
        : shape_(std::move(shape)), amps_(std::move(amplitudes)) {
        if (static_cast<std::size_t>(amps_.size()) != shape_.total())
            throw DimensionError("amplitude count does not match subsystem shape");
    }

    static StateVector basis(const SubsystemShape& shape, std::size_t index) {
        if (index >= shape.total()) throw DimensionError("basis index out of range");
        Vector v = Vector::Zero(static_cast<Eigen::Index>(shape.total()));
        v(static_cast<Eigen::Index>(index)) = 1.0;
        return StateVector(shape, std::move(v));
    }

    const SubsystemShape& shape() const noexcept { return shape_; }
    const Vector& amplitudes() const noexcept { return amps_; }
    std::size_t dim() const noexcept { return shape_.total(); }
    cplx operator[](std::size_t i) const { return amps_(static_cast<Eigen::Index>(i)); }

    double norm() const {
        std::vector<double> sq(static_cast<std::size_t>(amps_.size()));
        for (Eigen::Index i = 0; i < amps_.size(); ++i) sq[static_cast<std::size_t>(i)] = std::norm(amps_(i));
        return std::sqrt(permutation_invariant_sum(std::move(sq)));
    }

    StateVector normalized() const {
        const double n = norm();
        if (!(n > 0.0)) throw ZeroNormError("cannot normalize a zero vector");
        return StateVector(shape_, amps_ / n);
    }

    bool is_normalized(double tol = kAlgebraicTol) const { return std::abs(norm() - 1.0) <= tol; }

private:
    SubsystemShape shape_;
    Vector amps_;
};

/// |<a|b>|^2 for normalized inputs.
inline double fidelity(const StateVector& a, const StateVector& b) {
    if (!(a.shape() == b.shape())) throw DimensionError("fidelity: shape mismatch");
    return std::norm(a.amplitudes().dot(b.amplitudes()));
}

class Operator {
public:
    Operator() = default;

    explicit Operator(Matrix entries) : m_(std::move(entries)) {
        if (m_.rows() != m_.cols() || m_.rows() == 0) throw DimensionError("operator must be square and non-empty");
    }

    static Operator identity(std::size_t n) {
        return Operator(Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
    }

    static Operator diagonal(const std::vector<double>& d) {
        Matrix m = Matrix::Zero(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.size()));
        for (std::size_t i = 0; i < d.size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = d[i];
        return Operator(std::move(m));
    }

    std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
    const Matrix& matrix() const noexcept { return m_; }
    cplx operator()(std::size_t i, std::size_t j) const {
        return m_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }

    Operator adjoint() const { return Operator(m_.adjoint()); }

    double hermiticity_defect() const { return (m_ - m_.adjoint()).cwiseAbs().maxCoeff(); }
    bool is_hermitian(double tol = kAlgebraicTol) const { return hermiticity_defect() <= tol; }

    bool is_unitary(double tol = kSpectralTol) const {
        const Matrix id = Matrix::Identity(m_.rows(), m_.cols());
        return (m_ * m_.adjoint() - id).cwiseAbs().maxCoeff() <= tol;
    }

    bool is_zero() const { return m_.cwiseAbs().maxCoeff() == 0.0; }

    friend Operator operator+(const Operator& a, const Operator& b) { return Operator(a.m_ + b.m_); }
    friend Operator operator-(const Operator& a, const Operator& b) { return Operator(a.m_ - b.m_); }
    friend Operator operator*(const Operator& a, const Operator& b) { return Operator(a.m_ * b.m_); }
    friend Operator operator*(cplx s, const Operator& a) { return Operator(s * a.m_); }
    friend Operator operator*(double s, const Operator& a) { return Operator(s * a.m_); }

private:
    Matrix m_;
};

inline double max_abs_difference(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

/// Kronecker product, first argument slowest.
inline Operator kron(const Operator& a, const Operator& b) {
    const Eigen::Index na = a.matrix().rows(), nb = b.matrix().rows();
    Matrix out(na * nb, na * nb);
    for (Eigen::Index i = 0; i < na; ++i)
        for (Eigen::Index j = 0; j < na; ++j) out.block(i * nb, j * nb, nb, nb) = a.matrix()(i, j) * b.matrix();
    return Operator(std::move(out));
}

/// Embeds `op` acting on factor k into the full composite space.
inline Operator embed(const Operator& op, std::size_t k, const SubsystemShape& shape) {
    if (op.dim() != shape.dim(k)) throw DimensionError("embed: operator dimension does not match factor");
    Operator full = (k == 0) ? op : Operator::identity(shape.dim(0));
    for (std::size_t j = 1; j < shape.factors(); ++j)
        full = kron(full, j == k ? op : Operator::identity(shape.dim(j)));
    return full;
}

inline StateVector tensor_product(const StateVector& a, const StateVector& b) {
    const Vector& va = a.amplitudes();
    const Vector& vb = b.amplitudes();
    Vector out(va.size() * vb.size());
    for (Eigen::Index i = 0; i < va.size(); ++i) out.segment(i * vb.size(), vb.size()) = va(i) * vb;
    return StateVector(a.shape().concat(b.shape()), std::move(out));
}

/// (I x ... x op x ... x I) psi, without normalization.
inline StateVector apply_on_subsystem(const Operator& op, std::size_t k, const StateVector& psi) {
    const SubsystemShape& shape = psi.shape();
    if (k >= shape.factors()) throw DimensionError("apply_on_subsystem: subsystem index out of range");
    if (op.dim() != shape.dim(k)) throw DimensionError("apply_on_subsystem: operator dimension mismatch");

    const std::size_t d = shape.dim(k);
    const std::size_t right = shape.stride(k);
    const std::size_t left = shape.total() / (d * right);
    const Vector& in = psi.amplitudes();
    Vector out = Vector::Zero(in.size());
    const Matrix& m = op.matrix();

    for (std::size_t l = 0; l < left; ++l)
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) {
                const cplx coeff = m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
                if (coeff == cplx{}) continue;
                const std::size_t dst = (l * d + a) * right;
                const std::size_t src = (l * d + b) * right;
                for (std::size_t r = 0; r < right; ++r)
                    out(static_cast<Eigen::Index>(dst + r)) += coeff * in(static_cast<Eigen::Index>(src + r));
            }
    return StateVector(shape, std::move(out));
}

class DensityMatrix {
public:
    static constexpr double kHermitianTol = 1e-10;
    static constexpr double kTraceTol = 1e-10;
    static constexpr double kPositivityTol = 1e-8;

    DensityMatrix() = default;

    /// Validates Hermiticity and unit trace. Positivity is checked on
    /// demand through `min_eigenvalue` since it costs a full diagonalization.
    DensityMatrix(SubsystemShape shape, Matrix entries, double hermitian_tol = kHermitianTol,
                  double trace_tol = kTraceTol)
        : shape_(std::move(shape)), m_(std::move(entries)) {
        if (static_cast<std::size_t>(m_.rows()) != shape_.total() || m_.rows() != m_.cols())
            throw DimensionError("density matrix size does not match shape");
        if (max_abs_difference(m_, m_.adjoint()) > hermitian_tol)
            throw InvariantViolation("density matrix is not Hermitian");
        if (std::abs(m_.trace() - cplx{1.0}) > trace_tol) throw InvariantViolation("density matrix trace is not 1");
    }

    static DensityMatrix pure(const StateVector& psi) {
        return DensityMatrix(psi.shape(), psi.amplitudes() * psi.amplitudes().adjoint());
    }

    const SubsystemShape& shape() const noexcept { return shape_; }
    const Matrix& matrix() const noexcept { return m_; }
    std::size_t dim() const noexcept { return shape_.total(); }
    cplx trace() const { return m_.trace(); }

    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
        return es.eigenvalues()(0);
    }

    double purity() const { return (m_ * m_).trace().real(); }

private:
    SubsystemShape shape_;
    Matrix m_;
};

inline DensityMatrix tensor_product(const DensityMatrix& a, const DensityMatrix& b) {
    return DensityMatrix(a.shape().concat(b.shape()), kron(Operator(a.matrix()), Operator(b.matrix())).matrix());
}

/// Reduced state over the factors listed in `keep` (kept in ascending order).
inline DensityMatrix partial_trace(const DensityMatrix& rho, const std::set<std::size_t>& keep) {
    const SubsystemShape& shape = rho.shape();
    if (keep.empty()) throw DimensionError("partial_trace: keep set must be non-empty");
    for (std::size_t k : keep)
        if (k >= shape.factors()) throw DimensionError("partial_trace: subsystem index out of range");

    std::vector<std::size_t> kept_dims;
    for (std::size_t k : keep) kept_dims.push_back(shape.dim(k));
    SubsystemShape reduced(kept_dims);

    // Split every composite index into (kept index, traced index).
    const std::size_t n = shape.total();
    std::vector<std::size_t> kept_idx(n), traced_idx(n);
    std::size_t traced_total = 1;
    for (std::size_t f = 0; f < shape.factors(); ++f)
        if (!keep.count(f)) traced_total *= shape.dim(f);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t ki = 0, ti = 0;
        for (std::size_t f = 0; f < shape.factors(); ++f) {
            const std::size_t dgt = shape.digit(i, f);
            if (keep.count(f))
                ki = ki * shape.dim(f) + dgt;
            else
                ti = ti * shape.dim(f) + dgt;
        }
        kept_idx[i] = ki;
        traced_idx[i] = ti;
    }
    std::vector<std::vector<std::size_t>> groups(traced_total);
    for (std::size_t i = 0; i < n; ++i) groups[traced_idx[i]].push_back(i);

    const auto rd = static_cast<Eigen::Index>(reduced.total());
    Matrix out = Matrix::Zero(rd, rd);
    const Matrix& m = rho.matrix();
    for (const auto& g : groups)
        for (std::size_t i : g)
            for (std::size_t j : g)
                out(static_cast<Eigen::Index>(kept_idx[i]), static_cast<Eigen::Index>(kept_idx[j])) +=
                    m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return DensityMatrix(std::move(reduced), std::move(out));
}

struct Eigensystem {
    std::vector<double> values;  // ascending
    Matrix vectors;              // orthonormal columns, vectors.col(i) <-> values[i]
};

inline Eigensystem hermitian_eig(const Matrix& m, double tol = kSpectralTol) {
    if (m.rows() != m.cols()) throw DimensionError("hermitian_eig: matrix must be square");
    const double defect = max_abs_difference(m, m.adjoint());
    if (defect > tol) throw NumericalError("hermitian_eig: input is not Hermitian (defect " + std::to_string(defect) + ")");
    // Symmetrize so the solver sees an exactly Hermitian matrix.
    const Matrix h = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    if (es.info() != Eigen::Success) throw NumericalError("hermitian_eig: eigensolver did not converge");
    Eigensystem out;
    out.values.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    out.vectors = es.eigenvectors();
    return out;
}

inline Eigensystem hermitian_eig(const Operator& op, double tol = kSpectralTol) { return hermitian_eig(op.matrix(), tol); }

/// V f(Lambda) V^dagger for a real function of the spectrum.
template <typename F>
Matrix spectral_function(const Eigensystem& es, F&& f) {
    const auto n = static_cast<Eigen::Index>(es.values.size());
    Vector d(n);
    for (Eigen::Index i = 0; i < n; ++i) d(i) = f(es.values[static_cast<std::size_t>(i)]);
    return es.vectors * d.asDiagonal() * es.vectors.adjoint();
}

/// exp(-i H t / hbar).
inline Operator unitary_propagator(const Operator& hamiltonian, double t, double hbar = 1.0) {
    const Eigensystem es = hermitian_eig(hamiltonian);
    return Operator(spectral_function(es, [&](double e) { return std::exp(cplx{0.0, -e * t / hbar}); }));
}

/// Largest |eigenvalue| of a Hermitian operator.
inline double spectral_radius(const Operator& hermitian) {
    const Eigensystem es = hermitian_eig(hermitian);
    return std::max(std::abs(es.values.front()), std::abs(es.values.back()));
}

/// (1/2) sum |eig(a - b)| for Hermitian a, b.
inline double trace_distance(const Matrix& a, const Matrix& b) {
    const Eigensystem es = hermitian_eig(Matrix(a - b));
    double s = 0.0;
    for (double v : es.values) s += std::abs(v);
    return 0.5 * s;
}

}  // namespace grwlab
