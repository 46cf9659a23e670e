// quantum.hpp — Small-dimension complex value types: states, operators, density
// matrices, Bloch vectors, and the inner-product algebra on them.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>

#include "unravel/constants.hpp"

namespace unravel {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

namespace detail {

inline bool finite(double x) { return std::isfinite(x); }
inline bool finite(const Complex& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (!finite(Complex(m(i, j)))) return false;
    return true;
}

inline void check_dim(Eigen::Index dim, const char* what) {
    if (dim < 2 || dim > tol::kDimCap)
        throw std::invalid_argument(std::string(what) + ": dimension " + std::to_string(dim) +
                                    " outside [2, " + std::to_string(tol::kDimCap) + "]");
}

inline void check_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
    if (a != b)
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                    std::to_string(a) + " vs " + std::to_string(b) + ")");
}

}  // namespace detail

// Whether a StateVector is asserted to carry unit norm (solutions of the
// norm-preserving equation) or deliberately free-norm (linear-equation solutions).
enum class NormKind { Normalized, FreeNorm };

class StateVector {
public:
    static StateVector normalized(Vector amplitudes) {
        StateVector s(std::move(amplitudes), NormKind::Normalized);
        const double n = s.amps_.norm();
        if (std::abs(n - 1.0) > tol::kNorm)
            throw std::invalid_argument("StateVector::normalized: |norm - 1| = " +
                                        std::to_string(std::abs(n - 1.0)) + " exceeds tolerance");
        return s;
    }

    static StateVector free_norm(Vector amplitudes) {
        return StateVector(std::move(amplitudes), NormKind::FreeNorm);
    }

    Eigen::Index dim() const { return amps_.size(); }
    const Vector& amplitudes() const { return amps_; }
    Complex amplitude(Eigen::Index i) const { return amps_(i); }
    NormKind norm_kind() const { return kind_; }
    bool is_asserted_normalized() const { return kind_ == NormKind::Normalized; }
    double norm() const { return amps_.norm(); }
    double squared_norm() const { return amps_.squaredNorm(); }

    // Unit-norm copy; the free-norm input must not be degenerate.
    StateVector renormalized() const {
        const double n = amps_.norm();
        if (n < tol::kDegenerateNorm)
            throw std::invalid_argument("StateVector::renormalized: degenerate norm");
        return StateVector(amps_ / n, NormKind::Normalized);
    }

private:
    StateVector(Vector v, NormKind k) : amps_(std::move(v)), kind_(k) {
        detail::check_dim(amps_.size(), "StateVector");
        if (!detail::all_finite(amps_))
            throw std::invalid_argument("StateVector: non-finite amplitude");
    }

    Vector amps_;
    NormKind kind_;
};

class Operator {
public:
    explicit Operator(Matrix entries) : m_(std::move(entries)) {
        if (m_.rows() != m_.cols())
            throw std::invalid_argument("Operator: matrix not square");
        detail::check_dim(m_.rows(), "Operator");
        if (!detail::all_finite(m_))
            throw std::invalid_argument("Operator: non-finite entry");
    }

    Eigen::Index dim() const { return m_.rows(); }
    const Matrix& entries() const { return m_; }
    Complex entry(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

    bool is_hermitian(double tolerance = tol::kHermitian) const {
        return (m_ - m_.adjoint()).cwiseAbs().maxCoeff() <= tolerance;
    }

    bool is_identity(double tolerance = tol::kIdentity) const {
        return (m_ - Matrix::Identity(m_.rows(), m_.cols())).cwiseAbs().maxCoeff() <= tolerance;
    }

    Operator adjoint() const { return Operator(m_.adjoint()); }

private:
    Matrix m_;
};

class DensityMatrix {
public:
    // Validates Hermiticity, unit trace and positivity (up to numerical slack).
    explicit DensityMatrix(Matrix entries) : m_(std::move(entries)) {
        if (m_.rows() != m_.cols())
            throw std::invalid_argument("DensityMatrix: matrix not square");
        detail::check_dim(m_.rows(), "DensityMatrix");
        if (!detail::all_finite(m_))
            throw std::invalid_argument("DensityMatrix: non-finite entry");
        if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > tol::kDensityHermitian)
            throw std::invalid_argument("DensityMatrix: not Hermitian within tolerance");
        if (std::abs(m_.trace().real() - 1.0) > tol::kDensityTrace ||
            std::abs(m_.trace().imag()) > tol::kDensityTrace)
            throw std::invalid_argument("DensityMatrix: trace differs from 1: " +
                                        std::to_string(m_.trace().real()));
        Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m_ + m_.adjoint()),
                                                 Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -tol::kDensityPositivity)
            throw std::invalid_argument("DensityMatrix: negative eigenvalue " +
                                        std::to_string(es.eigenvalues().minCoeff()));
    }

    Eigen::Index dim() const { return m_.rows(); }
    const Matrix& entries() const { return m_; }
    Complex entry(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
    double trace_real() const { return m_.trace().real(); }

private:
    Matrix m_;
};

struct BlochVector {
    double x{0.0};
    double y{0.0};
    double z{0.0};

    double squared_length() const { return x * x + y * y + z * z; }
};

// ----------------------------- fixed small operators ------------------------

inline Matrix pauli_x() {
    Matrix m(2, 2);
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}

inline Matrix pauli_y() {
    Matrix m(2, 2);
    m << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
    return m;
}

inline Matrix pauli_z() {
    Matrix m(2, 2);
    m << 1.0, 0.0, 0.0, -1.0;
    return m;
}

inline Matrix identity_matrix(Eigen::Index dim) { return Matrix::Identity(dim, dim); }

// sigma_z eigenstates: spin_up = (1,0)^T with eigenvalue +1.
inline StateVector spin_up() {
    Vector v(2);
    v << 1.0, 0.0;
    return StateVector::normalized(std::move(v));
}

inline StateVector spin_down() {
    Vector v(2);
    v << 0.0, 1.0;
    return StateVector::normalized(std::move(v));
}

// cos(theta/2)|up> + sin(theta/2)|down>
inline StateVector spin_theta(double theta) {
    Vector v(2);
    v << std::cos(theta / 2.0), std::sin(theta / 2.0);
    return StateVector::normalized(std::move(v));
}

// ----------------------------- operations -----------------------------------

// <a|b>: conjugate-linear in a, linear in b.
inline Complex inner(const StateVector& a, const StateVector& b) {
    detail::check_same_dim(a.dim(), b.dim(), "inner");
    return a.amplitudes().dot(b.amplitudes());
}

inline Complex expectation(const Operator& op, const StateVector& psi) {
    detail::check_same_dim(op.dim(), psi.dim(), "expectation");
    if (!psi.is_asserted_normalized())
        throw std::invalid_argument("expectation: state must be normalized");
    return psi.amplitudes().dot(op.entries() * psi.amplitudes());
}

inline DensityMatrix pure_density(const StateVector& psi) {
    if (!psi.is_asserted_normalized())
        throw std::invalid_argument("pure_density: state must be normalized");
    return DensityMatrix(psi.amplitudes() * psi.amplitudes().adjoint());
}

inline BlochVector bloch(const StateVector& psi) {
    if (psi.dim() != 2)
        throw std::invalid_argument("bloch: defined for dimension 2 only");
    if (!psi.is_asserted_normalized())
        throw std::invalid_argument("bloch: state must be normalized");
    const Vector& a = psi.amplitudes();
    const Complex cross = std::conj(a(0)) * a(1);
    return BlochVector{2.0 * cross.real(), 2.0 * cross.imag(),
                       std::norm(a(0)) - std::norm(a(1))};
}

}  // namespace unravel
