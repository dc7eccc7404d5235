#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace mortl {

using Index = Eigen::Index;

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using ComplexMatrix = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using ComplexVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

// ----------------------------------------------------------------------------
// Error taxonomy. All failures are reported through exceptions derived from
// Error so callers can distinguish numerical failures from usage mistakes.
// ----------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// QR iteration failed to reduce a matrix to real Schur form.
struct NonConvergence : Error {
    using Error::Error;
};

/// A Sylvester/Lyapunov pencil has (numerically) matching mirrored
/// eigenvalues, so the equation has no unique solution.
struct SingularPencil : Error {
    using Error::Error;
};

/// (sI - A) is numerically singular at the requested evaluation point.
struct SingularResolvent : Error {
    using Error::Error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

/// Requested reduction order exceeds the effective rank of the Gramian pair.
struct RankDeficient : Error {
    using Error::Error;
};

struct IterationDiverged : Error {
    using Error::Error;
};

/// The oblique-projection normalization matrix is singular.
struct NormalizationSingular : Error {
    using Error::Error;
};

struct NonDiagonalizable : Error {
    using Error::Error;
};

struct RepeatedPoles : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

struct PreconditionViolated : Error {
    using Error::Error;
};

// ----------------------------------------------------------------------------
// Core domain types
// ----------------------------------------------------------------------------

namespace detail {

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
    if (!m.allFinite()) {
        throw std::invalid_argument(std::string(what) + ": matrix has non-finite entries");
    }
}

}  // namespace detail

/// Continuous-time LTI system x' = Ax + Bu, y = Cx with A n-by-n, B n-by-m,
/// C p-by-n. Stability is not required; every operation that needs a spectral
/// condition checks it explicitly.
template <typename Scalar>
struct StateSpace {
    DenseMatrix<Scalar> A;
    DenseMatrix<Scalar> B;
    DenseMatrix<Scalar> C;

    StateSpace() = default;

    StateSpace(DenseMatrix<Scalar> A_, DenseMatrix<Scalar> B_, DenseMatrix<Scalar> C_)
        : A(std::move(A_)), B(std::move(B_)), C(std::move(C_)) {
        if (A.rows() != A.cols()) {
            throw DimensionMismatch("StateSpace: A must be square");
        }
        if (B.rows() != A.rows()) {
            throw DimensionMismatch("StateSpace: B has " + std::to_string(B.rows()) +
                                    " rows, expected " + std::to_string(A.rows()));
        }
        if (C.cols() != A.rows()) {
            throw DimensionMismatch("StateSpace: C has " + std::to_string(C.cols()) +
                                    " cols, expected " + std::to_string(A.rows()));
        }
        detail::require_finite(A, "StateSpace A");
        detail::require_finite(B, "StateSpace B");
        detail::require_finite(C, "StateSpace C");
    }

    Index order() const { return A.rows(); }
    Index inputs() const { return B.cols(); }
    Index outputs() const { return C.rows(); }
};

/// Finite time horizon [0, tau], tau strictly positive and finite.
template <typename Scalar>
struct Horizon {
    Scalar tau;

    explicit Horizon(Scalar tau_) : tau(tau_) {
        if (!(tau > Scalar(0)) || !std::isfinite(static_cast<double>(tau))) {
            throw std::invalid_argument("Horizon: tau must satisfy 0 < tau < inf");
        }
    }
};

/// Symmetrize in place against round-off drift.
template <typename Scalar>
DenseMatrix<Scalar> symmetrized(const DenseMatrix<Scalar>& m) {
    return ((m + m.transpose()) / Scalar(2)).eval();
}

}  // namespace mortl
