#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "mortl/types.hpp"

namespace mortl {

/// Matrix exponential e^{At} (scaling-and-squaring with Pade core).
template <typename Scalar>
DenseMatrix<Scalar> expm(const DenseMatrix<Scalar>& A, Scalar t = Scalar(1)) {
    if (A.rows() != A.cols()) {
        throw DimensionMismatch("expm: matrix must be square");
    }
    if (!(t >= Scalar(0)) || !std::isfinite(static_cast<double>(t))) {
        throw std::invalid_argument("expm: t must be a finite nonnegative real");
    }
    detail::require_finite(A, "expm");
    return (A * t).exp();
}

/// Frechet derivative of the matrix exponential at A in direction E,
/// L(A, E) = d/dh e^{A + hE} |_{h=0}, computed as the upper-right block of
/// exp([A E; 0 A]). Linear in E.
template <typename Scalar>
DenseMatrix<Scalar> expm_frechet(const DenseMatrix<Scalar>& A, const DenseMatrix<Scalar>& E) {
    const Index n = A.rows();
    if (A.rows() != A.cols() || E.rows() != E.cols() || E.rows() != n) {
        throw DimensionMismatch("expm_frechet: A and E must be square and of equal size");
    }
    detail::require_finite(A, "expm_frechet A");
    detail::require_finite(E, "expm_frechet E");

    DenseMatrix<Scalar> block = DenseMatrix<Scalar>::Zero(2 * n, 2 * n);
    block.topLeftCorner(n, n) = A;
    block.topRightCorner(n, n) = E;
    block.bottomRightCorner(n, n) = A;
    return block.exp().topRightCorner(n, n);
}

}  // namespace mortl
