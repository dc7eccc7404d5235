#pragma once

#include <Eigen/Dense>

#include <vector>

#include "mortl/types.hpp"

namespace mortl {

/// Real Schur factorization A = Q T Q^T with Q orthogonal and T quasi upper
/// triangular (1x1 and 2x2 diagonal blocks, 2x2 blocks carrying complex
/// conjugate eigenvalue pairs).
template <typename Scalar>
struct SchurForm {
    DenseMatrix<Scalar> Q;
    DenseMatrix<Scalar> T;
};

namespace detail {

/// Sizes of the diagonal blocks of a quasi upper triangular matrix, top to
/// bottom. A nonzero subdiagonal entry marks a 2x2 block.
template <typename Scalar>
std::vector<Index> quasi_triangular_blocks(const DenseMatrix<Scalar>& T) {
    std::vector<Index> sizes;
    const Index n = T.rows();
    Index k = 0;
    while (k < n) {
        if (k + 1 < n && T(k + 1, k) != Scalar(0)) {
            sizes.push_back(2);
            k += 2;
        } else {
            sizes.push_back(1);
            k += 1;
        }
    }
    return sizes;
}

}  // namespace detail

/// Eigenvalues read off the diagonal blocks of a quasi upper triangular T.
template <typename Scalar>
ComplexVector<Scalar> quasi_triangular_eigenvalues(const DenseMatrix<Scalar>& T) {
    const Index n = T.rows();
    ComplexVector<Scalar> lambda(n);
    Index k = 0;
    while (k < n) {
        if (k + 1 < n && T(k + 1, k) != Scalar(0)) {
            // 2x2 block [a b; c d] with bc < 0: complex pair.
            const Scalar a = T(k, k), b = T(k, k + 1);
            const Scalar c = T(k + 1, k), d = T(k + 1, k + 1);
            const Scalar mean = (a + d) / Scalar(2);
            const Scalar disc = mean * mean - (a * d - b * c);
            if (disc < Scalar(0)) {
                const Scalar im = std::sqrt(-disc);
                lambda(k) = std::complex<Scalar>(mean, im);
                lambda(k + 1) = std::complex<Scalar>(mean, -im);
            } else {
                // Degenerate 2x2 block with real spectrum.
                const Scalar root = std::sqrt(disc);
                lambda(k) = std::complex<Scalar>(mean + root, Scalar(0));
                lambda(k + 1) = std::complex<Scalar>(mean - root, Scalar(0));
            }
            k += 2;
        } else {
            lambda(k) = std::complex<Scalar>(T(k, k), Scalar(0));
            k += 1;
        }
    }
    return lambda;
}

/// Real Schur decomposition. `max_iters_per_row` caps the QR iteration count
/// (Eigen's default is 40 sweeps per row); exceeding it throws NonConvergence.
template <typename Scalar>
SchurForm<Scalar> schur(const DenseMatrix<Scalar>& A, Index max_iters_per_row = -1) {
    if (A.rows() != A.cols()) {
        throw DimensionMismatch("schur: matrix must be square");
    }
    detail::require_finite(A, "schur");

    Eigen::RealSchur<DenseMatrix<Scalar>> solver;
    if (max_iters_per_row > 0) {
        solver.setMaxIterations(max_iters_per_row * A.rows());
    }
    solver.compute(A, /*computeU=*/true);
    if (solver.info() != Eigen::Success) {
        throw NonConvergence("schur: QR iteration exceeded its iteration cap");
    }

    SchurForm<Scalar> out{solver.matrixU(), solver.matrixT()};

    // Make the quasi-triangular profile exact: zero everything below the
    // diagonal blocks.
    const auto blocks = detail::quasi_triangular_blocks(out.T);
    Index row = 0;
    for (Index size : blocks) {
        const Index below = out.T.rows() - row - size;
        if (below > 0) {
            out.T.block(row + size, row, below, size).setZero();
        }
        row += size;
    }
    return out;
}

}  // namespace mortl
