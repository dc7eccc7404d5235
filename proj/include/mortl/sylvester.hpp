#pragma once

#include <Eigen/Dense>

#include <string>

#include "mortl/schur.hpp"
#include "mortl/types.hpp"

namespace mortl {

namespace detail {

/// Throws SingularPencil when some lambda_i(A) + mu_j(B) is numerically zero
/// relative to the problem scale.
template <typename Scalar>
void check_eigenvalue_sums(const ComplexVector<Scalar>& lambda,
                           const ComplexVector<Scalar>& mu, Scalar scale,
                           const char* context) {
    const Scalar tol = Scalar(1e-12) * scale;
    for (Index i = 0; i < lambda.size(); ++i) {
        for (Index j = 0; j < mu.size(); ++j) {
            if (std::abs(lambda(i) + mu(j)) < tol) {
                throw SingularPencil(std::string(context) +
                                     ": eigenvalue sum lambda_i + mu_j ~ 0, no unique solution");
            }
        }
    }
}

/// Back-substitution for S Y + Y T = F with S, T quasi upper triangular.
/// Works block column by block column (left to right over T) and block row by
/// block row (bottom to top over S); each unknown block solves a small
/// Kronecker system of size at most 4.
template <typename Scalar>
DenseMatrix<Scalar> quasi_triangular_sylvester(const DenseMatrix<Scalar>& S,
                                               const DenseMatrix<Scalar>& T,
                                               const DenseMatrix<Scalar>& F) {
    const auto row_blocks = quasi_triangular_blocks(S);
    const auto col_blocks = quasi_triangular_blocks(T);

    DenseMatrix<Scalar> Y = DenseMatrix<Scalar>::Zero(F.rows(), F.cols());

    Index j0 = 0;
    for (Index q : col_blocks) {
        Index i0 = S.rows();
        for (auto it = row_blocks.rbegin(); it != row_blocks.rend(); ++it) {
            const Index p = *it;
            i0 -= p;

            DenseMatrix<Scalar> rhs = F.block(i0, j0, p, q);
            const Index tail = S.rows() - (i0 + p);
            if (tail > 0) {
                rhs.noalias() -= S.block(i0, i0 + p, p, tail) * Y.block(i0 + p, j0, tail, q);
            }
            if (j0 > 0) {
                rhs.noalias() -= Y.block(i0, 0, p, j0) * T.block(0, j0, j0, q);
            }

            const auto Sii = S.block(i0, i0, p, p);
            const auto Tjj = T.block(j0, j0, q, q);
            if (p == 1 && q == 1) {
                const Scalar denom = Sii(0, 0) + Tjj(0, 0);
                Y(i0, j0) = rhs(0, 0) / denom;
            } else {
                // vec(Sii X + X Tjj) = (I_q (x) Sii + Tjj^T (x) I_p) vec(X)
                const Index sz = p * q;
                DenseMatrix<Scalar> K = DenseMatrix<Scalar>::Zero(sz, sz);
                for (Index cq = 0; cq < q; ++cq) {
                    K.block(cq * p, cq * p, p, p) += Sii;
                    for (Index rq = 0; rq < q; ++rq) {
                        K.block(cq * p, rq * p, p, p).diagonal().array() += Tjj(rq, cq);
                    }
                }
                DenseVector<Scalar> v(sz);
                for (Index cq = 0; cq < q; ++cq) {
                    v.segment(cq * p, p) = rhs.col(cq);
                }
                DenseVector<Scalar> x = K.fullPivLu().solve(v);
                for (Index cq = 0; cq < q; ++cq) {
                    Y.block(i0, j0 + cq, p, 1) = x.segment(cq * p, p);
                }
            }
        }
        j0 += q;
    }
    return Y;
}

}  // namespace detail

/// Solves A X + X B + C = 0 by the Schur-based (Bartels-Stewart) method.
/// Requires the spectra of A and -B to be disjoint; otherwise SingularPencil.
template <typename Scalar>
DenseMatrix<Scalar> solve_sylvester(const DenseMatrix<Scalar>& A, const DenseMatrix<Scalar>& B,
                                    const DenseMatrix<Scalar>& C) {
    if (A.rows() != A.cols() || B.rows() != B.cols()) {
        throw DimensionMismatch("solve_sylvester: A and B must be square");
    }
    if (C.rows() != A.rows() || C.cols() != B.rows()) {
        throw DimensionMismatch("solve_sylvester: C must be " + std::to_string(A.rows()) + "x" +
                                std::to_string(B.rows()));
    }
    detail::require_finite(C, "solve_sylvester C");

    const SchurForm<Scalar> sa = schur(A);
    const SchurForm<Scalar> sb = schur(B);

    const Scalar scale = A.norm() + B.norm();
    detail::check_eigenvalue_sums(quasi_triangular_eigenvalues(sa.T),
                                  quasi_triangular_eigenvalues(sb.T), scale, "solve_sylvester");

    // A X + X B = -C  ->  S (U^T X V) + (U^T X V) T = -U^T C V
    const DenseMatrix<Scalar> F = -(sa.Q.transpose() * C * sb.Q);
    const DenseMatrix<Scalar> Y = detail::quasi_triangular_sylvester(sa.T, sb.T, F);
    return sa.Q * Y * sb.Q.transpose();
}

/// Solves A P + P A^T + Q = 0 with Q symmetric; the result is symmetrized.
template <typename Scalar>
DenseMatrix<Scalar> solve_lyapunov(const DenseMatrix<Scalar>& A, const DenseMatrix<Scalar>& Q) {
    if (Q.rows() != Q.cols() || Q.rows() != A.rows()) {
        throw DimensionMismatch("solve_lyapunov: Q must match A");
    }
    const Scalar qscale = Q.norm();
    if ((Q - Q.transpose()).norm() > Scalar(1e-8) * (Scalar(1) + qscale)) {
        throw std::invalid_argument("solve_lyapunov: Q is not symmetric");
    }
    const DenseMatrix<Scalar> At = A.transpose();
    return symmetrized(solve_sylvester(A, At, symmetrized(Q)));
}

}  // namespace mortl
