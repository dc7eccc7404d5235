#pragma once

#include <Eigen/Dense>

#include <limits>
#include <utility>
#include <vector>

#include "mortl/error_system.hpp"
#include "mortl/gramians.hpp"
#include "mortl/types.hpp"

namespace mortl {

/// Oblique projection basis pair with W^T V = I_r. The reduced model is
/// A_r = W^T A V, B_r = W^T B, C_r = C V.
template <typename Scalar>
struct ProjectionPair {
    DenseMatrix<Scalar> V;  // n x r
    DenseMatrix<Scalar> W;  // n x r
};

namespace detail {

/// Factor L with S = L L^T for symmetric positive semidefinite S, via the
/// symmetric eigendecomposition. Small negative eigenvalues (round-off from
/// semidefinite Gramians) are clipped to zero.
template <typename Scalar>
DenseMatrix<Scalar> psd_sqrt_factor(const DenseMatrix<Scalar>& S) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> es(symmetrized(S));
    if (es.info() != Eigen::Success) {
        throw NonConvergence("psd_sqrt_factor: symmetric eigendecomposition failed");
    }
    DenseVector<Scalar> lam = es.eigenvalues();
    for (Index i = 0; i < lam.size(); ++i) {
        lam(i) = std::max(lam(i), Scalar(0));
    }
    return es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
}

}  // namespace detail

/// Time-limited balanced truncation. Balances the Gramian pair over [0, tau]
/// through the square-root method: P_tau = L L^T, Q_tau = R R^T,
/// R^T L = U Sigma Z^T, then V = L Z_r Sigma_r^{-1/2}, W = R U_r Sigma_r^{-1/2}.
/// Throws RankDeficient when the requested order exceeds the effective rank of
/// the product (singular values below 1e-12 of the largest).
template <typename Scalar>
std::pair<StateSpace<Scalar>, ProjectionPair<Scalar>> tl_bt(const StateSpace<Scalar>& full,
                                                            const Horizon<Scalar>& h, Index r) {
    if (r < 1 || r > full.order()) {
        throw DimensionMismatch("tl_bt: order must satisfy 1 <= r <= n");
    }
    const TimeLimitedGramianPair<Scalar> g = time_limited_gramians(full, h);
    const DenseMatrix<Scalar> L = detail::psd_sqrt_factor(g.P_tau);
    const DenseMatrix<Scalar> R = detail::psd_sqrt_factor(g.Q_tau);

    Eigen::BDCSVD<DenseMatrix<Scalar>> svd(R.transpose() * L,
                                           Eigen::ComputeThinU | Eigen::ComputeThinV);
    const DenseVector<Scalar>& sigma = svd.singularValues();
    if (sigma(0) <= Scalar(0) || sigma(r - 1) < Scalar(1e-12) * sigma(0)) {
        throw RankDeficient("tl_bt: requested order exceeds the numerical rank of P_tau Q_tau");
    }

    const DenseVector<Scalar> scale = sigma.head(r).cwiseSqrt().cwiseInverse();
    ProjectionPair<Scalar> proj;
    proj.V = L * svd.matrixV().leftCols(r) * scale.asDiagonal();
    proj.W = R * svd.matrixU().leftCols(r) * scale.asDiagonal();

    StateSpace<Scalar> reduced(proj.W.transpose() * full.A * proj.V, proj.W.transpose() * full.B,
                               full.C * proj.V);
    return {std::move(reduced), std::move(proj)};
}

/// One record per fixed-point sweep of tl_tsia.
template <typename Scalar>
struct TsiaIterate {
    Scalar J;       // squared H2 error over [0, tau] at this iterate
    Scalar change;  // subspace change: worst sin(principal angle) of the V/W
                    // spans against the previous sweep; 1 on the first sweep
};

namespace detail {

/// sin of the largest principal angle between the column spans of two
/// equally sized full-rank matrices.
template <typename Scalar>
Scalar subspace_gap(const DenseMatrix<Scalar>& A, const DenseMatrix<Scalar>& B) {
    const auto orth = [](const DenseMatrix<Scalar>& M) {
        Eigen::HouseholderQR<DenseMatrix<Scalar>> qr(M);
        return DenseMatrix<Scalar>(
            qr.householderQ() * DenseMatrix<Scalar>::Identity(M.rows(), M.cols()));
    };
    const DenseMatrix<Scalar> Qa = orth(A), Qb = orth(B);
    Eigen::JacobiSVD<DenseMatrix<Scalar>> svd(Qa.transpose() * Qb);
    const Scalar c = std::min(Scalar(1), svd.singularValues().minCoeff());
    return std::sqrt(std::max(Scalar(0), Scalar(1) - c * c));
}

}  // namespace detail

template <typename Scalar>
struct TsiaResult {
    StateSpace<Scalar> model;  // best iterate encountered (lowest J)
    std::vector<TsiaIterate<Scalar>> trace;
    bool converged = false;
};

/// Time-limited two-sided iteration. Each sweep solves the coupled
/// time-limited Sylvester equations for X_tau and Y_tau at the current
/// reduced model, takes V spanning X_tau and W = Y_tau (Y_tau^T V)^{-T} so
/// that W^T V = I, and projects. Stops when the subspace change of the V/W
/// spans between sweeps drops below `tol` (the reduced matrices carry a gauge
/// freedom, so the spans are what converge) or after `max_iter` sweeps; the
/// returned model is the iterate with the lowest cost seen, including the
/// initializer.
template <typename Scalar>
TsiaResult<Scalar> tl_tsia(const StateSpace<Scalar>& full, const Horizon<Scalar>& h, Index r,
                           const StateSpace<Scalar>& init, Index max_iter = 100,
                           Scalar tol = Scalar(1e-9)) {
    if (init.order() != r) {
        throw DimensionMismatch("tl_tsia: init order does not match requested order");
    }
    if (init.inputs() != full.inputs() || init.outputs() != full.outputs()) {
        throw DimensionMismatch("tl_tsia: init input/output dimensions differ from full model");
    }

    const TimeLimitedGramianPair<Scalar> full_data = time_limited_gramians(full, h);
    const auto cost_of = [&](const StateSpace<Scalar>& red) {
        return cost(full, red, assemble_workspace(full, red, h, full_data));
    };

    TsiaResult<Scalar> result;
    StateSpace<Scalar> current = init;
    Scalar J_init = cost_of(init);
    result.model = init;
    Scalar J_best = J_init;

    const DenseMatrix<Scalar>& A = full.A;
    const DenseMatrix<Scalar>& B = full.B;
    const DenseMatrix<Scalar>& C = full.C;
    const DenseMatrix<Scalar>& E = full_data.exp_A_tau;
    DenseMatrix<Scalar> prev_V, prev_Y;

    for (Index it = 0; it < max_iter; ++it) {
        const DenseMatrix<Scalar> Er = expm(current.A, h.tau);
        const DenseMatrix<Scalar> Art = current.A.transpose();

        const DenseMatrix<Scalar> BBrT = B * current.B.transpose();
        const DenseMatrix<Scalar> X_tau =
            solve_sylvester<Scalar>(A, Art, BBrT - E * BBrT * Er.transpose());

        const DenseMatrix<Scalar> CTCr = C.transpose() * current.C;
        const DenseMatrix<Scalar> Y_tau =
            solve_sylvester<Scalar>(DenseMatrix<Scalar>(A.transpose()), current.A,
                                    DenseMatrix<Scalar>(-CTCr + E.transpose() * CTCr * Er));

        // Columns of V span the same subspace as X_tau; scale them to unit
        // norm with a deterministic sign so the realization sequence does not
        // oscillate in gauge from sweep to sweep.
        DenseMatrix<Scalar> V = X_tau;
        for (Index j = 0; j < V.cols(); ++j) {
            const Scalar len = V.col(j).norm();
            if (len == Scalar(0)) {
                throw NormalizationSingular("tl_tsia: X_tau has a zero column");
            }
            Index pivot = 0;
            V.col(j).cwiseAbs().maxCoeff(&pivot);
            V.col(j) *= (V(pivot, j) < Scalar(0) ? Scalar(-1) : Scalar(1)) / len;
        }

        // W^T = (Y_tau^T V)^{-1} Y_tau^T
        const DenseMatrix<Scalar> G = Y_tau.transpose() * V;
        Eigen::FullPivLU<DenseMatrix<Scalar>> lu(G);
        const auto diag = lu.matrixLU().diagonal();
        const Scalar dmax = diag.cwiseAbs().maxCoeff();
        if (dmax == Scalar(0) || diag.cwiseAbs().minCoeff() < Scalar(1e-13) * dmax) {
            throw NormalizationSingular("tl_tsia: Y_tau^T X_tau is singular");
        }
        const DenseMatrix<Scalar> Wt = lu.solve(Y_tau.transpose());

        StateSpace<Scalar> next(Wt * A * V, Wt * B, C * V);

        Scalar change = Scalar(1);
        if (prev_V.size() > 0) {
            change = std::max(detail::subspace_gap(prev_V, V),
                              detail::subspace_gap(prev_Y, Y_tau));
        }
        prev_V = V;
        prev_Y = Y_tau;

        const Scalar J_next = cost_of(next);
        if (J_init > Scalar(0) && J_next > Scalar(10) * J_init) {
            throw IterationDiverged("tl_tsia: cost grew more than tenfold from the initializer");
        }
        result.trace.push_back({J_next, change});
        if (J_next < J_best) {
            J_best = J_next;
            result.model = next;
        }
        current = std::move(next);
        if (change < tol) {
            result.converged = true;
            break;
        }
    }
    return result;
}

}  // namespace mortl
