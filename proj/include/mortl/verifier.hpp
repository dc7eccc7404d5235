#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <numeric>
#include <random>
#include <vector>

#include "mortl/error_system.hpp"
#include "mortl/expm.hpp"
#include "mortl/gramians.hpp"
#include "mortl/types.hpp"

namespace mortl {

// ----------------------------------------------------------------------------
// Trace identity for coupled Sylvester solutions
// ----------------------------------------------------------------------------

/// Checks Tr(C N) = Tr(D M) for M, N satisfying A M + M B + C = 0 and
/// N A + B N + D = 0. Throws PreconditionViolated when the residuals of the
/// two defining equations exceed tolerance; returns whether the traces agree.
template <typename Scalar>
bool lemma1_check(const DenseMatrix<Scalar>& A, const DenseMatrix<Scalar>& B,
                  const DenseMatrix<Scalar>& C, const DenseMatrix<Scalar>& D,
                  const DenseMatrix<Scalar>& M, const DenseMatrix<Scalar>& N) {
    const Scalar scale_m =
        Scalar(1) + C.norm() + (A.norm() + B.norm()) * M.norm();
    const Scalar scale_n =
        Scalar(1) + D.norm() + (A.norm() + B.norm()) * N.norm();
    if ((A * M + M * B + C).norm() > Scalar(1e-9) * scale_m ||
        (N * A + B * N + D).norm() > Scalar(1e-9) * scale_n) {
        throw PreconditionViolated("lemma1_check: inputs do not satisfy the Sylvester equations");
    }
    const Scalar lhs = (C * N).trace();
    const Scalar rhs = (D * M).trace();
    return std::abs(lhs - rhs) <= Scalar(1e-9) * (std::abs(lhs) + Scalar(1));
}

// ----------------------------------------------------------------------------
// Spectral decomposition of the reduced system
// ----------------------------------------------------------------------------

/// Eigenstructure of A_r together with the tangential residue directions.
/// Columns of V are right eigenvectors; columns of W are left eigenvectors
/// taken from the inverse of V, so w_i^T v_j = delta_ij (plain transpose, no
/// conjugation). Row i of `b` is b_i = w_i^T B_r; column i of `c` is
/// c_i = C_r v_i, matching the residues of the partial fraction expansion.
template <typename Scalar>
struct SpectralDecomposition {
    ComplexVector<Scalar> eigenvalues;  // sorted by (real, imag)
    ComplexMatrix<Scalar> V;
    ComplexMatrix<Scalar> W;
    ComplexMatrix<Scalar> b;  // r x m
    ComplexMatrix<Scalar> c;  // p x r
};

template <typename Scalar>
SpectralDecomposition<Scalar> spectral_decomposition(const StateSpace<Scalar>& reduced) {
    const Index r = reduced.order();
    Eigen::EigenSolver<DenseMatrix<Scalar>> es(reduced.A);
    if (es.info() != Eigen::Success) {
        throw NonDiagonalizable("spectral_decomposition: eigensolver failed");
    }

    std::vector<Index> perm(static_cast<size_t>(r));
    std::iota(perm.begin(), perm.end(), Index(0));
    const auto& raw = es.eigenvalues();
    std::sort(perm.begin(), perm.end(), [&](Index a, Index b2) {
        if (raw(a).real() != raw(b2).real()) return raw(a).real() < raw(b2).real();
        return raw(a).imag() < raw(b2).imag();
    });

    SpectralDecomposition<Scalar> sd;
    sd.eigenvalues.resize(r);
    sd.V.resize(r, r);
    for (Index i = 0; i < r; ++i) {
        sd.eigenvalues(i) = raw(perm[static_cast<size_t>(i)]);
        sd.V.col(i) = es.eigenvectors().col(perm[static_cast<size_t>(i)]);
    }

    const Scalar lam_scale =
        Scalar(1) + sd.eigenvalues.cwiseAbs().maxCoeff();
    for (Index i = 0; i < r; ++i) {
        for (Index j = i + 1; j < r; ++j) {
            if (std::abs(sd.eigenvalues(i) - sd.eigenvalues(j)) < Scalar(1e-7) * lam_scale) {
                throw RepeatedPoles("spectral_decomposition: poles are not pairwise distinct");
            }
        }
    }

    Eigen::JacobiSVD<ComplexMatrix<Scalar>> svd(sd.V);
    const Scalar smin = svd.singularValues().minCoeff();
    const Scalar smax = svd.singularValues().maxCoeff();
    if (smin <= Scalar(0) || smax / smin > Scalar(1e10)) {
        throw NonDiagonalizable("spectral_decomposition: eigenvector matrix is ill conditioned");
    }

    sd.W = sd.V.inverse().transpose();
    sd.b = sd.W.transpose() * reduced.B.template cast<std::complex<Scalar>>();
    sd.c = reduced.C.template cast<std::complex<Scalar>>() * sd.V;
    return sd;
}

// ----------------------------------------------------------------------------
// Tangential interpolation identities
// ----------------------------------------------------------------------------

/// Residuals of the four interpolation identities relating the gradients to
/// the time-limited transfer functions, evaluated at the mirrored reduced
/// poles s_i = -lambda_i. Each identity is computed through two independent
/// code paths (coupled Sylvester solutions on the left, resolvent solves on
/// the right), so the residuals are round-off sized for ANY diagonalizable
/// reduced model, optimal or not.
template <typename Scalar>
struct InterpolationResiduals {
    struct PoleEntry {
        std::complex<Scalar> lambda;
        Scalar right;        // || 1/2 grad_Br^T v_i - [H_r^T - H^T](-lambda_i) c_i ||
        Scalar left;         // || 1/2 w_i^T grad_Cr^T - b_i [H_r^T - H^T](-lambda_i) ||
        Scalar left_alt;     // same identity, column orientation (transposed form)
        Scalar bitangential; // | 1/2 w_i^T grad_Ar^T v_i - b_i d/ds[H^T - H_r^T](-lambda_i) c_i |
        Scalar scale;        // max of the norms entering the four residuals
    };
    struct PairEntry {
        Index i, j;
        Scalar off_diagonal;  // residual of the i != j gradient relation
        Scalar scale;
    };
    std::vector<PoleEntry> poles;
    std::vector<PairEntry> pairs;

    Scalar max_residual() const {
        Scalar m = Scalar(0);
        for (const auto& e : poles) {
            m = std::max({m, e.right, e.left, e.left_alt, e.bitangential});
        }
        for (const auto& e : pairs) {
            m = std::max(m, e.off_diagonal);
        }
        return m;
    }
    Scalar max_relative_residual() const {
        Scalar m = Scalar(0);
        for (const auto& e : poles) {
            m = std::max({m, e.right / e.scale, e.left / e.scale, e.left_alt / e.scale,
                          e.bitangential / e.scale});
        }
        for (const auto& e : pairs) {
            m = std::max(m, e.off_diagonal / e.scale);
        }
        return m;
    }
};

template <typename Scalar>
InterpolationResiduals<Scalar> interpolation_residuals(const StateSpace<Scalar>& full,
                                                       const StateSpace<Scalar>& reduced,
                                                       const Horizon<Scalar>& h) {
    using Complex = std::complex<Scalar>;

    const auto ws = assemble_workspace(full, reduced, h);
    const CostGradient<Scalar> cg = gradients(full, reduced, h, ws);
    const SpectralDecomposition<Scalar> sd = spectral_decomposition(reduced);
    const Index r = reduced.order();

    const ComplexMatrix<Scalar> gA = cg.grad_Ar.template cast<Complex>();
    const ComplexMatrix<Scalar> gB = cg.grad_Br.template cast<Complex>();
    const ComplexMatrix<Scalar> gC = cg.grad_Cr.template cast<Complex>();

    InterpolationResiduals<Scalar> out;
    std::vector<ComplexMatrix<Scalar>> dH_at(static_cast<size_t>(r));

    for (Index i = 0; i < r; ++i) {
        const Complex s = -sd.eigenvalues(i);
        const ComplexMatrix<Scalar> Hf =
            tl_transfer_function(full.A, full.B, full.C, ws.exp_A_tau, h.tau, s);
        const ComplexMatrix<Scalar> Hr =
            tl_transfer_function(reduced.A, reduced.B, reduced.C, ws.exp_Ar_tau, h.tau, s);
        const ComplexMatrix<Scalar> dHf =
            tl_transfer_function_derivative(full.A, full.B, full.C, ws.exp_A_tau, h.tau, s);
        const ComplexMatrix<Scalar> dHr = tl_transfer_function_derivative(
            reduced.A, reduced.B, reduced.C, ws.exp_Ar_tau, h.tau, s);

        const ComplexMatrix<Scalar> dT = (Hr - Hf).transpose();  // H_r^T - H^T at s
        const ComplexVector<Scalar> vi = sd.V.col(i);
        const ComplexVector<Scalar> wi = sd.W.col(i);
        const ComplexVector<Scalar> ci = sd.c.col(i);
        const auto bi = sd.b.row(i);

        typename InterpolationResiduals<Scalar>::PoleEntry entry;
        entry.lambda = sd.eigenvalues(i);

        const ComplexVector<Scalar> lhs_right = Scalar(0.5) * (gB.transpose() * vi);
        const ComplexVector<Scalar> rhs_right = dT * ci;
        entry.right = (lhs_right - rhs_right).norm();

        const ComplexMatrix<Scalar> lhs_left = Scalar(0.5) * (wi.transpose() * gC.transpose());
        const ComplexMatrix<Scalar> rhs_left = bi * dT;
        entry.left = (lhs_left - rhs_left).norm();
        // Column orientation of the same identity.
        const ComplexVector<Scalar> lhs_left_alt = Scalar(0.5) * (gC * wi);
        const ComplexVector<Scalar> rhs_left_alt = (Hr - Hf) * bi.transpose();
        entry.left_alt = (lhs_left_alt - rhs_left_alt).norm();

        const Complex lhs_bi = Scalar(0.5) * (wi.transpose() * gA.transpose() * vi)(0, 0);
        const Complex rhs_bi = (bi * (dHf - dHr).transpose() * ci)(0, 0);
        entry.bitangential = std::abs(lhs_bi - rhs_bi);

        entry.scale = std::max({Scalar(1), lhs_right.norm(), rhs_right.norm(), lhs_left.norm(),
                                rhs_left.norm(), std::abs(lhs_bi), std::abs(rhs_bi)});
        out.poles.push_back(entry);
        dH_at[static_cast<size_t>(i)] = dHf - dHr;
    }

    for (Index i = 0; i < r; ++i) {
        for (Index j = 0; j < r; ++j) {
            if (i == j) continue;
            const ComplexVector<Scalar> vj = sd.V.col(j);
            const ComplexVector<Scalar> wi = sd.W.col(i);
            const ComplexVector<Scalar> cj = sd.c.col(j);
            const auto bi = sd.b.row(i);

            const Complex lhs = Scalar(0.5) * (wi.transpose() * gA.transpose() * vj)(0, 0);
            const Complex term_b = (bi * gB.transpose() * vj)(0, 0);
            const Complex term_c = (wi.transpose() * gC.transpose() * cj)(0, 0);
            const Complex rhs =
                (term_b - term_c) / (Scalar(2) * (sd.eigenvalues(i) - sd.eigenvalues(j)));

            typename InterpolationResiduals<Scalar>::PairEntry entry;
            entry.i = i;
            entry.j = j;
            entry.off_diagonal = std::abs(lhs - rhs);
            entry.scale = std::max({Scalar(1), std::abs(lhs), std::abs(rhs)});
            out.pairs.push_back(entry);
        }
    }
    return out;
}

// ----------------------------------------------------------------------------
// Closed-form spectral vectors
// ----------------------------------------------------------------------------

/// The six closed-form resolvent expressions for the eigenvector slices of
/// the coupled Sylvester solutions, together with their deviations from the
/// directly solved matrices (X_tau w_i, X w_i, P_r_tau w_i, P_r w_i,
/// Y_tau v_i, Q_r_tau v_i). Two independent code paths; residuals should be
/// round-off sized.
template <typename Scalar>
struct AppendixVectors {
    ComplexVector<Scalar> x_i_tau, x_i;    // length n
    ComplexVector<Scalar> p_i_tau, p_i;    // length r
    ComplexVector<Scalar> y_i_tau;         // length n
    ComplexVector<Scalar> q_i_tau;         // length r
    Scalar max_residual;                   // worst cross-check deviation
};

template <typename Scalar>
AppendixVectors<Scalar> appendix_vectors(const StateSpace<Scalar>& full,
                                         const StateSpace<Scalar>& reduced,
                                         const Horizon<Scalar>& h, Index i) {
    using Complex = std::complex<Scalar>;
    const SpectralDecomposition<Scalar> sd = spectral_decomposition(reduced);
    if (i < 0 || i >= reduced.order()) {
        throw std::invalid_argument("appendix_vectors: pole index out of range");
    }
    const auto ws = assemble_workspace(full, reduced, h);

    const Complex lambda = sd.eigenvalues(i);
    const Complex growth = std::exp(lambda * h.tau);
    const ComplexVector<Scalar> wi = sd.W.col(i);
    const ComplexVector<Scalar> vi = sd.V.col(i);
    const ComplexVector<Scalar> bit = sd.b.row(i).transpose();  // b_i^T, m x 1
    const ComplexVector<Scalar> ci = sd.c.col(i);

    const auto shifted_lu = [&](const DenseMatrix<Scalar>& M) {
        ComplexMatrix<Scalar> S = M.template cast<Complex>();
        S.diagonal().array() += lambda;
        return detail::resolvent_lu<Scalar>(S, "appendix_vectors");
    };
    const auto n_lu = shifted_lu(full.A);
    const auto nt_lu = shifted_lu(DenseMatrix<Scalar>(full.A.transpose()));
    const auto r_lu = shifted_lu(reduced.A);
    const auto rt_lu = shifted_lu(DenseMatrix<Scalar>(reduced.A.transpose()));

    const ComplexMatrix<Scalar> E = ws.exp_A_tau.template cast<Complex>();
    const ComplexMatrix<Scalar> Er = ws.exp_Ar_tau.template cast<Complex>();
    const ComplexVector<Scalar> Bbi = full.B.template cast<Complex>() * bit;
    const ComplexVector<Scalar> Brbi = reduced.B.template cast<Complex>() * bit;
    const ComplexVector<Scalar> Ctci = full.C.transpose().template cast<Complex>() * ci;
    const ComplexVector<Scalar> Crtci = reduced.C.transpose().template cast<Complex>() * ci;

    AppendixVectors<Scalar> out;
    out.x_i_tau = -n_lu.solve(ComplexVector<Scalar>(Bbi - growth * (E * Bbi)));
    out.x_i = -n_lu.solve(Bbi);
    out.p_i_tau = -r_lu.solve(ComplexVector<Scalar>(Brbi - growth * (Er * Brbi)));
    out.p_i = -r_lu.solve(Brbi);
    out.y_i_tau = nt_lu.solve(ComplexVector<Scalar>(Ctci - growth * (E.transpose() * Ctci)));
    out.q_i_tau = -rt_lu.solve(ComplexVector<Scalar>(Crtci - growth * (Er.transpose() * Crtci)));

    const auto dev = [](const ComplexVector<Scalar>& a, const ComplexVector<Scalar>& b) {
        return (a - b).norm();
    };
    using CM = ComplexMatrix<Scalar>;
    const CM Xt = ws.X_tau.template cast<Complex>();
    const CM X = ws.X.template cast<Complex>();
    const CM Prt = ws.P_r_tau.template cast<Complex>();
    const CM Pr = ws.P_r.template cast<Complex>();
    const CM Yt = ws.Y_tau.template cast<Complex>();
    const CM Qrt = ws.Q_r_tau.template cast<Complex>();

    out.max_residual = std::max({dev(Xt * wi, out.x_i_tau), dev(X * wi, out.x_i),
                                 dev(Prt * wi, out.p_i_tau), dev(Pr * wi, out.p_i),
                                 dev(Yt * vi, out.y_i_tau), dev(Qrt * vi, out.q_i_tau)});
    return out;
}

// ----------------------------------------------------------------------------
// Time-domain output bound
// ----------------------------------------------------------------------------

/// Exact zero-order-hold propagators over one step of length dt:
/// x_{k+1} = Ad x_k + Bd u_k.
template <typename Scalar>
std::pair<DenseMatrix<Scalar>, DenseMatrix<Scalar>> zoh_propagator(const DenseMatrix<Scalar>& A,
                                                                   const DenseMatrix<Scalar>& B,
                                                                   Scalar dt) {
    const Index n = A.rows(), m = B.cols();
    DenseMatrix<Scalar> block = DenseMatrix<Scalar>::Zero(n + m, n + m);
    block.topLeftCorner(n, n) = A;
    block.topRightCorner(n, m) = B;
    const DenseMatrix<Scalar> e = expm(block, dt);
    return {e.topLeftCorner(n, n), e.topRightCorner(n, m)};
}

/// Simulates y(t) for piecewise-constant input u (columns of `u`, one per
/// step) over [0, steps*dt] with exact exponential stepping. Returns outputs
/// at the grid points t_0 = 0 .. t_steps.
template <typename Scalar>
DenseMatrix<Scalar> simulate_zoh(const StateSpace<Scalar>& model, const DenseMatrix<Scalar>& u,
                                 Scalar dt) {
    const Index steps = u.cols();
    const auto [Ad, Bd] = zoh_propagator(model.A, model.B, dt);
    DenseMatrix<Scalar> y(model.outputs(), steps + 1);
    DenseVector<Scalar> x = DenseVector<Scalar>::Zero(model.order());
    y.col(0) = model.C * x;
    for (Index k = 0; k < steps; ++k) {
        x = Ad * x + Bd * u.col(k);
        y.col(k + 1) = model.C * x;
    }
    return y;
}

template <typename Scalar>
struct OutputBoundReport {
    bool passed = true;
    Scalar h2tau_error = Scalar(0);    // right-hand side of the bound
    Scalar worst_linf = Scalar(0);     // largest simulated output error
    int violations = 0;
    int trials = 0;
};

/// Monte-Carlo check of the time-domain bound
///   ||y - y_r||_{Linf over [0,tau]} <= ||G - G_r||_{H2 over [0,tau]}
/// for random piecewise-constant inputs of unit L2 norm on [0, tau].
template <typename Scalar>
OutputBoundReport<Scalar> output_bound_report(const StateSpace<Scalar>& full,
                                              const StateSpace<Scalar>& reduced,
                                              const Horizon<Scalar>& h, int trials,
                                              std::uint64_t seed, Index steps = 2000) {
    if (full.inputs() != reduced.inputs() || full.outputs() != reduced.outputs()) {
        throw DimensionMismatch("output_bound_report: dimensions differ");
    }
    OutputBoundReport<Scalar> rep;
    rep.trials = trials;
    rep.h2tau_error = std::sqrt(h2tau_norm_squared(build_error_system(full, reduced), h));

    const Scalar dt = h.tau / Scalar(steps);
    const auto [Adf, Bdf] = zoh_propagator(full.A, full.B, dt);
    const auto [Adr, Bdr] = zoh_propagator(reduced.A, reduced.B, dt);

    std::mt19937_64 rng(seed);
    std::normal_distribution<Scalar> gauss(Scalar(0), Scalar(1));

    for (int t = 0; t < trials; ++t) {
        DenseMatrix<Scalar> u(full.inputs(), steps);
        for (Index j = 0; j < u.cols(); ++j) {
            for (Index i = 0; i < u.rows(); ++i) {
                u(i, j) = gauss(rng);
            }
        }
        u /= std::sqrt(u.squaredNorm() * dt);  // unit L2 norm over [0, tau]

        DenseVector<Scalar> xf = DenseVector<Scalar>::Zero(full.order());
        DenseVector<Scalar> xr = DenseVector<Scalar>::Zero(reduced.order());
        Scalar linf = Scalar(0);
        for (Index k = 0; k < steps; ++k) {
            xf = Adf * xf + Bdf * u.col(k);
            xr = Adr * xr + Bdr * u.col(k);
            linf = std::max(linf, (full.C * xf - reduced.C * xr).norm());
        }
        rep.worst_linf = std::max(rep.worst_linf, linf);
        if (linf > rep.h2tau_error + Scalar(1e-6)) {
            ++rep.violations;
        }
    }
    rep.passed = rep.violations == 0;
    return rep;
}

template <typename Scalar>
bool output_bound_check(const StateSpace<Scalar>& full, const StateSpace<Scalar>& reduced,
                        const Horizon<Scalar>& h, int trials, std::uint64_t seed = 0x5eed) {
    return output_bound_report(full, reduced, h, trials, seed).passed;
}

}  // namespace mortl
