#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>

#include "mortl/expm.hpp"
#include "mortl/gramians.hpp"
#include "mortl/sylvester.hpp"
#include "mortl/types.hpp"

namespace mortl {

/// Block realization of the difference G - G_r:
///   A_e = blkdiag(A, A_r), B_e = [B; B_r], C_e = [C, -C_r].
template <typename Scalar>
StateSpace<Scalar> build_error_system(const StateSpace<Scalar>& full,
                                      const StateSpace<Scalar>& reduced) {
    if (full.inputs() != reduced.inputs() || full.outputs() != reduced.outputs()) {
        throw DimensionMismatch("build_error_system: input/output dimensions differ");
    }
    const Index n = full.order(), r = reduced.order();
    const Index m = full.inputs(), p = full.outputs();

    DenseMatrix<Scalar> A = DenseMatrix<Scalar>::Zero(n + r, n + r);
    A.topLeftCorner(n, n) = full.A;
    A.bottomRightCorner(r, r) = reduced.A;

    DenseMatrix<Scalar> B(n + r, m);
    B.topRows(n) = full.B;
    B.bottomRows(r) = reduced.B;

    DenseMatrix<Scalar> C(p, n + r);
    C.leftCols(n) = full.C;
    C.rightCols(r) = -reduced.C;

    return StateSpace<Scalar>(std::move(A), std::move(B), std::move(C));
}

/// All solution matrices needed by the time-limited cost and its gradients,
/// for one (full, reduced, horizon) triple. Fields satisfy:
///   X_tau:   A X + X A_r^T + B B_r^T - e^{A tau} B B_r^T e^{A_r^T tau} = 0
///   P_r_tau: A_r P + P A_r^T + B_r B_r^T - e^{A_r tau} B_r B_r^T e^{A_r^T tau} = 0
///   Y_tau:   A^T Y + Y A_r - C^T C_r + e^{A^T tau} C^T C_r e^{A_r tau} = 0
///   Q_r_tau: A_r^T Q + Q A_r + C_r^T C_r - e^{A_r^T tau} C_r^T C_r e^{A_r tau} = 0
///   P_r:     A_r P + P A_r^T + B_r B_r^T = 0          (infinite horizon)
///   X:       A X + X A_r^T + B B_r^T = 0              (infinite horizon)
///   S_tau = X^T e^{A^T tau} C^T C_r - P_r e^{A_r^T tau} C_r^T C_r
/// P_tau and Q_tau are the full-model Gramians, carried along so that cost
/// evaluation does not repeat the expensive full-order solves.
template <typename Scalar>
struct ErrorSystemWorkspace {
    DenseMatrix<Scalar> X_tau;
    DenseMatrix<Scalar> P_r_tau;
    DenseMatrix<Scalar> Y_tau;
    DenseMatrix<Scalar> Q_r_tau;
    DenseMatrix<Scalar> P_r;
    DenseMatrix<Scalar> X;
    DenseMatrix<Scalar> S_tau;
    DenseMatrix<Scalar> exp_A_tau;
    DenseMatrix<Scalar> exp_Ar_tau;
    DenseMatrix<Scalar> P_tau;
    DenseMatrix<Scalar> Q_tau;
};

/// Cost value J plus the three gradient matrices.
template <typename Scalar>
struct CostGradient {
    Scalar J;
    DenseMatrix<Scalar> grad_Ar;  // r x r
    DenseMatrix<Scalar> grad_Br;  // r x m
    DenseMatrix<Scalar> grad_Cr;  // p x r
};

namespace detail {

template <typename Scalar, typename Fn>
DenseMatrix<Scalar> solve_named(const char* equation, Fn&& solve) {
    try {
        return solve();
    } catch (const SingularPencil& e) {
        throw SingularPencil(std::string(equation) + ": " + e.what());
    }
}

}  // namespace detail

/// Assembles the workspace reusing precomputed full-model quantities. The
/// full-order Gramians and e^{A tau} do not depend on the reduced matrices,
/// so optimization loops compute them once and call this overload.
template <typename Scalar>
ErrorSystemWorkspace<Scalar> assemble_workspace(const StateSpace<Scalar>& full,
                                                const StateSpace<Scalar>& reduced,
                                                const Horizon<Scalar>& h,
                                                const TimeLimitedGramianPair<Scalar>& full_data) {
    if (full.inputs() != reduced.inputs() || full.outputs() != reduced.outputs()) {
        throw DimensionMismatch("assemble_workspace: input/output dimensions differ");
    }
    const DenseMatrix<Scalar>& A = full.A;
    const DenseMatrix<Scalar>& B = full.B;
    const DenseMatrix<Scalar>& C = full.C;
    const DenseMatrix<Scalar>& Ar = reduced.A;
    const DenseMatrix<Scalar>& Br = reduced.B;
    const DenseMatrix<Scalar>& Cr = reduced.C;

    ErrorSystemWorkspace<Scalar> ws;
    ws.exp_A_tau = full_data.exp_A_tau;
    ws.exp_Ar_tau = expm(Ar, h.tau);
    ws.P_tau = full_data.P_tau;
    ws.Q_tau = full_data.Q_tau;

    const DenseMatrix<Scalar>& E = ws.exp_A_tau;
    const DenseMatrix<Scalar>& Er = ws.exp_Ar_tau;
    const DenseMatrix<Scalar> Art = Ar.transpose();

    const DenseMatrix<Scalar> BBrT = B * Br.transpose();
    ws.X_tau = detail::solve_named<Scalar>("X_tau equation", [&] {
        return solve_sylvester<Scalar>(A, Art, BBrT - E * BBrT * Er.transpose());
    });

    const DenseMatrix<Scalar> BrBrT = Br * Br.transpose();
    ws.P_r_tau = detail::solve_named<Scalar>("P_r_tau equation", [&] {
        return solve_lyapunov<Scalar>(Ar, symmetrized(DenseMatrix<Scalar>(BrBrT - Er * BrBrT * Er.transpose())));
    });

    const DenseMatrix<Scalar> CTCr = C.transpose() * Cr;
    ws.Y_tau = detail::solve_named<Scalar>("Y_tau equation", [&] {
        return solve_sylvester<Scalar>(DenseMatrix<Scalar>(A.transpose()), Ar,
                                       DenseMatrix<Scalar>(-CTCr + E.transpose() * CTCr * Er));
    });

    const DenseMatrix<Scalar> CrTCr = Cr.transpose() * Cr;
    ws.Q_r_tau = detail::solve_named<Scalar>("Q_r_tau equation", [&] {
        return solve_lyapunov<Scalar>(Art, symmetrized(DenseMatrix<Scalar>(CrTCr - Er.transpose() * CrTCr * Er)));
    });

    ws.P_r = detail::solve_named<Scalar>(
        "P_r equation", [&] { return solve_lyapunov<Scalar>(Ar, symmetrized(BrBrT)); });

    ws.X = detail::solve_named<Scalar>("X equation",
                                       [&] { return solve_sylvester<Scalar>(A, Art, BBrT); });

    ws.S_tau = ws.X.transpose() * E.transpose() * CTCr - ws.P_r * Er.transpose() * CrTCr;
    return ws;
}

template <typename Scalar>
ErrorSystemWorkspace<Scalar> assemble_workspace(const StateSpace<Scalar>& full,
                                                const StateSpace<Scalar>& reduced,
                                                const Horizon<Scalar>& h) {
    return assemble_workspace(full, reduced, h, time_limited_gramians(full, h));
}

/// Squared time-limited H2 error
///   J = Tr(C P_tau C^T - 2 C X_tau C_r^T + C_r P_r_tau C_r^T).
/// May come out a hair below zero from trace round-off; not clamped.
template <typename Scalar>
Scalar cost(const StateSpace<Scalar>& full, const StateSpace<Scalar>& reduced,
            const ErrorSystemWorkspace<Scalar>& ws) {
    const Scalar t1 = (full.C * ws.P_tau * full.C.transpose()).trace();
    const Scalar t2 = (full.C * ws.X_tau * reduced.C.transpose()).trace();
    const Scalar t3 = (reduced.C * ws.P_r_tau * reduced.C.transpose()).trace();
    return t1 - Scalar(2) * t2 + t3;
}

/// Same cost via the observability-side traces,
///   Tr(B^T Q_tau B + 2 B^T Y_tau B_r + B_r^T Q_r_tau B_r).
/// Used as a cross-check of the workspace solutions.
template <typename Scalar>
Scalar cost_dual(const StateSpace<Scalar>& full, const StateSpace<Scalar>& reduced,
                 const ErrorSystemWorkspace<Scalar>& ws) {
    const Scalar t1 = (full.B.transpose() * ws.Q_tau * full.B).trace();
    const Scalar t2 = (full.B.transpose() * ws.Y_tau * reduced.B).trace();
    const Scalar t3 = (reduced.B.transpose() * ws.Q_r_tau * reduced.B).trace();
    return t1 + Scalar(2) * t2 + t3;
}

/// Closed-form gradients of J with respect to the reduced matrices:
///   grad_Ar = 2 (Q_r_tau P_r + Y_tau^T X + tau L(A_r tau, S_tau)^T)
///   grad_Br = 2 (Q_r_tau B_r + Y_tau^T B)
///   grad_Cr = 2 (C_r P_r_tau - C X_tau)
/// where L is the Frechet derivative of the matrix exponential.
template <typename Scalar>
CostGradient<Scalar> gradients(const StateSpace<Scalar>& full, const StateSpace<Scalar>& reduced,
                               const Horizon<Scalar>& h, const ErrorSystemWorkspace<Scalar>& ws) {
    CostGradient<Scalar> out;
    out.J = cost(full, reduced, ws);

    const DenseMatrix<Scalar> L =
        expm_frechet(DenseMatrix<Scalar>(reduced.A * h.tau), ws.S_tau);
    out.grad_Ar =
        Scalar(2) * (ws.Q_r_tau * ws.P_r + ws.Y_tau.transpose() * ws.X + h.tau * L.transpose());
    out.grad_Br = Scalar(2) * (ws.Q_r_tau * reduced.B + ws.Y_tau.transpose() * full.B);
    out.grad_Cr = Scalar(2) * (reduced.C * ws.P_r_tau - full.C * ws.X_tau);
    return out;
}

}  // namespace mortl
