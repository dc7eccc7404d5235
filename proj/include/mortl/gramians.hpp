#pragma once

#include <Eigen/Dense>

#include <complex>

#include "mortl/expm.hpp"
#include "mortl/sylvester.hpp"
#include "mortl/types.hpp"

namespace mortl {

/// Controllability and observability Gramians over [0, tau] together with the
/// matrix exponential e^{A tau}, which every downstream solve reuses.
template <typename Scalar>
struct TimeLimitedGramianPair {
    DenseMatrix<Scalar> P_tau;
    DenseMatrix<Scalar> Q_tau;
    DenseMatrix<Scalar> exp_A_tau;
};

/// Time-limited controllability Gramian: the solution of
///   A P + P A^T + B B^T - e^{A tau} B B^T e^{A^T tau} = 0,
/// equal to the integral of e^{At} B B^T e^{A^T t} over [0, tau].
/// Does not require stability, only that no two eigenvalues of A are mirrored.
template <typename Scalar>
DenseMatrix<Scalar> controllability_gramian_tl(const StateSpace<Scalar>& model,
                                               const DenseMatrix<Scalar>& exp_A_tau) {
    const DenseMatrix<Scalar> W = model.B * model.B.transpose();
    const DenseMatrix<Scalar> rhs = symmetrized(DenseMatrix<Scalar>(W - exp_A_tau * W * exp_A_tau.transpose()));
    return solve_lyapunov(model.A, rhs);
}

template <typename Scalar>
DenseMatrix<Scalar> controllability_gramian_tl(const StateSpace<Scalar>& model,
                                               const Horizon<Scalar>& h) {
    return controllability_gramian_tl(model, expm(model.A, h.tau));
}

/// Time-limited observability Gramian: the solution of
///   A^T Q + Q A + C^T C - e^{A^T tau} C^T C e^{A tau} = 0.
template <typename Scalar>
DenseMatrix<Scalar> observability_gramian_tl(const StateSpace<Scalar>& model,
                                             const DenseMatrix<Scalar>& exp_A_tau) {
    const DenseMatrix<Scalar> W = model.C.transpose() * model.C;
    const DenseMatrix<Scalar> rhs = symmetrized(DenseMatrix<Scalar>(W - exp_A_tau.transpose() * W * exp_A_tau));
    return solve_lyapunov(DenseMatrix<Scalar>(model.A.transpose()), rhs);
}

template <typename Scalar>
DenseMatrix<Scalar> observability_gramian_tl(const StateSpace<Scalar>& model,
                                             const Horizon<Scalar>& h) {
    return observability_gramian_tl(model, expm(model.A, h.tau));
}

/// Both Gramians with e^{A tau} computed once.
template <typename Scalar>
TimeLimitedGramianPair<Scalar> time_limited_gramians(const StateSpace<Scalar>& model,
                                                     const Horizon<Scalar>& h) {
    TimeLimitedGramianPair<Scalar> pair;
    pair.exp_A_tau = expm(model.A, h.tau);
    pair.P_tau = controllability_gramian_tl(model, pair.exp_A_tau);
    pair.Q_tau = observability_gramian_tl(model, pair.exp_A_tau);
    return pair;
}

/// Squared H2 norm over [0, tau]: Tr(C P_tau C^T). Equals Tr(B^T Q_tau B);
/// tiny negative traces from round-off are clamped to zero.
template <typename Scalar>
Scalar h2tau_norm_squared(const StateSpace<Scalar>& model, const Horizon<Scalar>& h) {
    const DenseMatrix<Scalar> P = controllability_gramian_tl(model, h);
    const Scalar tr = (model.C * P * model.C.transpose()).trace();
    return std::max(Scalar(0), tr);
}

template <typename Scalar>
Scalar h2tau_norm(const StateSpace<Scalar>& model, const Horizon<Scalar>& h) {
    return std::sqrt(h2tau_norm_squared(model, h));
}

namespace detail {

template <typename Scalar>
Eigen::FullPivLU<ComplexMatrix<Scalar>> resolvent_lu(const ComplexMatrix<Scalar>& M,
                                                     const char* context) {
    Eigen::FullPivLU<ComplexMatrix<Scalar>> lu(M);
    const auto diag = lu.matrixLU().diagonal();
    const Scalar dmax = diag.cwiseAbs().maxCoeff();
    const Scalar dmin = diag.cwiseAbs().minCoeff();
    if (dmax == Scalar(0) || dmin < Scalar(1e-12) * dmax) {
        throw SingularResolvent(std::string(context) + ": sI - A numerically singular");
    }
    return lu;
}

}  // namespace detail

/// Time-limited transfer function
///   H_tau(s) = C (sI - A)^{-1} (I - e^{-s tau} e^{A tau}) B.
template <typename Scalar>
ComplexMatrix<Scalar> tl_transfer_function(const DenseMatrix<Scalar>& A,
                                           const DenseMatrix<Scalar>& B,
                                           const DenseMatrix<Scalar>& C,
                                           const DenseMatrix<Scalar>& exp_A_tau, Scalar tau,
                                           std::complex<Scalar> s) {
    ComplexMatrix<Scalar> M = -A.template cast<std::complex<Scalar>>();
    M.diagonal().array() += s;
    auto lu = detail::resolvent_lu<Scalar>(M, "tl_transfer_function");

    const std::complex<Scalar> decay = std::exp(-s * tau);
    ComplexMatrix<Scalar> rhs = B.template cast<std::complex<Scalar>>() -
                                decay * (exp_A_tau * B).template cast<std::complex<Scalar>>();
    return C.template cast<std::complex<Scalar>>() * lu.solve(rhs);
}

template <typename Scalar>
ComplexMatrix<Scalar> tl_transfer_function(const StateSpace<Scalar>& model,
                                           const Horizon<Scalar>& h, std::complex<Scalar> s) {
    return tl_transfer_function(model.A, model.B, model.C, expm(model.A, h.tau), h.tau, s);
}

/// Derivative of the time-limited transfer function with respect to s:
///   d/ds H_tau(s) = -C (sI-A)^{-2} (I - e^{-s tau} e^{A tau}) B
///                   + tau e^{-s tau} C (sI-A)^{-1} e^{A tau} B.
template <typename Scalar>
ComplexMatrix<Scalar> tl_transfer_function_derivative(const DenseMatrix<Scalar>& A,
                                                      const DenseMatrix<Scalar>& B,
                                                      const DenseMatrix<Scalar>& C,
                                                      const DenseMatrix<Scalar>& exp_A_tau,
                                                      Scalar tau, std::complex<Scalar> s) {
    ComplexMatrix<Scalar> M = -A.template cast<std::complex<Scalar>>();
    M.diagonal().array() += s;
    auto lu = detail::resolvent_lu<Scalar>(M, "tl_transfer_function_derivative");

    const std::complex<Scalar> decay = std::exp(-s * tau);
    const ComplexMatrix<Scalar> Cc = C.template cast<std::complex<Scalar>>();
    ComplexMatrix<Scalar> rhs = B.template cast<std::complex<Scalar>>() -
                                decay * (exp_A_tau * B).template cast<std::complex<Scalar>>();
    ComplexMatrix<Scalar> term1 = -Cc * lu.solve(lu.solve(rhs));
    ComplexMatrix<Scalar> term2 =
        (tau * decay) * (Cc * lu.solve((exp_A_tau * B).template cast<std::complex<Scalar>>()));
    return term1 + term2;
}

}  // namespace mortl
