#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "mortl/error_system.hpp"
#include "mortl/gramians.hpp"
#include "mortl/types.hpp"

namespace mortl {

// ----------------------------------------------------------------------------
// Parameter packing. The optimizer works on a flat vector of length
// r^2 + r m + p r holding A_r, B_r, C_r in that order, each row-major.
// Packing the gradient matrices the same way makes the Euclidean inner
// product of packed vectors equal the matrix inner product Tr(G^T D).
// ----------------------------------------------------------------------------

template <typename Scalar>
DenseVector<Scalar> pack(const DenseMatrix<Scalar>& Ar, const DenseMatrix<Scalar>& Br,
                         const DenseMatrix<Scalar>& Cr) {
    DenseVector<Scalar> v(Ar.size() + Br.size() + Cr.size());
    Index k = 0;
    for (const DenseMatrix<Scalar>* M : {&Ar, &Br, &Cr}) {
        for (Index i = 0; i < M->rows(); ++i) {
            for (Index j = 0; j < M->cols(); ++j) {
                v(k++) = (*M)(i, j);
            }
        }
    }
    return v;
}

template <typename Scalar>
DenseVector<Scalar> pack(const StateSpace<Scalar>& reduced) {
    return pack(reduced.A, reduced.B, reduced.C);
}

template <typename Scalar>
DenseVector<Scalar> pack(const CostGradient<Scalar>& g) {
    return pack(g.grad_Ar, g.grad_Br, g.grad_Cr);
}

template <typename Scalar>
StateSpace<Scalar> unpack(const DenseVector<Scalar>& v, Index r, Index m, Index p) {
    if (v.size() != r * r + r * m + p * r) {
        throw DimensionMismatch("unpack: vector length " + std::to_string(v.size()) +
                                " does not match r^2 + r m + p r");
    }
    DenseMatrix<Scalar> Ar(r, r), Br(r, m), Cr(p, r);
    Index k = 0;
    for (DenseMatrix<Scalar>* M : {&Ar, &Br, &Cr}) {
        for (Index i = 0; i < M->rows(); ++i) {
            for (Index j = 0; j < M->cols(); ++j) {
                (*M)(i, j) = v(k++);
            }
        }
    }
    return StateSpace<Scalar>(std::move(Ar), std::move(Br), std::move(Cr));
}

// ----------------------------------------------------------------------------
// Quasi-Newton minimization of the squared time-limited H2 error
// ----------------------------------------------------------------------------

struct OptimizerConfig {
    double grad_tol = 1e-8;  // relative: stop when ||grad||_inf < grad_tol * (1 + |J|)
    int max_iter = 500;
    double wolfe_c1 = 1e-4;
    double wolfe_c2 = 0.9;
    double step_init = 1.0;

    void validate() const {
        if (!(0 < wolfe_c1 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1)) {
            throw std::invalid_argument("OptimizerConfig: need 0 < c1 < c2 < 1");
        }
        if (!(grad_tol > 0) || max_iter < 0 || !(step_init > 0)) {
            throw std::invalid_argument("OptimizerConfig: invalid tolerance or iteration cap");
        }
    }
};

enum class Termination {
    Gradient,          // ||grad||_inf < grad_tol * (1 + |J|)
    MaxIterations,     //
    LineSearchFailed,  // no step satisfying the strong Wolfe conditions
    SingularPencil,    // every trial step down to the shrink floor was infeasible
};

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::Gradient: return "gradient";
        case Termination::MaxIterations: return "max_iterations";
        case Termination::LineSearchFailed: return "line_search_failed";
        case Termination::SingularPencil: return "singular_pencil";
    }
    return "unknown";
}

template <typename Scalar>
struct OptimizationReport {
    StateSpace<Scalar> model;          // best iterate encountered
    Scalar J = Scalar(0);              // cost at that iterate
    Scalar grad_norm_inf = Scalar(0);  // max-norm of the packed gradient there
    std::vector<Scalar> j_trace;       // cost per accepted iterate, starting at the init
    std::vector<Scalar> grad_trace;    // ||grad||_inf per accepted iterate
    Termination reason = Termination::MaxIterations;
    bool all_steps_wolfe = true;  // every accepted step satisfied both Wolfe conditions
    int iterations = 0;
    double wall_seconds = 0.0;
};

namespace detail {

/// Cost and packed gradient at a packed parameter vector. `feasible` is false
/// when a solver pencil was singular at that point; the line search treats
/// such points as having infinite cost.
template <typename Scalar>
struct EvalPoint {
    Scalar J = std::numeric_limits<Scalar>::infinity();
    DenseVector<Scalar> grad;
    bool feasible = false;
};

template <typename Scalar>
class CostOracle {
  public:
    CostOracle(const StateSpace<Scalar>& full, const Horizon<Scalar>& h, Index r)
        : full_(full), h_(h), r_(r), full_data_(time_limited_gramians(full, h)) {}

    EvalPoint<Scalar> operator()(const DenseVector<Scalar>& theta) const {
        EvalPoint<Scalar> out;
        StateSpace<Scalar> red = unpack(theta, r_, full_.inputs(), full_.outputs());
        try {
            const auto ws = assemble_workspace(full_, red, h_, full_data_);
            const CostGradient<Scalar> cg = gradients(full_, red, h_, ws);
            if (!std::isfinite(static_cast<double>(cg.J))) {
                return out;
            }
            out.J = cg.J;
            out.grad = pack(cg);
            out.feasible = out.grad.allFinite();
        } catch (const SingularPencil&) {
            // infeasible trial point; caller backtracks
        }
        return out;
    }

  private:
    const StateSpace<Scalar>& full_;
    Horizon<Scalar> h_;
    Index r_;
    TimeLimitedGramianPair<Scalar> full_data_;
};

template <typename Scalar>
struct LineSearchResult {
    bool success = false;
    bool saw_infeasible = false;
    Scalar alpha = Scalar(0);
    EvalPoint<Scalar> point;
};

/// Strong Wolfe line search (bracket + zoom with cubic interpolation).
/// phi(a) = J(theta + a d); requires phi'(0) < 0.
template <typename Scalar, typename Eval>
LineSearchResult<Scalar> wolfe_line_search(const Eval& eval, const DenseVector<Scalar>& theta,
                                           const DenseVector<Scalar>& d, Scalar phi0, Scalar dphi0,
                                           const OptimizerConfig& cfg) {
    constexpr Scalar kFloor = Scalar(1e-14);
    constexpr int kMaxEvals = 60;
    const Scalar c1 = Scalar(cfg.wolfe_c1);
    const Scalar c2 = Scalar(cfg.wolfe_c2);

    LineSearchResult<Scalar> res;

    struct Sample {
        Scalar a, phi, dphi;
        bool feasible;
        EvalPoint<Scalar> pt;
    };
    const auto probe = [&](Scalar a) {
        Sample s;
        s.a = a;
        s.pt = eval(DenseVector<Scalar>(theta + a * d));
        s.feasible = s.pt.feasible;
        s.phi = s.pt.J;
        s.dphi = s.feasible ? s.pt.grad.dot(d) : Scalar(0);
        if (!s.feasible) {
            res.saw_infeasible = true;
        }
        return s;
    };
    const auto wolfe_ok = [&](const Sample& s) {
        return s.feasible && s.phi <= phi0 + c1 * s.a * dphi0 && std::abs(s.dphi) <= -c2 * dphi0;
    };

    int evals = 0;

    // Zoom phase: maintain a bracket [lo, hi] (lo has the lower phi and
    // satisfies sufficient decrease) and shrink it by cubic interpolation.
    const auto zoom = [&](Sample lo, Sample hi) {
        while (evals < kMaxEvals) {
            const Scalar width = std::abs(hi.a - lo.a);
            if (width < kFloor) {
                return;  // bracket collapsed to the shrink floor
            }
            Scalar a;
            if (lo.feasible && hi.feasible) {
                // Cubic interpolation through (lo, hi); fall back to bisection
                // when the cubic degenerates or lands outside the bracket.
                const Scalar d1 =
                    lo.dphi + hi.dphi - Scalar(3) * (lo.phi - hi.phi) / (lo.a - hi.a);
                const Scalar disc = d1 * d1 - lo.dphi * hi.dphi;
                if (disc >= Scalar(0)) {
                    const Scalar d2 = std::copysign(std::sqrt(disc), hi.a - lo.a);
                    a = hi.a - (hi.a - lo.a) * (hi.dphi + d2 - d1) /
                                   (hi.dphi - lo.dphi + Scalar(2) * d2);
                } else {
                    a = (lo.a + hi.a) / Scalar(2);
                }
                const Scalar lo_a = std::min(lo.a, hi.a), hi_a = std::max(lo.a, hi.a);
                const Scalar margin = Scalar(0.05) * width;
                if (!(a > lo_a + margin && a < hi_a - margin)) {
                    a = (lo.a + hi.a) / Scalar(2);
                }
            } else {
                a = (lo.a + hi.a) / Scalar(2);
            }

            Sample s = probe(a);
            ++evals;
            if (wolfe_ok(s)) {
                res.success = true;
                res.alpha = s.a;
                res.point = s.pt;
                return;
            }
            if (!s.feasible || s.phi > phi0 + c1 * s.a * dphi0 || s.phi >= lo.phi) {
                hi = s;
            } else {
                if (s.dphi * (hi.a - lo.a) >= Scalar(0)) {
                    hi = lo;
                }
                lo = s;
            }
        }
    };

    // Bracketing phase.
    Sample prev{Scalar(0), phi0, dphi0, true, {}};
    Scalar a = Scalar(cfg.step_init);
    for (; evals < kMaxEvals && !res.success;) {
        Sample s = probe(a);
        ++evals;
        if (!s.feasible || s.phi > phi0 + c1 * a * dphi0 || (s.phi >= prev.phi && prev.a > 0)) {
            zoom(prev, s);
            return res;
        }
        if (wolfe_ok(s)) {
            res.success = true;
            res.alpha = s.a;
            res.point = s.pt;
            return res;
        }
        if (s.dphi >= Scalar(0)) {
            zoom(s, prev);
            return res;
        }
        prev = s;
        a *= Scalar(2);
        if (a > Scalar(1e12)) {
            break;  // direction looks like a descent ray; give up
        }
    }
    return res;
}

}  // namespace detail

/// Minimizes the squared H2 error over [0, tau] with respect to the reduced
/// matrices, starting from `init`, using BFGS with a strong Wolfe line search
/// and the closed-form gradients. Returns the best iterate encountered, so
/// the final cost never exceeds the initializer's.
template <typename Scalar>
OptimizationReport<Scalar> tl_h2opt(const StateSpace<Scalar>& full, const Horizon<Scalar>& h,
                                    const StateSpace<Scalar>& init,
                                    const OptimizerConfig& cfg = {}) {
    cfg.validate();
    if (init.inputs() != full.inputs() || init.outputs() != full.outputs()) {
        throw DimensionMismatch("tl_h2opt: init input/output dimensions differ from full model");
    }
    const auto t_start = std::chrono::steady_clock::now();

    const Index r = init.order();
    const Index N = r * r + r * full.inputs() + full.outputs() * r;
    detail::CostOracle<Scalar> oracle(full, h, r);

    DenseVector<Scalar> theta = pack(init);
    detail::EvalPoint<Scalar> cur = oracle(theta);
    if (!cur.feasible) {
        throw SingularPencil("tl_h2opt: cost/gradient not computable at the initializer");
    }

    OptimizationReport<Scalar> report;
    DenseVector<Scalar> theta_best = theta;
    Scalar J_best = cur.J;
    DenseVector<Scalar> grad_best = cur.grad;
    report.j_trace.push_back(cur.J);
    report.grad_trace.push_back(cur.grad.template lpNorm<Eigen::Infinity>());
    report.reason = Termination::MaxIterations;

    DenseMatrix<Scalar> H = DenseMatrix<Scalar>::Identity(N, N);
    bool scale_h0 = true;

    int iter = 0;
    while (true) {
        const Scalar gnorm = cur.grad.template lpNorm<Eigen::Infinity>();
        if (gnorm < Scalar(cfg.grad_tol) * (Scalar(1) + std::abs(cur.J))) {
            report.reason = Termination::Gradient;
            break;
        }
        if (iter >= cfg.max_iter) {
            report.reason = Termination::MaxIterations;
            break;
        }
        ++iter;

        DenseVector<Scalar> d = -(H * cur.grad);
        Scalar dphi0 = cur.grad.dot(d);
        if (!(dphi0 < Scalar(0))) {
            H.setIdentity();
            scale_h0 = true;
            d = -cur.grad;
            dphi0 = cur.grad.dot(d);
        }

        const auto ls = detail::wolfe_line_search<Scalar>(oracle, theta, d, cur.J, dphi0, cfg);
        if (!ls.success) {
            report.reason = ls.saw_infeasible ? Termination::SingularPencil
                                              : Termination::LineSearchFailed;
            break;
        }

        const DenseVector<Scalar> s = ls.alpha * d;
        const DenseVector<Scalar> y = ls.point.grad - cur.grad;
        theta += s;
        cur = ls.point;

        report.j_trace.push_back(cur.J);
        report.grad_trace.push_back(cur.grad.template lpNorm<Eigen::Infinity>());
        if (cur.J < J_best) {
            J_best = cur.J;
            theta_best = theta;
            grad_best = cur.grad;
        }

        const Scalar sy = s.dot(y);
        if (sy > Scalar(1e-10) * s.norm() * y.norm()) {
            if (scale_h0) {
                H = (sy / y.squaredNorm()) * DenseMatrix<Scalar>::Identity(N, N);
                scale_h0 = false;
            }
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            const Scalar rho = Scalar(1) / sy;
            const DenseVector<Scalar> Hy = H * y;
            const Scalar yHy = y.dot(Hy);
            H.noalias() -= rho * (Hy * s.transpose() + s * Hy.transpose());
            H.noalias() += (rho * rho * yHy + rho) * (s * s.transpose());
            H = symmetrized(H);
        }
        // else: curvature condition failed numerically; keep the previous H
    }

    report.iterations = iter;
    report.model = unpack(theta_best, r, full.inputs(), full.outputs());
    report.J = J_best;
    report.grad_norm_inf = grad_best.template lpNorm<Eigen::Infinity>();
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return report;
}

}  // namespace mortl
