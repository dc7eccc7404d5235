#pragma once

#include <json.hpp>

#include <chrono>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mortl/error_system.hpp"
#include "mortl/model_io.hpp"
#include "mortl/optimizer.hpp"
#include "mortl/reducers.hpp"
#include "mortl/types.hpp"

namespace mortl {

enum class Method { TlBt, TlTsia, TlH2Opt };

inline std::optional<Method> parse_method(const std::string& s) {
    if (s == "tl-bt") return Method::TlBt;
    if (s == "tl-tsia") return Method::TlTsia;
    if (s == "tl-h2opt") return Method::TlH2Opt;
    return std::nullopt;
}

inline const char* to_string(Method m) {
    switch (m) {
        case Method::TlBt: return "tl-bt";
        case Method::TlTsia: return "tl-tsia";
        case Method::TlH2Opt: return "tl-h2opt";
    }
    return "unknown";
}

/// Everything a run needs beyond the model itself; serialized into every
/// report for provenance.
struct HarnessConfig {
    OptimizerConfig opt;
    int tsia_max_iter = 100;
    double tsia_tol = 1e-9;
    int verify_trials = 50;
    Index sim_steps = 2000;
    double verify_grad_tol = 1e-6;
    std::uint64_t seed = kDefaultSeed;

    static HarnessConfig from_json(const nlohmann::json& j) {
        HarnessConfig c;
        c.opt.grad_tol = j.value("grad_tol", c.opt.grad_tol);
        c.opt.max_iter = j.value("max_iter", c.opt.max_iter);
        c.opt.wolfe_c1 = j.value("wolfe_c1", c.opt.wolfe_c1);
        c.opt.wolfe_c2 = j.value("wolfe_c2", c.opt.wolfe_c2);
        c.opt.step_init = j.value("step_init", c.opt.step_init);
        c.tsia_max_iter = j.value("tsia_max_iter", c.tsia_max_iter);
        c.tsia_tol = j.value("tsia_tol", c.tsia_tol);
        c.verify_trials = j.value("verify_trials", c.verify_trials);
        c.sim_steps = j.value("sim_steps", c.sim_steps);
        c.verify_grad_tol = j.value("verify_grad_tol", c.verify_grad_tol);
        c.seed = j.value("seed", c.seed);
        return c;
    }

    nlohmann::json to_json(double tau) const {
        nlohmann::json j;
        j["tau"] = tau;
        j["grad_tol"] = opt.grad_tol;
        j["max_iter"] = opt.max_iter;
        j["wolfe_c1"] = opt.wolfe_c1;
        j["wolfe_c2"] = opt.wolfe_c2;
        j["step_init"] = opt.step_init;
        j["tsia_max_iter"] = tsia_max_iter;
        j["tsia_tol"] = tsia_tol;
        j["verify_trials"] = verify_trials;
        j["sim_steps"] = sim_steps;
        j["verify_grad_tol"] = verify_grad_tol;
        j["seed"] = seed;
        return j;
    }
};

/// Percentage improvement of the optimized error over the initializer's.
inline double delta_err_pct(double err_init, double err_opt) {
    return 100.0 * (err_init - err_opt) / err_init;
}

struct ReductionOutcome {
    StateSpace<double> reduced;
    std::string method;
    double tau = 0;
    Index r = 0;
    double err = 0;                        // H2 error over [0, tau] of `reduced`
    double grad_norm = 0;                  // max-norm of the gradient at `reduced`
    std::optional<double> err_init;        // initializer error (tl-h2opt only)
    std::optional<double> delta_pct;       // improvement over the initializer
    int iterations = 0;
    std::string termination;
    std::vector<double> j_trace;
    std::vector<double> grad_trace;
    double wall_seconds = 0;
};

/// Runs one reduction. `init_method` is required for tl-h2opt and also picks
/// the initializer of tl-tsia (default tl-bt).
inline ReductionOutcome run_reduction(const StateSpace<double>& full, double tau, Index r,
                                      Method method, std::optional<Method> init_method,
                                      const HarnessConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    const Horizon<double> h(tau);

    ReductionOutcome out;
    out.method = to_string(method);
    out.tau = tau;
    out.r = r;

    const auto error_of = [&](const StateSpace<double>& red) {
        return std::sqrt(std::max(0.0, cost(full, red, assemble_workspace(full, red, h))));
    };
    const auto grad_norm_of = [&](const StateSpace<double>& red) {
        const auto ws = assemble_workspace(full, red, h);
        return pack(gradients(full, red, h, ws)).lpNorm<Eigen::Infinity>();
    };

    const auto make_init = [&](Method im) -> StateSpace<double> {
        if (im == Method::TlBt) {
            return tl_bt(full, h, r).first;
        }
        if (im == Method::TlTsia) {
            const auto bt = tl_bt(full, h, r).first;
            return tl_tsia(full, h, r, bt, cfg.tsia_max_iter, cfg.tsia_tol).model;
        }
        throw std::invalid_argument("init method must be tl-bt or tl-tsia");
    };

    switch (method) {
        case Method::TlBt: {
            out.reduced = tl_bt(full, h, r).first;
            out.iterations = 0;
            out.termination = "direct";
            break;
        }
        case Method::TlTsia: {
            const auto init = make_init(init_method.value_or(Method::TlBt));
            auto res = tl_tsia(full, h, r, init, cfg.tsia_max_iter, cfg.tsia_tol);
            out.reduced = res.model;
            out.iterations = static_cast<int>(res.trace.size());
            out.termination = res.converged ? "converged" : "max_iterations";
            for (const auto& it : res.trace) {
                out.j_trace.push_back(it.J);
            }
            break;
        }
        case Method::TlH2Opt: {
            if (!init_method) {
                throw std::invalid_argument("tl-h2opt requires an init method");
            }
            const auto init = make_init(*init_method);
            out.err_init = error_of(init);
            auto rep = tl_h2opt(full, h, init, cfg.opt);
            out.reduced = rep.model;
            out.iterations = rep.iterations;
            out.termination = to_string(rep.reason);
            out.j_trace.assign(rep.j_trace.begin(), rep.j_trace.end());
            out.grad_trace.assign(rep.grad_trace.begin(), rep.grad_trace.end());
            break;
        }
    }

    out.err = error_of(out.reduced);
    out.grad_norm = grad_norm_of(out.reduced);
    if (out.err_init && *out.err_init > 0) {
        out.delta_pct = delta_err_pct(*out.err_init, out.err);
    }
    out.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return out;
}

inline nlohmann::json reduction_report_json(const ReductionOutcome& out,
                                            const HarnessConfig& cfg) {
    nlohmann::json j;
    j["method"] = out.method;
    j["tau"] = out.tau;
    j["order"] = out.r;
    j["h2tau_error"] = out.err;
    j["grad_norm_inf"] = out.grad_norm;
    if (out.err_init) j["h2tau_error_init"] = *out.err_init;
    if (out.delta_pct) j["delta_err_pct"] = *out.delta_pct;
    j["iterations"] = out.iterations;
    j["termination"] = out.termination;
    j["j_trace"] = out.j_trace;
    j["grad_trace"] = out.grad_trace;
    j["wall_seconds"] = out.wall_seconds;
    j["config"] = cfg.to_json(out.tau);
    return j;
}

// ----------------------------------------------------------------------------
// Order sweep
// ----------------------------------------------------------------------------

struct BenchmarkRow {
    Index r = 0;
    std::optional<double> err_init;   // empty <-> the initializer diverged
    std::optional<double> err_opt;
    std::optional<double> delta_pct;
    int iterations = 0;
    double seconds = 0;
};

/// One row per order: initializer error vs optimized error. Rows where the
/// initializer fails are marked diverged and the sweep continues.
inline std::vector<BenchmarkRow> run_sweep(const StateSpace<double>& full, double tau,
                                           Index r_min, Index r_max, Index step,
                                           Method init_method, const HarnessConfig& cfg) {
    if (step < 1 || r_min < 1 || r_min > r_max || r_max >= full.order()) {
        throw std::invalid_argument("run_sweep: need 1 <= r_min <= r_max < n and step >= 1");
    }
    std::vector<BenchmarkRow> rows;
    for (Index r = r_min; r <= r_max; r += step) {
        BenchmarkRow row;
        row.r = r;
        const auto t_start = std::chrono::steady_clock::now();
        try {
            const auto out = run_reduction(full, tau, r, Method::TlH2Opt, init_method, cfg);
            row.err_init = out.err_init;
            row.err_opt = out.err;
            row.delta_pct = out.delta_pct;
            row.iterations = out.iterations;
        } catch (const Error&) {
            // diverged initializer or infeasible solve; row stays empty
        }
        row.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        rows.push_back(row);
    }
    return rows;
}

/// CSV with fixed columns r, err_init, err_opt, delta_err_pct, iters, seconds;
/// '.' decimal separator, LF line endings. Failed rows carry "diverged".
inline void write_sweep_csv(const std::vector<BenchmarkRow>& rows, std::ostream& os) {
    char buf[64];
    const auto num = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.12g", v);
        return std::string(buf);
    };
    os << "r,err_init,err_opt,delta_err_pct,iters,seconds\n";
    for (const auto& row : rows) {
        os << row.r << ",";
        if (row.err_init) {
            os << num(*row.err_init) << "," << num(row.err_opt.value_or(0.0)) << ","
               << num(row.delta_pct.value_or(0.0)) << ",";
        } else {
            os << "diverged,,,";
        }
        std::snprintf(buf, sizeof(buf), "%.3f", row.seconds);
        os << row.iterations << "," << buf << "\n";
    }
}

}  // namespace mortl
