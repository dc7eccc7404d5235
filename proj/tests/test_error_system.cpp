#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <string>

#include "mortl/error_system.hpp"
#include "oracles.hpp"

using Mat = mortl::DenseMatrix<double>;
using Vec = mortl::DenseVector<double>;
using Model = mortl::StateSpace<double>;
using Hz = mortl::Horizon<double>;
using mortl::Index;

namespace {

Model random_model(Index n, Index m, Index p, std::mt19937_64& rng, double abscissa = -0.5) {
    return Model(oracles::random_stable_matrix(n, rng, abscissa),
                 oracles::random_matrix(n, m, rng), oracles::random_matrix(p, n, rng));
}

}  // namespace

TEST_CASE("error system blocks are laid out as blkdiag / stack / signed concat") {
    std::mt19937_64 rng(31);
    const Model full = random_model(3, 2, 2, rng);
    const Model red = random_model(2, 2, 2, rng);
    const Model err = mortl::build_error_system(full, red);

    CHECK(err.order() == 5);
    CHECK((err.A.topLeftCorner(3, 3) - full.A).norm() == 0.0);
    CHECK((err.A.bottomRightCorner(2, 2) - red.A).norm() == 0.0);
    CHECK(err.A.topRightCorner(3, 2).norm() == 0.0);
    CHECK(err.A.bottomLeftCorner(2, 3).norm() == 0.0);
    CHECK((err.B.topRows(3) - full.B).norm() == 0.0);
    CHECK((err.B.bottomRows(2) - red.B).norm() == 0.0);
    CHECK((err.C.leftCols(3) - full.C).norm() == 0.0);
    CHECK((err.C.rightCols(2) + red.C).norm() == 0.0);

    const Model mismatched(red.A, red.B, Mat(oracles::random_matrix(3, 2, rng)));
    CHECK_THROWS_AS(mortl::build_error_system(full, mismatched), mortl::DimensionMismatch);
}

TEST_CASE("error system of an exact copy has zero norm") {
    std::mt19937_64 rng(32);
    const Model full = random_model(4, 1, 2, rng);
    const Model err = mortl::build_error_system(full, full);
    const double j = mortl::h2tau_norm_squared(err, Hz(1.0));
    CHECK(j <= 1e-10 * (1.0 + mortl::h2tau_norm_squared(full, Hz(1.0))));
}

TEST_CASE("error system norm equals quadrature of the impulse response gap") {
    std::mt19937_64 rng(33);
    const Model full = random_model(5, 1, 1, rng);
    const Model red = random_model(2, 1, 1, rng);
    const double tau = 1.0;

    const Mat j_quad = oracles::integrate_matrix(
        [&](double t) {
            const Mat gap = full.C * mortl::expm(full.A, t) * full.B -
                            red.C * mortl::expm(red.A, t) * red.B;
            return Mat(gap * gap.transpose());
        },
        0.0, tau);
    const double j = mortl::h2tau_norm_squared(mortl::build_error_system(full, red), Hz(tau));
    CHECK(j == doctest::Approx(j_quad(0, 0)).epsilon(1e-8));
}

TEST_CASE("workspace of an exact copy collapses to the full-model gramians") {
    std::mt19937_64 rng(34);
    const Model full = random_model(4, 2, 1, rng);
    const Hz h(0.9);
    const auto ws = mortl::assemble_workspace(full, full, h);

    CHECK((ws.X_tau - ws.P_tau).norm() <= 1e-9 * (1.0 + ws.P_tau.norm()));
    CHECK((ws.Y_tau + ws.Q_tau).norm() <= 1e-9 * (1.0 + ws.Q_tau.norm()));
    CHECK(ws.S_tau.norm() <= 1e-9 * (1.0 + ws.Q_tau.norm()));
}

TEST_CASE("zero reduced input/output maps zero out the coupled solutions") {
    std::mt19937_64 rng(35);
    const Model full = random_model(4, 2, 2, rng);
    const Model red(oracles::random_stable_matrix(2, rng), Mat(Mat::Zero(2, 2)),
                    Mat(Mat::Zero(2, 2)));
    const auto ws = mortl::assemble_workspace(full, red, Hz(1.0));
    CHECK(ws.X_tau.norm() == 0.0);
    CHECK(ws.Y_tau.norm() == 0.0);
    CHECK(ws.P_r_tau.norm() == 0.0);
    CHECK(ws.Q_r_tau.norm() == 0.0);

    // With nothing to match, the cost is the full model's squared norm.
    const double j = mortl::cost(full, red, ws);
    CHECK(j == doctest::Approx(mortl::h2tau_norm_squared(full, Hz(1.0))).epsilon(1e-10));
}

TEST_CASE("workspace blocks equal the partitions of the monolithic error gramians") {
    std::mt19937_64 rng(36);
    const Model full = random_model(6, 2, 2, rng);
    const Model red = random_model(2, 2, 2, rng);
    const Hz h(1.0);
    const Index n = 6, r = 2;

    const auto ws = mortl::assemble_workspace(full, red, h);
    const Model err = mortl::build_error_system(full, red);
    const Mat P_e = mortl::controllability_gramian_tl(err, h);
    const Mat Q_e = mortl::observability_gramian_tl(err, h);

    const double scale = 1.0 + P_e.norm() + Q_e.norm();
    CHECK((P_e.topLeftCorner(n, n) - ws.P_tau).norm() <= 1e-8 * scale);
    CHECK((P_e.topRightCorner(n, r) - ws.X_tau).norm() <= 1e-8 * scale);
    CHECK((P_e.bottomRightCorner(r, r) - ws.P_r_tau).norm() <= 1e-8 * scale);
    CHECK((Q_e.topLeftCorner(n, n) - ws.Q_tau).norm() <= 1e-8 * scale);
    CHECK((Q_e.topRightCorner(n, r) - ws.Y_tau).norm() <= 1e-8 * scale);
    CHECK((Q_e.bottomRightCorner(r, r) - ws.Q_r_tau).norm() <= 1e-8 * scale);
}

TEST_CASE("singular pencil reports the offending equation") {
    std::mt19937_64 rng(37);
    const Model full = random_model(4, 1, 1, rng, -2.5);
    Mat Ar = Mat::Zero(2, 2);
    Ar.diagonal() << 1.0, -1.0;  // mirrored pair breaks the reduced Lyapunov solves
    const Model red(Ar, Mat(oracles::random_matrix(2, 1, rng)),
                    Mat(oracles::random_matrix(1, 2, rng)));
    try {
        mortl::assemble_workspace(full, red, Hz(1.0));
        FAIL("expected SingularPencil");
    } catch (const mortl::SingularPencil& e) {
        CHECK(std::string(e.what()).find("equation") != std::string::npos);
    }
}

TEST_CASE("the two trace forms of the cost agree on random instances") {
    std::mt19937_64 rng(38);
    for (int trial = 0; trial < 8; ++trial) {
        const Model full = random_model(5, 1 + trial % 2, 1 + (trial / 2) % 2, rng);
        const Model red = random_model(1 + trial % 3, full.inputs(), full.outputs(), rng);
        const Hz h(0.5 + 0.25 * trial);
        const auto ws = mortl::assemble_workspace(full, red, h);
        const double j = mortl::cost(full, red, ws);
        const double j_dual = mortl::cost_dual(full, red, ws);
        CHECK(std::abs(j - j_dual) <= 1e-10 * std::max(1.0, std::abs(j)));
        CHECK(j >= -1e-12);
    }
}

TEST_CASE("SISO cost matches quadrature of the impulse-response error") {
    std::mt19937_64 rng(39);
    const Model full = random_model(5, 1, 1, rng);
    const Model red = random_model(2, 1, 1, rng);
    const Hz h(1.0);
    const double j = mortl::cost(full, red, mortl::assemble_workspace(full, red, h));

    const Mat j_quad = oracles::integrate_matrix(
        [&](double t) {
            const Mat gap = full.C * mortl::expm(full.A, t) * full.B -
                            red.C * mortl::expm(red.A, t) * red.B;
            return Mat(gap * gap.transpose());
        },
        0.0, 1.0);
    CHECK(j == doctest::Approx(j_quad(0, 0)).epsilon(1e-8));
}

TEST_CASE("cost is invariant under similarity transforms of the reduced model") {
    std::mt19937_64 rng(40);
    const Model full = random_model(5, 2, 2, rng);
    const Model red = random_model(2, 2, 2, rng);
    const Hz h(1.0);
    const double j = mortl::cost(full, red, mortl::assemble_workspace(full, red, h));

    const Mat T = oracles::random_well_conditioned(2, rng);
    const Mat Tinv = T.inverse();
    const Model red2(Tinv * red.A * T, Tinv * red.B, red.C * T);
    const double j2 = mortl::cost(full, red2, mortl::assemble_workspace(full, red2, h));
    CHECK(std::abs(j - j2) <= 1e-10 * std::max(1.0, j));
}

TEST_CASE("gradients vanish at an exact copy") {
    std::mt19937_64 rng(41);
    const Model full = random_model(4, 2, 2, rng);
    const Hz h(1.0);
    const auto ws = mortl::assemble_workspace(full, full, h);
    const auto cg = mortl::gradients(full, full, h, ws);

    const double tol = 1e-9 * (1.0 + full.A.norm());
    CHECK(cg.grad_Ar.norm() < tol);
    CHECK(cg.grad_Br.norm() < tol);
    CHECK(cg.grad_Cr.norm() < tol);
}

TEST_CASE("output-map gradient formula wiring: identity P_r_tau, zero X_tau") {
    std::mt19937_64 rng(42);
    const Model full = random_model(3, 1, 2, rng);
    const Model red = random_model(2, 1, 2, rng);

    mortl::ErrorSystemWorkspace<double> ws;
    ws.X_tau = Mat::Zero(3, 2);
    ws.P_r_tau = Mat::Identity(2, 2);
    ws.Y_tau = Mat::Zero(3, 2);
    ws.Q_r_tau = Mat::Zero(2, 2);
    ws.P_r = Mat::Zero(2, 2);
    ws.X = Mat::Zero(3, 2);
    ws.S_tau = Mat::Zero(2, 2);
    ws.exp_A_tau = Mat::Identity(3, 3);
    ws.exp_Ar_tau = Mat::Identity(2, 2);
    ws.P_tau = Mat::Zero(3, 3);
    ws.Q_tau = Mat::Zero(3, 3);

    const auto cg = mortl::gradients(full, red, Hz(1.0), ws);
    CHECK((cg.grad_Cr - 2.0 * red.C).norm() < 1e-14);
}

TEST_CASE("analytic gradients match central finite differences") {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 4; ++trial) {
        Model full = random_model(6, 2, 2, rng);
        if (trial % 2 == 1) {
            full.A.diagonal().array() += 0.3;  // mildly unstable full model
        }
        const Model red = random_model(2, 2, 2, rng, -0.8);
        const Hz h(1.0);

        const auto ws = mortl::assemble_workspace(full, red, h);
        const Vec g = mortl::pack(mortl::gradients(full, red, h, ws));
        const Vec g_fd = oracles::fd_gradient(full, red, h);
        CHECK((g - g_fd).norm() <= 1e-5 * (1.0 + g.norm()));
    }
}
