#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "mortl/optimizer.hpp"
#include "mortl/reducers.hpp"
#include "oracles.hpp"

using Mat = mortl::DenseMatrix<double>;
using Model = mortl::StateSpace<double>;
using Hz = mortl::Horizon<double>;
using mortl::Index;

namespace {

Model random_model(Index n, Index m, Index p, std::mt19937_64& rng) {
    return Model(oracles::random_stable_matrix(n, rng), oracles::random_matrix(n, m, rng),
                 oracles::random_matrix(p, n, rng));
}

double error_cost(const Model& full, const Model& red, const Hz& h) {
    return mortl::cost(full, red, mortl::assemble_workspace(full, red, h));
}

double grad_norm(const Model& full, const Model& red, const Hz& h) {
    const auto ws = mortl::assemble_workspace(full, red, h);
    return mortl::pack(mortl::gradients(full, red, h, ws)).lpNorm<Eigen::Infinity>();
}

}  // namespace

TEST_CASE("full-order balanced truncation is a similarity transform") {
    std::mt19937_64 rng(51);
    const Model full = random_model(4, 2, 2, rng);
    const Hz h(1.0);
    const auto [red, proj] = mortl::tl_bt(full, h, 4);

    CHECK((proj.W.transpose() * proj.V - Mat::Identity(4, 4)).norm() <= 1e-10);
    CHECK(error_cost(full, red, h) < 1e-10);
}

TEST_CASE("balancing makes the reduced gramians equal and diagonal at full order") {
    std::mt19937_64 rng(52);
    const Model full = random_model(4, 2, 1, rng);
    const Hz h(0.8);
    const auto [red, proj] = mortl::tl_bt(full, h, 4);

    // Time-limited singular values from an independent route: the square
    // roots of the eigenvalues of P_tau Q_tau.
    const auto g = mortl::time_limited_gramians(full, h);
    Eigen::EigenSolver<Mat> es(Mat(g.P_tau * g.Q_tau));
    std::vector<double> sv;
    for (Index i = 0; i < 4; ++i) {
        sv.push_back(std::sqrt(std::max(0.0, es.eigenvalues()(i).real())));
    }
    std::sort(sv.begin(), sv.end(), std::greater<>());

    const Mat P_red = mortl::controllability_gramian_tl(red, h);
    const Mat Q_red = mortl::observability_gramian_tl(red, h);
    Mat sigma = Mat::Zero(4, 4);
    for (Index i = 0; i < 4; ++i) {
        sigma(i, i) = sv[static_cast<size_t>(i)];
    }
    CHECK((P_red - sigma).norm() <= 1e-8 * (1.0 + sigma.norm()));
    CHECK((Q_red - sigma).norm() <= 1e-8 * (1.0 + sigma.norm()));
}

TEST_CASE("symmetric two-state system balances along the gramian eigenvectors") {
    // A symmetric with C = B^T makes P_tau = Q_tau, so the dominant balanced
    // direction is the leading eigenvector of P_tau; r = 1 truncation must
    // project onto it.
    Mat A = Mat::Zero(2, 2);
    A.diagonal() << -1.0, -2.0;
    Mat B(2, 1);
    B << 1.0, 0.7;
    const Model full(A, B, Mat(B.transpose()));
    const Hz h(1.0);

    const auto g = mortl::time_limited_gramians(full, h);
    CHECK((g.P_tau - g.Q_tau).norm() <= 1e-12 * g.P_tau.norm());

    Eigen::SelfAdjointEigenSolver<Mat> es(g.P_tau);
    const Mat v1 = es.eigenvectors().col(1);  // ascending order: col 1 is dominant

    const auto [red, proj] = mortl::tl_bt(full, h, 1);
    const double a_expected = (v1.transpose() * A * v1)(0, 0);
    const double bc_expected = (v1.transpose() * B)(0, 0) * (B.transpose() * v1)(0, 0);
    CHECK(red.A(0, 0) == doctest::Approx(a_expected).epsilon(1e-10));
    CHECK(red.B(0, 0) * red.C(0, 0) == doctest::Approx(bc_expected).epsilon(1e-10));
    CHECK(std::abs(red.B(0, 0)) ==
          doctest::Approx(std::abs((v1.transpose() * B)(0, 0))).epsilon(1e-10));
}

TEST_CASE("requesting more states than the gramian rank supports throws") {
    Mat A = Mat::Zero(2, 2);
    A.diagonal() << -1.0, -2.0;
    Mat B(2, 1), C(1, 2);
    B << 1.0, 0.0;  // second state is unreachable and unobservable
    C << 1.0, 0.0;
    const Model full(A, B, C);
    CHECK_THROWS_AS(mortl::tl_bt(full, Hz(1.0), 2), mortl::RankDeficient);
}

TEST_CASE("balanced truncation is invariant under similarity of the full model") {
    std::mt19937_64 rng(53);
    const Model full = random_model(5, 1, 1, rng);
    const Hz h(1.0);

    const Mat T = oracles::random_well_conditioned(5, rng);
    const Mat Tinv = T.inverse();
    const Model transformed(Tinv * full.A * T, Tinv * full.B, full.C * T);

    const auto [red1, p1] = mortl::tl_bt(full, h, 2);
    const auto [red2, p2] = mortl::tl_bt(transformed, h, 2);

    CHECK(error_cost(full, red1, h) ==
          doctest::Approx(error_cost(transformed, red2, h)).epsilon(1e-8));
    for (const double w : {0.0, 0.5, 2.0}) {
        const auto H1 = mortl::tl_transfer_function(red1, h, {0.1, w});
        const auto H2 = mortl::tl_transfer_function(red2, h, {0.1, w});
        CHECK((H1 - H2).norm() <= 1e-8 * (1.0 + H1.norm()));
    }
}

TEST_CASE("two-sided iteration keeps a stationary point fixed") {
    // Decoupled symmetric system: reduction onto the first mode, scaled so the
    // oblique bases reproduce the reduced matrices exactly.
    Mat A = Mat::Zero(2, 2);
    A.diagonal() << -1.0, -2.0;
    const Model full(A, Mat(Mat::Identity(2, 2)), Mat(Mat::Identity(2, 2)));
    const Hz h(1.0);

    // With V's columns normalized to unit length and positive pivot sign, the
    // first decoupled mode reproduces itself exactly: V = e_1, W^T = e_1^T.
    Mat Ar(1, 1), Br(1, 2), Cr(2, 1);
    Ar << -1.0;
    Br << 1.0, 0.0;
    Cr << 1.0, 0.0;
    const Model init(Ar, Br, Cr);

    const auto res = mortl::tl_tsia(full, h, 1, init, 3, 0.0);
    CHECK(res.trace.size() == 3);
    for (size_t k = 1; k < res.trace.size(); ++k) {
        CHECK(res.trace[k].change < 1e-10);
    }
    CHECK((res.model.A - init.A).norm() < 1e-10);
    CHECK((res.model.B - init.B).norm() < 1e-10);
    CHECK((res.model.C - init.C).norm() < 1e-10);
}

TEST_CASE("two-sided iteration with a zero iteration budget returns the init verbatim") {
    std::mt19937_64 rng(54);
    const Model full = random_model(5, 1, 1, rng);
    const Model init = random_model(2, 1, 1, rng);
    const auto res = mortl::tl_tsia(full, Hz(1.0), 2, init, 0);
    CHECK((res.model.A - init.A).norm() == 0.0);
    CHECK((res.model.B - init.B).norm() == 0.0);
    CHECK((res.model.C - init.C).norm() == 0.0);
    CHECK(res.trace.empty());
}

TEST_CASE("two-sided iteration never returns worse than the best iterate") {
    std::mt19937_64 rng(55);
    const Model full = random_model(6, 2, 2, rng);
    const Hz h(1.0);
    const auto init = mortl::tl_bt(full, h, 2).first;
    const auto res = mortl::tl_tsia(full, h, 2, init, 40);

    double best = error_cost(full, init, h);
    for (const auto& it : res.trace) {
        best = std::min(best, it.J);
    }
    CHECK(error_cost(full, res.model, h) <= best * (1.0 + 1e-9) + 1e-12);
}

TEST_CASE("two-sided iteration usually shrinks the gradient norm") {
    // Diverged runs throw and are excluded, matching the sweep protocol of
    // marking rather than scoring them.
    int improved = 0, completed = 0;
    for (int t = 0; t < 20; ++t) {
        std::mt19937_64 rng(600 + t);
        const Model full = random_model(6, 1, 1, rng);
        const Hz h(1.0);
        const Model init(oracles::random_stable_matrix(2, rng, -0.8),
                         oracles::random_matrix(2, 1, rng), oracles::random_matrix(1, 2, rng));
        try {
            const auto res = mortl::tl_tsia(full, h, 2, init, 100, 1e-11);
            ++completed;
            if (grad_norm(full, res.model, h) <= grad_norm(full, init, h) * (1.0 + 1e-9)) {
                ++improved;
            }
        } catch (const mortl::IterationDiverged&) {
        }
    }
    CHECK(completed >= 15);
    CHECK(improved * 10 >= completed * 9);
}

TEST_CASE("two-sided iteration rejects an uncoupled initializer") {
    std::mt19937_64 rng(56);
    const Model full = random_model(4, 1, 1, rng);
    const Model init(Mat((-1.0) * Mat::Identity(2, 2)), Mat(Mat::Zero(2, 1)),
                     Mat(Mat::Zero(1, 2)));
    CHECK_THROWS_AS(mortl::tl_tsia(full, Hz(1.0), 2, init, 5), mortl::NormalizationSingular);
}
