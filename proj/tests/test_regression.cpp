#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "krilc/regression.hpp"

using namespace krilc;

namespace {

Mat random_matrix(std::mt19937_64& rng, Index rows, Index cols) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Mat m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
    return m;
}

Vec random_vector(std::mt19937_64& rng, Index n) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec v(n);
    for (Index i = 0; i < n; ++i) v[i] = normal(rng);
    return v;
}

KernelMatrix identity_kernel(Index n, double scale = 1.0) {
    return KernelMatrix{scale * Mat::Identity(n, n), std::nullopt};
}

}  // namespace

TEST_CASE("identity problem halves the observations") {
    RegressionProblem prob{Vec(2), Mat::Identity(2, 2), 1.0, identity_kernel(2)};
    prob.y << 1.0, 2.0;
    const RlsSolution sol = rls_solve(prob);
    CHECK(sol.theta_hat[0] == doctest::Approx(0.5));
    CHECK(sol.theta_hat[1] == doctest::Approx(1.0));
    CHECK(sol.hat_matrix_trace == doctest::Approx(1.0));
    CHECK(sol.residual_norm2 == doctest::Approx(1.25));
}

TEST_CASE("weak regularization converges to least squares") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const Mat phi = random_matrix(rng, 20, 5);
        const Vec y = random_vector(rng, 20);
        RegressionProblem prob{y, phi, 1.0, identity_kernel(5, 1e12)};
        const Vec theta_rls = rls_solve(prob).theta_hat;
        // Oracle: direct normal-equation least squares.
        const Vec theta_ls = (phi.transpose() * phi).ldlt().solve(phi.transpose() * y);
        CHECK((theta_rls - theta_ls).norm() <= 1e-6 * theta_ls.norm());
    }
}

TEST_CASE("empty data returns the regularizer's minimizer") {
    RegressionProblem prob{Vec(0), Mat(0, 3), 1.0, identity_kernel(3)};
    const RlsSolution sol = rls_solve(prob);
    CHECK(sol.theta_hat.isZero());
    CHECK(sol.hat_matrix_trace == 0.0);
    CHECK(sol.residual_norm2 == 0.0);
}

TEST_CASE("inverse-free solution matches the literal dual form") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        const Index n_obs = 8, n = 5;
        const Mat phi = random_matrix(rng, n_obs, n);
        const Vec y = random_vector(rng, n_obs);
        Vec eta(2);
        eta << 1.5, (trial % 4 == 0 ? 0.0 : 0.8);  // includes singular kernels
        const KernelMatrix p = build_kernel({KernelFamily::DI, n, eta});
        const double sigma2 = 0.3;
        const Vec theta = rls_solve({y, phi, sigma2, p}).theta_hat;
        const Mat gram = phi * p.values * phi.transpose() + sigma2 * Mat::Identity(n_obs, n_obs);
        const Vec theta_dual = p.values * phi.transpose() * gram.ldlt().solve(y);
        CHECK((theta - theta_dual).norm() <= 1e-10 * std::max(1.0, theta_dual.norm()));
    }
}

TEST_CASE("inverse-free solution matches the normal-equation form on invertible kernels") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const Index n_obs = 12, n = 6;
        const Mat phi = random_matrix(rng, n_obs, n);
        const Vec y = random_vector(rng, n_obs);
        Vec eta(2);
        eta << 2.0, 0.9;
        const KernelMatrix p = build_kernel({KernelFamily::TC, n, eta});
        const double sigma2 = 0.5;
        const Vec theta = rls_solve({y, phi, sigma2, p}).theta_hat;
        const Mat pinv = p.values.inverse();
        const Vec theta_ne =
            (phi.transpose() * phi + sigma2 * pinv).ldlt().solve(phi.transpose() * y);
        CHECK((theta - theta_ne).norm() <= 1e-8 * std::max(1.0, theta_ne.norm()));
    }
}

TEST_CASE("hat-matrix trace stays within [0, min(N, n)]") {
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 40; ++trial) {
        const Index n_obs = 1 + static_cast<Index>(rng() % 10);
        const Index n = 1 + static_cast<Index>(rng() % 10);
        const Mat phi = random_matrix(rng, n_obs, n);
        const Vec y = random_vector(rng, n_obs);
        Vec eta(2);
        eta << 1.0, 0.7;
        const RlsSolution sol =
            rls_solve({y, phi, 0.2, build_kernel({KernelFamily::DI, n, eta})});
        CHECK(sol.hat_matrix_trace >= -1e-9);
        CHECK(sol.hat_matrix_trace <= static_cast<double>(std::min(n_obs, n)) + 1e-9);
    }
}

TEST_CASE("plain least squares") {
    Vec y2(2);
    y2 << 3.0, 4.0;
    CHECK(ls_solve(y2, Mat::Identity(2, 2)).isApprox(y2));

    Mat ones(2, 1);
    ones << 1.0, 1.0;
    Vec y(2);
    y << 1.0, 3.0;
    CHECK(ls_solve(y, ones)[0] == doctest::Approx(2.0));

    std::mt19937_64 rng(23);
    const Mat phi = random_matrix(rng, 50, 5);
    const Vec theta_star = random_vector(rng, 5);
    const Vec y_clean = phi * theta_star;
    CHECK((ls_solve(y_clean, phi) - theta_star).norm() <= 1e-10);

    Mat rank_deficient(4, 2);
    rank_deficient << 1, 1, 2, 2, 3, 3, 4, 4;
    CHECK_THROWS_AS(ls_solve(Vec::Ones(4), rank_deficient), SingularError);
}

TEST_CASE("risk objective on the identity example") {
    RegressionProblem prob{Vec(2), Mat::Identity(2, 2), 1.0, identity_kernel(2)};
    prob.y << 1.0, 2.0;
    CHECK(sure_objective(prob) == doctest::Approx(3.25));

    RegressionProblem empty{Vec(0), Mat(0, 2), 1.0, identity_kernel(2)};
    CHECK(sure_objective(empty) == 0.0);

    RegressionProblem zero_y{Vec::Zero(3), Mat::Identity(3, 3), 0.5, identity_kernel(3)};
    const RlsSolution sol = rls_solve(zero_y);
    CHECK(sol.theta_hat.isZero());
    CHECK(sure_objective(zero_y) == doctest::Approx(2.0 * 0.5 * sol.hat_matrix_trace));
    CHECK(sure_objective(zero_y) >= 0.0);
}

TEST_CASE("risk objective is invariant under joint row permutations") {
    std::mt19937_64 rng(29);
    const Mat phi = random_matrix(rng, 10, 4);
    const Vec y = random_vector(rng, 10);
    Vec eta(2);
    eta << 1.0, 0.6;
    const KernelMatrix p = build_kernel({KernelFamily::DI, 4, eta});
    const double base = sure_objective({y, phi, 0.3, p});

    std::vector<Index> perm{9, 3, 1, 7, 0, 5, 2, 8, 6, 4};
    Mat phi_p(10, 4);
    Vec y_p(10);
    for (Index i = 0; i < 10; ++i) {
        phi_p.row(i) = phi.row(perm[i]);
        y_p[i] = y[perm[i]];
    }
    CHECK(sure_objective({y_p, phi_p, 0.3, p}) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("noise variance is recovered within a factor of three") {
    std::mt19937_64 rng(31);
    const double sigma2_true = 0.1;
    int ok = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const Index n = 20, n_obs = 100;
        const Mat phi = random_matrix(rng, n_obs, n);
        Vec eta_true(2);
        eta_true << 1.0, 0.8;
        const Mat p = build_kernel({KernelFamily::DI, n, eta_true}).values;
        Vec theta_star(n);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Index i = 0; i < n; ++i) theta_star[i] = std::sqrt(p(i, i)) * normal(rng);
        Vec y = phi * theta_star;
        for (Index i = 0; i < n_obs; ++i) y[i] += std::sqrt(sigma2_true) * normal(rng);

        SureOptions opts;
        opts.seed = 1000 + trial;
        const SureResult res = minimize_sure(y, phi, family_kernel_builder(KernelFamily::DI, n),
                                             kernel_param_domain(KernelFamily::DI), opts);
        if (res.sigma2 >= sigma2_true / 3.0 && res.sigma2 <= 3.0 * sigma2_true) ++ok;
    }
    CHECK(ok >= 40);
}

TEST_CASE("single observation still tunes without error") {
    Mat phi(1, 4);
    phi << 1.0, 0.5, 0.25, 0.125;
    Vec y(1);
    y << 2.0;
    SureOptions opts;
    opts.seed = 5;
    const SureResult res = minimize_sure(y, phi, family_kernel_builder(KernelFamily::DI, 4),
                                         kernel_param_domain(KernelFamily::DI), opts);
    CHECK(std::isfinite(res.objective));
    CHECK(res.sigma2 > 0.0);
    CHECK(res.solution.theta_hat.allFinite());
}

TEST_CASE("tuned hyper-parameters sit at a local minimum of the risk") {
    std::mt19937_64 rng(37);
    const Index n = 10, n_obs = 40;
    const Mat phi = random_matrix(rng, n_obs, n);
    Vec theta_star = Vec::Zero(n);
    theta_star.head(3) << 1.0, -0.6, 0.3;
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec y = phi * theta_star;
    for (Index i = 0; i < n_obs; ++i) y[i] += 0.1 * normal(rng);

    SureOptions opts;
    opts.seed = 7;
    const KernelBuilder builder = family_kernel_builder(KernelFamily::DI, n);
    const auto domain = kernel_param_domain(KernelFamily::DI);
    const SureResult res = minimize_sure(y, phi, builder, domain, opts);

    auto objective_at = [&](const Vec& eta) {
        return sure_objective({y, phi, res.sigma2, builder(eta)});
    };
    const double at_opt = objective_at(res.eta);
    CHECK(at_opt == doctest::Approx(res.objective).epsilon(1e-6));
    for (Index i = 0; i < res.eta.size(); ++i) {
        for (const double factor : {0.99, 1.01}) {
            Vec eta = res.eta;
            eta[i] *= factor;
            if (eta[i] < domain[i].lo || eta[i] > domain[i].hi) continue;  // box-constrained optimum
            CHECK(objective_at(eta) >= at_opt - 1e-6 * (std::abs(at_opt) + 1.0));
        }
    }
}

TEST_CASE("boundary kernels are handled by the factored path") {
    Mat phi(3, 2);
    phi << 1, 0, 0, 1, 1, 1;
    Vec y(3);
    y << 1, 2, 3;
    Vec eta(2);
    eta << 0.0, 0.5;  // zero kernel: estimate pinned to the null space
    const RlsSolution sol = rls_solve({y, phi, 0.5, build_kernel({KernelFamily::DI, 2, eta})});
    CHECK(sol.theta_hat.isZero());
    CHECK(sol.hat_matrix_trace == doctest::Approx(0.0));
}
