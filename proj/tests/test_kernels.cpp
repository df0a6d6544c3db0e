#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "krilc/kernels.hpp"

using namespace krilc;

namespace {

Vec eta2(double c, double alpha) {
    Vec eta(2);
    eta << c, alpha;
    return eta;
}

Vec eta3(double c, double alpha, double beta) {
    Vec eta(3);
    eta << c, alpha, beta;
    return eta;
}

}  // namespace

TEST_CASE("DI kernel is the scaled decay diagonal") {
    const KernelMatrix p = build_kernel({KernelFamily::DI, 3, eta2(2.0, 0.5)});
    CHECK(p.values(0, 0) == doctest::Approx(1.0));
    CHECK(p.values(1, 1) == doctest::Approx(0.5));
    CHECK(p.values(2, 2) == doctest::Approx(0.25));
    CHECK(p.values(0, 1) == 0.0);
    CHECK(p.values(2, 0) == 0.0);
}

TEST_CASE("TC kernel entries follow c alpha^max(k,l)") {
    const KernelMatrix p = build_kernel({KernelFamily::TC, 2, eta2(1.0, 0.5)});
    CHECK(p.values(0, 0) == doctest::Approx(0.5));
    CHECK(p.values(0, 1) == doctest::Approx(0.25));
    CHECK(p.values(1, 0) == doctest::Approx(0.25));
    CHECK(p.values(1, 1) == doctest::Approx(0.25));
}

TEST_CASE("DC kernel with beta = 1 collapses to alpha^((k+l)/2)") {
    const KernelMatrix p = build_kernel({KernelFamily::DC, 2, eta3(1.0, 0.25, 1.0)});
    CHECK(p.values(0, 0) == doctest::Approx(0.25));
    CHECK(p.values(0, 1) == doctest::Approx(0.125));
    CHECK(p.values(1, 0) == doctest::Approx(0.125));
    CHECK(p.values(1, 1) == doctest::Approx(0.0625));
}

TEST_CASE("DC reductions: beta = sqrt(alpha) gives TC, beta = 0 gives DI") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const double c = 10.0 * unif(rng);
        const double alpha = 0.999 * unif(rng);
        const Index n = 1 + static_cast<Index>(unif(rng) * 10);
        const Mat dc_tc = build_kernel({KernelFamily::DC, n, eta3(c, alpha, std::sqrt(alpha))}).values;
        const Mat tc = build_kernel({KernelFamily::TC, n, eta2(c, alpha)}).values;
        CHECK((dc_tc - tc).cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, tc.cwiseAbs().maxCoeff()));
        const Mat dc_di = build_kernel({KernelFamily::DC, n, eta3(c, alpha, 0.0)}).values;
        const Mat di = build_kernel({KernelFamily::DI, n, eta2(c, alpha)}).values;
        CHECK((dc_di - di).cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, di.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("domain violations are rejected with the offending bound named") {
    CHECK_THROWS_AS(build_kernel({KernelFamily::DI, 3, eta2(-1.0, 0.5)}), DomainError);
    CHECK_THROWS_AS(build_kernel({KernelFamily::DI, 3, eta2(1.0, 1.0)}), DomainError);
    CHECK_THROWS_AS(build_kernel({KernelFamily::DC, 3, eta3(1.0, 0.5, 1.5)}), DomainError);
    CHECK_THROWS_AS(build_kernel({KernelFamily::DI, 0, eta2(1.0, 0.5)}), DomainError);
    CHECK_THROWS_WITH_AS(build_kernel({KernelFamily::DI, 3, eta2(1.0, -0.1)}),
                         doctest::Contains("alpha"), DomainError);
}

TEST_CASE("boundary members of the domain are valid") {
    CHECK_NOTHROW(build_kernel({KernelFamily::DI, 4, eta2(0.0, 0.5)}));
    CHECK_NOTHROW(build_kernel({KernelFamily::TC, 4, eta2(1.0, 0.0)}));
    CHECK_NOTHROW(build_kernel({KernelFamily::DC, 4, eta3(1.0, 0.0, -1.0)}));
}

TEST_CASE("block-diagonal model kernel keeps the input block leading") {
    const KernelMatrix pb1 = KernelMatrix{Mat::Identity(1, 1), std::nullopt};
    const KernelMatrix pa1 = KernelMatrix{2.0 * Mat::Identity(1, 1), std::nullopt};
    const KernelMatrix d = block_diag_model_kernel(pb1, pa1);
    CHECK(d.values(0, 0) == 1.0);
    CHECK(d.values(1, 1) == 2.0);
    CHECK(d.values(0, 1) == 0.0);

    const KernelMatrix i2 = KernelMatrix{Mat::Identity(2, 2), std::nullopt};
    CHECK(block_diag_model_kernel(i2, i2).values.isApprox(Mat::Identity(4, 4)));

    const KernelMatrix tc = build_kernel({KernelFamily::TC, 2, eta2(1.0, 0.5)});
    const KernelMatrix di = build_kernel({KernelFamily::DI, 1, eta2(1.0, 0.5)});
    const Mat expected = (Mat(3, 3) << 0.5, 0.25, 0.0, 0.25, 0.25, 0.0, 0.0, 0.0, 0.5).finished();
    CHECK(block_diag_model_kernel(tc, di).values.isApprox(expected, 1e-15));
}

TEST_CASE("random domain draws produce symmetric PSD matrices") {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const KernelFamily family =
            trial % 3 == 0 ? KernelFamily::DC : (trial % 3 == 1 ? KernelFamily::TC : KernelFamily::DI);
        const Index n = 1 + static_cast<Index>(unif(rng) * 12);
        Vec eta(kernel_param_count(family));
        eta[0] = 100.0 * unif(rng);
        eta[1] = 0.999999 * unif(rng);
        if (family == KernelFamily::DC) eta[2] = 2.0 * unif(rng) - 1.0;
        const Mat p = build_kernel({family, n, eta}).values;

        const double scale = std::max(1.0, p.cwiseAbs().maxCoeff());
        CHECK((p - p.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale);
        Eigen::SelfAdjointEigenSolver<Mat> eig(p);
        const double lmax = eig.eigenvalues().cwiseAbs().maxCoeff();
        CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * std::max(lmax, 1e-300));
    }
}

TEST_CASE("diagonal entries decay along k when alpha < 1") {
    for (const KernelFamily family : {KernelFamily::DC, KernelFamily::TC, KernelFamily::DI}) {
        Vec eta(kernel_param_count(family));
        eta[0] = 3.0;
        eta[1] = 0.7;
        if (family == KernelFamily::DC) eta[2] = 0.4;
        const Mat p = build_kernel({family, 8, eta}).values;
        for (Index k = 1; k < 8; ++k) CHECK(p(k, k) <= p(k - 1, k - 1) + 1e-15);
    }
}

TEST_CASE("psd factor reproduces the kernel and detects diagonality") {
    const Mat di = build_kernel({KernelFamily::DI, 6, eta2(2.0, 0.6)}).values;
    const PsdFactor f_di = psd_sqrt_factor(di);
    CHECK(f_di.is_diagonal);
    CHECK((f_di.L * f_di.L.transpose() - di).cwiseAbs().maxCoeff() <= 1e-14);

    const Mat dc = build_kernel({KernelFamily::DC, 6, eta3(2.0, 0.6, 0.3)}).values;
    const PsdFactor f_dc = psd_sqrt_factor(dc);
    CHECK(!f_dc.is_diagonal);
    CHECK((f_dc.L * f_dc.L.transpose() - dc).cwiseAbs().maxCoeff() <= 1e-12);

    // Boundary kernels factor to zero without inverting anything.
    const Mat zero = build_kernel({KernelFamily::DI, 4, eta2(0.0, 0.5)}).values;
    CHECK(psd_sqrt_factor(zero).L.cwiseAbs().maxCoeff() == 0.0);
}
