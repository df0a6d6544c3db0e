#include "krilc/kernels.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace krilc {

std::string to_string(KernelFamily family) {
    switch (family) {
        case KernelFamily::DC: return "DC";
        case KernelFamily::TC: return "TC";
        case KernelFamily::DI: return "DI";
    }
    return "?";
}

KernelFamily kernel_family_from_string(const std::string& name) {
    if (name == "DC" || name == "dc") return KernelFamily::DC;
    if (name == "TC" || name == "tc") return KernelFamily::TC;
    if (name == "DI" || name == "di") return KernelFamily::DI;
    throw DomainError("unknown kernel family: " + name);
}

Index kernel_param_count(KernelFamily family) {
    return family == KernelFamily::DC ? 3 : 2;
}

void validate_kernel_config(const KernelConfig& config) {
    if (config.size < 1) throw DomainError("kernel size must satisfy n >= 1");
    if (config.eta.size() != kernel_param_count(config.family))
        throw DomainError("kernel " + to_string(config.family) + " expects " +
                          std::to_string(kernel_param_count(config.family)) +
                          " hyper-parameters, got " + std::to_string(config.eta.size()));
    const double c = config.eta[0];
    const double alpha = config.eta[1];
    if (!(c >= 0.0)) throw DomainError("kernel scale violates c >= 0, got c = " + std::to_string(c));
    if (!(alpha >= 0.0 && alpha < 1.0))
        throw DomainError("kernel decay violates 0 <= alpha < 1, got alpha = " + std::to_string(alpha));
    if (config.family == KernelFamily::DC) {
        const double beta = config.eta[2];
        if (!(std::abs(beta) <= 1.0))
            throw DomainError("kernel correlation violates |beta| <= 1, got beta = " + std::to_string(beta));
    }
}

KernelMatrix build_kernel(const KernelConfig& config) {
    validate_kernel_config(config);
    const Index n = config.size;
    const double c = config.eta[0];
    const double alpha = config.eta[1];

    Mat p = Mat::Zero(n, n);
    switch (config.family) {
        case KernelFamily::DC: {
            const double beta = config.eta[2];
            for (Index k = 1; k <= n; ++k)
                for (Index l = 1; l <= n; ++l)
                    p(k - 1, l - 1) = c * std::pow(alpha, 0.5 * static_cast<double>(k + l)) *
                                      std::pow(beta, static_cast<double>(std::abs(k - l)));
            break;
        }
        case KernelFamily::TC: {
            for (Index k = 1; k <= n; ++k)
                for (Index l = 1; l <= n; ++l)
                    p(k - 1, l - 1) = c * std::pow(alpha, static_cast<double>(std::max(k, l)));
            break;
        }
        case KernelFamily::DI: {
            for (Index k = 1; k <= n; ++k) p(k - 1, k - 1) = c * std::pow(alpha, static_cast<double>(k));
            break;
        }
    }
    return KernelMatrix{std::move(p), config};
}

KernelMatrix block_diag_model_kernel(const KernelMatrix& pb, const KernelMatrix& pa) {
    const Index nb = pb.size();
    const Index na = pa.size();
    Mat p = Mat::Zero(nb + na, nb + na);
    p.topLeftCorner(nb, nb) = pb.values;
    p.bottomRightCorner(na, na) = pa.values;
    return KernelMatrix{std::move(p), std::nullopt};
}

std::vector<ParamSpec> kernel_param_domain(KernelFamily family) {
    std::vector<ParamSpec> domain;
    domain.push_back({ParamScale::Log, 1e-8, 1e8});       // c
    domain.push_back({ParamScale::Logit, 1e-8, 1.0 - 1e-8});  // alpha
    if (family == KernelFamily::DC) domain.push_back({ParamScale::Linear, -1.0, 1.0});  // beta
    return domain;
}

PsdFactor psd_sqrt_factor(const Mat& p, double rel_tol) {
    const Index n = p.rows();
    bool diagonal = true;
    for (Index j = 0; j < n && diagonal; ++j)
        for (Index i = 0; i < n; ++i)
            if (i != j && p(i, j) != 0.0) {
                diagonal = false;
                break;
            }

    if (diagonal) {
        Mat l = Mat::Zero(n, n);
        for (Index i = 0; i < n; ++i) l(i, i) = std::sqrt(std::max(p(i, i), 0.0));
        return {std::move(l), true};
    }

    Eigen::SelfAdjointEigenSolver<Mat> eig(p);
    Vec lambda = eig.eigenvalues();
    const double lmax = lambda.size() ? lambda.cwiseAbs().maxCoeff() : 0.0;
    const double floor = rel_tol * lmax;
    for (Index i = 0; i < lambda.size(); ++i) lambda[i] = lambda[i] > floor ? std::sqrt(lambda[i]) : 0.0;
    Mat l = eig.eigenvectors() * lambda.asDiagonal();
    return {std::move(l), false};
}

}  // namespace krilc
