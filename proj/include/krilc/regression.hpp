#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "krilc/kernels.hpp"
#include "krilc/types.hpp"

namespace krilc {

struct RegressionProblem {
    Vec y;           // N observations
    Mat phi;         // N x n regressors
    double sigma2 = 0.0;
    KernelMatrix p;  // n x n kernel
};

struct RlsSolution {
    Vec theta_hat;
    double hat_matrix_trace = 0.0;
    double residual_norm2 = 0.0;
};

// Sufficient statistics of (y, phi); the solver cost then no longer depends
// on the number of observations.
struct RlsStats {
    Mat phi_t_phi;
    Vec phi_t_y;
    double y_norm2 = 0.0;
    Index n_obs = 0;
};
RlsStats make_rls_stats(const Vec& y, const Mat& phi);

// Regularized least squares through the factored kernel P = L L^T: the
// solve never forms P^{-1}, so singular kernels are handled with the
// null-space components of theta pinned to zero.
RlsSolution rls_solve_stats(const RlsStats& stats, const PsdFactor& factor, double sigma2);
RlsSolution rls_solve(const RegressionProblem& prob);

// Plain least squares via column-pivoted QR; throws SingularError on rank
// deficiency.
Vec ls_solve(const Vec& y, const Mat& phi);

// || y - phi theta_hat ||^2 + 2 sigma2 Trace(H) at the problem's kernel.
double sure_objective(const RegressionProblem& prob);

using KernelBuilder = std::function<KernelMatrix(const Vec& eta)>;

struct SureOptions {
    int random_starts = 5;
    int max_evals_per_start = 500;
    double tol_rel = 1e-8;
    std::uint64_t seed = 0;
    std::vector<Vec> warm_starts;  // natural-scale eta start points
    double sigma2_floor = 1e-10;
};

struct SureResult {
    Vec eta;
    double sigma2 = 0.0;
    RlsSolution solution;
    double objective = 0.0;
};

// Hyper-parameter estimation: the noise variance is estimated from the data
// (residual variance over residual degrees of freedom), then the SURE
// criterion is minimized over eta by multi-start Nelder-Mead on the
// transformed box. Deterministic for a fixed seed.
SureResult minimize_sure(const Vec& y, const Mat& phi, const KernelBuilder& builder,
                         std::span<const ParamSpec> eta_domain, const SureOptions& opts = {});

// Convenience builder for a single-family kernel of dimension n.
KernelBuilder family_kernel_builder(KernelFamily family, Index n);

// Builder for the two-block model kernel [P_b 0; 0 P_a]; eta is the
// concatenation of the input-side and output-side hyper-parameters.
KernelBuilder block_model_kernel_builder(KernelFamily family_b, Index nb, KernelFamily family_a,
                                         Index na);

}  // namespace krilc
