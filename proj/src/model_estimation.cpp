#include "krilc/model_estimation.hpp"

#include <Eigen/QR>

namespace krilc {

RegressorView build_regressors(const IterationStore& store, Index j, Index t, Index n_a, Index n_b) {
    const Index first = store.first_iteration();
    if (j < first || j > store.end_iteration())
        throw IndexError("build_regressors: iteration " + std::to_string(j) + " out of range");
    if (t < 1 || t > store.n_d() + 1)
        throw IndexError("build_regressors: time " + std::to_string(t) + " out of horizon");

    const Index rows = j - first;
    RegressorView view;
    view.y = Vec::Zero(rows);
    view.phi = Mat::Zero(rows, n_a + n_b);
    for (Index i = first; i < j; ++i) {
        const Index r = i - first;
        view.y[r] = store.y_at(i, t);
        for (Index k = 1; k <= n_b; ++k) view.phi(r, k - 1) = store.u_at(i, t - k);
        for (Index l = 1; l <= n_a; ++l) view.phi(r, n_b + l - 1) = -store.y_at(i, t - l);
    }
    return view;
}

ModelEstimate estimate_model(const IterationStore& store, Index j, Index t,
                             const ModelEstimationConfig& cfg) {
    const RegressorView view = build_regressors(store, j, t, cfg.n_a, cfg.n_b);
    const KernelBuilder builder =
        block_model_kernel_builder(cfg.family_b, cfg.n_b, cfg.family_a, cfg.n_a);
    std::vector<ParamSpec> domain = kernel_param_domain(cfg.family_b);
    const std::vector<ParamSpec> domain_a = kernel_param_domain(cfg.family_a);
    domain.insert(domain.end(), domain_a.begin(), domain_a.end());

    const SureResult tuned = minimize_sure(view.y, view.phi, builder, domain, cfg.sure);

    ModelEstimate est;
    est.t = t;
    est.theta_b = tuned.solution.theta_hat.head(cfg.n_b);
    est.theta_a = tuned.solution.theta_hat.tail(cfg.n_a);
    est.eta_m = tuned.eta;
    est.sigma2 = tuned.sigma2;
    est.meta = tuned.solution;
    return est;
}

ModelEstimate estimate_model_ls(const IterationStore& store, Index j, Index t, Index n_a, Index n_b) {
    const RegressorView view = build_regressors(store, j, t, n_a, n_b);
    // Minimum-norm solution: lags that reach into the pinned initial
    // conditions produce structurally zero columns at small t.
    const Vec theta = view.phi.completeOrthogonalDecomposition().solve(view.y);
    ModelEstimate est;
    est.t = t;
    est.theta_b = theta.head(n_b);
    est.theta_a = theta.tail(n_a);
    est.sigma2 = 0.0;
    est.meta.theta_hat = theta;
    est.meta.residual_norm2 = (view.y - view.phi * theta).squaredNorm();
    est.meta.hat_matrix_trace = static_cast<double>(n_a + n_b);
    return est;
}

}  // namespace krilc
