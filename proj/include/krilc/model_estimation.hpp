#pragma once

#include "krilc/regression.hpp"
#include "krilc/store.hpp"
#include "krilc/types.hpp"

namespace krilc {

// Cross-iteration regression data at one time instant: row i is
// [u_i(t-1)..u_i(t-n_b), -y_i(t-1)..-y_i(t-n_a)] for the stored iterations
// before j.
struct RegressorView {
    Vec y;    // outputs y_i(t)
    Mat phi;  // one row per prior iteration
};

RegressorView build_regressors(const IterationStore& store, Index j, Index t, Index n_a, Index n_b);

struct ModelEstimationConfig {
    Index n_a = 10;
    Index n_b = 10;
    KernelFamily family_b = KernelFamily::DI;
    KernelFamily family_a = KernelFamily::DI;
    SureOptions sure;
};

struct ModelEstimate {
    Index t = 0;
    Vec theta_b;
    Vec theta_a;
    Vec eta_m;          // tuned [eta_b, eta_a]
    double sigma2 = 0;  // tuned noise variance
    RlsSolution meta;

    bool valid() const { return theta_b.size() > 0; }
    double b1_hat() const { return theta_b[0]; }
    Vec theta() const {
        Vec full(theta_b.size() + theta_a.size());
        full << theta_b, theta_a;
        return full;
    }
};

// Per-time-instant estimate from all iterations before j; the two kernel
// blocks and the noise variance are tuned together. Deterministic given
// (store, cfg.sure.seed).
ModelEstimate estimate_model(const IterationStore& store, Index j, Index t,
                             const ModelEstimationConfig& cfg);

// Plain least-squares counterpart (needs at least n_a + n_b rows).
ModelEstimate estimate_model_ls(const IterationStore& store, Index j, Index t, Index n_a, Index n_b);

}  // namespace krilc
