#pragma once

#include <utility>
#include <vector>

#include "krilc/kernels.hpp"
#include "krilc/model_estimation.hpp"
#include "krilc/regression.hpp"
#include "krilc/store.hpp"
#include "krilc/types.hpp"

namespace krilc {

// One-sample regression for the learning-controller parameter at (j, t):
// target y_c, regressor phi_c = b1_hat * e_stack, where e_stack holds the
// previous iterations' tracking errors at time t+1.
struct ControllerRegression {
    double y_c = 0.0;
    Vec phi_c;
    Vec e_stack;
    double u_prev = 0.0;
    double b1_hat = 0.0;
    double sigma_c2 = 0.0;
};

struct ControllerLimits {
    double d_u = 0.0;  // input magnitude bound
    double d_c = 0.0;  // controller norm bound
};

// Regularizer state for the controller solve: a factored kernel, or the
// unregularized variant (P^{-1} = 0 with a small ridge for solvability).
struct ControllerKernel {
    PsdFactor factor;
    bool regularized = true;

    static ControllerKernel from_matrix(const Mat& p) { return {psd_sqrt_factor(p), true}; }
    static ControllerKernel none(Index n) {
        return {PsdFactor{Mat::Identity(n, n), true}, false};
    }
};

struct ControllerEstimate {
    Vec theta_c;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    Vec eta_c;             // tuned hyper-parameters (empty when unregularized)
    double sigma_c2 = 0.0;
    double kkt_residual = 0.0;
    double u_new = 0.0;
    bool refined_ok = true;
    bool u_clipped = false;
};

// Builds the controller regression from the store and the model estimate at
// time t+1. Requires the current iteration's outputs up to t to be recorded
// (strictly sequential in t).
ControllerRegression build_controller_regression(const IterationStore& store,
                                                 const ModelEstimate& model_at_t_plus_1, Index j,
                                                 Index t, Index n_c, double sigma_c2);

// Lagrangian-stationarity solution at fixed multipliers; the kernel is never
// inverted (solve runs in factored coordinates, null-space components of
// theta are zero).
Vec dual_theta(const ControllerRegression& reg, double lambda1, double lambda2,
               const ControllerKernel& kernel);

// Lagrange dual value at (lambda1, lambda2).
double dual_objective(const ControllerRegression& reg, double lambda1, double lambda2,
                      const ControllerKernel& kernel, const ControllerLimits& limits);

// Dual ascent: returns (0,0) immediately when the unconstrained minimizer is
// feasible, otherwise maximizes the dual over {0} and a log-scale box by
// grid seeding plus coordinate-wise golden-section refinement.
std::pair<double, double> maximize_dual(const ControllerRegression& reg,
                                        const ControllerKernel& kernel,
                                        const ControllerLimits& limits);

// Effective degrees of freedom of the controller fit at the dual optimum;
// always in [0, 1].
double controller_dof(const ControllerRegression& reg, double lambda1, double lambda2,
                      const ControllerKernel& kernel);

struct ControllerSureOptions {
    int random_starts = 5;
    int max_evals_per_start = 500;
    double tol_rel = 1e-8;
    std::uint64_t seed = 0;
    std::vector<Vec> warm_starts;
};

// Tunes the controller kernel hyper-parameters by the risk criterion
// (squared one-sample residual plus 2 sigma_c2 times the fit's degrees of
// freedom), re-estimating the duals for every candidate.
Vec sure_controller(const ControllerRegression& reg, KernelFamily family, Index n_c,
                    const ControllerLimits& limits, const ControllerSureOptions& opts = {});

// Full constrained solve at fixed hyper-parameters: dual ascent, KKT
// verification, coordinate-bisection refinement of the multipliers, and the
// input update u_new = u_prev + e_stack . theta.
ControllerEstimate solve_constrained_rls(const ControllerRegression& reg,
                                         const ControllerKernel& kernel,
                                         const ControllerLimits& limits);

}  // namespace krilc
