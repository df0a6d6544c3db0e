#include "krilc/controller.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace krilc {

namespace {

constexpr double kRidge = 1e-12;
constexpr double kSlack = 1e-9;    // constraint slack tolerance
constexpr double kKktTol = 1e-5;

struct DualSolve {
    Vec theta;
    double penalty = 0.0;  // sigma_c2 * ||z||^2 in factored coordinates
};

// Stationary point of the Lagrangian at fixed multipliers. Regularized
// solves run on theta = L z, which keeps the kernel un-inverted and pins
// null-space components of theta to zero.
DualSolve solve_at(const ControllerRegression& reg, double l1, double l2,
                   const ControllerKernel& kernel) {
    const Index n = reg.e_stack.size();
    DualSolve out;
    if (kernel.regularized) {
        const Mat& l = kernel.factor.L;
        Vec g, et;
        if (kernel.factor.is_diagonal) {
            g = l.diagonal().cwiseProduct(reg.phi_c);
            et = l.diagonal().cwiseProduct(reg.e_stack);
        } else {
            g = l.transpose() * reg.phi_c;
            et = l.transpose() * reg.e_stack;
        }
        const double s2 = std::max(reg.sigma_c2, 0.0);
        Vec z;
        if (l1 == 0.0 && l2 == 0.0) {
            const double denom = s2 + g.squaredNorm();
            z = denom > 0.0 ? Vec(g * (reg.y_c / denom)) : Vec(Vec::Zero(n));
        } else {
            Mat m = g * g.transpose() + l1 * (et * et.transpose());
            if (kernel.factor.is_diagonal)
                m.diagonal() += l2 * l.diagonal().cwiseAbs2();
            else
                m += l2 * (l.transpose() * l);
            m.diagonal().array() += s2;
            Vec rhs = g * reg.y_c - (l1 * reg.u_prev) * et;
            Eigen::LDLT<Mat> ldlt(m);
            if (ldlt.info() != Eigen::Success) {
                m.diagonal().array() += kRidge;
                ldlt.compute(m);
                if (ldlt.info() != Eigen::Success)
                    throw SingularError("controller: stationarity system singular");
            }
            z = ldlt.solve(rhs);
        }
        out.theta = kernel.factor.is_diagonal ? Vec(l.diagonal().cwiseProduct(z)) : Vec(l * z);
        out.penalty = s2 * z.squaredNorm();
    } else {
        if (l1 == 0.0 && l2 == 0.0) {
            const double denom = kRidge + reg.phi_c.squaredNorm();
            out.theta = reg.phi_c * (reg.y_c / denom);
        } else {
            Mat m = reg.phi_c * reg.phi_c.transpose() + l1 * (reg.e_stack * reg.e_stack.transpose());
            m.diagonal().array() += l2 + kRidge;
            Vec rhs = reg.phi_c * reg.y_c - (l1 * reg.u_prev) * reg.e_stack;
            Eigen::LDLT<Mat> ldlt(m);
            if (ldlt.info() != Eigen::Success)
                throw SingularError("controller: stationarity system singular");
            out.theta = ldlt.solve(rhs);
        }
        out.penalty = 0.0;
    }
    return out;
}

double input_slack(const ControllerRegression& reg, const Vec& theta, const ControllerLimits& lim) {
    const double u = reg.e_stack.dot(theta) + reg.u_prev;
    return u * u - lim.d_u * lim.d_u;
}

double norm_slack(const Vec& theta, const ControllerLimits& lim) {
    return theta.squaredNorm() - lim.d_c * lim.d_c;
}

bool primal_feasible(const ControllerRegression& reg, const Vec& theta, const ControllerLimits& lim) {
    const double u = std::abs(reg.e_stack.dot(theta) + reg.u_prev);
    return theta.norm() <= lim.d_c + kSlack && u <= lim.d_u + kSlack;
}

}  // namespace

ControllerRegression build_controller_regression(const IterationStore& store,
                                                 const ModelEstimate& model_at_t_plus_1, Index j,
                                                 Index t, Index n_c, double sigma_c2) {
    if (!model_at_t_plus_1.valid())
        throw SequencingError("controller: model estimate for t+1 not available");
    if (t < 1 || t > store.n_d()) throw IndexError("controller: time out of horizon");
    if (j >= store.end_iteration())
        throw SequencingError("controller: iteration " + std::to_string(j) + " has no recorded data");
    const Index n_b = model_at_t_plus_1.theta_b.size();
    const Index n_a = model_at_t_plus_1.theta_a.size();

    // phi_bar = [0, u_j(t-1)..u_j(t-n_b+1), -y_j(t)..-y_j(t-n_a+1)]
    Vec phi_bar = Vec::Zero(n_b + n_a);
    for (Index k = 1; k < n_b; ++k) phi_bar[k] = store.u_at(j, t - k);
    for (Index l = 0; l < n_a; ++l) phi_bar[n_b + l] = -store.y_at(j, t - l);

    ControllerRegression reg;
    reg.b1_hat = model_at_t_plus_1.b1_hat();
    reg.u_prev = store.u_at(j - 1, t);
    reg.y_c = store.y_d_at(t + 1) - phi_bar.dot(model_at_t_plus_1.theta()) - reg.b1_hat * reg.u_prev;
    reg.e_stack = Vec::Zero(n_c);
    for (Index m = 1; m <= n_c; ++m) reg.e_stack[m - 1] = store.e_at(j - m, t + 1);
    reg.phi_c = reg.b1_hat * reg.e_stack;
    reg.sigma_c2 = sigma_c2;
    return reg;
}

Vec dual_theta(const ControllerRegression& reg, double lambda1, double lambda2,
               const ControllerKernel& kernel) {
    if (lambda1 < 0.0 || lambda2 < 0.0) throw DomainError("dual_theta: multipliers must be >= 0");
    return solve_at(reg, lambda1, lambda2, kernel).theta;
}

double dual_objective(const ControllerRegression& reg, double lambda1, double lambda2,
                      const ControllerKernel& kernel, const ControllerLimits& limits) {
    const DualSolve ds = solve_at(reg, lambda1, lambda2, kernel);
    const double resid = reg.y_c - reg.phi_c.dot(ds.theta);
    return resid * resid + ds.penalty + lambda1 * input_slack(reg, ds.theta, limits) +
           lambda2 * norm_slack(ds.theta, limits);
}

std::pair<double, double> maximize_dual(const ControllerRegression& reg,
                                        const ControllerKernel& kernel,
                                        const ControllerLimits& limits) {
    const Vec theta0 = solve_at(reg, 0.0, 0.0, kernel).theta;
    if (primal_feasible(reg, theta0, limits)) return {0.0, 0.0};

    auto value = [&](double l1, double l2) { return dual_objective(reg, l1, l2, kernel, limits); };

    std::vector<double> grid{0.0};
    for (int e = -8; e <= 6; e += 2) grid.push_back(std::pow(10.0, e));

    double best1 = 0.0, best2 = 0.0, best = value(0.0, 0.0);
    for (double l1 : grid)
        for (double l2 : grid) {
            const double v = value(l1, l2);
            if (v > best) {
                best = v;
                best1 = l1;
                best2 = l2;
            }
        }

    for (int pass = 0; pass < 3; ++pass) {
        {
            const double x = golden_section_max(
                [&](double lx) { return value(std::pow(10.0, lx), best2); }, -8.0, 6.0, 1e-4);
            const double cand = std::pow(10.0, x);
            if (value(cand, best2) > best) best1 = cand;
            if (value(0.0, best2) >= value(best1, best2)) best1 = 0.0;
            best = value(best1, best2);
        }
        {
            const double x = golden_section_max(
                [&](double lx) { return value(best1, std::pow(10.0, lx)); }, -8.0, 6.0, 1e-4);
            const double cand = std::pow(10.0, x);
            if (value(best1, cand) > best) best2 = cand;
            if (value(best1, 0.0) >= value(best1, best2)) best2 = 0.0;
            best = value(best1, best2);
        }
    }
    return {best1, best2};
}

double controller_dof(const ControllerRegression& reg, double lambda1, double lambda2,
                      const ControllerKernel& kernel) {
    const Index n = reg.e_stack.size();
    double h = 0.0;
    if (kernel.regularized) {
        const Mat& l = kernel.factor.L;
        Vec g, et;
        if (kernel.factor.is_diagonal) {
            g = l.diagonal().cwiseProduct(reg.phi_c);
            et = l.diagonal().cwiseProduct(reg.e_stack);
        } else {
            g = l.transpose() * reg.phi_c;
            et = l.transpose() * reg.e_stack;
        }
        const double s2 = std::max(reg.sigma_c2, 0.0);
        if (lambda1 == 0.0 && lambda2 == 0.0) {
            const double denom = s2 + g.squaredNorm();
            h = denom > 0.0 ? g.squaredNorm() / denom : 0.0;
        } else {
            Mat m = g * g.transpose() + lambda1 * (et * et.transpose());
            if (kernel.factor.is_diagonal)
                m.diagonal() += lambda2 * l.diagonal().cwiseAbs2();
            else
                m += lambda2 * (l.transpose() * l);
            m.diagonal().array() += s2;
            Eigen::LDLT<Mat> ldlt(m);
            if (ldlt.info() != Eigen::Success) throw SingularError("controller: dof system singular");
            h = g.dot(ldlt.solve(g));
        }
    } else {
        Mat m = reg.phi_c * reg.phi_c.transpose() + lambda1 * (reg.e_stack * reg.e_stack.transpose());
        m.diagonal().array() += lambda2 + kRidge;
        Eigen::LDLT<Mat> ldlt(m);
        if (ldlt.info() != Eigen::Success) throw SingularError("controller: dof system singular");
        h = reg.phi_c.dot(ldlt.solve(reg.phi_c));
        (void)n;
    }
    if (h < -1e-10 || h > 1.0 + 1e-10)
        throw Error("controller: degrees of freedom left [0, 1]: " + std::to_string(h));
    return std::clamp(h, 0.0, 1.0);
}

Vec sure_controller(const ControllerRegression& reg, KernelFamily family, Index n_c,
                    const ControllerLimits& limits, const ControllerSureOptions& opts) {
    const std::vector<ParamSpec> domain = kernel_param_domain(family);
    const Index dim = static_cast<Index>(domain.size());
    Vec eta_lo(dim);
    for (Index i = 0; i < dim; ++i) eta_lo[i] = domain[i].lo;
    if (reg.phi_c.squaredNorm() == 0.0) return eta_lo;

    Vec lo(dim), hi(dim);
    for (Index i = 0; i < dim; ++i) {
        lo[i] = domain[i].search_lo();
        hi[i] = domain[i].search_hi();
    }
    auto to_eta = [&](const Vec& x) {
        Vec eta(dim);
        for (Index i = 0; i < dim; ++i) eta[i] = domain[i].from_search(x[i]);
        return eta;
    };

    auto objective = [&](const Vec& x) -> double {
        const Vec eta = to_eta(x);
        const ControllerKernel kernel = ControllerKernel::from_matrix(build_kernel({family, n_c, eta}).values);
        const auto [l1, l2] = maximize_dual(reg, kernel, limits);
        const Vec theta = solve_at(reg, l1, l2, kernel).theta;
        const double h = controller_dof(reg, l1, l2, kernel);
        const double resid = reg.y_c - reg.phi_c.dot(theta);
        return resid * resid + 2.0 * reg.sigma_c2 * h;
    };

    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<Vec> starts;
    for (int s = 0; s < opts.random_starts; ++s) {
        Vec x(dim);
        for (Index i = 0; i < dim; ++i) x[i] = lo[i] + unif(rng) * (hi[i] - lo[i]);
        starts.push_back(std::move(x));
    }
    for (const Vec& w : opts.warm_starts) {
        if (w.size() != dim) continue;
        Vec x(dim);
        for (Index i = 0; i < dim; ++i) x[i] = domain[i].to_search(w[i]);
        starts.push_back(std::move(x));
    }
    if (starts.empty()) starts.push_back(0.5 * (lo + hi));

    NelderMeadOptions nm;
    nm.max_evals = opts.max_evals_per_start;
    nm.tol_rel = opts.tol_rel;

    Vec best_x;
    double best = std::numeric_limits<double>::max();
    const std::size_t n_random = static_cast<std::size_t>(opts.random_starts);
    for (std::size_t s = 0; s < starts.size(); ++s) {
        NelderMeadOptions local = nm;
        local.initial_step = s < n_random ? 0.25 : 0.05;
        const NelderMeadResult r = nelder_mead(objective, starts[s], lo, hi, local);
        if (r.value < best) {
            best = r.value;
            best_x = r.x;
        }
    }
    if (!(best < std::numeric_limits<double>::max()))
        throw OptimizationError("sure_controller: no start produced a finite objective");
    return to_eta(best_x);
}

ControllerEstimate solve_constrained_rls(const ControllerRegression& reg,
                                         const ControllerKernel& kernel,
                                         const ControllerLimits& limits) {
    const Index n = reg.e_stack.size();
    ControllerEstimate est;
    est.sigma_c2 = reg.sigma_c2;

    // Frozen controller / degenerate regression: nothing to estimate.
    if (limits.d_c <= 0.0 || reg.phi_c.squaredNorm() == 0.0) {
        est.theta_c = Vec::Zero(n);
        est.u_new = reg.u_prev;
        est.kkt_residual = std::max(0.0, reg.u_prev * reg.u_prev - limits.d_u * limits.d_u);
        return est;
    }

    // No strictly feasible interior in the input constraint: move the input
    // just inside the admissible band along the minimum-norm direction.
    if (std::abs(reg.u_prev) >= limits.d_u) {
        const double e2 = reg.e_stack.squaredNorm();
        if (e2 == 0.0) {
            est.theta_c = Vec::Zero(n);
            est.u_new = std::clamp(reg.u_prev, -limits.d_u, limits.d_u);
            est.u_clipped = est.u_new != reg.u_prev;
            return est;
        }
        const double target = (reg.u_prev > 0 ? 1.0 : -1.0) * limits.d_u * (1.0 - 1e-9);
        Vec theta = reg.e_stack * ((target - reg.u_prev) / e2);
        const double norm = theta.norm();
        if (norm > limits.d_c) theta *= limits.d_c / norm;
        est.theta_c = theta;
        est.u_new = reg.u_prev + reg.e_stack.dot(theta);
        if (std::abs(est.u_new) > limits.d_u) {
            est.u_new = std::clamp(est.u_new, -limits.d_u, limits.d_u);
            est.u_clipped = true;
        }
        return est;
    }

    auto [l1, l2] = maximize_dual(reg, kernel, limits);
    Vec theta = solve_at(reg, l1, l2, kernel).theta;

    auto kkt_max = [&](const Vec& th, double a, double b) {
        const double h1 = input_slack(reg, th, limits);
        const double h2 = norm_slack(th, limits);
        return std::max({std::max(0.0, h1), std::max(0.0, h2), std::abs(a * h1), std::abs(b * h2)});
    };

    int budget = 200;
    double kkt = kkt_max(theta, l1, l2);
    while (kkt > kKktTol && budget > 0) {
        // Coordinate bisection: activate or release each multiplier so its
        // constraint is tight (or it is zero), then re-check jointly.
        for (int coord = 0; coord < 2 && budget > 0; ++coord) {
            auto slack_of = [&](double a, double b) {
                const Vec th = solve_at(reg, a, b, kernel).theta;
                return coord == 0 ? input_slack(reg, th, limits) : norm_slack(th, limits);
            };
            const double at_zero = coord == 0 ? slack_of(0.0, l2) : slack_of(l1, 0.0);
            --budget;
            if (at_zero <= kSlack) {
                (coord == 0 ? l1 : l2) = 0.0;
                continue;
            }
            double lo = 0.0, hi = std::max(coord == 0 ? l1 : l2, 1.0);
            while (budget > 0 && slack_of(coord == 0 ? hi : l1, coord == 0 ? l2 : hi) > 0.0 &&
                   hi < 1e14) {
                hi *= 4.0;
                --budget;
            }
            while (budget > 0) {
                const double mid = 0.5 * (lo + hi);
                const double s = slack_of(coord == 0 ? mid : l1, coord == 0 ? l2 : mid);
                --budget;
                if (s > 0.0)
                    lo = mid;
                else
                    hi = mid;
                if (std::abs(s) <= kSlack || (hi - lo) <= 1e-12 * std::max(1.0, hi)) {
                    (coord == 0 ? l1 : l2) = s <= 0.0 ? mid : hi;
                    break;
                }
            }
        }
        theta = solve_at(reg, l1, l2, kernel).theta;
        kkt = kkt_max(theta, l1, l2);
    }

    // Numerical-slack projection keeps the norm invariant exact.
    const double norm = theta.norm();
    if (norm > limits.d_c && norm <= limits.d_c * (1.0 + 1e-6)) theta *= limits.d_c / norm;

    est.theta_c = theta;
    est.lambda1 = l1;
    est.lambda2 = l2;
    est.kkt_residual = kkt_max(theta, l1, l2);
    est.refined_ok = est.kkt_residual <= kKktTol;
    est.u_new = reg.u_prev + reg.e_stack.dot(theta);
    if (std::abs(est.u_new) > limits.d_u) {
        est.u_clipped = std::abs(est.u_new) > limits.d_u + kSlack;
        est.u_new = std::clamp(est.u_new, -limits.d_u, limits.d_u);
    }
    return est;
}

}  // namespace krilc
