#include "krilc/regression.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace krilc {

RlsStats make_rls_stats(const Vec& y, const Mat& phi) {
    if (y.size() != phi.rows()) throw DomainError("rls: y and phi row counts differ");
    RlsStats stats;
    stats.phi_t_phi = phi.transpose() * phi;
    stats.phi_t_y = phi.transpose() * y;
    stats.y_norm2 = y.squaredNorm();
    stats.n_obs = y.size();
    return stats;
}

namespace {

// Core solve on A = L^T S L + sigma2 I. Returns theta, trace(H) and the
// stats-based residual norm.
RlsSolution solve_factored(const RlsStats& stats, const PsdFactor& factor, double sigma2) {
    const Index n = stats.phi_t_phi.rows();
    RlsSolution sol;
    if (stats.n_obs == 0) {
        sol.theta_hat = Vec::Zero(n);
        return sol;
    }

    Mat a;
    Vec rhs;
    if (factor.is_diagonal) {
        const Vec d = factor.L.diagonal();
        a = d.asDiagonal() * stats.phi_t_phi * d.asDiagonal();
        rhs = d.cwiseProduct(stats.phi_t_y);
    } else {
        a = factor.L.transpose() * stats.phi_t_phi * factor.L;
        rhs = factor.L.transpose() * stats.phi_t_y;
    }
    a.diagonal().array() += sigma2;

    Vec z;
    double trace_a_inv = 0.0;
    if (sigma2 > 0.0) {
        Eigen::LLT<Mat> llt(a);
        if (llt.info() == Eigen::Success) {
            z = llt.solve(rhs);
            Mat linv = llt.matrixL().solve(Mat::Identity(n, n));
            trace_a_inv = linv.squaredNorm();
        } else {
            // Badly scaled candidates (huge kernel, tiny ridge) can defeat the
            // Cholesky pivots; LDLT still factors them.
            Eigen::LDLT<Mat> ldlt(a);
            const Vec d = ldlt.vectorD();
            if (ldlt.info() != Eigen::Success || d.minCoeff() <= 0.0)
                throw SingularError("rls: regularized system not positive definite");
            z = ldlt.solve(rhs);
            const Mat ainv = ldlt.solve(Mat::Identity(n, n));
            trace_a_inv = ainv.trace();
        }
    } else {
        Eigen::LDLT<Mat> ldlt(a);
        const Vec d = ldlt.vectorD();
        const double dmax = d.cwiseAbs().maxCoeff();
        if (ldlt.info() != Eigen::Success || dmax <= 0.0 || d.minCoeff() <= 1e-13 * dmax)
            throw SingularError("rls: system singular with sigma2 = 0");
        z = ldlt.solve(rhs);
    }

    sol.theta_hat = factor.is_diagonal ? Vec(factor.L.diagonal().cwiseProduct(z)) : Vec(factor.L * z);
    sol.hat_matrix_trace = static_cast<double>(n) - sigma2 * trace_a_inv;
    const double fit_cross = sol.theta_hat.dot(stats.phi_t_y);
    const double fit_quad = sol.theta_hat.dot(stats.phi_t_phi * sol.theta_hat);
    sol.residual_norm2 = std::max(0.0, stats.y_norm2 - 2.0 * fit_cross + fit_quad);
    return sol;
}

}  // namespace

RlsSolution rls_solve_stats(const RlsStats& stats, const PsdFactor& factor, double sigma2) {
    return solve_factored(stats, factor, sigma2);
}

RlsSolution rls_solve(const RegressionProblem& prob) {
    if (prob.sigma2 < 0.0) throw DomainError("rls: sigma2 must be >= 0");
    const RlsStats stats = make_rls_stats(prob.y, prob.phi);
    RlsSolution sol = solve_factored(stats, psd_sqrt_factor(prob.p.values), prob.sigma2);
    if (stats.n_obs > 0) sol.residual_norm2 = (prob.y - prob.phi * sol.theta_hat).squaredNorm();
    return sol;
}

Vec ls_solve(const Vec& y, const Mat& phi) {
    if (phi.rows() < phi.cols()) throw DomainError("ls: needs at least as many rows as unknowns");
    Eigen::ColPivHouseholderQR<Mat> qr(phi);
    if (qr.rank() < phi.cols()) throw SingularError("ls: regressor matrix is rank deficient");
    return qr.solve(y);
}

double sure_objective(const RegressionProblem& prob) {
    if (prob.y.size() == 0) return 0.0;
    const RlsSolution sol = rls_solve(prob);
    return sol.residual_norm2 + 2.0 * prob.sigma2 * sol.hat_matrix_trace;
}

namespace {

double dof_sigma2_estimate(const RlsStats& stats, const PsdFactor& factor, double sigma2_start,
                           double floor) {
    double s2 = sigma2_start;
    for (int pass = 0; pass < 2; ++pass) {
        const RlsSolution sol = rls_solve_stats(stats, factor, s2);
        const double dof = std::max(1.0, static_cast<double>(stats.n_obs) - sol.hat_matrix_trace);
        s2 = std::max(floor, sol.residual_norm2 / dof);
    }
    return s2;
}

}  // namespace

SureResult minimize_sure(const Vec& y, const Mat& phi, const KernelBuilder& builder,
                         std::span<const ParamSpec> eta_domain, const SureOptions& opts) {
    const Index n_obs = y.size();
    const Index n = phi.cols();
    if (n_obs < 1) throw DomainError("minimize_sure: needs at least one observation");
    const Index dim = static_cast<Index>(eta_domain.size());

    const RlsStats stats = make_rls_stats(y, phi);

    Vec lo(dim), hi(dim), mid(dim);
    for (Index i = 0; i < dim; ++i) {
        lo[i] = eta_domain[i].search_lo();
        hi[i] = eta_domain[i].search_hi();
        mid[i] = 0.5 * (lo[i] + hi[i]);
    }
    auto to_eta = [&](const Vec& x) {
        Vec eta(dim);
        for (Index i = 0; i < dim; ++i) eta[i] = eta_domain[i].from_search(x[i]);
        return eta;
    };
    auto to_search = [&](const Vec& eta) {
        Vec x(dim);
        for (Index i = 0; i < dim; ++i) x[i] = eta_domain[i].to_search(eta[i]);
        return x;
    };

    // Noise-variance estimate: residual variance over residual degrees of
    // freedom. With enough rows this is the plain least-squares estimate;
    // otherwise the effective degrees of freedom of a reference fit stand in.
    double sigma2 = opts.sigma2_floor;
    bool ls_based = false;
    if (n_obs > n + 2) {
        Eigen::ColPivHouseholderQR<Mat> qr(phi);
        if (qr.rank() == n) {
            const Vec theta_ls = qr.solve(y);
            const double rss = (y - phi * theta_ls).squaredNorm();
            sigma2 = std::max(opts.sigma2_floor, rss / static_cast<double>(n_obs - n));
            ls_based = true;
        }
    }
    if (!ls_based) {
        const PsdFactor ref = psd_sqrt_factor(builder(to_eta(mid)).values);
        const double s2_start = std::max(opts.sigma2_floor, stats.y_norm2 / std::max<Index>(1, n_obs));
        sigma2 = dof_sigma2_estimate(stats, ref, s2_start, opts.sigma2_floor);
    }

    auto objective_at = [&](const Vec& x, double s2) -> double {
        try {
            const Vec eta = to_eta(x);
            const PsdFactor factor = psd_sqrt_factor(builder(eta).values);
            const RlsSolution sol = rls_solve_stats(stats, factor, s2);
            return sol.residual_norm2 + 2.0 * s2 * sol.hat_matrix_trace;
        } catch (const Error&) {
            return std::numeric_limits<double>::max();
        }
    };

    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<Vec> starts;
    for (int s = 0; s < opts.random_starts; ++s) {
        Vec x(dim);
        for (Index i = 0; i < dim; ++i) x[i] = lo[i] + unif(rng) * (hi[i] - lo[i]);
        starts.push_back(std::move(x));
    }
    for (const Vec& w : opts.warm_starts)
        if (w.size() == dim) starts.push_back(to_search(w));
    if (starts.empty()) starts.push_back(mid);

    NelderMeadOptions nm;
    nm.max_evals = opts.max_evals_per_start;
    nm.tol_rel = opts.tol_rel;

    const std::size_t n_random = static_cast<std::size_t>(opts.random_starts);
    bool have_best = false;
    Vec best_x;
    double best_val = std::numeric_limits<double>::max();
    auto run_start = [&](const Vec& x0, double step) {
        NelderMeadOptions local = nm;
        local.initial_step = step;
        const NelderMeadResult r =
            nelder_mead([&](const Vec& x) { return objective_at(x, sigma2); }, x0, lo, hi, local);
        if (r.value < best_val) {
            best_val = r.value;
            best_x = r.x;
            have_best = true;
        }
    };
    for (std::size_t s = 0; s < starts.size(); ++s)
        run_start(starts[s], s < n_random ? 0.25 : 0.05);

    if (!have_best || best_val >= std::numeric_limits<double>::max())
        throw OptimizationError("minimize_sure: no start produced a finite objective");

    // Restart polish: fresh small simplices around the incumbent counteract
    // premature simplex collapse.
    for (const double step : {0.05, 0.01}) run_start(best_x, step);

    // With the degrees-of-freedom variance estimate, re-estimate at the
    // optimum and polish once.
    if (!ls_based) {
        const PsdFactor factor = psd_sqrt_factor(builder(to_eta(best_x)).values);
        sigma2 = dof_sigma2_estimate(stats, factor, sigma2, opts.sigma2_floor);
        NelderMeadOptions local = nm;
        local.initial_step = 0.05;
        const NelderMeadResult r =
            nelder_mead([&](const Vec& x) { return objective_at(x, sigma2); }, best_x, lo, hi, local);
        best_x = r.x;
        best_val = r.value;
    }

    SureResult result;
    result.eta = to_eta(best_x);
    result.sigma2 = sigma2;
    result.objective = best_val;
    const KernelMatrix p = builder(result.eta);
    RlsSolution sol = rls_solve_stats(stats, psd_sqrt_factor(p.values), sigma2);
    sol.residual_norm2 = (y - phi * sol.theta_hat).squaredNorm();
    result.solution = std::move(sol);
    return result;
}

KernelBuilder family_kernel_builder(KernelFamily family, Index n) {
    return [family, n](const Vec& eta) { return build_kernel({family, n, eta}); };
}

KernelBuilder block_model_kernel_builder(KernelFamily family_b, Index nb, KernelFamily family_a,
                                         Index na) {
    const Index len_b = kernel_param_count(family_b);
    return [=](const Vec& eta) {
        const KernelMatrix pb = build_kernel({family_b, nb, eta.head(len_b)});
        const KernelMatrix pa = build_kernel({family_a, na, eta.tail(eta.size() - len_b)});
        return block_diag_model_kernel(pb, pa);
    };
}

}  // namespace krilc
