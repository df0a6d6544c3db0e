#include "krilc/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace krilc {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t j, std::uint64_t t) {
    std::uint64_t h = splitmix64(master ^ splitmix64(stream));
    h = splitmix64(h ^ splitmix64(j * 0x100000001b3ULL));
    return splitmix64(h ^ splitmix64(t));
}

// Bounded zero-mean noise: uniform with exact variance when the support
// fits inside +-d_v, otherwise a clipped normal (variance distorted).
Vec sample_noise(std::mt19937_64& rng, Index count, double sigma2, double d_v, bool& distorted) {
    Vec v = Vec::Zero(count);
    if (sigma2 <= 0.0) return v;
    const double sigma = std::sqrt(sigma2);
    if (sigma * std::sqrt(3.0) <= d_v) {
        std::uniform_real_distribution<double> unif(-sigma * std::sqrt(3.0), sigma * std::sqrt(3.0));
        for (Index i = 0; i < count; ++i) v[i] = unif(rng);
    } else {
        distorted = true;
        std::normal_distribution<double> normal(0.0, sigma);
        for (Index i = 0; i < count; ++i) v[i] = std::clamp(normal(rng), -d_v, d_v);
    }
    return v;
}

void parallel_for(Index begin, Index end, int threads, const std::function<void(Index)>& body) {
    const Index n = end - begin;
    if (threads <= 1 || n <= 1) {
        for (Index i = begin; i < end; ++i) body(i);
        return;
    }
    std::atomic<Index> next(begin);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const Index i = next.fetch_add(1);
            if (i >= end) break;
            try {
                body(i);
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const int n_threads = static_cast<int>(std::min<Index>(threads, n));
    pool.reserve(n_threads);
    for (int w = 0; w < n_threads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

double step_true_output(const LtvArxModel& plant, const IterationStore& store, Index j,
                        const Vec& y_true, Index t) {
    double acc = 0.0;
    for (Index l = 1; l <= plant.n_a; ++l)
        if (t - l >= 1) acc -= plant.a(t - 1, l - 1) * y_true[t - l - 1];
    for (Index k = 1; k <= plant.n_b; ++k)
        if (t - k >= 1) acc += plant.b(t - 1, k - 1) * store.u_at(j, t - k);
    if (!std::isfinite(acc))
        throw InstabilityError("run: non-finite output at iteration " + std::to_string(j) +
                                   ", t = " + std::to_string(t),
                               t);
    return acc;
}

Vec default_controller_eta(KernelFamily family) {
    Vec eta(kernel_param_count(family));
    eta[0] = 1.0;
    eta[1] = 0.5;
    if (family == KernelFamily::DC) eta[2] = 0.5;
    return eta;
}

}  // namespace

std::string to_string(Method method) {
    switch (method) {
        case Method::Krilc: return "KRILC";
        case Method::KrilcLs: return "KRILC-LS";
        case Method::Adaptive: return "ADAPTIVE";
        case Method::Inversion: return "INVERSION";
    }
    return "?";
}

Method method_from_string(const std::string& name) {
    if (name == "KRILC") return Method::Krilc;
    if (name == "KRILC-LS") return Method::KrilcLs;
    if (name == "ADAPTIVE") return Method::Adaptive;
    if (name == "INVERSION") return Method::Inversion;
    throw DomainError("unknown method: " + name);
}

LtvArxModel make_plant(const ExperimentConfig& cfg) {
    const Index horizon = cfg.n_d + 1;
    if (cfg.plant == "fixed51") return fixed_plant_51(horizon);
    if (cfg.plant == "generated") {
        GeneratorConfig gen;
        gen.order = cfg.gen_order;
        gen.radius = cfg.gen_radius;
        gen.horizon = horizon;
        gen.seed = cfg.gen_seed;
        if (cfg.gen_filter) gen.filter = GeneratorFilter{};
        return generate_plant(gen);
    }
    LtvArxModel model = load_plant_file(cfg.plant);
    if (model.horizon() < horizon)
        throw DomainError("plant file horizon " + std::to_string(model.horizon()) +
                          " is shorter than n_d + 1 = " + std::to_string(horizon));
    return model;
}

Vec make_reference(const ExperimentConfig& cfg) {
    Vec y_d = Vec::Zero(cfg.n_d + 1);
    for (Index t = 1; t <= cfg.n_d + 1; ++t) {
        const double td = static_cast<double>(t);
        if (cfg.reference == "sine51")
            y_d[t - 1] = reference_51(td);
        else if (cfg.reference == "cubic52")
            y_d[t - 1] = reference_52(td);
        else if (cfg.reference == "zero")
            y_d[t - 1] = 0.0;
        else
            throw DomainError("unknown reference: " + cfg.reference);
    }
    return y_d;
}

double tracking_fit(const Vec& y_d, const Vec& y) {
    if (y_d.size() != y.size() || y_d.size() == 0) throw DomainError("tracking_fit: size mismatch");
    const double mean = y_d.mean();
    const double denom = (y_d.array() - mean).matrix().squaredNorm();
    if (denom <= 0.0) throw UndefinedFitError("tracking_fit: constant reference");
    const double num = (y_d - y).squaredNorm();
    return 100.0 * (1.0 - std::sqrt(num / denom));
}

double model_fit(const Vec& theta_true, const Vec& theta_hat) {
    if (theta_true.size() != theta_hat.size() || theta_true.size() == 0)
        throw DomainError("model_fit: size mismatch");
    const double mean = theta_true.mean();
    const double denom = (theta_true.array() - mean).matrix().squaredNorm();
    if (denom <= 0.0) throw UndefinedFitError("model_fit: constant true coefficients");
    const double num = (theta_true - theta_hat).squaredNorm();
    return 100.0 * (1.0 - std::sqrt(num / denom));
}

std::optional<double> tracking_fit_from_rows(const Vec& y_row, const Vec& v_row, const Vec& e_row) {
    const Index n = y_row.size() - 1;  // controlled window t = 2..n+1
    Vec y_d(n), y_true(n);
    for (Index t = 2; t <= n + 1; ++t) {
        y_d[t - 2] = y_row[t - 1] + e_row[t - 1];
        y_true[t - 2] = y_row[t - 1] - v_row[t - 1];
    }
    const double mean = y_d.mean();
    const double denom = (y_d.array() - mean).matrix().squaredNorm();
    if (denom <= 0.0) return std::nullopt;
    return 100.0 * (1.0 - std::sqrt((y_d - y_true).squaredNorm() / denom));
}

Vec padded_true_theta(const LtvArxModel& plant, Index t, Index n_a_est, Index n_b_est) {
    Vec theta = Vec::Zero(n_a_est + n_b_est);
    for (Index k = 0; k < std::min(plant.n_b, n_b_est); ++k) theta[k] = plant.b(t - 1, k);
    for (Index l = 0; l < std::min(plant.n_a, n_a_est); ++l) theta[n_b_est + l] = plant.a(t - 1, l);
    return theta;
}

namespace {

struct LoopContext {
    const ExperimentConfig& cfg;
    const LtvArxModel& plant;
    IterationStore& store;
    RunRecord& record;
};

void measure_output(LoopContext& ctx, Index j, Vec& y_true, const Vec& v, Index t) {
    y_true[t - 1] = step_true_output(ctx.plant, ctx.store, j, y_true, t);
    ctx.store.record_output(t, y_true[t - 1] + v[t - 1], v[t - 1]);
}

void finish_iteration_metrics(LoopContext& ctx, Index j, double max_theta,
                              std::optional<double> avg_model_fit) {
    IterationMetrics m;
    m.j = j;
    m.tracking_fit =
        tracking_fit_from_rows(ctx.store.y_row(j), ctx.store.v_row(j), ctx.store.e_row(j));
    m.avg_model_fit = avg_model_fit;
    m.max_abs_u = ctx.store.u_row(j).cwiseAbs().maxCoeff();
    m.max_theta_norm = max_theta;
    ctx.record.per_iteration.push_back(std::move(m));
}

void run_krilc_loop(LoopContext& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    const Index n_d = cfg.n_d;
    const ControllerLimits limits{cfg.d_u, cfg.d_c};
    std::vector<ModelEstimate> estimates(n_d + 2);
    std::vector<Vec> warm_m(n_d + 2), warm_c(n_d + 1);
    std::vector<char> est_fallback(n_d + 2, 0);

    std::mt19937_64 noise_rng;
    for (Index j = 1; j <= cfg.n_e; ++j) {
        // Model estimates for every t+1 from prior iterations only; the
        // instants are independent, so they run on the worker pool.
        std::fill(est_fallback.begin(), est_fallback.end(), 0);
        parallel_for(2, n_d + 2, cfg.threads, [&](Index tp) {
            ModelEstimationConfig mcfg;
            mcfg.n_a = cfg.n_a;
            mcfg.n_b = cfg.n_b;
            mcfg.family_b = cfg.kernel_model;
            mcfg.family_a = cfg.kernel_model;
            mcfg.sure.random_starts = cfg.sure_starts;
            mcfg.sure.max_evals_per_start = cfg.sure_max_evals;
            mcfg.sure.tol_rel = cfg.sure_tol;
            mcfg.sure.seed = mix_seed(cfg.seed, 1, j, tp);
            if (warm_m[tp].size()) mcfg.sure.warm_starts.push_back(warm_m[tp]);
            try {
                estimates[tp] = estimate_model(ctx.store, j, tp, mcfg);
            } catch (const Error&) {
                est_fallback[tp] = 1;  // keep the previous iteration's estimate
            }
        });
        for (Index tp = 2; tp <= n_d + 1; ++tp) {
            if (est_fallback[tp]) ++ctx.record.fallback_count;
            if (estimates[tp].valid()) warm_m[tp] = estimates[tp].eta_m;
        }

        noise_rng.seed(mix_seed(cfg.seed, 3, j, 0));
        bool distorted = false;
        Vec v = Vec::Zero(n_d + 1);
        v.tail(n_d) = sample_noise(noise_rng, n_d, cfg.sigma2, cfg.d_v, distorted);
        ctx.record.noise_distorted = ctx.record.noise_distorted || distorted;

        ctx.store.begin_iteration();
        Vec y_true = Vec::Zero(n_d + 1);
        double max_theta = 0.0;
        std::vector<double> model_fits;
        for (Index t = 1; t <= n_d; ++t) {
            measure_output(ctx, j, y_true, v, t);
            const ModelEstimate& est = estimates[t + 1];
            double u_new;
            if (!est.valid() || std::abs(est.b1_hat()) < 1e-8) {
                u_new = ctx.store.u_at(j - 1, t);
            } else {
                const double sigma_c2 = std::max(est.sigma2, 1e-10);
                const ControllerRegression reg =
                    build_controller_regression(ctx.store, est, j, t, cfg.n_c, sigma_c2);
                ControllerKernel kernel = ControllerKernel::none(cfg.n_c);
                if (cfg.method == Method::Krilc) {
                    ControllerSureOptions copts;
                    copts.random_starts = cfg.sure_starts;
                    copts.max_evals_per_start = cfg.sure_max_evals;
                    copts.tol_rel = cfg.sure_tol;
                    copts.seed = mix_seed(cfg.seed, 2, j, t);
                    if (warm_c[t].size()) copts.warm_starts.push_back(warm_c[t]);
                    Vec eta;
                    try {
                        eta = sure_controller(reg, cfg.kernel_controller, cfg.n_c, limits, copts);
                    } catch (const Error&) {
                        ++ctx.record.fallback_count;
                        eta = warm_c[t].size() ? warm_c[t] : default_controller_eta(cfg.kernel_controller);
                    }
                    warm_c[t] = eta;
                    kernel = ControllerKernel::from_matrix(
                        build_kernel({cfg.kernel_controller, cfg.n_c, eta}).values);
                }
                const ControllerEstimate cest = solve_constrained_rls(reg, kernel, limits);
                u_new = cest.u_new;
                if (cest.u_clipped) ++ctx.record.u_clip_count;
                max_theta = std::max(max_theta, cest.theta_c.norm());
            }
            ctx.store.record_input(t, u_new);
        }
        measure_output(ctx, j, y_true, v, n_d + 1);
        ctx.store.finish_iteration();

        for (Index tp = 2; tp <= n_d + 1; ++tp) {
            if (!estimates[tp].valid()) continue;
            try {
                model_fits.push_back(
                    model_fit(padded_true_theta(ctx.plant, tp, cfg.n_a, cfg.n_b), estimates[tp].theta()));
            } catch (const UndefinedFitError&) {
            }
        }
        std::optional<double> avg_fit;
        if (!model_fits.empty()) {
            double sum = 0.0;
            for (double f : model_fits) sum += f;
            avg_fit = sum / static_cast<double>(model_fits.size());
        }
        finish_iteration_metrics(ctx, j, max_theta, avg_fit);
    }
}

void run_adaptive_loop(LoopContext& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    const Index n_d = cfg.n_d;
    AdaptiveIlcState state(n_d, cfg.adaptive);
    std::mt19937_64 noise_rng;
    for (Index j = 1; j <= cfg.n_e; ++j) {
        noise_rng.seed(mix_seed(cfg.seed, 3, j, 0));
        bool distorted = false;
        Vec v = Vec::Zero(n_d + 1);
        v.tail(n_d) = sample_noise(noise_rng, n_d, cfg.sigma2, cfg.d_v, distorted);
        ctx.record.noise_distorted = ctx.record.noise_distorted || distorted;

        ctx.store.begin_iteration();
        Vec y_true = Vec::Zero(n_d + 1);
        for (Index t = 1; t <= n_d; ++t) {
            measure_output(ctx, j, y_true, v, t);
            const double delta_y = ctx.store.y_at(j, t) - ctx.store.y_at(j - 1, t);
            const double delta_u = ctx.store.u_at(j, t - 1) - ctx.store.u_at(j - 1, t - 1);
            Vec past(cfg.adaptive.l_theta + 1);
            for (Index m = 0; m <= cfg.adaptive.l_theta; ++m)
                past[m] = ctx.store.e_at(j - 1 - m, t + 1);
            const double u_new =
                adaptive_ilc_step(state, t, past, ctx.store.u_at(j - 1, t), delta_y, delta_u);
            ctx.store.record_input(t, u_new);
        }
        measure_output(ctx, j, y_true, v, n_d + 1);
        ctx.store.finish_iteration();
        finish_iteration_metrics(ctx, j, 0.0, std::nullopt);
    }
}

void run_inversion_loop(LoopContext& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    const Index n_d = cfg.n_d;
    std::mt19937_64 noise_rng;
    for (Index j = 1; j <= cfg.n_e; ++j) {
        const Spectrum u_prev = dft_forward(ctx.store.u_row(j - 1));
        const Spectrum y_prev = dft_forward(ctx.store.y_row(j - 1).head(n_d));
        const Spectrum e_prev = dft_forward(ctx.store.e_row(j - 1).head(n_d));
        const Vec u_next = dft_inverse_real(inversion_ilc_update(u_prev, y_prev, e_prev, cfg.inversion_gamma));

        noise_rng.seed(mix_seed(cfg.seed, 3, j, 0));
        bool distorted = false;
        Vec v = Vec::Zero(n_d + 1);
        v.tail(n_d) = sample_noise(noise_rng, n_d, cfg.sigma2, cfg.d_v, distorted);
        ctx.record.noise_distorted = ctx.record.noise_distorted || distorted;

        ctx.store.begin_iteration();
        Vec y_true = Vec::Zero(n_d + 1);
        for (Index t = 1; t <= n_d; ++t) {
            measure_output(ctx, j, y_true, v, t);
            ctx.store.record_input(t, u_next[t - 1]);
        }
        measure_output(ctx, j, y_true, v, n_d + 1);
        ctx.store.finish_iteration();
        finish_iteration_metrics(ctx, j, 0.0, std::nullopt);
    }
}

Vec initial_input(const ExperimentConfig& cfg) {
    Vec u0 = Vec::Zero(cfg.n_d);
    if (cfg.init == InitialExperiment::Zero || cfg.init == InitialExperiment::AdaptivePass) {
        // One adaptive pass from zero data emits zero inputs (the parameter
        // recursions start at zero), so both options yield a quiet first
        // experiment.
        return u0;
    }
    std::mt19937_64 rng(mix_seed(cfg.seed, 4, 0, 0));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index t = 0; t < cfg.n_d; ++t) u0[t] = std::clamp(normal(rng), -cfg.d_u, cfg.d_u);
    return u0;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg) {
    if (cfg.n_d < 1 || cfg.n_e < 1 || cfg.n_a < 1 || cfg.n_b < 1 || cfg.n_c < 1)
        throw DomainError("run: horizons and orders must be positive");
    if (cfg.d_u <= 0.0 || cfg.d_c < 0.0 || cfg.d_v < 0.0 || cfg.sigma2 < 0.0)
        throw DomainError("run: bounds must be nonnegative (d_u positive)");

    const auto t_start = std::chrono::steady_clock::now();
    RunResult out{RunRecord{}, IterationStore(cfg.n_d, make_reference(cfg), 0), make_plant(cfg)};
    out.record.method = cfg.method;
    out.store.seed = cfg.seed;
    out.store.config_hash = config_hash(cfg);

    // Iteration 0: the initial experiment.
    {
        const Vec u0 = initial_input(cfg);
        std::mt19937_64 rng(mix_seed(cfg.seed, 3, 0, 0));
        bool distorted = false;
        Vec v = Vec::Zero(cfg.n_d + 1);
        v.tail(cfg.n_d) = sample_noise(rng, cfg.n_d, cfg.sigma2, cfg.d_v, distorted);
        out.record.noise_distorted = distorted;
        Vec u_ext = Vec::Zero(cfg.n_d + 1);
        u_ext.head(cfg.n_d) = u0;
        const Vec y_true = simulate_iteration(out.plant, u_ext, Vec::Zero(cfg.n_d + 1));
        out.store.append_iteration(u0, y_true + v, v);
    }

    LoopContext ctx{cfg, out.plant, out.store, out.record};
    switch (cfg.method) {
        case Method::Krilc:
        case Method::KrilcLs:
            run_krilc_loop(ctx);
            break;
        case Method::Adaptive:
            run_adaptive_loop(ctx);
            break;
        case Method::Inversion:
            run_inversion_loop(ctx);
            break;
    }

    for (Index j = out.store.first_iteration(); j < out.store.end_iteration(); ++j) {
        out.record.max_abs_u = std::max(out.record.max_abs_u, out.store.u_row(j).cwiseAbs().maxCoeff());
    }
    for (const IterationMetrics& m : out.record.per_iteration)
        out.record.max_theta_norm = std::max(out.record.max_theta_norm, m.max_theta_norm);

    if (cfg.method == Method::Krilc || cfg.method == Method::KrilcLs) {
        const double d_r = out.store.reference().cwiseAbs().maxCoeff();
        out.record.bound = theorem1_report(to_state_space(out.plant), cfg.d_c, cfg.d_u, cfg.d_v, d_r,
                                           out.plant.n_b, cfg.n_c);
    }

    out.record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return out;
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw DomainError("quantile: empty sample");
    std::sort(values.begin(), values.end());
    const double h = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

CampaignSummary run_campaign(const std::vector<ExperimentConfig>& configs, int parallelism,
                             const std::string& out_dir) {
    CampaignSummary summary;
    summary.runs.resize(configs.size());
    if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

    parallel_for(0, static_cast<Index>(configs.size()), std::max(1, parallelism), [&](Index i) {
        const ExperimentConfig& cfg = configs[static_cast<std::size_t>(i)];
        const RunResult result = run_experiment(cfg);
        CampaignRunSummary& slot = summary.runs[static_cast<std::size_t>(i)];
        slot.system_seed = cfg.gen_seed;
        slot.max_abs_u = result.record.max_abs_u;
        slot.max_theta_norm = result.record.max_theta_norm;
        for (const IterationMetrics& m : result.record.per_iteration)
            slot.tracking_fits.push_back(m.tracking_fit);
        if (!result.record.per_iteration.empty())
            slot.final_model_fit = result.record.per_iteration.back().avg_model_fit;
        if (!out_dir.empty()) {
            char name[32];
            std::snprintf(name, sizeof(name), "run_%04d", static_cast<int>(i));
            save_run((std::filesystem::path(out_dir) / name).string(), cfg, result);
        }
    });

    std::size_t max_iters = 0;
    for (const auto& run : summary.runs) max_iters = std::max(max_iters, run.tracking_fits.size());
    for (std::size_t j = 0; j < max_iters; ++j) {
        std::vector<double> fits;
        for (const auto& run : summary.runs)
            if (j < run.tracking_fits.size() && run.tracking_fits[j]) fits.push_back(*run.tracking_fits[j]);
        CampaignAggregateRow row;
        row.j = static_cast<Index>(j + 1);
        row.count = static_cast<int>(fits.size());
        if (!fits.empty()) {
            double sum = 0.0;
            for (double f : fits) sum += f;
            row.mean = sum / static_cast<double>(fits.size());
            row.q1 = quantile(fits, 0.25);
            row.median = quantile(fits, 0.5);
            row.q3 = quantile(fits, 0.75);
            row.min = *std::min_element(fits.begin(), fits.end());
            row.max = *std::max_element(fits.begin(), fits.end());
        }
        summary.aggregate.push_back(row);
    }
    return summary;
}

ModelStudyResult run_model_study(const ExperimentConfig& cfg) {
    ExperimentConfig base = cfg;
    base.reference = "zero";
    const LtvArxModel plant = make_plant(base);
    IterationStore store(cfg.n_d, Vec::Zero(cfg.n_d + 1), 0);

    std::mt19937_64 input_rng(mix_seed(cfg.seed, 5, 0, 0));
    std::normal_distribution<double> white(0.0, 1.0);
    std::mt19937_64 noise_rng;
    bool distorted = false;
    for (Index j = 0; j < cfg.n_e; ++j) {
        Vec u = Vec::Zero(cfg.n_d + 1);
        for (Index t = 0; t < cfg.n_d; ++t) u[t] = white(input_rng);
        noise_rng.seed(mix_seed(cfg.seed, 3, static_cast<std::uint64_t>(j), 0));
        Vec v = Vec::Zero(cfg.n_d + 1);
        v.tail(cfg.n_d) = sample_noise(noise_rng, cfg.n_d, cfg.sigma2, cfg.d_v, distorted);
        const Vec y_true = simulate_iteration(plant, u, Vec::Zero(cfg.n_d + 1));
        store.append_iteration(u.head(cfg.n_d), y_true + v, v);
    }

    ModelStudyResult result;
    result.rls_fits.resize(cfg.n_d);
    result.ls_fits.resize(cfg.n_d);
    const Index j_end = store.end_iteration();
    parallel_for(2, cfg.n_d + 2, cfg.threads, [&](Index tp) {
        ModelEstimationConfig mcfg;
        mcfg.n_a = cfg.n_a;
        mcfg.n_b = cfg.n_b;
        mcfg.family_b = cfg.kernel_model;
        mcfg.family_a = cfg.kernel_model;
        mcfg.sure.random_starts = cfg.sure_starts;
        mcfg.sure.max_evals_per_start = cfg.sure_max_evals;
        mcfg.sure.tol_rel = cfg.sure_tol;
        mcfg.sure.seed = mix_seed(cfg.seed, 1, static_cast<std::uint64_t>(j_end), tp);
        const ModelEstimate rls = estimate_model(store, j_end, tp, mcfg);
        const ModelEstimate ls = estimate_model_ls(store, j_end, tp, cfg.n_a, cfg.n_b);
        const Vec truth = padded_true_theta(plant, tp, cfg.n_a, cfg.n_b);
        result.rls_fits[tp - 2] = model_fit(truth, rls.theta());
        result.ls_fits[tp - 2] = model_fit(truth, ls.theta());
    });
    double rls_sum = 0.0, ls_sum = 0.0;
    for (Index i = 0; i < cfg.n_d; ++i) {
        rls_sum += result.rls_fits[i];
        ls_sum += result.ls_fits[i];
    }
    result.rls_avg = rls_sum / static_cast<double>(cfg.n_d);
    result.ls_avg = ls_sum / static_cast<double>(cfg.n_d);
    return result;
}

}  // namespace krilc
