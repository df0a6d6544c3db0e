#pragma once

#include <optional>
#include <string>
#include <vector>

#include "krilc/baselines.hpp"
#include "krilc/controller.hpp"
#include "krilc/model_estimation.hpp"
#include "krilc/plant.hpp"
#include "krilc/store.hpp"
#include "krilc/sysgen.hpp"
#include "krilc/types.hpp"

namespace krilc {

enum class Method { Krilc, KrilcLs, Adaptive, Inversion };
std::string to_string(Method method);
Method method_from_string(const std::string& name);

enum class InitialExperiment { WhiteNoise, AdaptivePass, Zero };

struct ExperimentConfig {
    // Plant selection: "fixed51", "generated", or a plant-file path.
    std::string plant = "fixed51";
    Index gen_order = 10;
    double gen_radius = 0.95;
    bool gen_filter = true;
    std::uint64_t gen_seed = 1;

    // Reference selection: "sine51", "cubic52" or "zero".
    std::string reference = "sine51";

    Method method = Method::Krilc;
    Index n_a = 10;
    Index n_b = 10;
    Index n_c = 10;
    double d_u = 2.0;
    double d_c = 0.7;
    double sigma2 = 0.01;
    double d_v = 0.05;
    Index n_e = 50;
    Index n_d = 50;
    KernelFamily kernel_model = KernelFamily::DI;
    KernelFamily kernel_controller = KernelFamily::DI;
    std::uint64_t seed = 1;
    InitialExperiment init = InitialExperiment::WhiteNoise;

    // Hyper-parameter search effort.
    int sure_starts = 5;
    int sure_max_evals = 500;
    double sure_tol = 1e-8;
    int threads = 1;

    AdaptiveIlcParams adaptive;
    double inversion_gamma = 0.9;
};

std::string serialize_config(const ExperimentConfig& cfg);
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);
std::string config_hash(const ExperimentConfig& cfg);

ExperimentConfig preset_config(const std::string& name);

struct IterationMetrics {
    Index j = 0;
    std::optional<double> tracking_fit;
    std::optional<double> avg_model_fit;
    double max_abs_u = 0.0;
    double max_theta_norm = 0.0;
};

struct RunRecord {
    Method method = Method::Krilc;
    std::vector<IterationMetrics> per_iteration;
    double max_abs_u = 0.0;
    double max_theta_norm = 0.0;
    Index u_clip_count = 0;
    Index fallback_count = 0;
    bool noise_distorted = false;
    std::optional<BoundReport> bound;
    double wall_seconds = 0.0;
};

struct RunResult {
    RunRecord record;
    IterationStore store;
    LtvArxModel plant;
};

// Full experiment: initial experiment as iteration 0, then the per-iteration
// double loop of the selected method against the simulated plant with fresh
// truncated noise. Deterministic for a fixed config + seed.
RunResult run_experiment(const ExperimentConfig& cfg);

// 100 (1 - ||y_d - y|| / ||y_d - mean(y_d)||); throws UndefinedFitError when
// the reference is constant.
double tracking_fit(const Vec& y_d, const Vec& y);

// Same normalized score over coefficient vectors at one time instant.
double model_fit(const Vec& theta_true, const Vec& theta_hat);

// Tracking fit over the controlled window t = 2..n_d+1, computed from stored
// rows only (y_d as y + e, true output as y - v) so that a reload of the
// persisted traces reproduces it bit-for-bit.
std::optional<double> tracking_fit_from_rows(const Vec& y_row, const Vec& v_row, const Vec& e_row);

// True coefficient vector [b; a] at time t, zero padded to estimator orders.
Vec padded_true_theta(const LtvArxModel& plant, Index t, Index n_a_est, Index n_b_est);

struct CampaignRunSummary {
    std::uint64_t system_seed = 0;
    std::vector<std::optional<double>> tracking_fits;  // by iteration
    std::optional<double> final_model_fit;
    double max_abs_u = 0.0;
    double max_theta_norm = 0.0;
};

struct CampaignAggregateRow {
    Index j = 0;
    int count = 0;
    double mean = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, min = 0.0, max = 0.0;
};

struct CampaignSummary {
    std::vector<CampaignRunSummary> runs;
    std::vector<CampaignAggregateRow> aggregate;  // tracking fit by iteration
};

// Independent runs on a worker pool, aggregated into box-plot-ready rows.
// When out_dir is nonempty every run is persisted under it.
CampaignSummary run_campaign(const std::vector<ExperimentConfig>& configs, int parallelism,
                             const std::string& out_dir = "");

// Linear-interpolation quantile of a sample (the sorting happens inside).
double quantile(std::vector<double> values, double p);

// Open-loop estimation study: white-noise data bank, then per-time-instant
// regularized and plain least-squares fits at the final iteration.
struct ModelStudyResult {
    std::vector<double> rls_fits;  // per time instant
    std::vector<double> ls_fits;
    double rls_avg = 0.0;
    double ls_avg = 0.0;
};
ModelStudyResult run_model_study(const ExperimentConfig& cfg);

// Persistence: one directory per run holding config.txt, traces.txt and
// record.txt (and plant.txt). Decimal values at 17 significant digits.
void save_run(const std::string& dir, const ExperimentConfig& cfg, const RunResult& result);
IterationStore load_traces(const std::string& path, const Vec& y_d_hint = Vec());
RunRecord load_record(const std::string& path);

// Recomputes the reloadable metrics (tracking fits, input maxima) from a
// run directory; used to verify persisted records.
struct FitCheck {
    std::vector<IterationMetrics> recomputed;
    bool matches_record = false;
};
FitCheck recompute_fits(const std::string& dir);

LtvArxModel make_plant(const ExperimentConfig& cfg);
Vec make_reference(const ExperimentConfig& cfg);

}  // namespace krilc
