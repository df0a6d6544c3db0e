#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "krilc/runner.hpp"

namespace {

using namespace krilc;

ExperimentConfig resolve_config(const std::string& config_path, const std::string& preset) {
    if (!config_path.empty()) return load_config_file(config_path);
    if (!preset.empty()) return preset_config(preset);
    throw DomainError("either --config or --preset is required");
}

void apply_overrides(ExperimentConfig& cfg, const std::string& method, std::uint64_t seed,
                     bool seed_set, int threads) {
    if (!method.empty()) cfg.method = method_from_string(method);
    if (seed_set) cfg.seed = seed;
    if (threads > 0) cfg.threads = threads;
}

int cmd_run(const std::string& config_path, const std::string& preset, const std::string& method,
            std::uint64_t seed, bool seed_set, const std::string& out, int threads) {
    ExperimentConfig cfg = resolve_config(config_path, preset);
    apply_overrides(cfg, method, seed, seed_set, threads);
    const RunResult result = run_experiment(cfg);
    if (!out.empty()) save_run(out, cfg, result);

    std::cout << "method " << to_string(cfg.method) << " seed " << cfg.seed << "\n";
    if (!result.record.per_iteration.empty()) {
        const IterationMetrics& last = result.record.per_iteration.back();
        std::cout << "final_tracking_fit " << (last.tracking_fit ? g17(*last.tracking_fit) : "undefined")
                  << "\n";
        if (last.avg_model_fit) std::cout << "final_avg_model_fit " << g17(*last.avg_model_fit) << "\n";
    }
    std::cout << "max_abs_u " << g17(result.record.max_abs_u) << "\n";
    std::cout << "max_theta_norm " << g17(result.record.max_theta_norm) << "\n";
    if (result.record.bound) {
        const BoundReport& b = *result.record.bound;
        std::cout << "bound_condition_lhs " << g17(b.condition_lhs) << " holds "
                  << (b.condition_holds ? 1 : 0);
        if (b.condition_holds) std::cout << " ultimate_bound " << g17(b.ultimate_bound);
        std::cout << "\n";
    }
    std::cout << "wall_seconds " << g17(result.record.wall_seconds) << "\n";
    return 0;
}

int cmd_campaign(const std::string& config_path, const std::string& preset, const std::string& method,
                 std::uint64_t seed, bool seed_set, const std::string& out, int systems,
                 int parallel, int threads) {
    ExperimentConfig base = resolve_config(config_path, preset);
    apply_overrides(base, method, seed, seed_set, threads);
    std::vector<ExperimentConfig> configs;
    for (int s = 0; s < systems; ++s) {
        ExperimentConfig cfg = base;
        cfg.gen_seed = base.gen_seed + static_cast<std::uint64_t>(s);
        cfg.seed = base.seed + static_cast<std::uint64_t>(s);
        configs.push_back(std::move(cfg));
    }
    const CampaignSummary summary = run_campaign(configs, parallel, out);

    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!out.empty()) {
        file.open(std::filesystem::path(out) / "campaign_summary.txt");
        os = &file;
    }
    *os << "# j count mean q1 median q3 min max\n";
    for (const CampaignAggregateRow& row : summary.aggregate) {
        *os << row.j << ' ' << row.count << ' ' << g17(row.mean) << ' ' << g17(row.q1) << ' '
            << g17(row.median) << ' ' << g17(row.q3) << ' ' << g17(row.min) << ' ' << g17(row.max)
            << '\n';
    }
    if (!summary.aggregate.empty()) {
        const CampaignAggregateRow& last = summary.aggregate.back();
        std::cout << "final_iteration_mean_fit " << g17(last.mean) << " over " << last.count
                  << " runs\n";
    }
    return 0;
}

int cmd_bound(const std::string& config_path, const std::string& preset) {
    const ExperimentConfig cfg = resolve_config(config_path, preset);
    const LtvArxModel plant = make_plant(cfg);
    const Vec y_d = make_reference(cfg);
    const double d_r = y_d.cwiseAbs().maxCoeff();
    const BoundReport report =
        theorem1_report(to_state_space(plant), cfg.d_c, cfg.d_u, cfg.d_v, d_r, plant.n_b, cfg.n_c);
    std::cout << "d_g_u " << g17(report.d_g_u) << "\n";
    std::cout << "d_g_v " << g17(report.d_g_v) << "\n";
    std::cout << "condition_lhs " << g17(report.condition_lhs) << "\n";
    std::cout << "condition_holds " << (report.condition_holds ? 1 : 0) << "\n";
    if (report.condition_holds) std::cout << "ultimate_bound " << g17(report.ultimate_bound) << "\n";
    return 0;
}

int cmd_gen(int count, std::uint64_t seed, const std::string& out, int order, double radius,
            int horizon, bool no_filter) {
    std::filesystem::create_directories(out);
    for (int i = 0; i < count; ++i) {
        GeneratorConfig gen;
        gen.order = order;
        gen.radius = radius;
        gen.horizon = horizon;
        gen.seed = seed + static_cast<std::uint64_t>(i);
        if (!no_filter) gen.filter = GeneratorFilter{};
        const LtvArxModel model = generate_plant(gen);
        char name[32];
        std::snprintf(name, sizeof(name), "plant_%04d.txt", i);
        save_plant_file((std::filesystem::path(out) / name).string(), model);
    }
    std::cout << "wrote " << count << " plants to " << out << "\n";
    return 0;
}

int cmd_fit(const std::string& run_dir, bool check) {
    const FitCheck result = recompute_fits(run_dir);
    std::cout << "# j tracking_fit max_abs_u\n";
    for (const IterationMetrics& m : result.recomputed) {
        std::cout << m.j << ' ' << (m.tracking_fit ? g17(*m.tracking_fit) : "nan") << ' '
                  << g17(m.max_abs_u) << '\n';
    }
    if (check) {
        std::cout << (result.matches_record ? "record match: OK" : "record match: MISMATCH") << "\n";
        return result.matches_record ? 0 : 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kernel-regularized iterative learning control experiments"};
    app.require_subcommand(1);

    std::string config_path, preset, method, out, run_dir;
    std::uint64_t seed = 0;
    int systems = 10, parallel = 2, threads = 0, count = 1, order = 10, horizon = 201;
    double radius = 0.95;
    bool check = false, no_filter = false;

    auto add_common = [&](CLI::App* cmd, bool with_out) {
        cmd->add_option("--config", config_path, "experiment config file");
        cmd->add_option("--preset", preset, "preset name: sec51, sec52-model, sec52-control");
        if (with_out) cmd->add_option("--out", out, "output directory");
    };

    CLI::App* run = app.add_subcommand("run", "single experiment");
    add_common(run, true);
    run->add_option("--method", method, "KRILC, KRILC-LS, ADAPTIVE or INVERSION");
    CLI::Option* run_seed = run->add_option("--seed", seed, "master seed");
    run->add_option("--threads", threads, "worker threads for model estimation");

    CLI::App* campaign = app.add_subcommand("campaign", "Monte Carlo campaign");
    add_common(campaign, true);
    campaign->add_option("--method", method, "method to run");
    CLI::Option* campaign_seed = campaign->add_option("--seed", seed, "base seed");
    campaign->add_option("--systems", systems, "number of systems");
    campaign->add_option("--parallel", parallel, "parallel runs");
    campaign->add_option("--threads", threads, "worker threads per run");

    CLI::App* bound = app.add_subcommand("bound", "ultimate-bound report for a plant");
    add_common(bound, false);

    CLI::App* gen = app.add_subcommand("gen", "emit random plants");
    gen->add_option("--count", count, "number of plants");
    gen->add_option("--seed", seed, "base seed");
    gen->add_option("--out", out, "output directory")->required();
    gen->add_option("--order", order, "system order");
    gen->add_option("--radius", radius, "root disc radius");
    gen->add_option("--horizon", horizon, "time samples");
    gen->add_flag("--no-filter", no_filter, "skip acceptance filters");

    CLI::App* fit = app.add_subcommand("fit", "recompute metrics from stored traces");
    fit->add_option("run_dir", run_dir, "run directory")->required();
    fit->add_flag("--check", check, "compare against the stored record");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(config_path, preset, method, seed, !run_seed->empty(), out, threads);
        if (campaign->parsed())
            return cmd_campaign(config_path, preset, method, seed, !campaign_seed->empty(), out,
                                systems, parallel, threads);
        if (bound->parsed()) return cmd_bound(config_path, preset);
        if (gen->parsed()) return cmd_gen(count, seed, out, order, radius, horizon, no_filter);
        if (fit->parsed()) return cmd_fit(run_dir, check);
    } catch (const DomainError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return 1;
    } catch (const std::exception& err) {
        std::cerr << "runtime failure: " << err.what() << "\n";
        return 2;
    }
    return 0;
}
