#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "krilc/runner.hpp"

namespace krilc {

namespace {

std::string init_to_string(InitialExperiment init) {
    switch (init) {
        case InitialExperiment::WhiteNoise: return "white_noise";
        case InitialExperiment::AdaptivePass: return "adaptive_pass";
        case InitialExperiment::Zero: return "zero";
    }
    return "?";
}

InitialExperiment init_from_string(const std::string& name) {
    if (name == "white_noise") return InitialExperiment::WhiteNoise;
    if (name == "adaptive_pass") return InitialExperiment::AdaptivePass;
    if (name == "zero") return InitialExperiment::Zero;
    throw DomainError("unknown initial experiment mode: " + name);
}

std::string opt_fit(const std::optional<double>& v) { return v ? g17(*v) : "nan"; }

std::optional<double> parse_opt_fit(const std::string& token) {
    if (token == "nan") return std::nullopt;
    return std::stod(token);
}

}  // namespace

std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "plant " << cfg.plant << "\n";
    os << "gen_order " << cfg.gen_order << "\n";
    os << "gen_radius " << g17(cfg.gen_radius) << "\n";
    os << "gen_filter " << (cfg.gen_filter ? 1 : 0) << "\n";
    os << "gen_seed " << cfg.gen_seed << "\n";
    os << "reference " << cfg.reference << "\n";
    os << "method " << to_string(cfg.method) << "\n";
    os << "n_a " << cfg.n_a << "\n";
    os << "n_b " << cfg.n_b << "\n";
    os << "n_c " << cfg.n_c << "\n";
    os << "d_u " << g17(cfg.d_u) << "\n";
    os << "d_c " << g17(cfg.d_c) << "\n";
    os << "sigma2 " << g17(cfg.sigma2) << "\n";
    os << "d_v " << g17(cfg.d_v) << "\n";
    os << "n_e " << cfg.n_e << "\n";
    os << "n_d " << cfg.n_d << "\n";
    os << "kernel_model " << to_string(cfg.kernel_model) << "\n";
    os << "kernel_controller " << to_string(cfg.kernel_controller) << "\n";
    os << "seed " << cfg.seed << "\n";
    os << "init " << init_to_string(cfg.init) << "\n";
    os << "sure_starts " << cfg.sure_starts << "\n";
    os << "sure_max_evals " << cfg.sure_max_evals << "\n";
    os << "sure_tol " << g17(cfg.sure_tol) << "\n";
    os << "threads " << cfg.threads << "\n";
    os << "adaptive_l_theta " << cfg.adaptive.l_theta << "\n";
    os << "adaptive_eta_theta " << g17(cfg.adaptive.eta_theta) << "\n";
    os << "adaptive_mu_theta " << g17(cfg.adaptive.mu_theta) << "\n";
    os << "adaptive_eta_psi " << g17(cfg.adaptive.eta_psi) << "\n";
    os << "adaptive_mu_psi " << g17(cfg.adaptive.mu_psi) << "\n";
    os << "inversion_gamma " << g17(cfg.inversion_gamma) << "\n";
    return os.str();
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string key, value;
        ls >> key;
        std::getline(ls, value);
        const auto start = value.find_first_not_of(' ');
        if (start == std::string::npos) throw DomainError("config: missing value for key " + key);
        value = value.substr(start);
        try {
            if (key == "plant") cfg.plant = value;
            else if (key == "gen_order") cfg.gen_order = std::stol(value);
            else if (key == "gen_radius") cfg.gen_radius = std::stod(value);
            else if (key == "gen_filter") cfg.gen_filter = std::stol(value) != 0;
            else if (key == "gen_seed") cfg.gen_seed = std::stoull(value);
            else if (key == "reference") cfg.reference = value;
            else if (key == "method") cfg.method = method_from_string(value);
            else if (key == "n_a") cfg.n_a = std::stol(value);
            else if (key == "n_b") cfg.n_b = std::stol(value);
            else if (key == "n_c") cfg.n_c = std::stol(value);
            else if (key == "d_u") cfg.d_u = std::stod(value);
            else if (key == "d_c") cfg.d_c = std::stod(value);
            else if (key == "sigma2") cfg.sigma2 = std::stod(value);
            else if (key == "d_v") cfg.d_v = std::stod(value);
            else if (key == "n_e") cfg.n_e = std::stol(value);
            else if (key == "n_d") cfg.n_d = std::stol(value);
            else if (key == "kernel_model") cfg.kernel_model = kernel_family_from_string(value);
            else if (key == "kernel_controller") cfg.kernel_controller = kernel_family_from_string(value);
            else if (key == "seed") cfg.seed = std::stoull(value);
            else if (key == "init") cfg.init = init_from_string(value);
            else if (key == "sure_starts") cfg.sure_starts = std::stoi(value);
            else if (key == "sure_max_evals") cfg.sure_max_evals = std::stoi(value);
            else if (key == "sure_tol") cfg.sure_tol = std::stod(value);
            else if (key == "threads") cfg.threads = std::stoi(value);
            else if (key == "adaptive_l_theta") cfg.adaptive.l_theta = std::stol(value);
            else if (key == "adaptive_eta_theta") cfg.adaptive.eta_theta = std::stod(value);
            else if (key == "adaptive_mu_theta") cfg.adaptive.mu_theta = std::stod(value);
            else if (key == "adaptive_eta_psi") cfg.adaptive.eta_psi = std::stod(value);
            else if (key == "adaptive_mu_psi") cfg.adaptive.mu_psi = std::stod(value);
            else if (key == "inversion_gamma") cfg.inversion_gamma = std::stod(value);
            else throw DomainError("config: unknown key " + key);
        } catch (const std::invalid_argument&) {
            throw DomainError("config: bad value for key " + key + ": " + value);
        } catch (const std::out_of_range&) {
            throw DomainError("config: value out of range for key " + key + ": " + value);
        }
    }
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DomainError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_config(buf.str());
}

std::string config_hash(const ExperimentConfig& cfg) {
    const std::string text = serialize_config(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ExperimentConfig preset_config(const std::string& name) {
    ExperimentConfig cfg;
    if (name == "sec51") {
        cfg.plant = "fixed51";
        cfg.reference = "sine51";
        cfg.n_a = cfg.n_b = cfg.n_c = 10;
        cfg.d_u = 2.0;
        cfg.d_c = 0.7;
        cfg.sigma2 = 0.01;
        cfg.d_v = 0.05;
        cfg.n_e = 50;
        cfg.n_d = 50;
        return cfg;
    }
    if (name == "sec52-model") {
        cfg.plant = "generated";
        cfg.gen_filter = false;
        cfg.reference = "zero";
        cfg.n_a = cfg.n_b = 20;
        cfg.n_c = 10;
        cfg.sigma2 = 1.0;
        cfg.d_v = 2.0;
        cfg.n_e = 200;
        cfg.n_d = 200;
        cfg.d_u = 15.0;
        cfg.d_c = 0.3;
        return cfg;
    }
    if (name == "sec52-control") {
        cfg.plant = "generated";
        cfg.gen_filter = true;
        cfg.reference = "cubic52";
        cfg.n_a = cfg.n_b = 20;
        cfg.n_c = 10;
        cfg.d_u = 15.0;
        cfg.d_c = 0.3;
        cfg.sigma2 = 0.01;
        cfg.d_v = 0.05;
        cfg.n_e = 150;
        cfg.n_d = 200;
        return cfg;
    }
    throw DomainError("unknown preset: " + name);
}

void save_run(const std::string& dir, const ExperimentConfig& cfg, const RunResult& result) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        std::ofstream os(fs::path(dir) / "config.txt");
        os << serialize_config(cfg);
    }
    save_plant_file((fs::path(dir) / "plant.txt").string(), result.plant);
    {
        std::ofstream os(fs::path(dir) / "traces.txt");
        os << "# krilc-traces-v1 config_hash=" << result.store.config_hash << "\n";
        os << "# columns: j t u y v e\n";
        const IterationStore& store = result.store;
        for (Index j = store.first_iteration(); j < store.end_iteration(); ++j) {
            for (Index t = 1; t <= store.n_d() + 1; ++t) {
                const double u = t <= store.n_d() ? store.u_row(j)[t - 1] : 0.0;
                os << j << ' ' << t << ' ' << g17(u) << ' ' << g17(store.y_row(j)[t - 1]) << ' '
                   << g17(store.v_row(j)[t - 1]) << ' ' << g17(store.e_row(j)[t - 1]) << '\n';
            }
        }
    }
    {
        std::ofstream os(fs::path(dir) / "record.txt");
        os << "krilc-record-v1\n";
        os << "method " << to_string(result.record.method) << "\n";
        os << "wall_seconds " << g17(result.record.wall_seconds) << "\n";
        os << "max_abs_u " << g17(result.record.max_abs_u) << "\n";
        os << "max_theta_norm " << g17(result.record.max_theta_norm) << "\n";
        os << "u_clip_count " << result.record.u_clip_count << "\n";
        os << "fallback_count " << result.record.fallback_count << "\n";
        os << "noise_distorted " << (result.record.noise_distorted ? 1 : 0) << "\n";
        if (result.record.bound) {
            const BoundReport& b = *result.record.bound;
            os << "bound " << g17(b.d_g_u) << ' ' << g17(b.d_g_v) << ' ' << g17(b.condition_lhs)
               << ' ' << (b.condition_holds ? 1 : 0) << ' '
               << (b.condition_holds ? g17(b.ultimate_bound) : std::string("0")) << "\n";
        }
        os << "iterations " << result.record.per_iteration.size() << "\n";
        os << "# columns: j tracking_fit avg_model_fit max_abs_u max_theta_norm\n";
        for (const IterationMetrics& m : result.record.per_iteration) {
            os << m.j << ' ' << opt_fit(m.tracking_fit) << ' ' << opt_fit(m.avg_model_fit) << ' '
               << g17(m.max_abs_u) << ' ' << g17(m.max_theta_norm) << '\n';
        }
    }
}

IterationStore load_traces(const std::string& path, const Vec& y_d_hint) {
    std::ifstream is(path);
    if (!is) throw DomainError("cannot open traces file: " + path);
    struct Row {
        Index j, t;
        double u, y, v, e;
    };
    std::vector<Row> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        Row r{};
        if (!(ls >> r.j >> r.t >> r.u >> r.y >> r.v >> r.e))
            throw DomainError("traces: malformed row: " + line);
        rows.push_back(r);
    }
    if (rows.empty()) throw DomainError("traces: no rows");

    Index n_d_plus1 = 0, first = rows.front().j;
    for (const Row& r : rows) {
        n_d_plus1 = std::max(n_d_plus1, r.t);
        first = std::min(first, r.j);
    }
    const Index n_d = n_d_plus1 - 1;

    Vec y_d = y_d_hint;
    if (y_d.size() != n_d + 1) {
        // Reference is recoverable from any stored iteration as y + e.
        y_d = Vec::Zero(n_d + 1);
        for (const Row& r : rows)
            if (r.j == first) y_d[r.t - 1] = r.y + r.e;
    }
    IterationStore store(n_d, y_d, first);
    Index expected_j = first;
    Vec u = Vec::Zero(n_d), y = Vec::Zero(n_d + 1), v = Vec::Zero(n_d + 1), e = Vec::Zero(n_d + 1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Row& r = rows[i];
        if (r.j != expected_j) throw DomainError("traces: iterations out of order");
        if (r.t <= n_d) u[r.t - 1] = r.u;
        y[r.t - 1] = r.y;
        v[r.t - 1] = r.v;
        e[r.t - 1] = r.e;
        if (r.t == n_d + 1) {
            store.append_iteration_raw(u, y, v, e);
            ++expected_j;
        }
    }
    return store;
}

RunRecord load_record(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DomainError("cannot open record file: " + path);
    std::string line;
    if (!std::getline(is, line) || line != "krilc-record-v1")
        throw DomainError("record: missing krilc-record-v1 header");
    RunRecord rec;
    Index n_iters = 0;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "method") {
            std::string m;
            ls >> m;
            rec.method = method_from_string(m);
        } else if (key == "wall_seconds")
            ls >> rec.wall_seconds;
        else if (key == "max_abs_u")
            ls >> rec.max_abs_u;
        else if (key == "max_theta_norm")
            ls >> rec.max_theta_norm;
        else if (key == "u_clip_count")
            ls >> rec.u_clip_count;
        else if (key == "fallback_count")
            ls >> rec.fallback_count;
        else if (key == "noise_distorted") {
            int flag = 0;
            ls >> flag;
            rec.noise_distorted = flag != 0;
        } else if (key == "bound") {
            BoundReport b;
            int holds = 0;
            ls >> b.d_g_u >> b.d_g_v >> b.condition_lhs >> holds >> b.ultimate_bound;
            b.condition_holds = holds != 0;
            if (!b.condition_holds) b.ultimate_bound = std::numeric_limits<double>::quiet_NaN();
            rec.bound = b;
        } else if (key == "iterations") {
            ls >> n_iters;
            break;
        } else
            throw DomainError("record: unknown key " + key);
    }
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        IterationMetrics m;
        std::string fit, mfit;
        if (!(ls >> m.j >> fit >> mfit >> m.max_abs_u >> m.max_theta_norm))
            throw DomainError("record: malformed iteration row: " + line);
        m.tracking_fit = parse_opt_fit(fit);
        m.avg_model_fit = parse_opt_fit(mfit);
        rec.per_iteration.push_back(std::move(m));
    }
    if (static_cast<Index>(rec.per_iteration.size()) != n_iters)
        throw DomainError("record: iteration count mismatch");
    return rec;
}

FitCheck recompute_fits(const std::string& dir) {
    namespace fs = std::filesystem;
    const IterationStore store = load_traces((fs::path(dir) / "traces.txt").string());
    const RunRecord record = load_record((fs::path(dir) / "record.txt").string());

    FitCheck check;
    double max_abs_u = 0.0;
    for (Index j = store.first_iteration(); j < store.end_iteration(); ++j)
        max_abs_u = std::max(max_abs_u, store.u_row(j).cwiseAbs().maxCoeff());
    // Metrics start at the first method iteration; an initial experiment at
    // index 0 contributes to the input maximum only.
    const Index j_begin = store.end_iteration() - static_cast<Index>(record.per_iteration.size());
    for (Index j = j_begin; j < store.end_iteration(); ++j) {
        IterationMetrics m;
        m.j = j;
        m.tracking_fit = tracking_fit_from_rows(store.y_row(j), store.v_row(j), store.e_row(j));
        m.max_abs_u = store.u_row(j).cwiseAbs().maxCoeff();
        check.recomputed.push_back(std::move(m));
    }

    check.matches_record = g17(max_abs_u) == g17(record.max_abs_u) &&
                           check.recomputed.size() == record.per_iteration.size();
    if (check.matches_record) {
        for (std::size_t i = 0; i < check.recomputed.size(); ++i) {
            const auto& a = check.recomputed[i].tracking_fit;
            const auto& b = record.per_iteration[i].tracking_fit;
            if (opt_fit(a) != opt_fit(b) ||
                g17(check.recomputed[i].max_abs_u) != g17(record.per_iteration[i].max_abs_u)) {
                check.matches_record = false;
                break;
            }
        }
    }
    return check;
}

}  // namespace krilc
