#include "krilc/plant.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace krilc {

Vec simulate_iteration(const LtvArxModel& model, const Vec& u, const Vec& v) {
    if (u.size() != v.size()) throw DomainError("simulate: u and v must have equal length");
    const Index t_end = u.size();
    if (t_end > model.horizon()) throw IndexError("simulate: horizon exceeds model coefficients");

    Vec y = Vec::Zero(t_end);
    for (Index t = 1; t <= t_end; ++t) {
        double acc = v[t - 1];
        for (Index l = 1; l <= model.n_a; ++l) {
            const Index tl = t - l;
            if (tl >= 1) acc -= model.a(t - 1, l - 1) * y[tl - 1];
        }
        for (Index k = 1; k <= model.n_b; ++k) {
            const Index tk = t - k;
            if (tk >= 1) acc += model.b(t - 1, k - 1) * u[tk - 1];
        }
        if (!std::isfinite(acc)) throw InstabilityError("simulate: non-finite output at t = " + std::to_string(t), t);
        y[t - 1] = acc;
    }
    return y;
}

StateSpaceLtv to_state_space(const LtvArxModel& model) {
    StateSpaceLtv ss;
    ss.n_a = model.n_a;
    ss.n_b = model.n_b;
    const Index horizon = model.horizon();
    ss.a.reserve(horizon);
    ss.b.reserve(horizon);
    for (Index t = 0; t < horizon; ++t) {
        Mat at = Mat::Zero(model.n_a, model.n_a);
        at.row(0) = -model.a.row(t);  // coefficients at time t+1
        at.bottomLeftCorner(model.n_a - 1, model.n_a - 1).setIdentity();
        Mat bt = Mat::Zero(model.n_a, model.n_b + 1);
        bt.row(0).head(model.n_b) = model.b.row(t);
        bt(0, model.n_b) = 1.0;
        ss.a.push_back(std::move(at));
        ss.b.push_back(std::move(bt));
    }
    return ss;
}

Eigen::RowVectorXd impulse_response(const StateSpaceLtv& ss, Index t, Index i) {
    if (t < i + 1 || i < 0 || t > ss.horizon()) throw IndexError("impulse_response: requires 0 <= i < t <= horizon");
    Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(ss.n_a);
    r[0] = 1.0;
    for (Index k = t - 1; k >= i + 1; --k) r = r * ss.a[k];
    return r * ss.b[i];
}

BiboSums bibo_sums(const StateSpaceLtv& ss) {
    BiboSums sums;
    const Index horizon = ss.horizon();
    for (Index t = 1; t <= horizon; ++t) {
        Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(ss.n_a);
        r[0] = 1.0;
        double sum_u = 0.0, sum_v = 0.0;
        for (Index i = t - 1; i >= 0; --i) {
            const Eigen::RowVectorXd g = r * ss.b[i];
            sum_u += g.head(ss.n_b).norm();
            sum_v += std::abs(g[ss.n_b]);
            if (i > 0) r = r * ss.a[i];
        }
        if (!std::isfinite(sum_u) || !std::isfinite(sum_v))
            throw InstabilityError("bibo_sums: non-finite impulse sum at t = " + std::to_string(t), t);
        sums.d_g_u = std::max(sums.d_g_u, sum_u);
        sums.d_g_v = std::max(sums.d_g_v, sum_v);
    }
    return sums;
}

BoundReport theorem1_report(const StateSpaceLtv& ss, double d_c, double d_u, double d_v,
                            double d_r, Index n_b, Index n_c) {
    const BiboSums sums = bibo_sums(ss);
    BoundReport report;
    report.d_g_u = sums.d_g_u;
    report.d_g_v = sums.d_g_v;
    const double nb = static_cast<double>(n_b);
    const double nc = static_cast<double>(n_c);
    report.condition_lhs = sums.d_g_u * d_c * std::sqrt(nb * nc * (nc + 1.0) / 2.0);
    report.condition_holds = report.condition_lhs < 1.0;
    if (report.condition_holds) {
        const double drive = std::sqrt(nb) * sums.d_g_u * d_u + sums.d_g_v * d_v;
        const double amplify = 2.0 * sums.d_g_u * d_c * std::sqrt(nb * nc * (nc * nc - 1.0) / 2.0) + 1.0;
        report.ultimate_bound = (drive * amplify + d_r) / (1.0 - report.condition_lhs);
    } else {
        report.ultimate_bound = std::numeric_limits<double>::quiet_NaN();
    }
    return report;
}

void save_plant(std::ostream& os, const LtvArxModel& model) {
    os << "krilc-plant-v1\n";
    os << "n_a " << model.n_a << "\n";
    os << "n_b " << model.n_b << "\n";
    os << "horizon " << model.horizon() << "\n";
    for (Index t = 0; t < model.horizon(); ++t) {
        os << (t + 1);
        for (Index l = 0; l < model.n_a; ++l) os << ' ' << g17(model.a(t, l));
        for (Index k = 0; k < model.n_b; ++k) os << ' ' << g17(model.b(t, k));
        os << '\n';
    }
}

LtvArxModel load_plant(std::istream& is) {
    std::string header;
    if (!std::getline(is, header) || header != "krilc-plant-v1")
        throw DomainError("plant file: missing krilc-plant-v1 header");
    std::string key;
    Index n_a = 0, n_b = 0, horizon = 0;
    for (int row = 0; row < 3; ++row) {
        is >> key;
        if (key == "n_a")
            is >> n_a;
        else if (key == "n_b")
            is >> n_b;
        else if (key == "horizon")
            is >> horizon;
        else
            throw DomainError("plant file: unexpected key " + key);
    }
    if (n_a < 1 || n_b < 1 || horizon < 1) throw DomainError("plant file: invalid dimensions");
    LtvArxModel model;
    model.n_a = n_a;
    model.n_b = n_b;
    model.a = Mat::Zero(horizon, n_a);
    model.b = Mat::Zero(horizon, n_b);
    for (Index t = 0; t < horizon; ++t) {
        Index ti = 0;
        is >> ti;
        if (!is || ti != t + 1) throw DomainError("plant file: bad row index at t = " + std::to_string(t + 1));
        for (Index l = 0; l < n_a; ++l) is >> model.a(t, l);
        for (Index k = 0; k < n_b; ++k) is >> model.b(t, k);
    }
    if (!is) throw DomainError("plant file: truncated coefficient table");
    return model;
}

void save_plant_file(const std::string& path, const LtvArxModel& model) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open for write: " + path);
    save_plant(os, model);
}

LtvArxModel load_plant_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open for read: " + path);
    return load_plant(is);
}

}  // namespace krilc
