#include "krilc/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace krilc {

namespace {

double clip(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

double ParamSpec::to_search(double natural) const {
    switch (scale) {
        case ParamScale::Log:
            return std::log(clip(natural, lo, hi));
        case ParamScale::Logit: {
            const double v = clip(natural, lo, hi);
            return std::log(v / (1.0 - v));
        }
        case ParamScale::Linear:
            return clip(natural, lo, hi);
    }
    return natural;
}

double ParamSpec::from_search(double x) const {
    switch (scale) {
        case ParamScale::Log:
            return clip(std::exp(x), lo, hi);
        case ParamScale::Logit:
            return clip(1.0 / (1.0 + std::exp(-x)), lo, hi);
        case ParamScale::Linear:
            return clip(x, lo, hi);
    }
    return x;
}

double ParamSpec::search_lo() const { return to_search(lo); }
double ParamSpec::search_hi() const { return to_search(hi); }

NelderMeadResult nelder_mead(const std::function<double(const Vec&)>& f, const Vec& x0,
                             const Vec& lo, const Vec& hi, const NelderMeadOptions& opts) {
    const Index dim = x0.size();
    int evals = 0;

    auto project = [&](Vec x) {
        for (Index i = 0; i < dim; ++i) x[i] = clip(x[i], lo[i], hi[i]);
        return x;
    };
    auto eval = [&](const Vec& x) {
        ++evals;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::max();
    };

    std::vector<Vec> pts;
    std::vector<double> vals;
    pts.reserve(dim + 1);
    pts.push_back(project(x0));
    for (Index i = 0; i < dim; ++i) {
        Vec p = pts[0];
        double step = opts.initial_step * (hi[i] - lo[i]);
        if (step == 0.0) step = 1e-3;
        // Step but stay in the box; flip direction if pinned at the upper edge.
        p[i] = (p[i] + step <= hi[i]) ? p[i] + step : p[i] - step;
        pts.push_back(project(p));
    }
    vals.resize(dim + 1);
    for (Index i = 0; i <= dim; ++i) vals[i] = eval(pts[i]);

    std::vector<Index> order(dim + 1);
    auto sort_simplex = [&]() {
        std::iota(order.begin(), order.end(), Index{0});
        std::sort(order.begin(), order.end(), [&](Index a, Index b) { return vals[a] < vals[b]; });
    };

    NelderMeadResult res;
    while (evals < opts.max_evals) {
        sort_simplex();
        const Index best = order.front(), worst = order.back(), second = order[dim - 1];
        const double spread = std::abs(vals[worst] - vals[best]);
        if (spread <= opts.tol_rel * (std::abs(vals[best]) + 1e-12)) {
            res.converged = true;
            break;
        }

        Vec centroid = Vec::Zero(dim);
        for (Index i = 0; i <= dim; ++i)
            if (i != worst) centroid += pts[i];
        centroid /= static_cast<double>(dim);

        const Vec refl = project(centroid + (centroid - pts[worst]));
        const double frefl = eval(refl);
        if (frefl < vals[best]) {
            const Vec expd = project(centroid + 2.0 * (centroid - pts[worst]));
            const double fexpd = eval(expd);
            if (fexpd < frefl) {
                pts[worst] = expd;
                vals[worst] = fexpd;
            } else {
                pts[worst] = refl;
                vals[worst] = frefl;
            }
        } else if (frefl < vals[second]) {
            pts[worst] = refl;
            vals[worst] = frefl;
        } else {
            const Vec outer = frefl < vals[worst] ? refl : pts[worst];
            const double fouter = frefl < vals[worst] ? frefl : vals[worst];
            const Vec contr = project(centroid + 0.5 * (outer - centroid));
            const double fcontr = eval(contr);
            if (fcontr < fouter) {
                pts[worst] = contr;
                vals[worst] = fcontr;
            } else {
                for (Index i = 0; i <= dim; ++i) {
                    if (i == best) continue;
                    pts[i] = project(pts[best] + 0.5 * (pts[i] - pts[best]));
                    vals[i] = eval(pts[i]);
                }
            }
        }
    }

    sort_simplex();
    res.x = pts[order.front()];
    res.value = vals[order.front()];
    res.evals = evals;
    return res;
}

double golden_section_max(const std::function<double(double)>& f, double lo, double hi,
                          double tol, int max_iters) {
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - phi * (b - a);
    double d = a + phi * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < max_iters && (b - a) > tol; ++it) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    return fc > fd ? c : d;
}

}  // namespace krilc
