#pragma once

#include <functional>

#include "krilc/types.hpp"

namespace krilc {

// Search-space coordinate scales. Optimizers work on the transformed
// coordinate; bounds are stated in natural scale.
enum class ParamScale { Log, Logit, Linear };

struct ParamSpec {
    ParamScale scale = ParamScale::Linear;
    double lo = 0.0;
    double hi = 1.0;

    double to_search(double natural) const;
    double from_search(double x) const;
    double search_lo() const;
    double search_hi() const;
};

struct NelderMeadOptions {
    int max_evals = 500;
    double tol_rel = 1e-8;
    // Initial simplex step as a fraction of each coordinate's box width.
    double initial_step = 0.25;
};

struct NelderMeadResult {
    Vec x;
    double value = 0.0;
    int evals = 0;
    bool converged = false;
};

// Box-constrained Nelder-Mead; proposals are clipped to [lo, hi].
NelderMeadResult nelder_mead(const std::function<double(const Vec&)>& f, const Vec& x0,
                             const Vec& lo, const Vec& hi, const NelderMeadOptions& opts = {});

// Golden-section maximization of a unimodal function on [lo, hi].
double golden_section_max(const std::function<double(double)>& f, double lo, double hi,
                          double tol, int max_iters = 200);

}  // namespace krilc
