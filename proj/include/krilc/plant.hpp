#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "krilc/types.hpp"

namespace krilc {

// Time-varying ARX coefficients over a finite horizon. Row t-1 of `a` and
// `b` holds a_1(t)..a_na(t) and b_1(t)..b_nb(t); the output recursion is
//   y(t) = -sum_l a_l(t) y(t-l) + sum_k b_k(t) u(t-k) + v(t).
struct LtvArxModel {
    Index n_a = 0;
    Index n_b = 0;
    Mat a;  // horizon x n_a
    Mat b;  // horizon x n_b

    Index horizon() const { return a.rows(); }
};

// Exact recursion for t = 1..T with zero padding at nonpositive time
// arguments; T = u.size() = v.size() <= model horizon.
Vec simulate_iteration(const LtvArxModel& model, const Vec& u, const Vec& v);

// Companion state-space realization: x(t+1) = A(t) x(t) + B(t) uu(t),
// y(t) = C x(t) with C = [1 0 ... 0] and uu(t) = [u(t)..u(t-n_b+1), v(t+1)].
struct StateSpaceLtv {
    Index n_a = 0;
    Index n_b = 0;
    std::vector<Mat> a;  // n_a x n_a, index t = 0..horizon-1
    std::vector<Mat> b;  // n_a x (n_b+1)

    Index horizon() const { return static_cast<Index>(a.size()); }
};

StateSpaceLtv to_state_space(const LtvArxModel& model);

// Impulse response row G(t,i) = C Psi(t,i+1) B(i), 1 x (n_b+1); the leading
// n_b entries weight past inputs and the last entry weights v(i+1).
Eigen::RowVectorXd impulse_response(const StateSpaceLtv& ss, Index t, Index i);

// Finite-horizon input/noise impulse-sum bounds:
//   d_g_u = max_t sum_i ||G_u(t,i)||,  d_g_v = max_t sum_i |G_v(t,i)|.
struct BiboSums {
    double d_g_u = 0.0;
    double d_g_v = 0.0;
};
BiboSums bibo_sums(const StateSpaceLtv& ss);

struct BoundReport {
    double d_g_u = 0.0;
    double d_g_v = 0.0;
    double condition_lhs = 0.0;
    bool condition_holds = false;
    double ultimate_bound = 0.0;  // valid only when condition_holds
};

// Evaluates the ultimate-bound certificate for the closed loop with
// controller norm bound d_c, input bound d_u, noise bound d_v and reference
// bound d_r.
BoundReport theorem1_report(const StateSpaceLtv& ss, double d_c, double d_u, double d_v,
                            double d_r, Index n_b, Index n_c);

// Plain text serialization, one coefficient row per time instant, decimal
// values at 17 significant digits (bit-exact reload).
void save_plant(std::ostream& os, const LtvArxModel& model);
LtvArxModel load_plant(std::istream& is);
void save_plant_file(const std::string& path, const LtvArxModel& model);
LtvArxModel load_plant_file(const std::string& path);

}  // namespace krilc
