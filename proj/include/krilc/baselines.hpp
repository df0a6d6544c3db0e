#pragma once

#include <complex>
#include <vector>

#include "krilc/types.hpp"

namespace krilc {

struct AdaptiveIlcParams {
    Index l_theta = 3;
    double eta_theta = 0.1;
    double mu_theta = 0.5;
    double eta_psi = 1.0;
    double mu_psi = 1.0;
};

// Per-time controller parameters and gain estimates of the adaptive
// data-driven baseline.
struct AdaptiveIlcState {
    AdaptiveIlcParams params;
    Mat theta;    // n_d x l_theta
    Vec psi_hat;  // n_d, initialized to 1

    AdaptiveIlcState() = default;
    AdaptiveIlcState(Index n_d, AdaptiveIlcParams p);
};

// One update at (j, t). past_errors holds e_{j-1}(t+1)..e_{j-l_theta}(t+1)
// (zero padded); delta_y = y_j(t) - y_{j-1}(t); delta_u = u_j(t-1) -
// u_{j-1}(t-1). Updates the gain estimate, emits u_j(t), then updates the
// controller parameters for the next iteration. Denominators below 1e-12
// skip the corresponding update.
double adaptive_ilc_step(AdaptiveIlcState& state, Index t, const Vec& past_errors, double u_prev_t,
                         double delta_y, double delta_u);

using Spectrum = std::vector<std::complex<double>>;

Spectrum dft_forward(const Vec& x);
Vec dft_inverse_real(const Spectrum& s);

// Frequency-domain inversion update, applied per bin; bins with zero output
// spectrum pass the input through. The gate is 1 above gamma and a raised
// cosine below it.
Spectrum inversion_ilc_update(const Spectrum& u_prev, const Spectrum& y_prev,
                              const Spectrum& e_prev, double gamma);

double inversion_gate(double magnitude, double gamma);

}  // namespace krilc
