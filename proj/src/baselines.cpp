#include "krilc/baselines.hpp"

#include <unsupported/Eigen/FFT>
#include <cmath>

namespace krilc {

AdaptiveIlcState::AdaptiveIlcState(Index n_d, AdaptiveIlcParams p) : params(p) {
    theta = Mat::Zero(n_d, p.l_theta);
    psi_hat = Vec::Ones(n_d);
}

double adaptive_ilc_step(AdaptiveIlcState& state, Index t, const Vec& past_errors, double u_prev_t,
                         double delta_y, double delta_u) {
    const AdaptiveIlcParams& p = state.params;
    if (past_errors.size() != p.l_theta + 1)
        throw DomainError("adaptive baseline: needs l_theta + 1 past errors");
    const Index row = t - 1;

    // Gain estimate from the current iteration's increments.
    const double den_psi = p.mu_psi + delta_u * delta_u;
    if (den_psi >= 1e-12) {
        state.psi_hat[row] += p.eta_psi * (delta_y - state.psi_hat[row] * delta_u) * delta_u / den_psi;
    }

    // xi = [-e_{j-1}, e_{j-1}-e_{j-2}, ..., e_{j-l+1}-e_{j-l}]
    Vec xi(p.l_theta);
    xi[0] = -past_errors[0];
    for (Index m = 1; m < p.l_theta; ++m) xi[m] = past_errors[m - 1] - past_errors[m];

    const double u_new = u_prev_t + xi.dot(state.theta.row(row));

    const double xi2 = xi.squaredNorm();
    const double psi = state.psi_hat[row];
    const double den_theta = (p.mu_theta + psi * psi) * xi2;
    if (xi2 >= 1e-12 && den_theta >= 1e-12) {
        const double gain =
            p.eta_theta * (psi * past_errors[0] - p.mu_theta * xi.dot(state.theta.row(row))) / den_theta;
        state.theta.row(row) += gain * xi.transpose();
    }
    return u_new;
}

Spectrum dft_forward(const Vec& x) {
    Eigen::FFT<double> fft;
    std::vector<double> time(x.data(), x.data() + x.size());
    Spectrum spec;
    fft.fwd(spec, time);
    return spec;
}

Vec dft_inverse_real(const Spectrum& s) {
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> time;
    Spectrum spec = s;
    fft.inv(time, spec);
    Vec x(static_cast<Index>(time.size()));
    for (Index i = 0; i < x.size(); ++i) x[i] = time[static_cast<std::size_t>(i)].real();
    return x;
}

double inversion_gate(double magnitude, double gamma) {
    if (magnitude > gamma) return 1.0;
    return 0.5 * (1.0 - std::cos(M_PI * magnitude / gamma));
}

Spectrum inversion_ilc_update(const Spectrum& u_prev, const Spectrum& y_prev,
                              const Spectrum& e_prev, double gamma) {
    if (u_prev.size() != y_prev.size() || u_prev.size() != e_prev.size())
        throw DomainError("inversion baseline: spectra must have equal length");
    Spectrum u_next(u_prev.size());
    for (std::size_t k = 0; k < u_prev.size(); ++k) {
        if (y_prev[k] == std::complex<double>(0.0, 0.0)) {
            u_next[k] = u_prev[k];
        } else {
            const double rho = inversion_gate(std::abs(y_prev[k]), gamma);
            u_next[k] = u_prev[k] + rho * (u_prev[k] / y_prev[k]) * e_prev[k];
        }
    }
    return u_next;
}

}  // namespace krilc
