#include "krilc/sysgen.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace krilc {

LtvArxModel fixed_plant_51(Index horizon) {
    LtvArxModel model;
    model.n_a = 2;
    model.n_b = 2;
    model.a = Mat::Zero(horizon, 2);
    model.b = Mat::Zero(horizon, 2);
    for (Index t = 1; t <= horizon; ++t) {
        const double td = static_cast<double>(t);
        model.a(t - 1, 0) = -1.2;
        model.a(t - 1, 1) = 0.35;
        model.b(t - 1, 0) = 1.0 + 0.1 * std::cos(td) + 0.03 * std::sin(td);
        model.b(t - 1, 1) = 0.1 * std::sin(td) - 0.05 * std::cos(td) - 0.521;
    }
    return model;
}

double reference_51(double t) {
    return std::sin(2.0 * M_PI * t / 50.0) + std::sin(2.0 * M_PI * t / 5.0);
}

double reference_52(double t) {
    return 0.125e-6 * t * t * t * (7.0 - 0.03 * t);
}

std::complex<double> rotate_root(std::complex<double> s0, Index t, Index n_d) {
    if (s0 == std::complex<double>(0.0, 0.0) || s0.imag() == 0.0) return s0;
    const double a0 = std::atan(s0.imag() / s0.real());
    const double sweep = (a0 >= 0.0 ? 1.0 : -1.0) * M_PI * static_cast<double>(t) /
                         (4.0 * static_cast<double>(n_d));
    return std::polar(std::abs(s0), sweep + a0);
}

std::vector<std::complex<double>> rotated_roots(const std::vector<std::complex<double>>& roots,
                                                Index t, Index n_d) {
    std::vector<std::complex<double>> out;
    out.reserve(roots.size());
    std::size_t i = 0;
    while (i < roots.size()) {
        const std::complex<double> r = roots[i];
        if (r.imag() == 0.0) {
            out.push_back(r);
            ++i;
        } else {
            // Conjugate pairs are stored adjacently; rotate the representative
            // and mirror it so the coefficients stay real.
            const std::complex<double> rot = rotate_root(r, t, n_d);
            out.push_back(rot);
            out.push_back(std::conj(rot));
            i += 2;
        }
    }
    return out;
}

Vec poly_from_roots(const std::vector<std::complex<double>>& roots) {
    std::vector<std::complex<double>> coeffs{1.0};
    std::size_t i = 0;
    while (i < roots.size()) {
        const std::complex<double> r = roots[i];
        std::vector<std::complex<double>> next(coeffs.size() + (r.imag() == 0.0 ? 1 : 2), 0.0);
        if (r.imag() == 0.0) {
            for (std::size_t k = 0; k < coeffs.size(); ++k) {
                next[k] += coeffs[k];
                next[k + 1] -= r * coeffs[k];
            }
            i += 1;
        } else {
            const double p1 = -2.0 * r.real();
            const double p2 = std::norm(r);
            for (std::size_t k = 0; k < coeffs.size(); ++k) {
                next[k] += coeffs[k];
                next[k + 1] += p1 * coeffs[k];
                next[k + 2] += p2 * coeffs[k];
            }
            i += 2;
        }
        coeffs = std::move(next);
    }
    Vec out(static_cast<Index>(coeffs.size()) - 1);
    for (Index k = 0; k < out.size(); ++k) out[k] = coeffs[static_cast<std::size_t>(k) + 1].real();
    return out;
}

namespace {

std::vector<std::complex<double>> sample_roots(std::mt19937_64& rng, Index count, double radius,
                                               double real_prob) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<std::complex<double>> roots;
    while (static_cast<Index>(roots.size()) < count) {
        const Index remaining = count - static_cast<Index>(roots.size());
        const double mag = unif(rng) * radius;
        if (remaining == 1 || unif(rng) < real_prob) {
            const double sign = unif(rng) < 0.5 ? -1.0 : 1.0;
            roots.emplace_back(sign * mag, 0.0);
        } else {
            const double angle = unif(rng) * 2.0 * M_PI;
            std::complex<double> r = std::polar(mag, angle);
            if (r.imag() == 0.0) r = std::complex<double>(r.real(), 1e-12);
            roots.push_back(r);
            roots.push_back(std::conj(r));
        }
    }
    return roots;
}

// Dominant pole at time t: the pole whose transfer-function residue has the
// largest magnitude. Numerator/denominator are evaluated in z from the root
// sets directly.
std::complex<double> dominant_pole(const std::vector<std::complex<double>>& poles,
                                   const std::vector<std::complex<double>>& zeros, double gain) {
    double best_mag = -1.0;
    std::complex<double> best = 0.0;
    for (std::size_t i = 0; i < poles.size(); ++i) {
        std::complex<double> num = gain;
        for (const auto& z : zeros) num *= poles[i] - z;
        std::complex<double> den = 1.0;
        for (std::size_t k = 0; k < poles.size(); ++k)
            if (k != i) den *= poles[i] - poles[k];
        const double mag = std::abs(den) > 0.0 ? std::abs(num / den)
                                               : std::numeric_limits<double>::infinity();
        if (mag > best_mag) {
            best_mag = mag;
            best = poles[i];
        }
    }
    return best;
}

}  // namespace

GeneratedPlant generate_plant_detailed(const GeneratorConfig& config) {
    if (config.order < 1 || config.radius <= 0.0 || config.radius >= 1.0 || config.horizon < 1)
        throw DomainError("generator: order >= 1 and 0 < radius < 1 required");
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::string last_failure = "none";
    for (Index attempt = 0; attempt < config.max_resamples; ++attempt) {
        GeneratedPlant cand;
        cand.poles = sample_roots(rng, config.order, config.radius, config.real_root_prob);
        cand.zeros = sample_roots(rng, config.order - 1, config.radius, config.real_root_prob);
        cand.gain = config.gain_lo + unif(rng) * (config.gain_hi - config.gain_lo);

        LtvArxModel model;
        model.n_a = config.order;
        model.n_b = config.order;
        model.a = Mat::Zero(config.horizon, config.order);
        model.b = Mat::Zero(config.horizon, config.order);
        for (Index t = 1; t <= config.horizon; ++t) {
            const auto poles_t = rotated_roots(cand.poles, t, config.horizon);
            const auto zeros_t = rotated_roots(cand.zeros, t, config.horizon);
            model.a.row(t - 1) = poly_from_roots(poles_t).transpose();
            model.b(t - 1, 0) = cand.gain;
            if (config.order > 1)
                model.b.row(t - 1).tail(config.order - 1) =
                    cand.gain * poly_from_roots(zeros_t).transpose();
        }
        cand.model = std::move(model);

        if (!config.filter) return cand;

        const StateSpaceLtv ss = to_state_space(cand.model);
        BiboSums sums;
        try {
            sums = bibo_sums(ss);
        } catch (const InstabilityError&) {
            last_failure = "impulse-sum overflow";
            continue;
        }
        if (sums.d_g_u > config.filter->d_g_u_max) {
            last_failure = "d_g_u bound";
            continue;
        }
        double pmin = std::numeric_limits<double>::infinity(), pmax = 0.0;
        for (Index t = 1; t <= config.horizon; ++t) {
            const auto poles_t = rotated_roots(cand.poles, t, config.horizon);
            const auto zeros_t = rotated_roots(cand.zeros, t, config.horizon);
            const double mag = std::abs(dominant_pole(poles_t, zeros_t, cand.gain));
            pmin = std::min(pmin, mag);
            pmax = std::max(pmax, mag);
        }
        if (pmax - pmin > config.filter->dominant_pole_drift_max) {
            last_failure = "dominant-pole drift";
            continue;
        }
        if (!(pmax > config.filter->dominant_pole_min)) {
            last_failure = "dominant-pole magnitude";
            continue;
        }
        return cand;
    }
    throw GenerationError("generator: resample cap " + std::to_string(config.max_resamples) +
                          " exceeded, last failing filter: " + last_failure);
}

LtvArxModel generate_plant(const GeneratorConfig& config) {
    return generate_plant_detailed(config).model;
}

}  // namespace krilc
