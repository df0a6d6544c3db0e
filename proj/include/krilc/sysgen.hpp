#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "krilc/plant.hpp"
#include "krilc/types.hpp"

namespace krilc {

// Second-order plant with slowly varying input coefficients used by the
// single-system study; poles at 0.7 and 0.5.
LtvArxModel fixed_plant_51(Index horizon);

// References: a two-tone sine and a smooth cubic rise.
double reference_51(double t);
double reference_52(double t);

// Magnitude-preserving rotation of a complex root over a quarter-turn sweep;
// real (or zero) roots pass through unchanged.
std::complex<double> rotate_root(std::complex<double> s0, Index t, Index n_d);

struct GeneratorFilter {
    double d_g_u_max = 5.0;
    double dominant_pole_drift_max = 0.001;
    double dominant_pole_min = 0.7;
};

struct GeneratorConfig {
    Index order = 10;
    double radius = 0.95;
    Index horizon = 200;
    std::uint64_t seed = 0;
    std::optional<GeneratorFilter> filter;
    Index max_resamples = 10000;
    double gain_lo = 0.5;
    double gain_hi = 1.5;
    double real_root_prob = 0.3;
};

struct GeneratedPlant {
    LtvArxModel model;
    std::vector<std::complex<double>> poles;  // conjugate pairs expanded, at t = 0
    std::vector<std::complex<double>> zeros;
    double gain = 1.0;
};

// Samples poles/zeros inside the radius disc with conjugate pairing, rotates
// the complex ones over the horizon, and emits the ARX coefficient arrays
// (the frozen denominator doubles as the output polynomial). With a filter
// set, resamples until the impulse-sum and dominant-pole conditions pass.
GeneratedPlant generate_plant_detailed(const GeneratorConfig& config);
LtvArxModel generate_plant(const GeneratorConfig& config);

// Rotated root sets at time t for a generated plant.
std::vector<std::complex<double>> rotated_roots(const std::vector<std::complex<double>>& roots,
                                                Index t, Index n_d);

// Real coefficients [c_1..c_m] of prod_i (1 - r_i q^-1); roots must close
// under conjugation.
Vec poly_from_roots(const std::vector<std::complex<double>>& roots);

}  // namespace krilc
