#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "krilc/plant.hpp"
#include "krilc/sysgen.hpp"

using namespace krilc;

namespace {

LtvArxModel first_order(double a1, double b1, Index horizon) {
    LtvArxModel m;
    m.n_a = 1;
    m.n_b = 1;
    m.a = Mat::Constant(horizon, 1, a1);
    m.b = Mat::Constant(horizon, 1, b1);
    return m;
}

// Oracle: propagate the companion realization explicitly.
Vec state_space_response(const StateSpaceLtv& ss, const Vec& u, const Vec& v) {
    const Index t_end = u.size();
    Vec y = Vec::Zero(t_end);
    Vec x = Vec::Zero(ss.n_a);
    for (Index t = 0; t < t_end; ++t) {
        // y(t+1) from x(t+1) = A(t) x(t) + B(t) uu(t)
        Vec uu = Vec::Zero(ss.n_b + 1);
        for (Index k = 0; k < ss.n_b; ++k) {
            const Index idx = t - k;  // u(t - k), 1-based time t
            if (idx >= 1) uu[k] = u[idx - 1];
        }
        if (t + 1 <= t_end) uu[ss.n_b] = v[t];  // v(t+1)
        x = ss.a[t] * x + ss.b[t] * uu;
        if (t + 1 <= t_end) y[t] = x[0];
        if (t + 1 == t_end) break;
    }
    return y;
}

}  // namespace

TEST_CASE("zero input and noise give zero response") {
    const LtvArxModel plant = fixed_plant_51(20);
    CHECK(simulate_iteration(plant, Vec::Zero(20), Vec::Zero(20)).isZero());
}

TEST_CASE("unit impulse reaches the output through b1 one step later") {
    const LtvArxModel plant = fixed_plant_51(10);
    Vec u = Vec::Zero(10);
    u[0] = 1.0;  // u(1) = 1
    const Vec y = simulate_iteration(plant, u, Vec::Zero(10));
    CHECK(y[0] == 0.0);
    CHECK(y[1] == doctest::Approx(1.0 + 0.1 * std::cos(2.0) + 0.03 * std::sin(2.0)).epsilon(1e-15));
}

TEST_CASE("recursion matches the state-space propagation") {
    std::mt19937_64 rng(41);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        GeneratorConfig gen;
        gen.order = 4;
        gen.horizon = 60;
        gen.seed = 100 + trial;
        const LtvArxModel plant = generate_plant(gen);
        Vec u(60), v(60);
        for (Index i = 0; i < 60; ++i) {
            u[i] = normal(rng);
            v[i] = 0.1 * normal(rng);
        }
        const Vec y = simulate_iteration(plant, u, v);
        const Vec y_ss = state_space_response(to_state_space(plant), u, v);
        CHECK((y - y_ss).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("companion construction details") {
    const LtvArxModel scalar = first_order(-0.5, 1.0, 5);
    const StateSpaceLtv ss = to_state_space(scalar);
    CHECK(ss.a[2](0, 0) == doctest::Approx(0.5));  // -a1(t+1)

    const LtvArxModel fixed = fixed_plant_51(5);
    const StateSpaceLtv ss2 = to_state_space(fixed);
    for (Index t = 1; t < 5; ++t) CHECK(ss2.a[t].row(0).isApprox(ss2.a[0].row(0)));  // constant a
    CHECK(ss2.a[0](1, 0) == 1.0);
    CHECK(ss2.b[0](0, 2) == 1.0);
    CHECK(ss2.b[0](1, 0) == 0.0);
}

TEST_CASE("impulse response at t = i+1 reads the input row directly") {
    const LtvArxModel plant = fixed_plant_51(10);
    const StateSpaceLtv ss = to_state_space(plant);
    const Eigen::RowVectorXd g = impulse_response(ss, 4, 3);
    CHECK(g[0] == doctest::Approx(plant.b(3, 0)));
    CHECK(g[1] == doctest::Approx(plant.b(3, 1)));
    CHECK(g[2] == 1.0);
    CHECK_THROWS_AS(impulse_response(ss, 3, 3), IndexError);
}

TEST_CASE("stable first-order impulse response is geometric") {
    const StateSpaceLtv ss = to_state_space(first_order(-0.5, 1.0, 40));
    for (Index t = 1; t <= 40; t += 7)
        for (Index i = 0; i < t; i += 3) {
            const double expected = std::pow(0.5, static_cast<double>(t - i - 1));
            CHECK(impulse_response(ss, t, i)[0] == doctest::Approx(expected).epsilon(1e-12));
        }
}

TEST_CASE("superposition over impulse responses reproduces the zero-state output") {
    std::mt19937_64 rng(43);
    std::normal_distribution<double> normal(0.0, 1.0);
    GeneratorConfig gen;
    gen.order = 3;
    gen.horizon = 40;
    gen.seed = 7;
    const LtvArxModel plant = generate_plant(gen);
    const StateSpaceLtv ss = to_state_space(plant);
    Vec u(40), v(40);
    for (Index i = 0; i < 40; ++i) {
        u[i] = normal(rng);
        v[i] = 0.3 * normal(rng);
    }
    const Vec y = simulate_iteration(plant, u, v);
    for (Index t = 1; t <= 40; t += 5) {
        double acc = 0.0;
        for (Index i = 0; i < t; ++i) {
            const Eigen::RowVectorXd g = impulse_response(ss, t, i);
            for (Index k = 0; k < plant.n_b; ++k)
                if (i - k >= 1) acc += g[k] * u[i - k - 1];
            acc += g[plant.n_b] * v[i];  // v(i+1)
        }
        CHECK(acc == doctest::Approx(y[t - 1]).epsilon(1e-10));
    }
}

TEST_CASE("impulse sums: noise feedthrough and geometric series") {
    LtvArxModel zero_b = first_order(0.0, 0.0, 30);
    const BiboSums s0 = bibo_sums(to_state_space(zero_b));
    CHECK(s0.d_g_u == 0.0);
    CHECK(s0.d_g_v >= 1.0);

    const BiboSums s1 = bibo_sums(to_state_space(first_order(-0.5, 1.0, 60)));
    CHECK(s1.d_g_u == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("ultimate-bound report") {
    // d_g_u is exactly the constant b1 when the output has no recursion.
    const StateSpaceLtv ss = to_state_space(first_order(0.0, 0.1, 20));
    const BiboSums sums = bibo_sums(ss);
    CHECK(sums.d_g_u == doctest::Approx(0.1));

    SUBCASE("zero controller bound") {
        const BoundReport r = theorem1_report(ss, 0.0, 2.0, 0.1, 1.5, 1, 2);
        CHECK(r.condition_holds);
        const double expected = std::sqrt(1.0) * sums.d_g_u * 2.0 + sums.d_g_v * 0.1 + 1.5;
        CHECK(r.ultimate_bound == doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("hand-evaluated small-gain case") {
        const BoundReport r = theorem1_report(ss, 0.1, 2.0, 0.1, 1.5, 1, 2);
        CHECK(r.condition_lhs == doctest::Approx(0.1 * 0.1 * std::sqrt(3.0)).epsilon(1e-12));
        CHECK(r.condition_holds);
        const double drive = 0.1 * 2.0 + sums.d_g_v * 0.1;
        const double amplify = 2.0 * 0.1 * 0.1 * std::sqrt(1.0 * 2.0 * 3.0 / 2.0) + 1.0;
        const double expected = (drive * amplify + 1.5) / (1.0 - r.condition_lhs);
        CHECK(r.ultimate_bound == doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("boundary is excluded") {
        const StateSpaceLtv unit = to_state_space(first_order(0.0, 1.0, 10));
        const BoundReport r = theorem1_report(unit, 1.0, 1.0, 0.0, 0.0, 1, 1);
        CHECK(r.condition_lhs == 1.0);
        CHECK(!r.condition_holds);
    }
}

TEST_CASE("explosive recursion raises an instability error") {
    LtvArxModel bad = first_order(-1e3, 1.0, 400);
    Vec u = Vec::Zero(400);
    u[0] = 1.0;
    CHECK_THROWS_AS(simulate_iteration(bad, u, Vec::Zero(400)), InstabilityError);
}

TEST_CASE("serialization round-trips bit-exactly") {
    GeneratorConfig gen;
    gen.order = 5;
    gen.horizon = 25;
    gen.seed = 99;
    const LtvArxModel plant = generate_plant(gen);
    std::stringstream buffer;
    save_plant(buffer, plant);
    const LtvArxModel reloaded = load_plant(buffer);
    CHECK(reloaded.n_a == plant.n_a);
    CHECK(reloaded.n_b == plant.n_b);
    CHECK(reloaded.a == plant.a);
    CHECK(reloaded.b == plant.b);
}
