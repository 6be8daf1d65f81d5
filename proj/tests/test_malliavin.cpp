#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "skflow/malliavin.hpp"
#include "test_support.hpp"

using namespace skflow;

namespace {

LevySpec linear_sde_driver() {
    LevySpec s;
    s.dim = 1;
    s.drift = Eigen::VectorXd::Constant(1, 0.5);
    s.intensity = 1.0;
    s.jump_law = JumpLaw::fixed(0.1);
    return s;
}

SolverConfig probe_config() {
    SolverConfig c;
    c.tol = 1e-5;
    c.max_nodes = 1'000'000;
    return c;
}

} // namespace

TEST_CASE("derivative trivial cases") {
    const Coefficient lin = make_coefficient("linear");
    const CadlagPath xi = CadlagPath::constant(1.0, 1.0);
    const CadlagPath zeta = CadlagPath::zero(1, 1.0);
    const CadlagPath y = sample_path(linear_sde_driver(), 1.0, 5);
    const SolverConfig config = probe_config();

    // v = 0: zero path
    MalliavinProbe probe;
    probe.r = 0.3;
    probe.v = 0.0;
    CHECK(derivative(lin, xi, zeta, y, probe, config) == CadlagPath::zero(1, 1.0));

    // f = 0: solution ignores the driver entirely
    const Coefficient zero_coef = markov_coefficient([](double) { return 0.0; }, 1.0, "zero");
    probe.v = 0.25;
    CHECK(derivative(zero_coef, xi, zeta, y, probe, config) == CadlagPath::zero(1, 1.0));
}

TEST_CASE("locality: zero before r, exactly") {
    const Coefficient lin = make_coefficient("linear");
    const CadlagPath xi = CadlagPath::constant(1.0, 1.0);
    const CadlagPath zeta = CadlagPath::zero(1, 1.0);
    const SolverConfig config = probe_config();
    CounterRng rng(9600);
    for (int trial = 0; trial < 10; ++trial) {
        const CadlagPath y = sample_path(linear_sde_driver(), 1.0, 400 + static_cast<std::uint64_t>(trial));
        MalliavinProbe probe;
        probe.r = 0.2 + 0.6 * rng.uniform01();
        probe.v = (trial % 2 ? -0.2 : 0.05);
        const CadlagPath d = derivative(lin, xi, zeta, y, probe, config);
        // identically zero strictly before r
        for (int i = 0; i < 50; ++i) {
            const double t = probe.r * (i / 50.0);
            CHECK(eval(d, t)(0) == 0.0);
        }
        CHECK(left_limit(d, probe.r)(0) == 0.0);
    }
}

TEST_CASE("closed form trivia") {
    const CadlagPath y = sample_path(linear_sde_driver(), 1.0, 12);
    const CadlagPath x = CadlagPath::constant(1.0, 2.0);
    // constant g: the integrand difference vanishes, only the kick remains
    const CadlagPath d = closed_form_example([](double) { return 3.0; }, x, x, y, 0.4, 0.2);
    const CadlagPath expect = add_shift(CadlagPath::zero(1, 1.0), 0.4, 0.6);
    CHECK(sup_distance(d, expect) <= 1e-15);
    CHECK(eval(d, 0.39)(0) == 0.0); // t < r
}

TEST_CASE("two representations agree on the linear SDE") {
    const Coefficient lin = make_coefficient("linear");
    const CadlagPath xi = CadlagPath::constant(1.0, 1.0);
    const CadlagPath zeta = CadlagPath::zero(1, 1.0);
    const SolverConfig config = probe_config();
    CounterRng rng(9700);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const CadlagPath y = sample_path(linear_sde_driver(), 1.0, 500 + static_cast<std::uint64_t>(trial));
        MalliavinProbe probe;
        probe.r = 0.1 + 0.8 * rng.uniform01();
        probe.v = (trial % 2 ? 0.2 : -0.05);
        const SolveResult base = solve(xi, zeta, y, lin, config);
        const SolveResult shifted =
            solve(xi, zeta, add_shift(y, probe.r, probe.v), lin, config);
        REQUIRE(base.converged);
        REQUIRE(shifted.converged);
        const CadlagPath route_a = shifted.X - base.X;
        const CadlagPath route_b = closed_form_example([](double x) { return x; }, base.X,
                                                       shifted.X, y, probe.r, probe.v);
        worst = std::max(worst, sup_distance(route_a, route_b));
    }
    // both routes are built from the same solver outputs; the gap is the
    // frozen-coefficient error scale, not the solver tolerance
    CHECK(worst <= 5e-4);
}

TEST_CASE("derivative error carries both diagnostics") {
    const Coefficient lin = make_coefficient("linear");
    const CadlagPath xi = CadlagPath::constant(1.0, 1.0);
    const CadlagPath zeta = CadlagPath::zero(1, 1.0);
    const CadlagPath y = sample_path(linear_sde_driver(), 1.0, 3);
    SolverConfig tiny = probe_config();
    tiny.max_nodes = 64;
    tiny.tol = 1e-12;
    MalliavinProbe probe;
    probe.r = 0.5;
    probe.v = 0.1;
    try {
        derivative(lin, xi, zeta, y, probe, tiny);
        FAIL("expected DerivativeError");
    } catch (const DerivativeError& e) {
        CHECK(!e.base.converged);
        CHECK(e.base.stop == StopReason::node_budget);
    }
}

TEST_CASE("integrability estimate") {
    const CadlagPath zero = CadlagPath::zero(1, 1.0);
    const SolverConfig config = probe_config();
    LevySpec spec = linear_sde_driver();

    // f = 0: exactly zero
    const Coefficient zero_coef = markov_coefficient([](double) { return 0.0; }, 1.0, "zero");
    const IntegrabilityEstimate z =
        integrability_estimate(zero_coef, 1.0, spec, 1.0, 3, 1, 5, 77, config);
    CHECK(z.value == 0.0);
    CHECK(z.standard_error == 0.0);

    // linear SDE: nonnegative, and stable under doubling the sample count
    const Coefficient lin = make_coefficient("linear");
    const IntegrabilityEstimate a =
        integrability_estimate(lin, 1.0, spec, 1.0, 4, 1, 8, 91, config);
    const IntegrabilityEstimate b =
        integrability_estimate(lin, 1.0, spec, 1.0, 4, 1, 16, 91, config);
    CHECK(a.value >= 0.0);
    CHECK(b.value >= 0.0);
    const double combined = 3.0 * std::sqrt(a.standard_error * a.standard_error +
                                            b.standard_error * b.standard_error);
    CHECK(std::fabs(a.value - b.value) <= combined + 1e-12);
}
