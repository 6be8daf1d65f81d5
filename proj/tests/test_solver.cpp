#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "skflow/reference.hpp"
#include "skflow/solver.hpp"
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

CadlagPath flat_matrix_path(double horizon, std::vector<double> times, std::vector<double> vals,
                            std::vector<double> slopes) {
    const auto K = static_cast<Eigen::Index>(times.size()) - 1;
    Eigen::MatrixXd v(1, K + 1);
    Eigen::MatrixXd c(1, K);
    for (Eigen::Index k = 0; k <= K; ++k)
        v(0, k) = vals[static_cast<std::size_t>(k)];
    for (Eigen::Index k = 0; k < K; ++k)
        c(0, k) = slopes[static_cast<std::size_t>(k)];
    (void)horizon;
    return CadlagPath(std::move(times), std::move(v), std::move(c));
}

} // namespace

TEST_CASE("breakpoints") {
    // constant coefficient path: inf of the empty set is T
    CHECK(breakpoints(CadlagPath::constant(1.0, 3.0), 1, 1, 4) ==
          std::vector<double>{0.0, 1.0});

    // unit-slope ramp at threshold 2^-2 crosses every quarter
    const CadlagPath ramp = CadlagPath::piecewise_linear(
        {0.0, 1.0}, (Eigen::MatrixXd(1, 2) << 0.0, 1.0).finished());
    CHECK(breakpoints(ramp, 1, 1, 2) == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});

    // single jump of size 1: the one-sided checks trigger once at the jump
    const CadlagPath jump = CadlagPath::step(1.0, 0.0, {0.5}, {1.0});
    CHECK(breakpoints(jump, 1, 1, 2) == std::vector<double>{0.0, 0.5, 1.0});

    // down-and-back excursion detected through the left limit
    const CadlagPath spike =
        flat_matrix_path(1.0, {0.0, 0.25, 0.5, 1.0}, {0.0, 0.0, 0.0, 0.0}, {0.0, 2.0, 0.0});
    // value ramps from 0 to 0.5 on [0.25, 0.5) then drops back to 0
    const auto bp = breakpoints(spike, 1, 1, 2);
    REQUIRE(bp.size() == 4);
    CHECK(bp[0] == 0.0);
    CHECK(bp[1] == doctest::Approx(0.375).epsilon(1e-12)); // 0 + 0.25/2 crossing
    CHECK(bp[2] == 0.5);
    CHECK(bp[3] == 1.0);
}

TEST_CASE("psi_step zero and constant coefficients") {
    CounterRng rng(9300);
    const CadlagPath gamma = skflow::testing::random_affine(rng, 5);
    const CadlagPath zeta = CadlagPath::zero(1, 1.0);
    const CadlagPath eta = sample_path(linear_sde_driver(), 1.0, 4);

    SolverConfig config;
    config.tol = 1e-12;

    // f = 0: X = gamma, converged at n = 1, all diagnostics zero
    const Coefficient zero_coef = markov_coefficient([](double) { return 0.0; }, 1.0, "zero");
    const SolveResult r0 = solve(gamma, zeta, eta, zero_coef, config);
    CHECK(r0.converged);
    CHECK(r0.iterations == 1);
    CHECK(sup_distance(r0.X, gamma) == 0.0);
    CHECK(r0.diagnostics[0].gap_to_f == 0.0);
    CHECK(r0.diagnostics[0].dist_to_prev == 0.0);

    // f = K: Z = gamma + K (eta - eta(0)) exactly at n = 1, stable after
    const double K = -0.8;
    const Coefficient const_coef =
        markov_coefficient([K](double) { return K; }, std::fabs(K) + 1.0, "const");
    IterationState init;
    init.n = 0;
    init.Z = gamma;
    init.S = CadlagPath::zero(1, 1.0);
    const IterationState s1 = psi_step(gamma, zeta, eta, init, const_coef, 1, config);
    const CadlagPath eta0 = CadlagPath::constant(1.0, eval(eta, 0.0));
    const CadlagPath shift = linear_combine({{1.0, &eta}, {-1.0, &eta0}});
    const CadlagPath expect = linear_combine({{1.0, &gamma}, {K, &shift}});
    CHECK(sup_distance(s1.Z, expect) <= 1e-14);
    const IterationState s2 = psi_step(gamma, zeta, eta, s1, const_coef, 2, config);
    CHECK(s2.dist_to_prev == 0.0);
}

TEST_CASE("linear coefficient with pure-step driver hits the product formula") {
    LevySpec spec;
    spec.dim = 1;
    spec.drift = Eigen::VectorXd::Zero(1);
    spec.intensity = 4.0;
    spec.jump_law = JumpLaw::uniform(-0.3, 0.5);
    const Coefficient lin = make_coefficient("linear");
    SolverConfig config;
    config.tol = 1e-12;
    for (int seed = 0; seed < 10; ++seed) {
        const CadlagPath eta = sample_path(spec, 1.0, static_cast<std::uint64_t>(seed));
        const CadlagPath gamma = CadlagPath::constant(1.0, 1.0);
        const SolveResult r = solve(gamma, CadlagPath::zero(1, 1.0), eta, lin, config);
        CHECK(r.converged);
        const StochasticExponential dd(eta, 1.0);
        CHECK(dd.sup_error(r.X) <= 1e-12);
    }
}

TEST_CASE("linear SDE with drift converges against the closed form") {
    const Coefficient lin = make_coefficient("linear");
    SolverConfig config;
    config.tol = 1e-10;
    config.n_max = 40;
    config.max_nodes = 200000; // keep the unit test light; full depth in acceptance
    const CadlagPath gamma = CadlagPath::constant(1.0, 1.0);
    const CadlagPath zeta = CadlagPath::zero(1, 1.0);
    for (int seed = 0; seed < 3; ++seed) {
        const CadlagPath eta = sample_path(linear_sde_driver(), 1.0, 50 + static_cast<std::uint64_t>(seed));
        std::vector<double> errors;
        const StochasticExponential dd(eta, 1.0);
        const SolveResult r = solve(gamma, zeta, eta, lin, config,
                                    [&](const IterationState& s) { errors.push_back(dd.sup_error(s.Z)); });
        CHECK(r.stop == StopReason::node_budget); // tolerance 1e-10 is out of reach by design
        CHECK(errors.back() <= 2e-4);
        // freeze gap honors its 2^-n bound on every iterate
        for (const auto& d : r.diagnostics)
            CHECK(d.gap_to_f <= std::ldexp(1.0, -d.n) + 1e-12);
        // the error roughly halves per level past the warmup
        int improved = 0, counted = 0;
        for (std::size_t i = 6; i < errors.size(); ++i) {
            ++counted;
            if (errors[i] <= 0.75 * errors[i - 1])
                ++improved;
        }
        CHECK(improved >= counted - 1);
    }
}

TEST_CASE("residual diagnostics") {
    const CadlagPath gamma = CadlagPath::constant(1.0, 1.0);
    const CadlagPath zeta = CadlagPath::zero(1, 1.0);
    const CadlagPath eta = sample_path(linear_sde_driver(), 1.0, 9);
    SolverConfig config;
    config.tol = 1e-9;
    config.compute_residual = true;
    config.max_nodes = 300000;

    // constant coefficient: S equals the refrozen coefficient, residual 0
    const Coefficient const_coef = markov_coefficient([](double) { return 0.7; }, 2.0, "const");
    IterationState init;
    init.n = 0;
    init.Z = gamma;
    init.S = CadlagPath::zero(1, 1.0);
    const IterationState s1 = psi_step(gamma, zeta, eta, init, const_coef, 1, config);
    CHECK(residual(s1, gamma, zeta, eta, const_coef, config) == 0.0);

    // linear coefficient: residual bounded by the freeze gaps times TV
    const Coefficient lin = make_coefficient("linear");
    const SolveResult r = solve(gamma, zeta, eta, lin, config);
    const double tv = total_variation(eta);
    for (const auto& d : r.diagnostics) {
        if (std::isnan(d.residual))
            continue;
        const double eps_res = std::max(std::ldexp(1.0, -(d.n + 10)), config.residual_floor);
        CHECK(d.residual <= (std::ldexp(1.0, -d.n) + eps_res) * tv * (1.0 + 1e-9) + 1e-12);
    }
}

TEST_CASE("reference integrator") {
    const Coefficient lin = make_coefficient("linear");
    const CadlagPath gamma = CadlagPath::constant(1.0, 1.0);
    const CadlagPath zeta = CadlagPath::zero(1, 1.0);

    // no jumps: dX = X * 0.5 dt from 1, so X(1) = e^{0.5}
    const CadlagPath drift = CadlagPath::piecewise_linear(
        {0.0, 1.0}, (Eigen::MatrixXd(1, 2) << 0.0, 0.5).finished());
    const CadlagPath x = reference_integrate(lin, gamma, zeta, drift, 10000);
    CHECK(std::fabs(eval(x, 1.0)(0) - std::exp(0.5)) <= 1e-12);

    // pure jumps: exact regardless of substeps
    LevySpec spec;
    spec.dim = 1;
    spec.drift = Eigen::VectorXd::Zero(1);
    spec.intensity = 3.0;
    spec.jump_law = JumpLaw::fixed(0.2);
    const CadlagPath eta = sample_path(spec, 1.0, 21);
    const CadlagPath xj = reference_integrate(lin, gamma, zeta, eta, 1);
    const StochasticExponential dd(eta, 1.0);
    CHECK(dd.sup_error(xj) <= 1e-12);

    // non-Markov coefficient rejected
    CHECK_THROWS_AS(reference_integrate(make_coefficient("sin"), gamma, zeta, eta, 10),
                    OracleUnsupportedError);
}

TEST_CASE("solve agrees with the reference on random Lipschitz problems") {
    CounterRng rng(9400);
    SolverConfig config;
    config.tol = 1e-5;
    config.n_max = 40;
    config.max_nodes = 2000000;
    const CadlagPath zeta = CadlagPath::zero(1, 1.0);
    int checked = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const double a = 0.6 * (2.0 * rng.uniform01() - 1.0);
        const double b = 0.5 * (2.0 * rng.uniform01() - 1.0);
        const int kind = static_cast<int>(rng() % 3);
        Coefficient coef;
        if (kind == 0)
            coef = markov_coefficient([a, b](double x) { return a * x + b; },
                                      std::fabs(a) + std::fabs(b) + 0.1, "affine");
        else if (kind == 1)
            coef = markov_coefficient([a](double x) { return std::sin(a * x); },
                                      std::fabs(a) + 0.1, "sin-g");
        else
            coef = markov_coefficient([b](double x) { return std::cos(x) * 0.5 + b; },
                                      1.0 + std::fabs(b), "cos-g");
        LevySpec spec;
        spec.dim = 1;
        spec.drift = Eigen::VectorXd::Constant(1, 0.4 * (2.0 * rng.uniform01() - 1.0));
        spec.intensity = 1.0 + rng.uniform01();
        spec.jump_law = JumpLaw::uniform(-0.25, 0.25);
        const CadlagPath eta = sample_path(spec, 1.0, 1000 + static_cast<std::uint64_t>(trial));
        const CadlagPath gamma = CadlagPath::constant(1.0, 2.0 * rng.uniform01() - 1.0);
        const SolveResult r = solve(gamma, zeta, eta, coef, config);
        if (!r.converged)
            continue; // contraction may be slow for unlucky draws; skip, count below
        const CadlagPath ref = reference_integrate(coef, gamma, zeta, eta, 400);
        CHECK(sup_distance(r.X, ref) <= std::max(5.0 * config.tol, 1e-7));
        ++checked;
    }
    CHECK(checked >= 40);
}

TEST_CASE("adaptedness and determinism") {
    const Coefficient lin = make_coefficient("linear");
    SolverConfig config;
    config.tol = 1e-5;
    config.max_nodes = 1000000;
    const CadlagPath zeta = CadlagPath::zero(1, 1.0);
    CounterRng rng(9500);
    for (int trial = 0; trial < 10; ++trial) {
        const CadlagPath eta = sample_path(linear_sde_driver(), 1.0, 300 + static_cast<std::uint64_t>(trial));
        const CadlagPath gamma = CadlagPath::constant(1.0, 1.0);
        const double t = 0.2 + 0.6 * rng.uniform01();
        const SolveResult full = solve(gamma, zeta, eta, lin, config);
        const SolveResult stopped =
            solve(stop_at(gamma, t), stop_at(zeta, t), stop_at(eta, t), lin, config);
        CHECK(sup_distance(stop_at(full.X, t), stop_at(stopped.X, t)) <= 5.0 * config.tol);
    }

    // identical inputs give bit-identical outputs
    const CadlagPath eta = sample_path(linear_sde_driver(), 1.0, 123);
    const CadlagPath gamma = CadlagPath::constant(1.0, 1.0);
    const SolveResult r1 = solve(gamma, zeta, eta, lin, config);
    const SolveResult r2 = solve(gamma, zeta, eta, lin, config);
    CHECK(r1.X == r2.X);
}

TEST_CASE("error paths") {
    const CadlagPath gamma = CadlagPath::piecewise_linear(
        {0.0, 1.0}, (Eigen::MatrixXd(1, 2) << 0.0, 1.0).finished());
    const CadlagPath zeta = CadlagPath::zero(1, 1.0);
    const CadlagPath eta = sample_path(linear_sde_driver(), 1.0, 7);
    SolverConfig config;

    CHECK_THROWS_AS(solve(gamma, zeta, eta, make_coefficient("anticipating-bad"), config),
                    InvalidCoefficientError);

    Coefficient nan_coef = markov_coefficient(
        [](double x) { return x > 0.5 ? std::numeric_limits<double>::quiet_NaN() : x; }, 1.0,
        "nan");
    CHECK_THROWS_AS(solve(gamma, zeta, eta, nan_coef, config), InvalidCoefficientError);

    // tiny budget: explicit flag, last completed iterate returned
    SolverConfig small = config;
    small.max_nodes = 64;
    small.tol = 1e-14;
    const SolveResult r = solve(CadlagPath::constant(1.0, 1.0), zeta, eta,
                                make_coefficient("linear"), small);
    CHECK(!r.converged);
    CHECK(r.stop == StopReason::node_budget);
    CHECK(r.iterations >= 1);
}
