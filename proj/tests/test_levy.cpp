#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "skflow/levy.hpp"
#include "skflow/reference.hpp"
#include "test_support.hpp"

using namespace skflow;

namespace {

LevySpec basic_spec(double drift, double intensity, JumpLaw law) {
    LevySpec s;
    s.dim = 1;
    s.drift = Eigen::VectorXd::Constant(1, drift);
    s.intensity = intensity;
    s.jump_law = law;
    return s;
}

} // namespace

TEST_CASE("jump law moments") {
    // closed forms vs Monte Carlo for the truncated moments
    const JumpLaw laws[] = {JumpLaw::normal(0.1, 0.6), JumpLaw::uniform(-0.8, 1.4),
                            JumpLaw::fixed(0.3)};
    for (const JumpLaw& law : laws) {
        for (double eps : {0.0, 0.2}) {
            CounterRng rng(1234);
            double s1 = 0.0, s2 = 0.0, sq = 0.0;
            const int N = 400000;
            for (int i = 0; i < N; ++i) {
                const double x = law.sample(rng);
                if (std::fabs(x) > eps && std::fabs(x) <= 1.0) {
                    s1 += x;
                    s2 += x * x;
                }
                sq += x * x;
            }
            CHECK(law.mean_small(eps) == doctest::Approx(s1 / N).epsilon(0.02).scale(1.0));
            CHECK(law.second_moment_small(eps) ==
                  doctest::Approx(s2 / N).epsilon(0.02).scale(1.0));
            CHECK(law.second_moment() == doctest::Approx(sq / N).epsilon(0.02).scale(1.0));
        }
    }
    // quadrature integrates the identity and square consistently
    for (const JumpLaw& law : {JumpLaw::normal(0.1, 0.6), JumpLaw::uniform(-0.8, 1.4)}) {
        double m2 = 0.0;
        for (const auto& [v, w] : law.quadrature(64))
            m2 += w * v * v;
        CHECK(m2 == doctest::Approx(law.second_moment()).epsilon(1e-8));
    }
}

TEST_CASE("sample_path basics") {
    // no jumps: straight line
    const LevySpec drift_only = basic_spec(0.7, 0.0, JumpLaw::fixed(1.0));
    const CadlagPath line = sample_path(drift_only, 2.0, 7);
    CHECK(line ==
          CadlagPath::piecewise_linear({0.0, 2.0}, (Eigen::MatrixXd(1, 2) << 0.0, 1.4).finished()));

    // determinism
    const LevySpec cp = basic_spec(0.5, 1.0, JumpLaw::fixed(0.1));
    CHECK(sample_path(cp, 1.0, 42) == sample_path(cp, 1.0, 42));
    CHECK(!(sample_path(cp, 1.0, 42) == sample_path(cp, 1.0, 43)));

    // truncation drops small jumps entirely
    LevySpec trunc = basic_spec(0.0, 3.0, JumpLaw::fixed(0.1));
    trunc.truncation = 0.2;
    CHECK(sample_path(trunc, 1.0, 11) == CadlagPath::zero(1, 1.0));

    // compensate shifts the slope by -intensity * E[x 1_{eps<|x|<=1}]
    LevySpec comp = basic_spec(0.0, 2.0, JumpLaw::fixed(0.1));
    comp.compensate = true;
    const CadlagPath y = sample_path(comp, 1.0, 12);
    CHECK(y.slopes()(0, 0) == -0.2);
}

TEST_CASE("poisson count statistics over 1e5 seeds") {
    const LevySpec cp = basic_spec(0.0, 1.0, JumpLaw::fixed(1.0));
    const int N = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int seed = 0; seed < N; ++seed) {
        const auto count = static_cast<double>(jumps(sample_path(cp, 1.0, seed)).size());
        sum += count;
        sumsq += count * count;
    }
    const double mean = sum / N;
    const double var = sumsq / N - mean * mean;
    CHECK(std::fabs(mean - 1.0) <= 3.0 * std::sqrt(1.0 / N));
    CHECK(std::fabs(var - 1.0) <= 3.0 * std::sqrt(3.0 / N)); // Var of Poisson(1) sample variance
}

TEST_CASE("decompose is exact and M is centered") {
    // exact reconstruction Y - M - A == 0, straight from the shared grid
    const CadlagPath zero = CadlagPath::zero(1, 1.0);
    for (int seed = 0; seed < 50; ++seed) {
        LevySpec spec = basic_spec(0.4, 2.0, seed % 2 == 0 ? JumpLaw::normal(0.0, 0.5)
                                                           : JumpLaw::uniform(-1.5, 1.5));
        if (seed % 3 == 0) {
            spec.truncation = 0.1;
            spec.compensate = true;
        }
        const CadlagPath y = sample_path(spec, 1.0, static_cast<std::uint64_t>(seed));
        const Decomposition dec = decompose(y, spec);
        CHECK(eval(dec.M, 0.0)(0) == 0.0);
        const CadlagPath resid = linear_combine({{1.0, &y}, {-1.0, &dec.M}, {-1.0, &dec.A}});
        CHECK(sup_distance(resid, zero) == 0.0);
    }

    // lambda = 0: M identically zero, A the drift line
    const LevySpec drift_only = basic_spec(0.7, 0.0, JumpLaw::fixed(1.0));
    const CadlagPath line = sample_path(drift_only, 1.0, 3);
    const Decomposition dec = decompose(line, drift_only);
    CHECK(dec.M == CadlagPath::zero(1, 1.0));
    CHECK(dec.A == line);

    // provenance check
    CHECK_THROWS_AS(decompose(CadlagPath::constant(1.0, 1.0), basic_spec(0.5, 1.0, JumpLaw::fixed(0.1))),
                    DecompositionError);

    // empirical martingale property of M_T
    const LevySpec cp = basic_spec(0.5, 1.0, JumpLaw::fixed(0.1));
    double sum = 0.0, sumsq = 0.0;
    const int N = 10000;
    for (int seed = 0; seed < N; ++seed) {
        const CadlagPath y = sample_path(cp, 1.0, static_cast<std::uint64_t>(seed) + 777);
        const double mt = eval(decompose(y, cp).M, 1.0)(0);
        sum += mt;
        sumsq += mt * mt;
    }
    const double mean = sum / N;
    const double stderr_ = std::sqrt((sumsq / N - mean * mean) / N);
    CHECK(std::fabs(mean) <= 3.0 * stderr_);
}

TEST_CASE("dominating process") {
    // M = 0, A = b t: V = sqrt(2) b t
    const LevySpec drift_only = basic_spec(0.8, 0.0, JumpLaw::fixed(1.0));
    const CadlagPath line = sample_path(drift_only, 1.0, 5);
    const Decomposition dec = decompose(line, drift_only);
    const DominatingProcess dom =
        dominating_process(dec.M, dec.A, drift_only.predictable_qv_slope());
    for (double t : {0.25, 0.5, 1.0})
        CHECK(eval(dom.V, t)(0) == doctest::Approx(std::sqrt(2.0) * 0.8 * t).epsilon(1e-14));

    // single unit jump at 0.5, no drift: V nondecreasing, B = 0 at breakpoints
    const CadlagPath one_jump = CadlagPath::step(1.0, 0.0, {0.5}, {1.0});
    LevySpec spec = basic_spec(0.0, 2.0, JumpLaw::fixed(1.0));
    const Decomposition d2 = decompose(one_jump, spec);
    const DominatingProcess dom2 = dominating_process(d2.M, d2.A, spec.predictable_qv_slope());
    for (Eigen::Index k = 0; k < dom2.V.segments(); ++k)
        CHECK(dom2.V.slopes()(0, k) >= 0.0);
    for (const auto& j : jumps(dom2.V))
        CHECK(j.delta(0) >= 0.0);
    for (double t : dom2.V.times()) {
        const double b = eval(dom2.V, t)(0) -
                         2.0 * std::sqrt(2.0) *
                             std::sqrt(eval(dom2.quadratic_variation, t)(0) +
                                       eval(dom2.predictable_qv, t)(0)) -
                         std::sqrt(2.0) * eval(dom2.total_variation_A, t)(0);
        CHECK(std::fabs(b) <= 1e-13);
    }

    // V is nondecreasing across random seeds
    for (int seed = 0; seed < 25; ++seed) {
        const LevySpec cp = basic_spec(0.5, 1.0, JumpLaw::normal(0.0, 0.4));
        const CadlagPath y = sample_path(cp, 1.0, static_cast<std::uint64_t>(seed));
        const Decomposition dd = decompose(y, cp);
        const DominatingProcess dm = dominating_process(dd.M, dd.A, cp.predictable_qv_slope());
        for (Eigen::Index k = 0; k < dm.V.segments(); ++k)
            CHECK(dm.V.slopes()(0, k) >= 0.0);
        for (const auto& j : jumps(dm.V))
            CHECK(j.delta(0) >= -0.0);
    }
}

TEST_CASE("theta") {
    const CadlagPath zero = CadlagPath::zero(1, 1.0);
    const CadlagPath vline = CadlagPath::piecewise_linear(
        {0.0, 1.0}, (Eigen::MatrixXd(1, 2) << 0.0, 1.0).finished());
    CHECK(theta(zero, vline, 1.0) == 0.0);
    CHECK(theta(CadlagPath::constant(1.0, 1.0), vline, 1.0) == doctest::Approx(2.0).epsilon(1e-15));

    CHECK_THROWS_AS(theta(CadlagPath::constant(1.0, 1.0),
                          CadlagPath::piecewise_linear(
                              {0.0, 1.0}, (Eigen::MatrixXd(1, 2) << 1.0, 0.0).finished()),
                          1.0),
                    DomainError);

    // random step P against piecewise-linear increasing V vs refined sums
    CounterRng rng(9100);
    for (int trial = 0; trial < 10; ++trial) {
        const CadlagPath P = skflow::testing::random_step(rng, 5);
        std::vector<double> times{0.0, 0.3 + 0.2 * rng.uniform01(), 1.0};
        Eigen::MatrixXd vals(1, 3);
        vals << 0.0, 0.5 + rng.uniform01(), 2.0 + rng.uniform01();
        const CadlagPath V = CadlagPath::piecewise_linear(times, vals);
        const double exact = theta(P, V, 1.0);
        const double refined = refined_theta(P, V, 1.0, 100000);
        CHECK(exact == doctest::Approx(refined).epsilon(1e-6));
    }
}

TEST_CASE("stochastic integral") {
    CounterRng rng(9200);
    // identity integrand reproduces driver increments
    for (int seed = 0; seed < 10; ++seed) {
        const LevySpec cp = basic_spec(0.5, 2.0, JumpLaw::normal(0.0, 0.7));
        const CadlagPath y = sample_path(cp, 1.0, static_cast<std::uint64_t>(seed));
        const CadlagPath I = stochastic_integral(CadlagPath::constant(1.0, 1.0), 1, 1, y);
        const CadlagPath y0 = CadlagPath::constant(1.0, eval(y, 0.0));
        const CadlagPath expect = linear_combine({{1.0, &y}, {-1.0, &y0}});
        CHECK(sup_distance(I, expect) <= 1e-14);
    }

    // restricted drift integral
    const CadlagPath ramp = CadlagPath::piecewise_linear(
        {0.0, 1.0}, (Eigen::MatrixXd(1, 2) << 0.0, 1.0).finished());
    const CadlagPath P = CadlagPath::step(1.0, 0.0, {0.5}, {1.0});
    CHECK(eval(stochastic_integral(P, 1, 1, ramp), 1.0)(0) == 0.5);

    // pure-jump linear SDE: integral of the stochastic exponential
    // reproduces its increments exactly (event-driven grid)
    for (int seed = 0; seed < 10; ++seed) {
        const LevySpec cp = basic_spec(0.0, 3.0, JumpLaw::uniform(-0.4, 0.6));
        const CadlagPath y = sample_path(cp, 1.0, 100 + static_cast<std::uint64_t>(seed));
        const StochasticExponential dd(y, 1.0);
        // X as a step path on y's jump grid
        std::vector<double> jt;
        std::vector<double> jv;
        for (const auto& j : jumps(y)) {
            jt.push_back(j.time);
            jv.push_back(dd.at(j.time));
        }
        const CadlagPath X = CadlagPath::step(1.0, 1.0, jt, jv);
        const CadlagPath I = stochastic_integral(X, 1, 1, y);
        for (const auto& t : y.times())
            CHECK(std::fabs(eval(I, t)(0) - (dd.at(t) - 1.0)) <= 1e-10);
    }

    CHECK_THROWS_AS(stochastic_integral(CadlagPath::zero(2, 1.0), 1, 1, ramp), ShapeError);
}
