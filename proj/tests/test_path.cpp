#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "skflow/path.hpp"
#include "skflow/path_io.hpp"
#include "skflow/rng.hpp"
#include "test_support.hpp"

using namespace skflow;
using skflow::testing::indicator;
using skflow::testing::random_affine;
using skflow::testing::random_step;
using skflow::testing::vec1;

TEST_CASE("eval basics") {
    const CadlagPath c = CadlagPath::constant(1.0, vec1(3.5));
    CHECK(eval(c, 0.5)(0) == 3.5);
    CHECK(eval(c, 0.0)(0) == 3.5);
    CHECK(eval(c, 1.0)(0) == 3.5);

    // right continuity at the jump time
    const CadlagPath ind = indicator(0.3);
    CHECK(eval(ind, 0.3)(0) == 1.0);
    CHECK(eval(ind, 0.29)(0) == 0.0);
    CHECK(eval(ind, 1.0)(0) == 1.0);

    // affine segment a=1, c=2 on [0,1)
    const CadlagPath aff(std::vector<double>{0.0, 1.0},
                         (Eigen::MatrixXd(1, 2) << 1.0, 3.0).finished(),
                         (Eigen::MatrixXd(1, 1) << 2.0).finished());
    CHECK(eval(aff, 0.25)(0) == 1.5);

    CHECK_THROWS_AS(eval(c, -0.1), DomainError);
    CHECK_THROWS_AS(eval(c, 1.1), DomainError);
}

TEST_CASE("left limits") {
    const CadlagPath ind = indicator(0.3);
    CHECK(left_limit(ind, 0.3)(0) == 0.0);
    CHECK(left_limit(ind, 0.31)(0) == 1.0);
    CHECK(left_limit(ind, 0.0)(0) == eval(ind, 0.0)(0));

    // continuous path: left limit equals eval everywhere
    const CadlagPath lin = CadlagPath::piecewise_linear(
        {0.0, 0.5, 1.0}, (Eigen::MatrixXd(1, 3) << 0.0, 1.0, 0.5).finished());
    for (double t : {0.25, 0.5, 0.75, 1.0})
        CHECK(left_limit(lin, t)(0) == eval(lin, t)(0));

    // slope 2 from value 1 at 0 gives left limit 2 at t = 0.5
    const CadlagPath ramp(std::vector<double>{0.0, 0.5, 1.0},
                          (Eigen::MatrixXd(1, 3) << 1.0, 5.0, 5.0).finished(),
                          (Eigen::MatrixXd(1, 2) << 2.0, 0.0).finished());
    CHECK(left_limit(ramp, 0.5)(0) == 2.0);

    // left limit approached along t - 10^-k, exact for step paths
    const CadlagPath s = indicator(0.3);
    for (int k = 2; k <= 8; ++k)
        CHECK(eval(s, 0.3 - std::pow(10.0, -k))(0) == left_limit(s, 0.3)(0));
}

TEST_CASE("stop_at") {
    CounterRng rng(7001);
    const CadlagPath x = random_step(rng, 5);
    CHECK(stop_at(x, x.horizon()) == x);

    const CadlagPath at0 = stop_at(x, 0.0);
    CHECK(at0 == CadlagPath::constant(1.0, eval(x, 0.0)));

    CHECK(stop_at(indicator(0.3), 0.2) == CadlagPath::zero(1, 1.0));

    // stop composition law, exact
    for (int trial = 0; trial < 50; ++trial) {
        const CadlagPath p = random_affine(rng, 6);
        const double t = rng.uniform01();
        const double u = rng.uniform01();
        CHECK(stop_at(stop_at(p, t), u) == stop_at(p, std::min(t, u)));
    }
}

TEST_CASE("add_shift") {
    CounterRng rng(7002);
    const CadlagPath x = random_affine(rng, 5);
    CHECK(add_shift(x, 0.5, 0.0) == x);

    const CadlagPath shifted = add_shift(CadlagPath::zero(1, 1.0), 0.5, 2.0);
    CHECK(shifted == CadlagPath::step(1.0, 0.0, {0.5}, {2.0}));

    // shifting back restores the original (canonical form)
    for (int trial = 0; trial < 30; ++trial) {
        const CadlagPath p = random_affine(rng, 6);
        const double r = rng.uniform01();
        const double v = 2.0 * rng.uniform01() - 1.0;
        const CadlagPath back = add_shift(add_shift(p, r, v), r, -v);
        for (int i = 0; i < 100; ++i) {
            const double t = rng.uniform01();
            CHECK(eval(back, t)(0) == doctest::Approx(eval(p, t)(0)).epsilon(1e-15));
        }
    }

    // shift at T touches only the terminal value
    const CadlagPath endshift = add_shift(x, 1.0, 1.0);
    CHECK(eval(endshift, 1.0)(0) == eval(x, 1.0)(0) + 1.0);
    CHECK(left_limit(endshift, 1.0)(0) == left_limit(x, 1.0)(0));
}

TEST_CASE("sup_distance") {
    const CadlagPath a = indicator(0.3);
    const CadlagPath b = indicator(0.4);
    CHECK(sup_distance(a, a) == 0.0);
    CHECK(sup_distance(a, b) == 1.0);

    CHECK_THROWS_AS(sup_distance(a, CadlagPath::zero(2, 1.0)), ShapeError);
    CHECK_THROWS_AS(sup_distance(a, CadlagPath::zero(1, 2.0)), ShapeError);

    // dense-grid oracle at step 1e-5 agrees within 1e-4
    CounterRng rng(7003);
    for (int trial = 0; trial < 20; ++trial) {
        const CadlagPath x = random_affine(rng, 6);
        const CadlagPath y = random_affine(rng, 6);
        const double exact = sup_distance(x, y);
        double dense = 0.0;
        for (int i = 0; i <= 100000; ++i) {
            const double t = i / 100000.0;
            dense = std::max(dense, std::fabs(eval(x, t)(0) - eval(y, t)(0)));
        }
        CHECK(dense <= exact + 1e-12);
        CHECK(exact <= dense + 1e-4);
    }

    // metric axioms: symmetry exact, triangle within 1e-12
    for (int trial = 0; trial < 30; ++trial) {
        const CadlagPath x = random_step(rng, 5);
        const CadlagPath y = random_step(rng, 5);
        const CadlagPath z = random_step(rng, 5);
        CHECK(sup_distance(x, y) == sup_distance(y, x));
        CHECK(sup_distance(x, z) <= sup_distance(x, y) + sup_distance(y, z) + 1e-12);
    }
}

TEST_CASE("linear_combine") {
    CounterRng rng(7004);
    const CadlagPath x = random_step(rng, 4);
    const CadlagPath y = random_affine(rng, 4);

    CHECK(linear_combine({{1.0, &x}, {0.0, &y}}) == x);
    CHECK(sup_distance(x - x, CadlagPath::zero(1, 1.0)) == 0.0);

    const CadlagPath combo = linear_combine({{2.0, &x}, {3.0, &y}});
    for (int i = 0; i < 200; ++i) {
        const double t = rng.uniform01();
        CHECK(eval(combo, t)(0) ==
              doctest::Approx(2.0 * eval(x, t)(0) + 3.0 * eval(y, t)(0)).epsilon(1e-14));
    }
}

TEST_CASE("canonicalization keeps evaluations") {
    // build a redundant representation and check eval is unchanged
    std::vector<double> times{0.0, 0.25, 0.5, 0.75, 1.0};
    Eigen::MatrixXd values(1, 5);
    Eigen::MatrixXd slopes(1, 4);
    values << 1.0, 1.5, 2.0, 3.0, 3.5;
    slopes << 2.0, 2.0, 4.0, 2.0;
    const CadlagPath p(times, values, slopes); // 0.25 is redundant, 0.5 and 0.75 are not
    CHECK(p.segments() == 3);
    CounterRng rng(7005);
    for (int i = 0; i < 1000; ++i) {
        const double t = rng.uniform01();
        const Eigen::Index k =
            t < 0.5 ? 0 : (t < 0.75 ? 1 : 2); // piecewise evaluation by hand
        (void)k;
        double expect;
        if (t < 0.5)
            expect = 1.0 + 2.0 * t;
        else if (t < 0.75)
            expect = 2.0 + 4.0 * (t - 0.5);
        else
            expect = 3.0 + 2.0 * (t - 0.75);
        CHECK(eval(p, t)(0) == expect);
    }
}

TEST_CASE("jumps and total variation") {
    const CadlagPath x = CadlagPath::step(1.0, 0.0, {0.25, 0.75}, {1.0, -0.5});
    const auto js = jumps(x);
    REQUIRE(js.size() == 2);
    CHECK(js[0].time == 0.25);
    CHECK(js[0].delta(0) == 1.0);
    CHECK(js[1].delta(0) == -1.5);
    CHECK(total_variation(x) == 2.5);

    const CadlagPath drift = CadlagPath::piecewise_linear(
        {0.0, 1.0}, (Eigen::MatrixXd(1, 2) << 0.0, 0.5).finished());
    CHECK(total_variation(drift) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("csv round trip") {
    CounterRng rng(7006);
    for (int trial = 0; trial < 20; ++trial) {
        const CadlagPath p = trial % 2 == 0 ? random_step(rng, 6) : random_affine(rng, 6);
        std::stringstream s1;
        write_path_csv(s1, p);
        const CadlagPath p1 = read_path_csv(s1);
        // breakpoint values reproduce bitwise; interiors within fp noise
        CHECK(p1.times() == p.times());
        CHECK((p1.values().array() == p.values().array()).all());
        CHECK(sup_distance(p, p1) <= 1e-12);
        // second generation is byte-stable
        std::stringstream s2, s3;
        write_path_csv(s2, p1);
        const CadlagPath p2 = read_path_csv(s2);
        write_path_csv(s3, p2);
        CHECK(s2.str() == s3.str());
        CHECK(p1 == p2);
    }
    // step paths round-trip bit-exactly including the serialized bytes
    const CadlagPath s = CadlagPath::step(1.0, 0.25, {0.3, 0.9}, {1.0, -2.0});
    std::stringstream w1, w2;
    write_path_csv(w1, s);
    const CadlagPath r = read_path_csv(w1);
    CHECK(r == s);
    write_path_csv(w2, r);
    w1.seekg(0);
    CHECK(w2.str() == w1.str());
}

TEST_CASE("oscillation and sup_norm_before") {
    const CadlagPath x = CadlagPath::step(1.0, 1.0, {0.5}, {3.0});
    CHECK(sup_norm_before(x, 0.5) == 1.0);  // jump at 0.5 not seen from the left
    CHECK(sup_norm_before(x, 1.0) == 3.0);
    CHECK(oscillation_from(x, 0.25, 0.75) == 2.0);
    CHECK(oscillation_from(x, 0.25, 0.4) == 0.0);
}
