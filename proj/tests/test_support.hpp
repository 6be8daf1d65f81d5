#pragma once

#include <algorithm>
#include <vector>

#include "skflow/path.hpp"
#include "skflow/rng.hpp"

namespace skflow::testing {

inline Eigen::VectorXd vec1(double x) { return Eigen::VectorXd::Constant(1, x); }

inline CadlagPath indicator(double from, double horizon = 1.0) {
    return CadlagPath::step(horizon, 0.0, {from}, {1.0});
}

/// Random scalar step path with up to max_jumps jumps strictly inside (0, T),
/// values uniform in [-scale, scale].
inline CadlagPath random_step(CounterRng& rng, int max_jumps, double horizon = 1.0,
                              double scale = 2.0) {
    const int n = static_cast<int>(rng() % static_cast<std::uint64_t>(max_jumps + 1));
    std::vector<double> times;
    for (int i = 0; i < n; ++i)
        times.push_back((0.05 + 0.9 * rng.uniform01()) * horizon);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    std::vector<double> values;
    for (std::size_t i = 0; i < times.size(); ++i)
        values.push_back(scale * (2.0 * rng.uniform01() - 1.0));
    return CadlagPath::step(horizon, scale * (2.0 * rng.uniform01() - 1.0), times, values);
}

/// Random scalar piecewise-affine path with jumps and drift.
inline CadlagPath random_affine(CounterRng& rng, int max_breaks, double horizon = 1.0) {
    const int n = 2 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_breaks));
    std::vector<double> times{0.0};
    for (int i = 0; i < n; ++i)
        times.push_back(horizon * rng.uniform01());
    times.push_back(horizon);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    const auto K = static_cast<Eigen::Index>(times.size()) - 1;
    Eigen::MatrixXd values(1, K + 1);
    Eigen::MatrixXd slopes(1, K);
    for (Eigen::Index k = 0; k <= K; ++k)
        values(0, k) = 2.0 * rng.uniform01() - 1.0;
    for (Eigen::Index k = 0; k < K; ++k)
        slopes(0, k) = 4.0 * rng.uniform01() - 2.0;
    return CadlagPath(times, values, slopes);
}

} // namespace skflow::testing
