#include "skflow/malliavin.hpp"

#include <cmath>

namespace skflow {

namespace {

/// path * 1_{[r, T]}: zero before r, the path's own values from r on.
CadlagPath gate_from(const CadlagPath& path, double r) {
    if (r == 0.0)
        return path;
    std::vector<double> grid = merge_times(path.times(), {r});
    const auto K = static_cast<Eigen::Index>(grid.size()) - 1;
    Eigen::MatrixXd values = Eigen::MatrixXd::Zero(path.dim(), K + 1);
    Eigen::MatrixXd slopes = Eigen::MatrixXd::Zero(path.dim(), K);
    for (Eigen::Index j = 0; j <= K; ++j) {
        const double u = grid[static_cast<std::size_t>(j)];
        if (u < r)
            continue;
        values.col(j) = eval(path, u);
        if (j < K) {
            const auto& pt = path.times();
            const auto it = std::upper_bound(pt.begin(), pt.end(), u);
            const Eigen::Index pk = std::min<Eigen::Index>(
                static_cast<Eigen::Index>(it - pt.begin()) - 1, path.segments() - 1);
            slopes.col(j) = path.slopes().col(pk);
        }
    }
    return CadlagPath(std::move(grid), std::move(values), std::move(slopes));
}

} // namespace

CadlagPath derivative(const Coefficient& coef, const CadlagPath& forcing,
                      const CadlagPath& covariate, const CadlagPath& driver,
                      const MalliavinProbe& probe, const SolverConfig& config) {
    if (coef.m != 1 || driver.dim() != 1)
        throw ShapeError("derivative: the driver-shift construction is scalar in the driver");
    if (!(probe.r >= 0.0) || !(probe.r <= driver.horizon()))
        throw DomainError("derivative: r outside [0, T]");

    const CadlagPath shifted_driver = add_shift(driver, probe.r, probe.v);
    CadlagPath shifted_forcing = forcing;
    if (probe.shift_forcing)
        shifted_forcing = forcing + *probe.shift_forcing;
    CadlagPath shifted_covariate = covariate;
    if (probe.shift_covariate)
        shifted_covariate = covariate + *probe.shift_covariate;

    // declaring r as a time event aligns both runs' surrogate grids, so
    // the difference vanishes bit-exactly on [0, r)
    Coefficient aligned = coef;
    if (probe.r > 0.0 && probe.r < driver.horizon())
        aligned.time_events.push_back(probe.r);

    SolveResult base = solve(forcing, covariate, driver, aligned, config);
    SolveResult shifted =
        solve(shifted_forcing, shifted_covariate, shifted_driver, aligned, config);
    if (!base.converged || !shifted.converged)
        throw DerivativeError("derivative: solver did not converge (base " +
                                  std::string(base.converged ? "ok" : "flagged") + ", shifted " +
                                  std::string(shifted.converged ? "ok" : "flagged") + ")",
                              std::move(base), std::move(shifted));
    if (base.iterations != shifted.iterations) {
        // re-run both to the deeper level so the pre-shift construction
        // matches bit for bit (both runs converged already, so the matched
        // depth is at least as accurate)
        SolverConfig matched = config;
        matched.n_max = std::max(base.iterations, shifted.iterations);
        matched.tol = std::numeric_limits<double>::min();
        base = solve(forcing, covariate, driver, aligned, matched);
        shifted = solve(shifted_forcing, shifted_covariate, shifted_driver, aligned, matched);
        if (base.iterations != shifted.iterations)
            throw DerivativeError("derivative: depth matching failed under the node budget",
                                  std::move(base), std::move(shifted));
    }
    return shifted.X - base.X;
}

CadlagPath closed_form_example(const std::function<double(double)>& g, const CadlagPath& X,
                               const CadlagPath& X_shifted, const CadlagPath& driver, double r,
                               double v) {
    if (X.dim() != 1 || X_shifted.dim() != 1 || driver.dim() != 1)
        throw ShapeError("closed_form_example: scalar paths expected");
    if (X.horizon() != driver.horizon() || X_shifted.horizon() != driver.horizon())
        throw ShapeError("closed_form_example: horizon mismatch");

    // integrand g(Xs) - g(X) sampled on the union grid (exact for affine g,
    // node-exact otherwise), gated to [r, T]
    const std::vector<double> grid = merge_times(X.times(), X_shifted.times());
    const auto K = static_cast<Eigen::Index>(grid.size()) - 1;
    Eigen::MatrixXd qvals(1, K + 1);
    Eigen::MatrixXd qslopes(1, K);
    PathCursor cx(X), cs(X_shifted);
    for (Eigen::Index j = 0; j <= K; ++j) {
        const double u = grid[static_cast<std::size_t>(j)];
        qvals(0, j) = g(cs.scalar_value(u)) - g(cx.scalar_value(u));
    }
    for (Eigen::Index j = 0; j < K; ++j) {
        const double a = grid[static_cast<std::size_t>(j)];
        const double b = grid[static_cast<std::size_t>(j + 1)];
        const double qa = qvals(0, j);
        const double qb = g(left_limit(X_shifted, b)(0)) - g(left_limit(X, b)(0));
        qslopes(0, j) = (qb - qa) / (b - a);
    }
    const CadlagPath integrand = gate_from(CadlagPath(grid, qvals, qslopes), r);
    const CadlagPath integral = stochastic_integral(integrand, 1, 1, driver);
    const CadlagPath kick =
        add_shift(CadlagPath::zero(1, driver.horizon()), r, g(left_limit(X, r)(0)) * v);
    return integral + kick;
}

IntegrabilityEstimate integrability_estimate(const Coefficient& coef, double initial_value,
                                             const LevySpec& spec, double horizon, int r_points,
                                             int v_points, int n_paths, std::uint64_t seed,
                                             const SolverConfig& config) {
    if (r_points < 1 || v_points < 1 || n_paths < 1)
        throw DomainError("integrability_estimate: counts must be positive");
    spec.validate();
    if (spec.dim != 1)
        throw ShapeError("integrability_estimate: scalar drivers only");

    const CadlagPath forcing = CadlagPath::constant(horizon, initial_value);
    const CadlagPath covariate = CadlagPath::zero(1, horizon);
    const auto vq = spec.jump_law.quadrature(v_points);

    double sum = 0.0, sumsq = 0.0;
    for (int p = 0; p < n_paths; ++p) {
        const CadlagPath driver = sample_path(spec, horizon, seed + static_cast<std::uint64_t>(p));
        const SolveResult base = solve(forcing, covariate, driver, coef, config);
        double path_total = 0.0;
        for (int i = 0; i < r_points; ++i) {
            const double r = horizon * (i + 0.5) / r_points; // midpoint rule in r
            const double wr = horizon / r_points;
            for (const auto& [v, wv] : vq) {
                const CadlagPath shifted_driver = add_shift(driver, r, v);
                const SolveResult shifted =
                    solve(forcing, covariate, shifted_driver, coef, config);
                const double d_T = eval(shifted.X, horizon)(0) - eval(base.X, horizon)(0);
                path_total += wr * spec.intensity * wv * d_T * d_T;
            }
        }
        sum += path_total;
        sumsq += path_total * path_total;
    }
    IntegrabilityEstimate est;
    est.paths = n_paths;
    est.value = sum / n_paths;
    est.standard_error =
        n_paths > 1 ? std::sqrt(std::max(0.0, (sumsq / n_paths - est.value * est.value) /
                                                  (n_paths - 1)))
                    : 0.0;
    return est;
}

} // namespace skflow
