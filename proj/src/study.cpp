#include "skflow/study.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "skflow/malliavin.hpp"
#include "skflow/reference.hpp"
#include "skflow/rng.hpp"
#include "skflow/skorokhod.hpp"

namespace skflow {

namespace {

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

/// Random scalar step path with at most max_jumps jumps in (0, T), values
/// uniform in [-scale, scale].
CadlagPath random_step_path(CounterRng& rng, int max_jumps, double horizon, double scale) {
    const int n = static_cast<int>(rng() % static_cast<std::uint64_t>(max_jumps + 1));
    std::vector<double> times;
    for (int i = 0; i < n; ++i)
        times.push_back(horizon * (0.05 + 0.9 * rng.uniform01()));
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    std::vector<double> values;
    for (std::size_t i = 0; i < times.size(); ++i)
        values.push_back(scale * (2.0 * rng.uniform01() - 1.0));
    return CadlagPath::step(horizon, scale * (2.0 * rng.uniform01() - 1.0), times, values);
}

LevySpec example_driver_spec() {
    LevySpec s;
    s.dim = 1;
    s.drift = Eigen::VectorXd::Constant(1, 0.5);
    s.intensity = 1.0;
    s.jump_law = JumpLaw::fixed(0.1);
    return s;
}

} // namespace

std::string format_sig12(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

CriterionResult metric_oracle_agreement(std::uint64_t seed, int pairs, std::string* csv) {
    const double t0 = now_seconds();
    CounterRng rng(seed, 0x5701);
    double max_gap = 0.0, max_sym = 0.0, max_tri = 0.0, max_dom = 0.0;
    std::string rows = "pair,exact,oracle,gap,sup_distance\n";
    for (int i = 0; i < pairs; ++i) {
        const CadlagPath x = random_step_path(rng, 6, 1.0, 2.0);
        const CadlagPath y = random_step_path(rng, 6, 1.0, 2.0);
        const CadlagPath z = random_step_path(rng, 6, 1.0, 2.0);
        const double dxy = skorokhod_distance_exact(x, y);
        const double oxy = skorokhod_warp_search(x, y, 1e-3);
        const double sup = sup_distance(x, y);
        max_gap = std::max(max_gap, std::fabs(dxy - oxy));
        max_sym = std::max(max_sym, std::fabs(dxy - skorokhod_distance_exact(y, x)));
        const double dxz = skorokhod_distance_exact(x, z);
        const double dyz = skorokhod_distance_exact(y, z);
        max_tri = std::max(max_tri, dxz - (dxy + dyz));
        max_dom = std::max(max_dom, dxy - sup);
        rows += std::to_string(i) + ',' + format_sig12(dxy) + ',' + format_sig12(oxy) + ',' +
                format_sig12(dxy - oxy) + ',' + format_sig12(sup) + '\n';
    }
    if (csv)
        *csv = rows;
    CriterionResult r;
    r.name = "skorokhod-metric-correctness";
    r.value = max_gap;
    r.threshold = 1e-4;
    r.seconds = now_seconds() - t0;
    r.pass = max_gap <= 1e-4 && max_sym <= 1e-12 && max_tri <= 1e-9 && max_dom <= 0.0 &&
             r.seconds < 120.0;
    r.detail = "max |exact-oracle| " + format_sig12(max_gap) + ", symmetry " +
               format_sig12(max_sym) + ", triangle slack " + format_sig12(max_tri) +
               ", dominance slack " + format_sig12(max_dom);
    return r;
}

std::vector<CriterionResult> convergence_vs_n(std::uint64_t seed, int seeds, SolverConfig solver,
                                              std::string* csv) {
    const double t0 = now_seconds();
    const LevySpec spec = example_driver_spec();
    const Coefficient lin = make_coefficient("linear");
    const CadlagPath gamma = CadlagPath::constant(1.0, 1.0);
    const CadlagPath zeta = CadlagPath::zero(1, 1.0);

    std::string rows = "seed,n,gap_to_f,dist_to_prev,error\n";
    double worst_final = 0.0;
    double ratio_sum = 0.0;
    int ratio_count = 0;
    int gap_violations = 0;
    bool monotone_ok = true;
    for (int s = 0; s < seeds; ++s) {
        const CadlagPath eta = sample_path(spec, 1.0, seed + static_cast<std::uint64_t>(s));
        const StochasticExponential truth(eta, 1.0);
        std::vector<double> errors;
        const SolveResult r = solve(gamma, zeta, eta, lin, solver, [&](const IterationState& st) {
            const double err = truth.sup_error(st.Z);
            errors.push_back(err);
            if (st.gap_to_f > std::ldexp(1.0, -st.n) + 1e-12)
                ++gap_violations;
            rows += std::to_string(seed + static_cast<std::uint64_t>(s)) + ',' +
                    std::to_string(st.n) + ',' + format_sig12(st.gap_to_f) + ',' +
                    format_sig12(st.dist_to_prev) + ',' + format_sig12(err) + '\n';
        });
        (void)r;
        worst_final = std::max(worst_final, errors.back());
        double seed_ratio = 0.0;
        int seed_count = 0;
        for (std::size_t n = 6; n < errors.size(); ++n) {
            if (errors[n - 1] > 0.0) {
                seed_ratio += errors[n] / errors[n - 1];
                ++seed_count;
            }
        }
        if (seed_count > 0) {
            ratio_sum += seed_ratio / seed_count;
            ++ratio_count;
        } else {
            monotone_ok = errors.back() == 0.0 || errors.size() < 6;
        }
    }
    if (csv)
        *csv = rows;
    const double mean_ratio = ratio_count > 0 ? ratio_sum / ratio_count : 0.0;
    const double elapsed = now_seconds() - t0;

    CriterionResult conv;
    conv.name = "psi-iteration-convergence";
    conv.value = worst_final;
    conv.threshold = 1e-6;
    conv.seconds = elapsed;
    conv.pass = worst_final < 1e-6 && mean_ratio <= 0.75 && monotone_ok && elapsed < 60.0;
    conv.detail = "max final error " + format_sig12(worst_final) + ", mean error ratio " +
                  format_sig12(mean_ratio);

    CriterionResult gap;
    gap.name = "freeze-gap-invariant";
    gap.value = static_cast<double>(gap_violations);
    gap.threshold = 0.0;
    gap.seconds = elapsed;
    gap.pass = gap_violations == 0;
    gap.detail = std::to_string(gap_violations) + " violations of gap <= 2^-n + 1e-12";
    return {conv, gap};
}

CriterionResult theta_inequality(std::uint64_t seed, int paths, std::string* csv) {
    const double t0 = now_seconds();
    const LevySpec spec = example_driver_spec();
    const CadlagPath P = CadlagPath::step(1.0, 0.8, {0.3, 0.7}, {-1.0, 0.5});
    double sup_p_sq = std::max(sup_norm_before(P, 1.0), std::fabs(eval(P, 1.0)(0)));
    sup_p_sq *= sup_p_sq;

    double mean_lhs = 0.0, mean_theta_sq = 0.0, mean_pv = 0.0;
    std::string rows = "seed,sup_integral_sq,theta_sq,sup_p_sq_V_T_sq\n";
    for (int s = 0; s < paths; ++s) {
        const CadlagPath y = sample_path(spec, 1.0, seed + static_cast<std::uint64_t>(s));
        const CadlagPath I = stochastic_integral(P, 1, 1, y);
        const double lhs = [&] {
            const double v = sup_norm_before(I, 1.0);
            return v * v;
        }();
        const Decomposition dec = decompose(y, spec);
        const DominatingProcess dom =
            dominating_process(dec.M, dec.A, spec.predictable_qv_slope());
        const double th = theta(P, dom.V, 1.0);
        const double vt = eval(dom.V, 1.0)(0);
        mean_lhs += lhs;
        mean_theta_sq += th * th;
        mean_pv += sup_p_sq * vt * vt;
        if (s < 1000)
            rows += std::to_string(s) + ',' + format_sig12(lhs) + ',' + format_sig12(th * th) +
                    ',' + format_sig12(sup_p_sq * vt * vt) + '\n';
    }
    mean_lhs /= paths;
    mean_theta_sq /= paths;
    mean_pv /= paths;
    if (csv)
        *csv = rows;

    CriterionResult r;
    r.name = "theta-second-moment-bounds";
    r.value = std::max(mean_lhs / mean_theta_sq, mean_lhs / (4.0 * mean_pv));
    r.threshold = 1.05;
    r.seconds = now_seconds() - t0;
    r.pass = mean_lhs <= 1.05 * mean_theta_sq && mean_lhs <= 1.05 * 4.0 * mean_pv &&
             r.seconds < 120.0;
    r.detail = "E sup|int P dY|^2 = " + format_sig12(mean_lhs) + ", E theta^2 = " +
               format_sig12(mean_theta_sq) + ", 4 E sup|P|^2 V_T^2 = " +
               format_sig12(4.0 * mean_pv);
    return r;
}

CriterionResult malliavin_identity(std::uint64_t seed, int probes, SolverConfig solver,
                                   std::string* csv) {
    const double t0 = now_seconds();
    const LevySpec spec = example_driver_spec();
    const Coefficient lin = make_coefficient("linear");
    const CadlagPath xi = CadlagPath::constant(1.0, 1.0);
    const CadlagPath zeta = CadlagPath::zero(1, 1.0);
    const double r_grid[9] = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    const double v_grid[4] = {0.05, -0.05, 0.2, -0.2};

    CounterRng rng(seed, 0x3A11);
    double worst = 0.0;
    std::string rows = "probe,seed,r,v,sup_difference\n";
    for (int p = 0; p < probes; ++p) {
        const std::uint64_t path_seed = rng();
        const double r = r_grid[rng() % 9];
        const double v = v_grid[rng() % 4];
        const CadlagPath y = sample_path(spec, 1.0, path_seed);
        MalliavinProbe probe;
        probe.r = r;
        probe.v = v;
        SolveResult base{CadlagPath::zero(1, 1.0), false, StopReason::n_max, 0, {}};
        SolveResult shifted = base;
        const CadlagPath route_a = derivative(lin, xi, zeta, y, probe, solver, &base, &shifted);
        const CadlagPath route_b =
            closed_form_example([](double x) { return x; }, base.X, shifted.X, y, r, v);
        const double diff = sup_distance(route_a, route_b);
        worst = std::max(worst, diff);
        rows += std::to_string(p) + ',' + std::to_string(path_seed) + ',' + format_sig12(r) +
                ',' + format_sig12(v) + ',' + format_sig12(diff) + '\n';
    }
    if (csv)
        *csv = rows;
    CriterionResult r;
    r.name = "malliavin-two-representation-identity";
    r.value = worst;
    r.threshold = 1e-8;
    r.seconds = now_seconds() - t0;
    r.pass = worst <= 1e-8 && r.seconds < 60.0;
    r.detail = "max sup-difference " + format_sig12(worst) + " at solver tol " +
               format_sig12(solver.tol) + ", node budget " +
               std::to_string(solver.max_nodes);
    return r;
}

CriterionResult adaptedness_universality(std::uint64_t seed, int problems, SolverConfig solver,
                                         std::string* csv) {
    const double t0 = now_seconds();
    const CadlagPath zeta = CadlagPath::zero(1, 1.0);
    CounterRng rng(seed, 0xADA7);
    double worst = 0.0;
    bool deterministic = true;
    std::string rows = "problem,t,restricted_distance\n";
    for (int p = 0; p < problems; ++p) {
        const double a = 0.6 * (2.0 * rng.uniform01() - 1.0);
        const double b = 0.4 * (2.0 * rng.uniform01() - 1.0);
        Coefficient coef;
        switch (rng() % 3) {
        case 0:
            coef = markov_coefficient([a, b](double x) { return a * x + b; },
                                      std::fabs(a) + std::fabs(b) + 0.1, "affine-g");
            break;
        case 1:
            coef = markov_coefficient([a](double x) { return std::sin(a * x); },
                                      std::fabs(a) + 0.1, "sin-g");
            break;
        default:
            coef = markov_coefficient([b](double x) { return 0.5 * std::cos(x) + b; },
                                      1.0 + std::fabs(b), "cos-g");
        }
        LevySpec spec;
        spec.dim = 1;
        spec.drift = Eigen::VectorXd::Constant(1, 0.3 * (2.0 * rng.uniform01() - 1.0));
        spec.intensity = 1.0 + rng.uniform01();
        spec.jump_law = JumpLaw::uniform(-0.25, 0.25);
        const CadlagPath eta = sample_path(spec, 1.0, seed * 1000 + static_cast<std::uint64_t>(p));
        const CadlagPath gamma = CadlagPath::constant(1.0, 2.0 * rng.uniform01() - 1.0);
        const double t = 0.2 + 0.6 * rng.uniform01();

        const SolveResult full = solve(gamma, zeta, eta, coef, solver);
        const SolveResult stopped =
            solve(stop_at(gamma, t), stop_at(zeta, t), stop_at(eta, t), coef, solver);
        const double dist = sup_distance(stop_at(full.X, t), stop_at(stopped.X, t));
        worst = std::max(worst, dist);
        rows += std::to_string(p) + ',' + format_sig12(t) + ',' + format_sig12(dist) + '\n';
        if (p < 3) {
            const SolveResult again = solve(gamma, zeta, eta, coef, solver);
            deterministic = deterministic && again.X == full.X;
        }
    }
    if (csv)
        *csv = rows;
    CriterionResult r;
    r.name = "adaptedness-and-universality";
    r.value = worst;
    r.threshold = 5.0 * solver.tol;
    r.seconds = now_seconds() - t0;
    r.pass = worst <= 5.0 * solver.tol && deterministic;
    r.detail = "max restricted distance " + format_sig12(worst) + ", repeated runs " +
               (deterministic ? "bit-identical" : "DIVERGED");
    return r;
}

CriterionResult stopped_path_bound(std::uint64_t seed, int paths, std::string* csv) {
    const double t0 = now_seconds();
    CounterRng rng(seed, 0x50B0);
    double worst_excess = -1.0;
    std::string rows = "case,t,t_k,lhs,rhs\n";
    for (int i = 0; i < paths; ++i) {
        const CadlagPath eta = random_step_path(rng, 8, 1.0, 2.0);
        const double t = 0.85 * rng.uniform01();
        const double tk = t + 0.001 + 0.099 * rng.uniform01();
        const double lhs = skorokhod_distance_exact(stop_at(eta, t), stop_at(eta, tk));
        const double rhs = oscillation_from(eta, t, tk);
        worst_excess = std::max(worst_excess, lhs - rhs);
        rows += std::to_string(i) + ',' + format_sig12(t) + ',' + format_sig12(tk) + ',' +
                format_sig12(lhs) + ',' + format_sig12(rhs) + '\n';
    }
    if (csv)
        *csv = rows;
    CriterionResult r;
    r.name = "stopped-path-bound";
    r.value = worst_excess;
    r.threshold = 0.0;
    r.seconds = now_seconds() - t0;
    r.pass = worst_excess <= 0.0;
    r.detail = "max (d^S - oscillation) = " + format_sig12(worst_excess);
    return r;
}

std::vector<CriterionResult> driver_statistics(std::uint64_t seed, int paths, std::string* csv) {
    const double t0 = now_seconds();
    const LevySpec spec = example_driver_spec();
    const CadlagPath zero = CadlagPath::zero(1, 1.0);
    double sum = 0.0, sumsq = 0.0;
    int reconstruction_failures = 0;
    int monotonicity_failures = 0;
    for (int s = 0; s < paths; ++s) {
        const CadlagPath y = sample_path(spec, 1.0, seed + static_cast<std::uint64_t>(s));
        const double count = static_cast<double>(jumps(y).size());
        sum += count;
        sumsq += count * count;
        const Decomposition dec = decompose(y, spec);
        const CadlagPath resid = linear_combine({{1.0, &y}, {-1.0, &dec.M}, {-1.0, &dec.A}});
        if (sup_distance(resid, zero) != 0.0)
            ++reconstruction_failures;
        const DominatingProcess dom =
            dominating_process(dec.M, dec.A, spec.predictable_qv_slope());
        for (Eigen::Index k = 0; k < dom.V.segments(); ++k)
            if (dom.V.slopes()(0, k) < 0.0)
                ++monotonicity_failures;
        for (const auto& j : jumps(dom.V))
            if (j.delta(0) < 0.0)
                ++monotonicity_failures;
    }
    const double mean = sum / paths;
    const double var = sumsq / paths - mean * mean;
    const double lambda_t = spec.intensity * 1.0;
    // 4 sigma bands for the sample mean and sample variance of Poisson(1)
    const double mean_band = 4.0 * std::sqrt(lambda_t / paths);
    const double var_band = 4.0 * std::sqrt((lambda_t + 3.0 * lambda_t * lambda_t -
                                             lambda_t * lambda_t + 2.0 * lambda_t * lambda_t /
                                                                       (paths - 1.0)) /
                                            paths);
    if (csv)
        *csv = "statistic,value,target,band\nmean," + format_sig12(mean) + ',' +
               format_sig12(lambda_t) + ',' + format_sig12(mean_band) + "\nvariance," +
               format_sig12(var) + ',' + format_sig12(lambda_t) + ',' + format_sig12(var_band) +
               '\n';
    const double elapsed = now_seconds() - t0;

    CriterionResult stats;
    stats.name = "driver-count-statistics";
    stats.value = std::max(std::fabs(mean - lambda_t) / mean_band,
                           std::fabs(var - lambda_t) / var_band);
    stats.threshold = 1.0;
    stats.seconds = elapsed;
    stats.pass = std::fabs(mean - lambda_t) <= mean_band && std::fabs(var - lambda_t) <= var_band;
    stats.detail = "count mean " + format_sig12(mean) + " (band " + format_sig12(mean_band) +
                   "), variance " + format_sig12(var) + " (band " + format_sig12(var_band) + ")";

    CriterionResult exact;
    exact.name = "decomposition-and-dominating-process";
    exact.value = static_cast<double>(reconstruction_failures + monotonicity_failures);
    exact.threshold = 0.0;
    exact.seconds = elapsed;
    exact.pass = reconstruction_failures == 0 && monotonicity_failures == 0;
    exact.detail = std::to_string(reconstruction_failures) + " reconstruction failures, " +
                   std::to_string(monotonicity_failures) + " monotonicity failures";
    return {stats, exact};
}

StudyReport run_study(const ExperimentConfig& config) {
    StudyReport report;
    report.study = config.study;
    if (config.samples == 0) {
        report.no_op = true;
        return report;
    }
    const int n = config.samples;
    if (config.study == "metric-oracle-agreement") {
        report.criteria.push_back(
            metric_oracle_agreement(config.seed, n < 0 ? 200 : n, &report.csv));
    } else if (config.study == "convergence-vs-n") {
        report.criteria = convergence_vs_n(config.seed, n < 0 ? 20 : n, config.solver,
                                           &report.csv);
    } else if (config.study == "theta-inequality") {
        report.criteria = {theta_inequality(config.seed, n < 0 ? 10000 : n, &report.csv)};
    } else if (config.study == "malliavin-identity") {
        report.criteria = {
            malliavin_identity(config.seed, n < 0 ? 100 : n, config.solver, &report.csv)};
    } else {
        throw ConfigError("unknown study: " + config.study);
    }
    return report;
}

void write_report(const StudyReport& report, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    if (!report.csv.empty()) {
        std::ofstream rows(fs::path(out_dir) / (report.study + ".csv"));
        rows << report.csv;
    }
    nlohmann::json j;
    j["schema"] = 1;
    j["study"] = report.study;
    j["no_op"] = report.no_op;
    j["pass"] = report.pass();
    j["criteria"] = nlohmann::json::array();
    for (const auto& c : report.criteria)
        j["criteria"].push_back({{"name", c.name},
                                 {"pass", c.pass},
                                 {"value", c.value},
                                 {"threshold", c.threshold},
                                 {"detail", c.detail},
                                 {"seconds", c.seconds}});
    std::ofstream summary(fs::path(out_dir) / "summary.json");
    summary << j.dump(2) << '\n';
}

} // namespace skflow
