#include "skflow/coefficient.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "skflow/rng.hpp"

namespace skflow {

double op_norm(const Eigen::MatrixXd& a) {
    if (a.size() == 1)
        return std::fabs(a(0, 0));
    if (a.rows() == 1 || a.cols() == 1)
        return a.norm();
    return Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues()(0);
}

Eigen::MatrixXd eval_g(const Coefficient& coef, double t, const CadlagPath& zeta,
                       const CadlagPath& gamma) {
    if (t == 0.0)
        return coef.eval_f(0.0, zeta, gamma);
    // probe the full dyadic ladder; early stabilization can fool a step
    // coefficient whose last jump sits close below t
    Eigen::MatrixXd last = coef.eval_f(std::max(0.0, t - 0.5), zeta, gamma);
    int stable = 0;
    for (int k = 2; k <= 40; ++k) {
        const Eigen::MatrixXd cur = coef.eval_f(std::max(0.0, t - std::ldexp(1.0, -k)), zeta, gamma);
        stable = op_norm(cur - last) <= 1e-9 ? stable + 1 : 0;
        last = cur;
    }
    if (stable < 5)
        throw NotCadlagError("left limit of t -> f(t, zeta, gamma) did not stabilize at t = " +
                             std::to_string(t));
    return last;
}

Eigen::MatrixXd caglad_approx(const Coefficient& coef, int n, double t, const CadlagPath& zeta,
                              const CadlagPath& gamma) {
    if (n < 1)
        throw DomainError("caglad_approx needs n >= 1");
    if (t == 0.0)
        return coef.eval_f(0.0, zeta, gamma);
    const double s = std::max(0.0, (std::ceil(n * t) - 1.0) / n);
    return coef.eval_f(s, zeta, gamma);
}

namespace {

// sup_{0 <= s <= t} ||x(s)||, closed at t
double running_sup(const CadlagPath& x, double t) {
    double m = eval(x, t).norm();
    if (t > 0.0)
        m = std::max(m, sup_norm_before(x, t));
    return m;
}

CadlagPath random_input_path(CounterRng& rng, Eigen::Index dim, double horizon) {
    const int jumps = static_cast<int>(rng() % 5);
    std::vector<double> times;
    for (int i = 0; i < jumps; ++i)
        times.push_back(horizon * (0.02 + 0.96 * rng.uniform01()));
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    std::vector<double> grid{0.0};
    grid.insert(grid.end(), times.begin(), times.end());
    grid.push_back(horizon);
    const auto K = static_cast<Eigen::Index>(grid.size()) - 1;
    Eigen::MatrixXd values(dim, K + 1);
    Eigen::MatrixXd slopes(dim, K);
    for (Eigen::Index k = 0; k <= K; ++k)
        for (Eigen::Index i = 0; i < dim; ++i)
            values(i, k) = 4.0 * rng.uniform01() - 2.0;
    for (Eigen::Index k = 0; k < K; ++k)
        for (Eigen::Index i = 0; i < dim; ++i)
            slopes(i, k) = rng() % 2 == 0 ? 0.0 : 2.0 * rng.uniform01() - 1.0;
    return CadlagPath(grid, values, slopes);
}

} // namespace

AssumptionReport check_assumptions(const Coefficient& coef, int samples, std::uint64_t seed) {
    if (samples < 1)
        throw DomainError("check_assumptions needs samples >= 1");
    AssumptionReport report;
    report.samples = samples;
    CounterRng rng(seed, 0xC0EFu);
    const double T = 1.0;
    for (int s = 0; s < samples; ++s) {
        const double t = T * rng.uniform01();
        const CadlagPath zeta = random_input_path(rng, coef.r, T);
        const CadlagPath gamma1 = random_input_path(rng, coef.d, T);
        const CadlagPath gamma2 = random_input_path(rng, coef.d, T);
        auto witness = [&](const char* kind, double value, double bound) {
            report.violations.push_back(
                {kind, t, "value " + std::to_string(value) + " exceeds " + std::to_string(bound)});
        };
        try {
            const Eigen::MatrixXd f1 = coef.eval_f(t, zeta, gamma1);
            const Eigen::MatrixXd f1_stopped =
                coef.eval_f(t, stop_at(zeta, t), stop_at(gamma1, t));
            const double anticipation = op_norm(f1 - f1_stopped);
            if (anticipation > 1e-12 * (1.0 + op_norm(f1)))
                witness("nonanticipativity", anticipation, 0.0);

            const double C = coef.bound_C(t, zeta);
            const double growth = C * (1.0 + running_sup(gamma1, t));
            if (op_norm(f1) > growth + 1e-9)
                witness("growth", op_norm(f1), growth);

            const Eigen::MatrixXd f2 = coef.eval_f(t, zeta, gamma2);
            const CadlagPath diff = gamma1 - gamma2;
            const double lip = C * running_sup(diff, t);
            if (op_norm(f1 - f2) > lip + 1e-9)
                witness("lipschitz", op_norm(f1 - f2), lip);

            eval_g(coef, t, zeta, gamma1);
        } catch (const NotCadlagError& e) {
            report.violations.push_back({"cadlag", t, e.what()});
        }
    }
    return report;
}

Coefficient markov_coefficient(std::function<double(double)> g, double lipschitz_plus_growth,
                               std::string name) {
    Coefficient c;
    c.d = c.m = c.r = 1;
    c.markov_scalar = g;
    c.eval_f = [g](double t, const CadlagPath&, const CadlagPath& gamma) {
        return Eigen::MatrixXd::Constant(1, 1, g(eval(gamma, t)(0)));
    };
    c.bound_C = [lipschitz_plus_growth](double, const CadlagPath&) {
        return lipschitz_plus_growth;
    };
    c.name = std::move(name);
    return c;
}

Coefficient make_coefficient(const std::string& spec) {
    std::string name = spec;
    std::vector<double> args;
    const auto paren = spec.find('(');
    if (paren != std::string::npos) {
        if (spec.back() != ')')
            throw ConfigError("bad coefficient spec: " + spec);
        name = spec.substr(0, paren);
        std::string body = spec.substr(paren + 1, spec.size() - paren - 2);
        std::size_t pos = 0;
        while (pos < body.size()) {
            std::size_t next = body.find(',', pos);
            if (next == std::string::npos)
                next = body.size();
            args.push_back(std::stod(body.substr(pos, next - pos)));
            pos = next + 1;
        }
    }

    if (name == "linear") {
        return markov_coefficient([](double x) { return x; }, 1.0, "linear");
    }
    if (name == "affine") {
        if (args.size() != 2)
            throw ConfigError("affine(a,b) needs two arguments");
        const double a = args[0], b = args[1];
        return markov_coefficient([a, b](double x) { return a * x + b; },
                                  std::fabs(a) + std::fabs(b), "affine");
    }
    if (name == "sin") {
        Coefficient c;
        c.eval_f = [](double t, const CadlagPath& zeta, const CadlagPath& gamma) {
            double sup_zeta = eval(zeta, t).norm();
            if (t > 0.0)
                sup_zeta = std::max(sup_zeta, sup_norm_before(zeta, t));
            return Eigen::MatrixXd::Constant(1, 1,
                                             std::sin(eval(gamma, t)(0)) * (1.0 + sup_zeta));
        };
        c.bound_C = [](double t, const CadlagPath& zeta) {
            double sup_zeta = eval(zeta, t).norm();
            if (t > 0.0)
                sup_zeta = std::max(sup_zeta, sup_norm_before(zeta, t));
            return 1.0 + sup_zeta;
        };
        c.name = "sin";
        return c;
    }
    if (name == "indicator") {
        if (args.size() != 1)
            throw ConfigError("indicator(t0) needs one argument");
        const double t0 = args[0];
        Coefficient c;
        c.eval_f = [t0](double t, const CadlagPath&, const CadlagPath&) {
            return Eigen::MatrixXd::Constant(1, 1, t >= t0 ? 1.0 : 0.0);
        };
        c.bound_C = [](double, const CadlagPath&) { return 1.0; };
        c.time_events = {t0};
        c.name = "indicator";
        return c;
    }
    if (name == "anticipating-bad") {
        Coefficient c;
        c.eval_f = [](double, const CadlagPath&, const CadlagPath& gamma) {
            return Eigen::MatrixXd::Constant(1, 1, eval(gamma, gamma.horizon())(0));
        };
        c.bound_C = [](double, const CadlagPath&) { return 1.0; };
        c.name = "anticipating-bad";
        return c;
    }
    throw ConfigError("unknown coefficient: " + spec);
}

} // namespace skflow
