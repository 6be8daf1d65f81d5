#include "skflow/levy.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace skflow {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

/// E[x 1_{a < x <= b}] for N(mu, sigma^2)
double normal_mean_on(double mu, double sigma, double a, double b) {
    const double za = (a - mu) / sigma, zb = (b - mu) / sigma;
    return mu * (normal_cdf(zb) - normal_cdf(za)) - sigma * (normal_pdf(zb) - normal_pdf(za));
}

/// E[x^2 1_{a < x <= b}] for N(mu, sigma^2)
double normal_m2_on(double mu, double sigma, double a, double b) {
    const double za = (a - mu) / sigma, zb = (b - mu) / sigma;
    const double dPhi = normal_cdf(zb) - normal_cdf(za);
    return mu * mu * dPhi + 2.0 * mu * sigma * (normal_pdf(za) - normal_pdf(zb)) +
           sigma * sigma * (dPhi + za * normal_pdf(za) - zb * normal_pdf(zb));
}

double uniform_mean_on(double lo, double hi, double a, double b) {
    const double p = std::max(a, lo), q = std::min(b, hi);
    if (q <= p)
        return 0.0;
    return 0.5 * (q * q - p * p) / (hi - lo);
}

double uniform_m2_on(double lo, double hi, double a, double b) {
    const double p = std::max(a, lo), q = std::min(b, hi);
    if (q <= p)
        return 0.0;
    return (q * q * q - p * p * p) / (3.0 * (hi - lo));
}

// 16-point Gauss-Legendre nodes and weights on [-1, 1]
constexpr double kGlNodes[8] = {0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
                                0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
                                0.9445750230732326, 0.9894009349916499};
constexpr double kGlWeights[8] = {0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
                                  0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
                                  0.0622535239386479, 0.0271524594117541};

Eigen::Index segment_index(const std::vector<double>& times, double t, Eigen::Index nseg) {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    return std::min<Eigen::Index>(static_cast<Eigen::Index>(it - times.begin()) - 1, nseg - 1);
}

} // namespace

JumpLaw JumpLaw::fixed(double size) {
    if (!std::isfinite(size))
        throw ConfigError("fixed jump size must be finite");
    return JumpLaw(Kind::fixed, size, 0.0);
}

JumpLaw JumpLaw::normal(double mean, double stddev) {
    if (!std::isfinite(mean) || !(stddev > 0.0))
        throw ConfigError("normal jump law needs finite mean and stddev > 0");
    return JumpLaw(Kind::normal, mean, stddev);
}

JumpLaw JumpLaw::uniform(double lo, double hi) {
    if (!(hi > lo))
        throw ConfigError("uniform jump law needs hi > lo");
    return JumpLaw(Kind::uniform, lo, hi);
}

double JumpLaw::sample(CounterRng& rng) const {
    switch (kind_) {
    case Kind::fixed:
        return p_[0];
    case Kind::normal: {
        std::normal_distribution<double> dist(p_[0], p_[1]);
        return dist(rng);
    }
    case Kind::uniform:
        return p_[0] + (p_[1] - p_[0]) * rng.uniform01();
    }
    return 0.0;
}

double JumpLaw::mean_small(double eps) const {
    if (eps >= 1.0)
        return 0.0;
    switch (kind_) {
    case Kind::fixed:
        return std::fabs(p_[0]) > eps && std::fabs(p_[0]) <= 1.0 ? p_[0] : 0.0;
    case Kind::normal:
        return normal_mean_on(p_[0], p_[1], -1.0, -eps) + normal_mean_on(p_[0], p_[1], eps, 1.0);
    case Kind::uniform:
        return uniform_mean_on(p_[0], p_[1], -1.0, -eps) + uniform_mean_on(p_[0], p_[1], eps, 1.0);
    }
    return 0.0;
}

double JumpLaw::second_moment_small(double eps) const {
    if (eps >= 1.0)
        return 0.0;
    switch (kind_) {
    case Kind::fixed:
        return std::fabs(p_[0]) > eps && std::fabs(p_[0]) <= 1.0 ? p_[0] * p_[0] : 0.0;
    case Kind::normal:
        return normal_m2_on(p_[0], p_[1], -1.0, -eps) + normal_m2_on(p_[0], p_[1], eps, 1.0);
    case Kind::uniform:
        return uniform_m2_on(p_[0], p_[1], -1.0, -eps) + uniform_m2_on(p_[0], p_[1], eps, 1.0);
    }
    return 0.0;
}

double JumpLaw::second_moment() const {
    switch (kind_) {
    case Kind::fixed:
        return p_[0] * p_[0];
    case Kind::normal:
        return p_[0] * p_[0] + p_[1] * p_[1];
    case Kind::uniform:
        return (p_[1] * p_[1] * p_[1] - p_[0] * p_[0] * p_[0]) / (3.0 * (p_[1] - p_[0]));
    }
    return 0.0;
}

std::vector<std::pair<double, double>> JumpLaw::quadrature(int points) const {
    if (kind_ == Kind::fixed)
        return {{p_[0], 1.0}};
    double lo, hi;
    if (kind_ == Kind::normal) {
        lo = p_[0] - 8.0 * p_[1];
        hi = p_[0] + 8.0 * p_[1];
    } else {
        lo = p_[0];
        hi = p_[1];
    }
    auto density = [&](double v) {
        return kind_ == Kind::normal ? normal_pdf((v - p_[0]) / p_[1]) / p_[1]
                                     : 1.0 / (p_[1] - p_[0]);
    };
    const int panels = std::max(1, points / 16);
    std::vector<std::pair<double, double>> nodes;
    nodes.reserve(static_cast<std::size_t>(panels) * 16);
    for (int p = 0; p < panels; ++p) {
        const double a = lo + (hi - lo) * p / panels;
        const double b = lo + (hi - lo) * (p + 1) / panels;
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (int i = 0; i < 8; ++i)
            for (int s = -1; s <= 1; s += 2) {
                const double v = mid + s * half * kGlNodes[i];
                nodes.push_back({v, half * kGlWeights[i] * density(v)});
            }
    }
    return nodes;
}

void LevySpec::validate() const {
    if (dim < 1 || drift.size() != dim)
        throw ConfigError("LevySpec: drift size must match dim");
    if (!(intensity >= 0.0) || !std::isfinite(intensity))
        throw ConfigError("LevySpec: intensity must be nonnegative");
    if (!(truncation >= 0.0))
        throw ConfigError("LevySpec: truncation must be nonnegative");
    if (!std::isfinite(jump_law.second_moment()))
        throw ConfigError("LevySpec: jump law needs a finite second moment");
}

Eigen::VectorXd LevySpec::effective_drift() const {
    Eigen::VectorXd out = drift;
    if (compensate)
        out.array() -= intensity * jump_law.mean_small(truncation);
    return out;
}

double LevySpec::compensator_slope() const {
    return intensity * jump_law.mean_small(truncation);
}

double LevySpec::predictable_qv_slope() const {
    return intensity * jump_law.second_moment_small(truncation);
}

CadlagPath sample_path(const LevySpec& spec, double horizon, std::uint64_t seed) {
    spec.validate();
    if (!(horizon > 0.0))
        throw DomainError("horizon must be positive");

    struct Event {
        double t;
        Eigen::Index comp;
        double size;
    };
    std::vector<Event> events;
    for (Eigen::Index c = 0; c < spec.dim; ++c) {
        CounterRng rng(seed, static_cast<std::uint64_t>(c));
        std::poisson_distribution<int> count_dist(spec.intensity * horizon);
        const int count = spec.intensity > 0.0 ? count_dist(rng) : 0;
        std::vector<double> times(static_cast<std::size_t>(count));
        for (double& t : times)
            t = horizon * rng.uniform01();
        std::sort(times.begin(), times.end());
        for (double t : times) {
            const double x = spec.jump_law.sample(rng);
            if (std::fabs(x) > spec.truncation && t > 0.0)
                events.push_back({t, c, x});
        }
    }
    std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
        return a.t < b.t || (a.t == b.t && a.comp < b.comp);
    });

    const Eigen::VectorXd slope = spec.effective_drift();
    std::vector<double> times{0.0};
    Eigen::MatrixXd values(spec.dim, static_cast<Eigen::Index>(events.size()) + 2);
    values.col(0).setZero();
    Eigen::VectorXd v = Eigen::VectorXd::Zero(spec.dim);
    double prev_t = 0.0;
    Eigen::Index col = 1;
    for (std::size_t i = 0; i < events.size();) {
        const double t = events[i].t;
        v += slope * (t - prev_t);
        while (i < events.size() && events[i].t == t) {
            v(events[i].comp) += events[i].size;
            ++i;
        }
        times.push_back(t);
        values.col(col++) = v;
        prev_t = t;
    }
    v += slope * (horizon - prev_t);
    times.push_back(horizon);
    values.col(col) = v;
    values.conservativeResize(Eigen::NoChange, col + 1);
    Eigen::MatrixXd slopes(spec.dim, col);
    slopes.colwise() = slope;
    return CadlagPath(std::move(times), std::move(values), std::move(slopes));
}

Decomposition decompose(const CadlagPath& path, const LevySpec& spec) {
    spec.validate();
    if (path.dim() != spec.dim)
        throw DecompositionError("path dimension does not match spec");
    const Eigen::VectorXd expect = spec.effective_drift();
    for (Eigen::Index k = 0; k < path.segments(); ++k)
        if ((path.slopes().col(k).array() != expect.array()).any())
            throw DecompositionError("path slope does not match spec (unknown provenance)");

    const double comp_slope = spec.compensator_slope();
    const Eigen::Index K = path.segments();
    const auto& t = path.times();

    // M: small jumps minus the compensator line, on the path's grid
    Eigen::MatrixXd mvalues(path.dim(), K + 1);
    Eigen::VectorXd jump_sum = Eigen::VectorXd::Zero(path.dim());
    mvalues.col(0).setZero();
    for (Eigen::Index k = 1; k <= K; ++k) {
        const double dt = t[static_cast<std::size_t>(k)] - t[static_cast<std::size_t>(k - 1)];
        const Eigen::VectorXd ext = path.values().col(k - 1) + path.slopes().col(k - 1) * dt;
        for (Eigen::Index i = 0; i < path.dim(); ++i) {
            const double delta = path.values()(i, k) - ext(i);
            if (delta != 0.0 && std::fabs(delta) <= 1.0)
                jump_sum(i) += delta;
            mvalues(i, k) = jump_sum(i) - comp_slope * t[static_cast<std::size_t>(k)];
        }
    }
    CadlagPath M(t, std::move(mvalues),
                 Eigen::MatrixXd::Constant(path.dim(), K, -comp_slope));

    // A: bitwise complement of M on the same grid, so the linear
    // combination Y - M - A vanishes identically including rounding
    Eigen::MatrixXd avalues(path.dim(), K + 1);
    Eigen::MatrixXd aslopes(path.dim(), K);
    for (Eigen::Index k = 0; k <= K; ++k) {
        const double tk = t[static_cast<std::size_t>(k)];
        avalues.col(k) = path.values().col(k) - eval(M, tk);
        if (k < K) {
            const Eigen::Index mk = segment_index(M.times(), tk, M.segments());
            aslopes.col(k) = path.slopes().col(k) - M.slopes().col(mk);
        }
    }
    CadlagPath A(t, std::move(avalues), std::move(aslopes));
    return {std::move(M), std::move(A)};
}

DominatingProcess dominating_process(const CadlagPath& M, const CadlagPath& A,
                                     double predictable_qv_slope) {
    if (M.dim() != A.dim() || M.horizon() != A.horizon())
        throw ShapeError("dominating_process: M and A mismatch");
    if (!(predictable_qv_slope >= 0.0))
        throw DomainError("predictable qv slope must be nonnegative");
    const Eigen::Index dim = M.dim();
    const std::vector<double> grid = merge_times(M.times(), A.times());
    const auto N = static_cast<Eigen::Index>(grid.size()) - 1;
    const double sqrt2 = std::sqrt(2.0);

    auto v_formula = [&](const Eigen::VectorXd& q, const Eigen::VectorXd& tv, double time) {
        double v = 0.0;
        for (Eigen::Index i = 0; i < dim; ++i)
            v += 2.0 * sqrt2 * std::sqrt(q(i) + predictable_qv_slope * time) + sqrt2 * tv(i);
        return v;
    };

    Eigen::VectorXd qv = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd tva = Eigen::VectorXd::Zero(dim);
    Eigen::MatrixXd vvals(1, N + 1), qvvals(1, N + 1), pqvals(1, N + 1), tvavals(1, N + 1);
    Eigen::MatrixXd vslopes(1, N), qvslopes = Eigen::MatrixXd::Zero(1, N), pqslopes(1, N),
                                   tvaslopes(1, N);
    vvals(0, 0) = 0.0;
    qvvals(0, 0) = 0.0;
    pqvals(0, 0) = 0.0;
    tvavals(0, 0) = 0.0;

    Eigen::VectorXd a_prev = eval(A, 0.0);
    for (Eigen::Index j = 1; j <= N; ++j) {
        const double tj = grid[static_cast<std::size_t>(j)];
        const double dt = tj - grid[static_cast<std::size_t>(j - 1)];
        const Eigen::VectorXd m_pre = left_limit(M, tj);
        const Eigen::VectorXd a_pre = left_limit(A, tj);
        const Eigen::VectorXd m_post = eval(M, tj);
        const Eigen::VectorXd a_post = eval(A, tj);
        for (Eigen::Index i = 0; i < dim; ++i)
            tva(i) += std::fabs(a_pre(i) - a_prev(i)); // continuous |A| accrual
        const double v_pre = v_formula(qv, tva, tj);
        for (Eigen::Index i = 0; i < dim; ++i) {
            const double dm = m_post(i) - m_pre(i);
            qv(i) += dm * dm;
            tva(i) += std::fabs(a_post(i) - a_pre(i));
        }
        vvals(0, j) = v_formula(qv, tva, tj);
        vslopes(0, j - 1) = (v_pre - vvals(0, j - 1)) / dt;
        qvvals(0, j) = qv.sum();
        pqvals(0, j) = predictable_qv_slope * static_cast<double>(dim) * tj;
        pqslopes(0, j - 1) = predictable_qv_slope * static_cast<double>(dim);
        tvavals(0, j) = tva.sum();
        tvaslopes(0, j - 1) = (tvavals(0, j) - tvavals(0, j - 1)) / dt;
        a_prev = a_post;
    }
    // |A| accrues at rate sum_i |slope_A_i| between events
    for (Eigen::Index j = 0; j < N; ++j) {
        const Eigen::Index ak = segment_index(A.times(), grid[static_cast<std::size_t>(j)],
                                              A.segments());
        double rate = 0.0;
        for (Eigen::Index i = 0; i < dim; ++i)
            rate += std::fabs(A.slopes()(i, ak));
        tvaslopes(0, j) = rate;
    }

    return DominatingProcess{
        CadlagPath(grid, vvals, vslopes),
        M,
        A,
        CadlagPath(grid, qvvals, qvslopes),
        CadlagPath(grid, pqvals, pqslopes),
        CadlagPath(grid, tvavals, tvaslopes),
    };
}

double theta(const CadlagPath& P, const CadlagPath& V, double t) {
    if (P.dim() != 1 || V.dim() != 1)
        throw ShapeError("theta expects scalar paths");
    if (!P.is_step())
        throw UnsupportedInputError("theta expects a step integrand");
    if (P.horizon() != V.horizon())
        throw ShapeError("theta: horizon mismatch");
    if (!(t >= 0.0) || !(t <= V.horizon()))
        throw DomainError("theta: time outside [0, T]");
    for (Eigen::Index k = 0; k < V.segments(); ++k)
        if (V.slopes()(0, k) < 0.0)
            throw DomainError("theta: V must be nondecreasing");
    for (const auto& j : jumps(V))
        if (j.delta(0) < 0.0)
            throw DomainError("theta: V must be nondecreasing");

    const std::vector<double> grid = merge_times(P.times(), V.times());
    double s1 = 0.0, s2 = 0.0;
    double v_cur = eval(V, 0.0)(0);
    for (std::size_t j = 1; j < grid.size(); ++j) {
        const double a = grid[j - 1];
        if (a >= t)
            break;
        const bool clipped = grid[j] > t;
        const double b = clipped ? t : grid[j];
        const double p_run = eval(P, a)(0);       // step integrand on [a, b)
        const double v_pre = left_limit(V, b)(0); // continuous part
        s1 += p_run * p_run * (v_pre * v_pre - v_cur * v_cur);
        s2 += std::fabs(p_run) * (v_pre - v_cur);
        const double v_post = eval(V, b)(0); // atom at b, left-evaluated P
        if (v_post != v_pre) {
            const double p_left = left_limit(P, b)(0);
            s1 += p_left * p_left * (v_post * v_post - v_pre * v_pre);
            s2 += std::fabs(p_left) * (v_post - v_pre);
        }
        v_cur = v_post;
        if (clipped)
            break;
    }
    return std::sqrt(std::max(0.0, s1)) + s2;
}

CadlagPath stochastic_integral(const CadlagPath& P, Eigen::Index d, Eigen::Index m,
                               const CadlagPath& Y) {
    if (P.dim() != d * m)
        throw ShapeError("stochastic_integral: P must hold d*m entries");
    if (Y.dim() != m)
        throw ShapeError("stochastic_integral: driver dimension mismatch");
    if (P.horizon() != Y.horizon())
        throw ShapeError("stochastic_integral: horizon mismatch");

    const std::vector<double> grid = merge_times(P.times(), Y.times());
    const auto N = static_cast<Eigen::Index>(grid.size()) - 1;
    Eigen::MatrixXd values(d, N + 1);
    Eigen::MatrixXd slopes(d, N);
    values.col(0).setZero();

    Eigen::VectorXd p_at(d * m), p_int(d * m), pre(d), dy(m);
    for (Eigen::Index j = 1; j <= N; ++j) {
        const double a = grid[static_cast<std::size_t>(j - 1)];
        const double b = grid[static_cast<std::size_t>(j)];
        const double dt = b - a;
        const Eigen::Index pk = segment_index(P.times(), a, P.segments());
        const Eigen::Index yk = segment_index(Y.times(), a, Y.segments());
        // drift part: exact integral of the affine integrand over [a, b)
        p_at = P.values().col(pk) +
               P.slopes().col(pk) * (a - P.times()[static_cast<std::size_t>(pk)]);
        p_int = p_at * dt + P.slopes().col(pk) * (0.5 * dt * dt);
        const Eigen::Map<const Eigen::MatrixXd> p_int_mat(p_int.data(), d, m);
        pre = values.col(j - 1) + p_int_mat * Y.slopes().col(yk);
        slopes.col(j - 1) = (pre - values.col(j - 1)) / dt;
        // jump of Y at b weighted with the left limit of P
        const Eigen::VectorXd y_pre =
            Y.values().col(yk) +
            Y.slopes().col(yk) * (b - Y.times()[static_cast<std::size_t>(yk)]);
        dy = eval(Y, b) - y_pre;
        if ((dy.array() != 0.0).any()) {
            p_at = P.values().col(pk) +
                   P.slopes().col(pk) * (b - P.times()[static_cast<std::size_t>(pk)]);
            const Eigen::Map<const Eigen::MatrixXd> p_left_mat(p_at.data(), d, m);
            values.col(j) = pre + p_left_mat * dy;
        } else {
            values.col(j) = pre;
        }
    }
    return CadlagPath(grid, std::move(values), std::move(slopes));
}

} // namespace skflow
