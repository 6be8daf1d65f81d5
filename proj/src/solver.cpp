#include "skflow/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "skflow/skorokhod.hpp"

namespace skflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double flat_norm(const double* v, Eigen::Index d, Eigen::Index m) {
    if (d * m == 1)
        return std::fabs(v[0]);
    if (d == 1 || m == 1) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < d * m; ++i)
            s += v[i] * v[i];
        return std::sqrt(s);
    }
    return op_norm(Eigen::Map<const Eigen::MatrixXd>(v, d, m));
}

struct FreezeScan {
    std::vector<double> times;  // tau_0 = 0 < ... < tau_J = T
    std::vector<double> frozen; // (d*m) x (times.size() - 1), column-major flat
    double gap = 0.0;
};

/// First s in (lo, hi] with ||base + dir * (s - lo) || >= eps, or +inf.
/// base is the value offset at lo relative to the frozen reference;
/// ||base|| < eps on entry.
double first_crossing(const Eigen::VectorXd& base, const double* dir_ptr, Eigen::Index d,
                      Eigen::Index m, double lo, double hi, double eps) {
    const Eigen::Index dm = d * m;
    if (dm == 1) {
        const double c = dir_ptr[0];
        if (c == 0.0)
            return kInf;
        const double s = c > 0.0 ? lo + (eps - base(0)) / c : lo + (-eps - base(0)) / c;
        return s <= hi ? s : kInf;
    }
    const Eigen::Map<const Eigen::VectorXd> dir(dir_ptr, dm);
    if (d == 1 || m == 1) {
        const double a = dir.squaredNorm();
        if (a == 0.0)
            return kInf;
        const double b = 2.0 * base.dot(dir);
        const double c0 = base.squaredNorm() - eps * eps; // < 0 at lo
        const double disc = b * b - 4.0 * a * c0;
        const double root = (-b + std::sqrt(std::max(0.0, disc))) / (2.0 * a);
        const double s = lo + root;
        return s <= hi ? s : kInf;
    }
    // operator norm: bisection on the monotone trigger predicate
    Eigen::VectorXd probe(dm);
    auto phi = [&](double s) {
        probe = base + dir * (s - lo);
        return flat_norm(probe.data(), d, m);
    };
    if (phi(hi) < eps)
        return kInf;
    double a = lo, b = hi;
    while (b - a > 1e-14 * (1.0 + b)) {
        const double mid = 0.5 * (a + b);
        if (phi(mid) >= eps)
            b = mid;
        else
            a = mid;
    }
    return b;
}

/// Scalar specialization: raw-array scan with analytic crossings.
FreezeScan freeze_scan_scalar(const CadlagPath& G, double eps, std::size_t max_nodes) {
    const auto& times = G.times();
    const double* v = G.values().data();
    const double* c = G.slopes().data();
    const double T = G.horizon();
    const auto K = static_cast<std::size_t>(G.segments());

    FreezeScan out;
    out.times.reserve(1024);
    out.frozen.reserve(1024);
    out.times.push_back(0.0);
    out.frozen.push_back(v[0]);
    double ref = v[0];
    double gap = 0.0;
    double tj = 0.0;
    double pos = 0.0;
    std::size_t k = 0;

    auto freeze = [&](double s, double value) {
        if (out.times.size() >= max_nodes)
            throw NodeBudgetError("freeze-point budget exceeded at threshold " +
                                  std::to_string(eps));
        out.times.push_back(s);
        out.frozen.push_back(value);
        ref = value;
        tj = s;
        pos = s;
    };

    while (pos < T) {
        while (times[k + 1] <= pos)
            ++k;
        const double p = times[k];
        const double q = times[k + 1];
        if (pos == p && pos > tj) {
            const double phi = std::fabs(v[k] - ref);
            if (phi >= eps) {
                freeze(pos, v[k]);
                continue;
            }
            gap = std::max(gap, phi);
        }
        const double d0 = v[k] + c[k] * (pos - p) - ref;
        double star = kInf;
        if (c[k] > 0.0)
            star = pos + (eps - d0) / c[k];
        else if (c[k] < 0.0)
            star = pos + (-eps - d0) / c[k];
        if (star <= pos)
            star = std::nextafter(pos, kInf);
        if (star <= q) {
            gap = std::max(gap, eps);
            if (star == q) {
                if (q == T)
                    break;
                freeze(q, v[k + 1]);
            } else {
                freeze(star, v[k] + c[k] * (star - p));
            }
            continue;
        }
        gap = std::max(gap, std::fabs(v[k] + c[k] * (q - p) - ref));
        pos = q;
        if (q == T)
            break;
    }
    if (out.times.back() != T)
        out.times.push_back(T);
    out.gap = gap;
    return out;
}

FreezeScan freeze_scan(const CadlagPath& G, Eigen::Index d, Eigen::Index m, double eps,
                       std::size_t max_nodes) {
    const Eigen::Index dm = d * m;
    if (dm == 1)
        return freeze_scan_scalar(G, eps, max_nodes);
    const auto& times = G.times();
    const auto& V = G.values();
    const auto& C = G.slopes();
    const double T = G.horizon();
    const auto K = G.segments();

    FreezeScan out;
    out.times.reserve(1024);
    out.times.push_back(0.0);
    out.frozen.reserve(1024 * static_cast<std::size_t>(dm));
    Eigen::VectorXd ref = V.col(0);
    for (Eigen::Index i = 0; i < dm; ++i)
        out.frozen.push_back(ref(i));

    double tj = 0.0;
    double pos = 0.0;
    Eigen::Index k = 0;
    Eigen::VectorXd tmp(dm), base(dm);
    double gap = 0.0;

    auto freeze = [&](double s, const Eigen::VectorXd& value) {
        if (out.times.size() >= max_nodes)
            throw NodeBudgetError("freeze-point budget exceeded at threshold " +
                                  std::to_string(eps));
        out.times.push_back(s);
        for (Eigen::Index i = 0; i < dm; ++i)
            out.frozen.push_back(value(i));
        ref = value;
        tj = s;
        pos = s;
    };

    while (pos < T) {
        while (times[static_cast<std::size_t>(k + 1)] <= pos)
            ++k;
        const double p = times[static_cast<std::size_t>(k)];
        const double q = times[static_cast<std::size_t>(k + 1)];
        // right-value trigger on arrival at a node strictly after the
        // freeze time (the left-limit test never re-fires at tj itself,
        // which would stall the sequence)
        if (pos == p && pos > tj) {
            tmp = V.col(k) - ref;
            const double phi = flat_norm(tmp.data(), d, m);
            if (phi >= eps) {
                freeze(pos, V.col(k));
                continue;
            }
            gap = std::max(gap, phi);
        }
        // in-segment crossing on (pos, q]: the affine surrogate is solved
        // exactly (left limits included via the closed right end)
        base = V.col(k) + C.col(k) * (pos - p) - ref;
        double star = first_crossing(base, C.col(k).data(), d, m, pos, q, eps);
        if (star <= pos) // fp guard: force strict progress
            star = std::nextafter(pos, kInf);
        if (star <= q) {
            gap = std::max(gap, eps);
            if (star == q) {
                if (q == T)
                    break; // closes at T
                freeze(q, V.col(k + 1));
            } else {
                tmp = V.col(k) + C.col(k) * (star - p);
                freeze(star, tmp);
            }
            continue;
        }
        // no trigger: account the left limit at q and move on
        tmp = V.col(k) + C.col(k) * (q - p) - ref;
        gap = std::max(gap, flat_norm(tmp.data(), d, m));
        pos = q;
        if (q == T) {
            // a right-value trigger exactly at T would also just close the
            // sequence there (inf over the empty remainder is T)
            break;
        }
    }
    if (out.times.back() != T)
        out.times.push_back(T); // inf of the empty set
    out.gap = gap;
    return out;
}

/// Scalar specialization of the iterate assembly.
CadlagPath build_iterate_scalar(const CadlagPath& forcing, const CadlagPath& driver,
                                const std::vector<double>& tau,
                                const std::vector<double>& frozen) {
    std::vector<double> grid = merge_times(forcing.times(), driver.times());
    grid = merge_times(grid, tau);
    const auto N = static_cast<Eigen::Index>(grid.size()) - 1;
    const std::size_t J = tau.size() - 1;

    Eigen::MatrixXd values(1, N + 1);
    Eigen::MatrixXd slopes(1, N);
    double* out_v = values.data();
    double* out_c = slopes.data();

    const auto& ft = forcing.times();
    const auto& et = driver.times();
    const double* fv = forcing.values().data();
    const double* fc = forcing.slopes().data();
    const double* ev = driver.values().data();
    const double* ec = driver.slopes().data();
    const std::size_t fK = static_cast<std::size_t>(forcing.segments());
    const std::size_t eK = static_cast<std::size_t>(driver.segments());
    const double T = forcing.horizon();
    std::size_t fk = 0, ek = 0;

    auto eta_at = [&](double u) {
        if (u == T)
            return ev[eK];
        while (ek < eK - 1 && et[ek + 1] <= u)
            ++ek;
        return ev[ek] + ec[ek] * (u - et[ek]);
    };

    std::size_t j = 0;
    double B = 0.0;
    double eta_tau = eta_at(tau[0]);
    double Kj = frozen[0];

    for (Eigen::Index idx = 0; idx <= N; ++idx) {
        const double u = grid[static_cast<std::size_t>(idx)];
        while (j + 1 < J && tau[j + 1] <= u) {
            const double eta_next = eta_at(tau[j + 1]);
            B += Kj * (eta_next - eta_tau);
            eta_tau = eta_next;
            ++j;
            Kj = frozen[j];
        }
        const double eta_u = eta_at(u);
        double f_u;
        if (u == T) {
            f_u = fv[fK];
        } else {
            while (fk < fK - 1 && ft[fk + 1] <= u)
                ++fk;
            f_u = fv[fk] + fc[fk] * (u - ft[fk]);
        }
        out_v[idx] = f_u + B + Kj * (eta_u - eta_tau);
        if (idx < N) {
            while (fk < fK - 1 && ft[fk + 1] <= u)
                ++fk;
            while (ek < eK - 1 && et[ek + 1] <= u)
                ++ek;
            out_c[idx] = fc[std::min(fk, fK - 1)] + Kj * ec[std::min(ek, eK - 1)];
        }
    }
    return CadlagPath(std::move(grid), std::move(values), std::move(slopes));
}

/// Z(s) = forcing(s) + sum_j K_j (driver^{tau_{j+1}}(s) - driver^{tau_j}(s))
/// assembled in one sweep over the union grid.
CadlagPath build_iterate(const CadlagPath& forcing, const CadlagPath& driver,
                         const std::vector<double>& tau, const std::vector<double>& frozen,
                         Eigen::Index d, Eigen::Index m) {
    if (d == 1 && m == 1)
        return build_iterate_scalar(forcing, driver, tau, frozen);
    std::vector<double> grid = merge_times(forcing.times(), driver.times());
    grid = merge_times(grid, tau);
    const auto N = static_cast<Eigen::Index>(grid.size()) - 1;
    const auto J = static_cast<std::size_t>(tau.size()) - 1; // interval count

    Eigen::MatrixXd values(d, N + 1);
    Eigen::MatrixXd slopes(d, N);

    const auto& ft = forcing.times();
    const auto& et = driver.times();
    Eigen::Index fk = 0, ek = 0;
    const Eigen::Index fK = forcing.segments(), eK = driver.segments();
    auto fseek = [&](double u) {
        while (fk < fK - 1 && ft[static_cast<std::size_t>(fk + 1)] <= u)
            ++fk;
        return fk;
    };
    auto eseek = [&](double u) {
        while (ek < eK - 1 && et[static_cast<std::size_t>(ek + 1)] <= u)
            ++ek;
        return ek;
    };
    Eigen::VectorXd eta_u(m), eta_tau(m), B = Eigen::VectorXd::Zero(d), fv(d);
    auto eta_at = [&](double u, Eigen::VectorXd& outv) {
        if (u == driver.horizon()) {
            outv = driver.values().col(eK);
            return;
        }
        const Eigen::Index kk = eseek(u);
        outv = driver.values().col(kk) +
               driver.slopes().col(kk) * (u - et[static_cast<std::size_t>(kk)]);
    };

    std::size_t j = 0;
    eta_at(tau[0], eta_tau);
    Eigen::Map<const Eigen::MatrixXd> Kj(frozen.data(), d, m);

    for (Eigen::Index idx = 0; idx <= N; ++idx) {
        const double u = grid[static_cast<std::size_t>(idx)];
        while (j + 1 < J && tau[j + 1] <= u) {
            eta_at(tau[j + 1], eta_u);
            B.noalias() += Kj * (eta_u - eta_tau);
            eta_tau = eta_u;
            ++j;
            new (&Kj) Eigen::Map<const Eigen::MatrixXd>(
                frozen.data() + static_cast<std::ptrdiff_t>(j) * d * m, d, m);
        }
        eta_at(u, eta_u);
        if (u == forcing.horizon()) {
            fv = forcing.values().col(fK);
        } else {
            const Eigen::Index kk = fseek(u);
            fv = forcing.values().col(kk) +
                 forcing.slopes().col(kk) * (u - ft[static_cast<std::size_t>(kk)]);
        }
        values.col(idx) = fv + B;
        values.col(idx).noalias() += Kj * (eta_u - eta_tau);
        if (idx < N) {
            const Eigen::Index fkk = fseek(u);
            const Eigen::Index ekk = eseek(u);
            slopes.col(idx) = forcing.slopes().col(fkk);
            slopes.col(idx).noalias() += Kj * driver.slopes().col(ekk);
        }
    }
    return CadlagPath(std::move(grid), std::move(values), std::move(slopes));
}

std::vector<double> event_times(const CadlagPath& p) {
    std::vector<double> out;
    for (const auto& j : jumps(p))
        out.push_back(j.time);
    return out;
}

} // namespace

void SolverConfig::validate() const {
    if (n_max < 1)
        throw ConfigError("SolverConfig: n_max must be >= 1");
    if (!(tol > 0.0))
        throw ConfigError("SolverConfig: tol must be positive");
    if (!(gamma_scan_guard > 0.0) || gamma_scan_guard > 0.5)
        throw ConfigError("SolverConfig: gamma_scan_guard must be in (0, 0.5]");
    if (max_nodes < 16)
        throw ConfigError("SolverConfig: max_nodes too small");
}

CadlagPath materialize_coefficient_path(const Coefficient& coef, const CadlagPath& covariate,
                                        const CadlagPath& state_path, const CadlagPath& driver,
                                        double grid_step) {
    const double T = state_path.horizon();
    std::vector<double> grid = merge_times(state_path.times(), driver.times());
    grid = merge_times(grid, covariate.times());
    if (!coef.time_events.empty()) {
        std::vector<double> ev;
        for (double t : coef.time_events)
            if (t > 0.0 && t < T)
                ev.push_back(t);
        std::sort(ev.begin(), ev.end());
        ev.erase(std::unique(ev.begin(), ev.end()), ev.end());
        grid = merge_times(grid, ev);
    }
    if (grid_step > 0.0) {
        std::vector<double> uni;
        uni.reserve(static_cast<std::size_t>(T / grid_step) + 1);
        for (double t = grid_step; t < T; t += grid_step)
            uni.push_back(t);
        grid = merge_times(grid, uni);
    }
    const auto N = static_cast<Eigen::Index>(grid.size()) - 1;
    const Eigen::Index dm = coef.d * coef.m;

    if (coef.markov_scalar && dm == 1 && state_path.dim() == 1) {
        // exact composition with the scalar Markov map: jumps exactly where
        // the state path jumps, chords between grid nodes
        const auto& g = coef.markov_scalar;
        const auto& zt = state_path.times();
        const auto& zv = state_path.values();
        const auto& zc = state_path.slopes();
        const Eigen::Index zK = state_path.segments();
        Eigen::MatrixXd values(1, N + 1);
        Eigen::MatrixXd slopes(1, N);
        Eigen::Index k = 0;
        double g_right = g(zv(0, 0));
        values(0, 0) = g_right;
        for (Eigen::Index jn = 1; jn <= N; ++jn) {
            const double u = grid[static_cast<std::size_t>(jn)];
            // stretch [grid_{j-1}, u) lies inside state segment k
            const double z_pre = zv(0, k) + zc(0, k) * (u - zt[static_cast<std::size_t>(k)]);
            const double g_pre = g(z_pre);
            const double dt = u - grid[static_cast<std::size_t>(jn - 1)];
            slopes(0, jn - 1) = (g_pre - values(0, jn - 1)) / dt;
            while (k < zK - 1 && zt[static_cast<std::size_t>(k + 1)] <= u)
                ++k;
            g_right = u == T ? g(zv(0, zK)) : g(zv(0, k) + zc(0, k) * (u - zt[static_cast<std::size_t>(k)]));
            values(0, jn) = g_right;
        }
        if (!values.allFinite() || !slopes.allFinite())
            throw InvalidCoefficientError("non-finite coefficient values");
        return CadlagPath(std::move(grid), std::move(values), std::move(slopes));
    }

    // black-box route: sample f on the grid; left limits are probed just
    // before declared event times, elsewhere the chord assumes continuity
    std::vector<double> events = event_times(covariate);
    {
        std::vector<double> more = event_times(state_path);
        events.insert(events.end(), more.begin(), more.end());
        more = event_times(driver);
        events.insert(events.end(), more.begin(), more.end());
        events.insert(events.end(), coef.time_events.begin(), coef.time_events.end());
        std::sort(events.begin(), events.end());
        events.erase(std::unique(events.begin(), events.end()), events.end());
    }
    auto is_event = [&](double t) {
        return std::binary_search(events.begin(), events.end(), t);
    };
    Eigen::MatrixXd values(dm, N + 1);
    Eigen::MatrixXd slopes(dm, N);
    Eigen::MatrixXd cur = coef.eval_f(0.0, covariate, state_path);
    if (cur.rows() != coef.d || cur.cols() != coef.m)
        throw InvalidCoefficientError("coefficient output has wrong shape");
    values.col(0) = Eigen::Map<const Eigen::VectorXd>(cur.data(), dm);
    for (Eigen::Index jn = 1; jn <= N; ++jn) {
        const double u = grid[static_cast<std::size_t>(jn)];
        const double dt = u - grid[static_cast<std::size_t>(jn - 1)];
        cur = coef.eval_f(u, covariate, state_path);
        values.col(jn) = Eigen::Map<const Eigen::VectorXd>(cur.data(), dm);
        if (is_event(u)) {
            const double delta = std::min(1e-9 * T, 0.25 * dt);
            cur = coef.eval_f(u - delta, covariate, state_path);
            slopes.col(jn - 1) =
                (Eigen::Map<const Eigen::VectorXd>(cur.data(), dm) - values.col(jn - 1)) / dt;
        } else {
            slopes.col(jn - 1) = (values.col(jn) - values.col(jn - 1)) / dt;
        }
    }
    if (!values.allFinite() || !slopes.allFinite())
        throw InvalidCoefficientError("non-finite coefficient values");
    return CadlagPath(std::move(grid), std::move(values), std::move(slopes));
}

std::vector<double> breakpoints(const CadlagPath& coefficient_path, Eigen::Index d,
                                Eigen::Index m, int n, std::size_t max_nodes) {
    if (coefficient_path.dim() != d * m)
        throw ShapeError("breakpoints: path must hold d*m entries");
    if (!coefficient_path.values().allFinite())
        throw InvalidCoefficientError("non-finite coefficient values");
    return freeze_scan(coefficient_path, d, m, std::ldexp(1.0, -n), max_nodes).times;
}

IterationState psi_step(const CadlagPath& forcing, const CadlagPath& covariate,
                        const CadlagPath& driver, const IterationState& prev,
                        const Coefficient& coef, int n, const SolverConfig& config) {
    if (prev.n != n - 1)
        throw DomainError("psi_step: prev.n must equal n - 1");
    const double T = forcing.horizon();
    const double eps = std::ldexp(1.0, -n);

    FreezeScan scan;
    CadlagPath S = CadlagPath::zero(coef.d * coef.m, T);
    {
        const CadlagPath gamma_path = materialize_coefficient_path(
            coef, covariate, prev.Z, driver, config.gamma_scan_guard * T);
        scan = freeze_scan(gamma_path, coef.d, coef.m, eps, config.max_nodes);
        if (scan.gap > eps + 1e-12)
            throw std::logic_error("freeze gap exceeded its 2^-n bound");
        // step coefficient path: frozen values, terminal pinned to the
        // coefficient path's own terminal value
        const auto J = static_cast<Eigen::Index>(scan.times.size()) - 1;
        Eigen::MatrixXd svals(coef.d * coef.m, J + 1);
        for (Eigen::Index jj = 0; jj < J; ++jj)
            svals.col(jj) = Eigen::Map<const Eigen::VectorXd>(
                scan.frozen.data() + static_cast<std::ptrdiff_t>(jj) * coef.d * coef.m,
                coef.d * coef.m);
        svals.col(J) = gamma_path.values().col(gamma_path.segments());
        S = CadlagPath(scan.times, std::move(svals),
                       Eigen::MatrixXd::Zero(coef.d * coef.m, J));
    }

    IterationState state;
    state.n = n;
    state.Z = build_iterate(forcing, driver, scan.times, scan.frozen, coef.d, coef.m);
    if (config.compute_residual)
        state.Z_prev = std::make_shared<const CadlagPath>(prev.Z);
    state.breakpoint_times = std::move(scan.times);
    state.S = std::move(S);
    state.gap_to_f = scan.gap;
    state.dist_to_prev = sup_distance(state.Z, prev.Z);
    return state;
}

double residual(const IterationState& state, const CadlagPath& forcing,
                const CadlagPath& covariate, const CadlagPath& driver, const Coefficient& coef,
                const SolverConfig& config) {
    if (!state.Z_prev)
        throw DomainError("residual needs an iterate produced with compute_residual set");
    const double T = forcing.horizon();
    const CadlagPath gamma_path = materialize_coefficient_path(
        coef, covariate, *state.Z_prev, driver, config.gamma_scan_guard * T);
    const double eps_res =
        std::max(std::ldexp(1.0, -(state.n + 10)), config.residual_floor);
    FreezeScan scan;
    try {
        scan = freeze_scan(gamma_path, coef.d, coef.m, eps_res, config.max_nodes);
    } catch (const NodeBudgetError&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const auto J = static_cast<Eigen::Index>(scan.times.size()) - 1;
    Eigen::MatrixXd pvals(coef.d * coef.m, J + 1);
    for (Eigen::Index jj = 0; jj < J; ++jj)
        pvals.col(jj) = Eigen::Map<const Eigen::VectorXd>(
            scan.frozen.data() + static_cast<std::ptrdiff_t>(jj) * coef.d * coef.m,
            coef.d * coef.m);
    pvals.col(J) = gamma_path.values().col(gamma_path.segments());
    const CadlagPath P(scan.times, std::move(pvals),
                       Eigen::MatrixXd::Zero(coef.d * coef.m, J));
    const CadlagPath R = forcing + stochastic_integral(P, coef.d, coef.m, driver);
    return sup_distance(R, state.Z);
}

SolveResult solve(const CadlagPath& forcing, const CadlagPath& covariate,
                  const CadlagPath& driver, const Coefficient& coef, const SolverConfig& config,
                  const IterationObserver& observer) {
    config.validate();
    if (forcing.dim() != coef.d || covariate.dim() != coef.r || driver.dim() != coef.m)
        throw ShapeError("solve: path dimensions must match the coefficient dims");
    if (forcing.horizon() != driver.horizon() || forcing.horizon() != covariate.horizon())
        throw ShapeError("solve: horizons must agree");
    const double T = forcing.horizon();

    // nonanticipativity spot check
    for (double frac : {0.25, 0.5, 0.75}) {
        const double t = frac * T;
        const Eigen::MatrixXd full = coef.eval_f(t, covariate, forcing);
        const Eigen::MatrixXd stopped =
            coef.eval_f(t, stop_at(covariate, t), stop_at(forcing, t));
        if (op_norm(full - stopped) > 1e-9 * (1.0 + op_norm(full)))
            throw InvalidCoefficientError("coefficient reads the future (t = " +
                                          std::to_string(t) + ")");
    }

    IterationState prev;
    prev.n = 0;
    prev.Z = forcing;
    prev.S = CadlagPath::zero(coef.d * coef.m, T);

    // consecutive-iterate agreement alone can be spurious while the freeze
    // threshold is still coarse (sub-threshold jumps are invisible), so
    // convergence also needs either a gap-free freeze (the Picard step was
    // exact) or a threshold below tol's scale
    const double tv_driver = total_variation(driver);

    SolveResult result{forcing, false, StopReason::n_max, 0, {}};
    for (int n = 1; n <= config.n_max; ++n) {
        IterationState state;
        try {
            state = psi_step(forcing, covariate, driver, prev, coef, n, config);
        } catch (const NodeBudgetError&) {
            result.X = std::move(prev.Z);
            result.stop = StopReason::node_budget;
            result.iterations = n - 1;
            return result;
        }
        IterationDiagnostics diag;
        diag.n = n;
        diag.gap_to_f = state.gap_to_f;
        diag.dist_to_prev = state.dist_to_prev;
        if (config.compute_residual)
            diag.residual = residual(state, forcing, covariate, driver, coef, config);
        if (config.report_skorokhod) {
            if (state.Z.segments() + prev.Z.segments() < 20000)
                diag.skorokhod_upper =
                    skorokhod_distance_bound(state.Z, prev.Z, 1, 1e-3).upper;
            else
                diag.skorokhod_upper = state.dist_to_prev; // identity-warp bound
        }
        result.diagnostics.push_back(diag);
        if (observer)
            observer(state);
        const bool resolved = state.gap_to_f == 0.0 ||
                              3.0 * tv_driver * std::ldexp(1.0, -n) <= config.tol;
        const bool done = state.dist_to_prev < config.tol && resolved;
        prev = std::move(state);
        result.iterations = n;
        if (done) {
            result.converged = true;
            result.stop = StopReason::cauchy;
            break;
        }
    }
    result.X = std::move(prev.Z);
    return result;
}

CadlagPath reference_integrate(const Coefficient& coef, const CadlagPath& forcing,
                               const CadlagPath& covariate, const CadlagPath& driver,
                               int substeps) {
    (void)covariate;
    if (!coef.markov_scalar || coef.d != 1 || coef.m != 1)
        throw OracleUnsupportedError("reference integrator needs a scalar Markov coefficient");
    if (forcing.dim() != 1 || driver.dim() != 1)
        throw OracleUnsupportedError("reference integrator is scalar");
    if (substeps < 1)
        throw DomainError("substeps must be >= 1");
    const auto& g = coef.markov_scalar;
    const std::vector<double> events = merge_times(forcing.times(), driver.times());

    std::vector<double> times;
    std::vector<double> post, pre;
    times.push_back(0.0);
    double x = forcing.values()(0, 0);
    post.push_back(x);
    pre.push_back(x);

    for (std::size_t e = 0; e + 1 < events.size(); ++e) {
        const double a = events[e];
        const double b = events[e + 1];
        const Eigen::Index fk = static_cast<Eigen::Index>(
            std::upper_bound(forcing.times().begin(), forcing.times().end(), a) -
            forcing.times().begin() - 1);
        const Eigen::Index yk = static_cast<Eigen::Index>(
            std::upper_bound(driver.times().begin(), driver.times().end(), a) -
            driver.times().begin() - 1);
        const double fslope = forcing.slopes()(0, std::min(fk, forcing.segments() - 1));
        const double yslope = driver.slopes()(0, std::min(yk, driver.segments() - 1));
        auto rhs = [&](double xv) { return fslope + g(xv) * yslope; };
        const double h = (b - a) / substeps;
        for (int s = 0; s < substeps; ++s) {
            const double k1 = rhs(x);
            const double k2 = rhs(x + 0.5 * h * k1);
            const double k3 = rhs(x + 0.5 * h * k2);
            const double k4 = rhs(x + h * k3);
            x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            const double t = s + 1 == substeps ? b : a + (s + 1) * h;
            times.push_back(t);
            pre.push_back(x);
            post.push_back(x);
        }
        // jumps of the inputs at b hit with the left limit of the state
        const double dforcing = eval(forcing, b)(0) - left_limit(forcing, b)(0);
        const double ddriver = eval(driver, b)(0) - left_limit(driver, b)(0);
        if (dforcing != 0.0 || ddriver != 0.0) {
            const double jump = dforcing + g(x) * ddriver;
            x += jump;
            post.back() = x;
        }
    }

    const auto K = static_cast<Eigen::Index>(times.size()) - 1;
    Eigen::MatrixXd values(1, K + 1);
    Eigen::MatrixXd slopes(1, K);
    for (Eigen::Index k = 0; k <= K; ++k)
        values(0, k) = post[static_cast<std::size_t>(k)];
    for (Eigen::Index k = 0; k < K; ++k) {
        const double dt = times[static_cast<std::size_t>(k + 1)] - times[static_cast<std::size_t>(k)];
        slopes(0, k) = (pre[static_cast<std::size_t>(k + 1)] - post[static_cast<std::size_t>(k)]) / dt;
    }
    return CadlagPath(std::move(times), std::move(values), std::move(slopes));
}

} // namespace skflow
