#include "skflow/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace skflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Events {
    std::vector<double> t;
    std::vector<Eigen::VectorXd> plateau; // size t.size() + 1
};

Events extract_steps(const CadlagPath& p) {
    if (!p.is_step())
        throw UnsupportedInputError("warp-search oracle expects step paths");
    Events e;
    e.plateau.push_back(eval(p, 0.0));
    const auto& times = p.times();
    for (std::size_t k = 1; k < times.size(); ++k) {
        const Eigen::VectorXd v = eval(p, times[k]);
        if ((v.array() != e.plateau.back().array()).any()) {
            e.t.push_back(times[k]);
            e.plateau.push_back(v);
        }
    }
    return e;
}

/// Objective of a concrete warp given by interior kinks (u, w): the max of
/// the warp norm and the sup of the composed step difference.
double warp_objective(const Events& X, const Events& Y, double T, const std::vector<double>& u,
                      const std::vector<double>& w) {
    const std::size_t m = u.size();
    double norm = 0.0;
    double pu = 0.0, pw = 0.0;
    for (std::size_t i = 0; i <= m; ++i) {
        const double cu = i < m ? u[i] : T;
        const double cw = i < m ? w[i] : T;
        if (!(cu > pu) || !(cw > pw))
            return kInf;
        norm = std::max(norm, std::fabs(std::log((cw - pw) / (cu - pu))));
        pu = cu;
        pw = cw;
    }

    // positions of y's jumps in x-time
    std::vector<double> q(Y.t.size());
    std::size_t seg = 0;
    pu = 0.0;
    pw = 0.0;
    double cu = m > 0 ? u[0] : T;
    double cw = m > 0 ? w[0] : T;
    for (std::size_t j = 0; j < Y.t.size(); ++j) {
        while (Y.t[j] > cw) {
            pu = cu;
            pw = cw;
            ++seg;
            cu = seg < m ? u[seg] : T;
            cw = seg < m ? w[seg] : T;
        }
        q[j] = Y.t[j] == cw ? cu : pu + (Y.t[j] - pw) * (cu - pu) / (cw - pw);
    }

    double value = (X.plateau[0] - Y.plateau[0]).norm();
    std::size_t i = 0, j = 0;
    while (i < X.t.size() || j < Y.t.size()) {
        const double ta = i < X.t.size() ? X.t[i] : kInf;
        const double tb = j < q.size() ? q[j] : kInf;
        if (ta < tb)
            ++i;
        else if (tb < ta)
            ++j;
        else {
            ++i;
            ++j;
        }
        value = std::max(value, (X.plateau[i] - Y.plateau[j]).norm());
    }
    return std::max(norm, value);
}

struct Warp {
    double obj = kInf;
    std::vector<double> u, w;
};

/// Pattern descent with halving steps: each kink tries axis and diagonal
/// moves of size h (valleys run diagonally in (u, w) space), h shrinking
/// from h0 to h_min.
void descend(const Events& X, const Events& Y, double T, Warp& c, double h0, double h_min) {
    static constexpr int kMoves[8][2] = {{1, 0},  {-1, 0}, {0, 1},  {0, -1},
                                         {1, 1},  {-1, -1}, {1, -1}, {-1, 1}};
    const double margin = 1e-9 * T;
    for (double h = h0; h > h_min; h *= 0.5) {
        bool moved = true;
        while (moved) {
            moved = false;
            for (std::size_t i = 0; i < c.u.size(); ++i) {
                const double ulo = (i == 0 ? 0.0 : c.u[i - 1]) + margin;
                const double uhi = (i + 1 == c.u.size() ? T : c.u[i + 1]) - margin;
                const double wlo = (i == 0 ? 0.0 : c.w[i - 1]) + margin;
                const double whi = (i + 1 == c.w.size() ? T : c.w[i + 1]) - margin;
                for (const auto& mv : kMoves) {
                    const double uu = c.u[i] + mv[0] * h;
                    const double ww = c.w[i] + mv[1] * h;
                    if (uu <= ulo || uu >= uhi || ww <= wlo || ww >= whi)
                        continue;
                    const double ku = c.u[i], kw = c.w[i];
                    c.u[i] = uu;
                    c.w[i] = ww;
                    const double o = warp_objective(X, Y, T, c.u, c.w);
                    if (o < c.obj) {
                        c.obj = o;
                        moved = true;
                    } else {
                        c.u[i] = ku;
                        c.w[i] = kw;
                    }
                }
            }
        }
    }
}

} // namespace

double skorokhod_warp_search(const CadlagPath& x, const CadlagPath& y, double resolution) {
    if (x.dim() != y.dim() || x.horizon() != y.horizon())
        throw ShapeError("skorokhod_warp_search: dimension or horizon mismatch");
    const Events X = extract_steps(x);
    const Events Y = extract_steps(y);
    const double T = x.horizon();

    Warp identity;
    identity.obj = warp_objective(X, Y, T, {}, {});

    // one-kink lattice
    std::vector<Warp> pool;
    const int n1 = 96;
    for (int iu = 1; iu < n1; ++iu)
        for (int iw = 1; iw < n1; ++iw) {
            Warp c;
            c.u = {T * iu / n1};
            c.w = {T * iw / n1};
            c.obj = warp_objective(X, Y, T, c.u, c.w);
            if (c.obj < kInf)
                pool.push_back(std::move(c));
        }
    std::sort(pool.begin(), pool.end(), [](const Warp& a, const Warp& b) { return a.obj < b.obj; });
    pool.resize(std::min<std::size_t>(pool.size(), 24));
    for (Warp& c : pool)
        descend(X, Y, T, c, T / n1, resolution * 0.25);
    std::sort(pool.begin(), pool.end(), [](const Warp& a, const Warp& b) { return a.obj < b.obj; });

    // two-kink candidates grown from the best one-kink warps
    std::vector<Warp> pool2;
    const int n2 = 24;
    for (std::size_t s = 0; s < std::min<std::size_t>(pool.size(), 10); ++s) {
        for (int iu = 1; iu < n2; ++iu)
            for (int iw = 1; iw < n2; ++iw) {
                const double u2 = T * iu / n2, w2 = T * iw / n2;
                Warp c;
                if (u2 > pool[s].u[0] && w2 > pool[s].w[0]) {
                    c.u = {pool[s].u[0], u2};
                    c.w = {pool[s].w[0], w2};
                } else if (u2 < pool[s].u[0] && w2 < pool[s].w[0]) {
                    c.u = {u2, pool[s].u[0]};
                    c.w = {w2, pool[s].w[0]};
                } else {
                    continue;
                }
                c.obj = warp_objective(X, Y, T, c.u, c.w);
                if (c.obj < kInf)
                    pool2.push_back(std::move(c));
            }
    }
    std::sort(pool2.begin(), pool2.end(),
              [](const Warp& a, const Warp& b) { return a.obj < b.obj; });
    pool2.resize(std::min<std::size_t>(pool2.size(), 16));
    for (Warp& c : pool2)
        descend(X, Y, T, c, T / n2, resolution * 0.25);

    // alignment seeds: every monotone matching of jump times gives a warp
    // through the matched pairs; the descent may move off the pins
    std::vector<Warp> aligned;
    {
        std::vector<double> ax, by;
        for (double t : X.t)
            if (t < T)
                ax.push_back(t);
        for (double t : Y.t)
            if (t < T)
                by.push_back(t);
        std::vector<double> u, w;
        auto enumerate = [&](auto&& self, std::size_t i, std::size_t j) -> void {
            if (j == by.size()) {
                if (!u.empty()) {
                    Warp c;
                    c.u = u;
                    c.w = w;
                    c.obj = warp_objective(X, Y, T, c.u, c.w);
                    if (c.obj < kInf)
                        aligned.push_back(std::move(c));
                }
                return;
            }
            self(self, i, j + 1);
            for (std::size_t k = i; k < ax.size(); ++k) {
                u.push_back(ax[k]);
                w.push_back(by[j]);
                self(self, k + 1, j + 1);
                u.pop_back();
                w.pop_back();
            }
        };
        enumerate(enumerate, 0, 0);
        std::sort(aligned.begin(), aligned.end(),
                  [](const Warp& a, const Warp& b) { return a.obj < b.obj; });
        aligned.resize(std::min<std::size_t>(aligned.size(), 48));
        for (Warp& c : aligned)
            descend(X, Y, T, c, T / 16, resolution * 0.25);
        std::sort(aligned.begin(), aligned.end(),
                  [](const Warp& a, const Warp& b) { return a.obj < b.obj; });
    }

    // refinement pool: identity plus the best refined candidates of each kind
    std::vector<Warp> starts{identity};
    for (std::size_t s = 0; s < std::min<std::size_t>(pool.size(), 3); ++s)
        starts.push_back(pool[s]);
    std::sort(pool2.begin(), pool2.end(),
              [](const Warp& a, const Warp& b) { return a.obj < b.obj; });
    for (std::size_t s = 0; s < std::min<std::size_t>(pool2.size(), 3); ++s)
        starts.push_back(pool2[s]);
    for (std::size_t s = 0; s < std::min<std::size_t>(aligned.size(), 6); ++s)
        starts.push_back(aligned[s]);

    // local refinement by kink insertion: plant an extra kink at several
    // spots in a segment, re-descend, keep improvements, repeat
    Warp best = identity;
    for (Warp& w : starts)
        if (w.obj < best.obj)
            best = w;
    for (Warp start : starts) {
        bool improved = true;
        while (improved && start.u.size() < 8) {
            improved = false;
            const std::size_t m = start.u.size();
            for (std::size_t seg = 0; seg <= m && !improved; ++seg) {
                const double ulo = seg == 0 ? 0.0 : start.u[seg - 1];
                const double uhi = seg == m ? T : start.u[seg];
                const double wlo = seg == 0 ? 0.0 : start.w[seg - 1];
                const double whi = seg == m ? T : start.w[seg];
                for (int fu = 1; fu <= 3 && !improved; ++fu)
                    for (int fw = 1; fw <= 3 && !improved; ++fw) {
                        Warp c = start;
                        c.u.insert(c.u.begin() + static_cast<std::ptrdiff_t>(seg),
                                   ulo + 0.25 * fu * (uhi - ulo));
                        c.w.insert(c.w.begin() + static_cast<std::ptrdiff_t>(seg),
                                   wlo + 0.25 * fw * (whi - wlo));
                        c.obj = warp_objective(X, Y, T, c.u, c.w);
                        descend(X, Y, T, c, 0.25 * std::max(uhi - ulo, whi - wlo),
                                resolution * 0.25);
                        if (c.obj < start.obj - 1e-12) {
                            start = std::move(c);
                            improved = true;
                        }
                    }
            }
        }
        if (start.obj < best.obj)
            best = start;
    }
    descend(X, Y, T, best, resolution, std::min(resolution * 0.01, 1e-6));
    return best.obj;
}

StochasticExponential::StochasticExponential(const CadlagPath& driver, double initial)
    : driver_(driver), xi_(initial) {
    if (driver.dim() != 1)
        throw ShapeError("StochasticExponential expects a scalar driver");
    const Eigen::Index K = driver_.segments();
    anchor_.resize(static_cast<std::size_t>(K) + 1);
    anchor_[0] = xi_;
    for (Eigen::Index k = 0; k < K; ++k) {
        const double dt = driver_.times()[static_cast<std::size_t>(k + 1)] -
                          driver_.times()[static_cast<std::size_t>(k)];
        const double pre = anchor_[static_cast<std::size_t>(k)] *
                           std::exp(driver_.slopes()(0, k) * dt);
        const double ylimit = driver_.values()(0, k) + driver_.slopes()(0, k) * dt;
        const double dy = driver_.values()(0, k + 1) - ylimit;
        anchor_[static_cast<std::size_t>(k + 1)] = pre * (1.0 + dy);
    }
}

double StochasticExponential::at(double t) const {
    if (!(t >= 0.0) || !(t <= driver_.horizon()))
        throw DomainError("time outside [0, T]");
    if (t == driver_.horizon())
        return anchor_.back();
    const auto& times = driver_.times();
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const auto k = static_cast<std::size_t>(it - times.begin()) - 1;
    return anchor_[k] * std::exp(driver_.slopes()(0, static_cast<Eigen::Index>(k)) * (t - times[k]));
}

double StochasticExponential::sup_error(const CadlagPath& z) const {
    if (z.dim() != 1 || z.horizon() != driver_.horizon())
        throw ShapeError("sup_error: path mismatch");
    const auto& zt = z.times();
    const double* zv = z.values().data();
    const double* zc = z.slopes().data();
    const auto zK = static_cast<std::size_t>(z.segments());
    const auto& dt = driver_.times();
    const double* dc = driver_.slopes().data();
    const auto dK = static_cast<std::size_t>(driver_.segments());
    std::size_t dk = 0;
    double worst = std::fabs(zv[0] - anchor_[0]);
    for (std::size_t k = 0; k < zK; ++k) {
        // right value at zt[k] and left limit at zt[k+1], against the exact
        // exponential extension of the truth on the same driver segment
        while (dk < dK - 1 && dt[dk + 1] <= zt[k])
            ++dk;
        const double truth_right = anchor_[dk] * std::exp(dc[dk] * (zt[k] - dt[dk]));
        worst = std::max(worst, std::fabs(zv[k] - truth_right));
        const double tnext = zt[k + 1];
        std::size_t dleft = dk;
        while (dleft < dK - 1 && dt[dleft + 1] < tnext)
            ++dleft;
        const double truth_left = anchor_[dleft] * std::exp(dc[dleft] * (tnext - dt[dleft]));
        const double z_left = zv[k] + zc[k] * (tnext - zt[k]);
        worst = std::max(worst, std::fabs(z_left - truth_left));
    }
    worst = std::max(worst, std::fabs(zv[zK] - anchor_.back()));
    return worst;
}

double refined_theta(const CadlagPath& P, const CadlagPath& V, double t, int subdivisions) {
    if (P.dim() != 1 || V.dim() != 1)
        throw ShapeError("refined_theta expects scalar paths");
    // midpoint sums on the uniform partition refined by both breakpoint
    // grids; P is then constant on every cell, so the sum telescopes
    std::vector<double> part;
    part.reserve(static_cast<std::size_t>(subdivisions) + P.times().size() + V.times().size());
    for (int i = 0; i <= subdivisions; ++i)
        part.push_back(t * i / subdivisions);
    for (double s : P.times())
        if (s < t)
            part.push_back(s);
    for (double s : V.times())
        if (s < t)
            part.push_back(s);
    std::sort(part.begin(), part.end());
    part.erase(std::unique(part.begin(), part.end()), part.end());
    double s1 = 0.0, s2 = 0.0;
    double prev_v = eval(V, 0.0)(0);
    for (std::size_t i = 0; i + 1 < part.size(); ++i) {
        const double a = part[i];
        const double b = part[i + 1];
        const double pm = std::fabs(eval(P, 0.5 * (a + b))(0));
        const double vb = eval(V, b)(0);
        s1 += pm * pm * (vb * vb - prev_v * prev_v);
        s2 += pm * (vb - prev_v);
        prev_v = vb;
    }
    return std::sqrt(std::max(0.0, s1)) + s2;
}

} // namespace skflow
