#include "skflow/skorokhod.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace skflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct StepSeq {
    std::vector<double> t; // jump times in (0, T]
    Eigen::MatrixXd v;     // dim x (jumps + 1) plateau values
};

StepSeq to_steps(const CadlagPath& p) {
    const Eigen::Index K = p.segments();
    StepSeq s;
    s.v.resize(p.dim(), K + 1);
    s.v.col(0) = p.values().col(0);
    Eigen::Index col = 1;
    for (Eigen::Index k = 1; k < K; ++k) { // interior breakpoints of a canonical step path are jumps
        s.t.push_back(p.times()[static_cast<std::size_t>(k)]);
        s.v.col(col++) = p.values().col(k);
    }
    if (!(p.values().col(K).array() == p.values().col(K - 1).array()).all()) {
        s.t.push_back(p.horizon());
        s.v.col(col++) = p.values().col(K);
    }
    s.v.conservativeResize(Eigen::NoChange, col);
    return s;
}

/// Warp objective specialized to step sequences. Kinks (u, w) are interior;
/// (0,0) and (T,T) are implicit. Returns max(warp norm, staircase value).
class StepObjective {
public:
    StepObjective(const StepSeq& x, const StepSeq& y, double horizon)
        : x_(x), y_(y), T_(horizon) {
        q_.resize(y.t.size());
    }

    double operator()(const std::vector<double>& u, const std::vector<double>& w) {
        const std::size_t m = u.size();
        double norm = 0.0;
        {
            double pu = 0.0, pw = 0.0;
            for (std::size_t i = 0; i <= m; ++i) {
                const double cu = i < m ? u[i] : T_;
                const double cw = i < m ? w[i] : T_;
                const double du = cu - pu;
                const double dw = cw - pw;
                if (!(du > 0.0) || !(dw > 0.0))
                    return kInf;
                norm = std::max(norm, std::fabs(std::log(dw / du)));
                pu = cu;
                pw = cw;
            }
        }
        // pull y's jump times back through the warp (exact on kink images)
        {
            std::size_t seg = 0;
            double pu = 0.0, pw = 0.0;
            double cu = m > 0 ? u[0] : T_;
            double cw = m > 0 ? w[0] : T_;
            for (std::size_t j = 0; j < y_.t.size(); ++j) {
                const double b = y_.t[j];
                while (b > cw) {
                    pu = cu;
                    pw = cw;
                    ++seg;
                    cu = seg < m ? u[seg] : T_;
                    cw = seg < m ? w[seg] : T_;
                }
                q_[j] = b == cw ? cu : pu + (b - pw) * (cu - pu) / (cw - pw);
            }
        }
        double value = (x_.v.col(0) - y_.v.col(0)).norm();
        std::size_t i = 0, j = 0;
        const std::size_t nx = x_.t.size(), ny = y_.t.size();
        while (i < nx || j < ny) {
            const double ta = i < nx ? x_.t[i] : kInf;
            const double tb = j < ny ? q_[j] : kInf;
            if (ta < tb)
                ++i;
            else if (tb < ta)
                ++j;
            else {
                ++i;
                ++j;
            }
            value = std::max(value, (x_.v.col(static_cast<Eigen::Index>(i)) -
                                     y_.v.col(static_cast<Eigen::Index>(j)))
                                        .norm());
            if (value >= kInf)
                break;
        }
        return std::max(norm, value);
    }

private:
    const StepSeq& x_;
    const StepSeq& y_;
    double T_;
    std::vector<double> q_;
};

struct Candidate {
    double obj;
    std::vector<double> u, w;
};

/// Scan-plus-golden-section minimizer of f over [lo, hi].
template <typename F>
double minimize_1d(F&& f, double lo, double hi, double tol) {
    constexpr int kScan = 48;
    double best_x = lo, best_f = kInf;
    for (int i = 0; i <= kScan; ++i) {
        const double x = lo + (hi - lo) * i / kScan;
        const double fx = f(x);
        if (fx < best_f) {
            best_f = fx;
            best_x = x;
        }
    }
    const double h = (hi - lo) / kScan;
    double a = std::max(lo, best_x - h);
    double b = std::min(hi, best_x + h);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    return fc < fd ? c : d;
}

} // namespace

double skorokhod_distance_exact(const CadlagPath& x, const CadlagPath& y, int jump_cap) {
    if (x.dim() != y.dim() || x.horizon() != y.horizon())
        throw ShapeError("skorokhod_distance_exact: dimension or horizon mismatch");
    if (!x.is_step() || !y.is_step())
        throw UnsupportedInputError("skorokhod_distance_exact handles pure step paths only");
    const StepSeq X = to_steps(x);
    const StepSeq Y = to_steps(y);
    if (static_cast<int>(X.t.size()) > jump_cap || static_cast<int>(Y.t.size()) > jump_cap)
        throw UnsupportedInputError("jump cap exceeded; use skorokhod_distance_bound");

    const double T = x.horizon();
    StepObjective objective(X, Y, T);

    // matchable jumps (a jump at T is aligned by lambda(T) = T, never pinned)
    std::vector<double> ax, by;
    for (double t : X.t)
        if (t < T)
            ax.push_back(t);
    for (double t : Y.t)
        if (t < T)
            by.push_back(t);

    double best = kInf;
    std::vector<Candidate> top;
    constexpr std::size_t kTop = 12;
    auto offer = [&](double obj, const std::vector<double>& u, const std::vector<double>& w) {
        best = std::min(best, obj);
        if (top.size() < kTop || obj < top.back().obj) {
            top.push_back({obj, u, w});
            std::sort(top.begin(), top.end(),
                      [](const Candidate& a, const Candidate& b) { return a.obj < b.obj; });
            if (top.size() > kTop)
                top.pop_back();
        }
    };

    // depth-first enumeration of monotone partial matchings with
    // prefix-norm pruning (pins only tighten the minimal warp norm)
    std::vector<double> u, w;
    auto prefix_norm = [&]() {
        double n = 0.0, pu = 0.0, pw = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            n = std::max(n, std::fabs(std::log((w[i] - pw) / (u[i] - pu))));
            pu = u[i];
            pw = w[i];
        }
        return n;
    };
    auto dfs = [&](auto&& self, std::size_t i, std::size_t j) -> void {
        if (j == by.size()) {
            offer(objective(u, w), u, w);
            return;
        }
        self(self, i, j + 1); // leave by[j] unmatched
        for (std::size_t k = i; k < ax.size(); ++k) {
            u.push_back(ax[k]);
            w.push_back(by[j]);
            if (prefix_norm() < best)
                self(self, k + 1, j + 1);
            u.pop_back();
            w.pop_back();
        }
    };
    dfs(dfs, 0, 0);

    // relax each kink coordinate away from the pinned jump pair
    const double margin = 1e-9 * T;
    for (const Candidate& cand : top) {
        std::vector<double> cu = cand.u, cw = cand.w;
        double cur = cand.obj;
        for (int sweep = 0; sweep < 2; ++sweep) {
            for (std::size_t i = 0; i < cu.size(); ++i) {
                const double ulo = (i == 0 ? 0.0 : cu[i - 1]) + margin;
                const double uhi = (i + 1 == cu.size() ? T : cu[i + 1]) - margin;
                double arg = minimize_1d(
                    [&](double v) {
                        const double keep = cu[i];
                        cu[i] = v;
                        const double r = objective(cu, cw);
                        cu[i] = keep;
                        return r;
                    },
                    ulo, uhi, 1e-13 * T);
                {
                    const double keep = cu[i];
                    cu[i] = arg;
                    const double r = objective(cu, cw);
                    if (r <= cur)
                        cur = r;
                    else
                        cu[i] = keep;
                }
                const double wlo = (i == 0 ? 0.0 : cw[i - 1]) + margin;
                const double whi = (i + 1 == cw.size() ? T : cw[i + 1]) - margin;
                arg = minimize_1d(
                    [&](double v) {
                        const double keep = cw[i];
                        cw[i] = v;
                        const double r = objective(cu, cw);
                        cw[i] = keep;
                        return r;
                    },
                    wlo, whi, 1e-13 * T);
                {
                    const double keep = cw[i];
                    cw[i] = arg;
                    const double r = objective(cu, cw);
                    if (r <= cur)
                        cur = r;
                    else
                        cw[i] = keep;
                }
            }
        }
        best = std::min(best, cur);
    }
    return best;
}

namespace {

/// min over s in [slo, shi] of ||xv - y(s)||, with left limits included;
/// under-approximating the min keeps the derived lower bound valid.
double window_min(const Eigen::VectorXd& xv, const CadlagPath& y, double slo, double shi) {
    double best = kInf;
    const Eigen::Index K = y.segments();
    const auto& t = y.times();
    for (Eigen::Index k = 0; k < K; ++k) {
        const double a = t[static_cast<std::size_t>(k)];
        const double b = t[static_cast<std::size_t>(k + 1)];
        if (b < slo || a > shi)
            continue;
        const double p = std::max(a, slo);
        const double q = std::min(b, shi);
        const Eigen::VectorXd base = y.values().col(k) - xv;
        const Eigen::VectorXd dir = y.slopes().col(k);
        best = std::min(best, (base + dir * (p - a)).norm());
        best = std::min(best, (base + dir * (q - a)).norm());
        const double d2 = dir.squaredNorm();
        if (d2 > 0.0) {
            const double tau = -base.dot(dir) / d2;
            if (tau > p - a && tau < q - a)
                best = std::min(best, (base + dir * tau).norm());
        }
    }
    if (shi >= y.horizon())
        best = std::min(best, (y.values().col(K) - xv).norm());
    return best;
}

} // namespace

SkorokhodBounds skorokhod_distance_bound(const CadlagPath& x, const CadlagPath& y, int kinks,
                                         double grid) {
    if (x.dim() != y.dim() || x.horizon() != y.horizon())
        throw ShapeError("skorokhod_distance_bound: dimension or horizon mismatch");
    if (kinks < 0 || !(grid > 0.0))
        throw DomainError("skorokhod_distance_bound: need kinks >= 0 and grid > 0");
    const double T = x.horizon();

    // ---- upper bound: sampled piecewise-linear warps ----
    double ub = sup_distance(x, y); // identity warp
    auto warp_obj = [&](const std::vector<double>& u, const std::vector<double>& w) {
        std::vector<double> ku{0.0}, kw{0.0};
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (!(u[i] > ku.back()) || !(w[i] > kw.back()) || !(u[i] < T) || !(w[i] < T))
                return kInf;
            ku.push_back(u[i]);
            kw.push_back(w[i]);
        }
        ku.push_back(T);
        kw.push_back(T);
        const TimeWarp lambda(ku, kw);
        return std::max(warp_norm(lambda), sup_distance(x, apply_warp(y, lambda)));
    };

    std::vector<std::pair<double, std::vector<double>>> pool; // (obj, flattened kinks)
    if (kinks >= 1) {
        const int n0 = 32;
        for (int iu = 1; iu < n0; ++iu)
            for (int iw = 1; iw < n0; ++iw) {
                const std::vector<double> params{T * iu / n0, T * iw / n0};
                const double o = warp_obj({params[0]}, {params[1]});
                pool.push_back({o, params});
            }
        std::sort(pool.begin(), pool.end());
        pool.resize(std::min<std::size_t>(pool.size(), 16));
        // local refinement down to the grid resolution
        for (auto& [obj, prm] : pool) {
            double h = T / n0;
            while (h > grid) {
                h *= 0.5;
                bool moved = true;
                while (moved) {
                    moved = false;
                    for (int c = 0; c < 2; ++c)
                        for (int dir = -1; dir <= 1; dir += 2) {
                            std::vector<double> trial = prm;
                            trial[static_cast<std::size_t>(c)] += dir * h;
                            const double o = warp_obj({trial[0]}, {trial[1]});
                            if (o < obj) {
                                obj = o;
                                prm = trial;
                                moved = true;
                            }
                        }
                }
            }
            ub = std::min(ub, obj);
        }
    }
    if (kinks >= 2 && !pool.empty()) {
        // grow the best one-kink warps by a second kink, then polish
        std::vector<std::pair<double, std::vector<double>>> pool2;
        const int n1 = 16;
        for (std::size_t c = 0; c < std::min<std::size_t>(pool.size(), 6); ++c) {
            const double u1 = pool[c].second[0], w1 = pool[c].second[1];
            for (int iu = 1; iu < n1; ++iu)
                for (int iw = 1; iw < n1; ++iw) {
                    const double u2 = T * iu / n1, w2 = T * iw / n1;
                    std::vector<double> prm;
                    if (u2 > u1 && w2 > w1)
                        prm = {u1, w1, u2, w2};
                    else if (u2 < u1 && w2 < w1)
                        prm = {u2, w2, u1, w1};
                    else
                        continue;
                    const double o = warp_obj({prm[0], prm[2]}, {prm[1], prm[3]});
                    pool2.push_back({o, prm});
                }
        }
        std::sort(pool2.begin(), pool2.end());
        pool2.resize(std::min<std::size_t>(pool2.size(), 12));
        for (auto& [obj, prm] : pool2) {
            double h = T / n1;
            while (h > grid) {
                h *= 0.5;
                bool moved = true;
                while (moved) {
                    moved = false;
                    for (std::size_t c = 0; c < 4; ++c)
                        for (int dir = -1; dir <= 1; dir += 2) {
                            std::vector<double> trial = prm;
                            trial[c] += dir * h;
                            const double o =
                                warp_obj({trial[0], trial[2]}, {trial[1], trial[3]});
                            if (o < obj) {
                                obj = o;
                                prm = trial;
                                moved = true;
                            }
                        }
                }
            }
            ub = std::min(ub, obj);
        }
    }

    // ---- lower bound: largest delta the window bound cannot certify ----
    std::vector<double> probes = merge_times(x.times(), y.times());
    {
        std::vector<double> extra;
        const int n = 96;
        for (int i = 0; i <= n; ++i)
            extra.push_back(T * i / n);
        probes = merge_times(probes, extra);
    }
    auto window_gap = [&](double delta) {
        double worst = 0.0;
        const double ed = std::exp(delta), emd = std::exp(-delta);
        for (double t : probes) {
            const double slo = std::max(0.0, std::max(t * emd, T - ed * (T - t)));
            const double shi = std::min(T, std::min(t * ed, T - emd * (T - t)));
            worst = std::max(worst, window_min(eval(x, t), y, slo, shi));
            if (worst > delta)
                break; // enough to decide the predicate F(delta) <= delta
        }
        return worst;
    };
    // F(delta) > delta certifies d^S > delta, so the left bisection end is
    // a valid lower bound throughout
    double lo = 0.0, hi = ub;
    if (window_gap(hi) > hi) {
        lo = hi; // can only happen through fp dust; keep lower = upper
    } else if (window_gap(0.0) <= 0.0) {
        hi = 0.0; // identical paths
    } else {
        for (int it = 0; it < 60 && hi - lo > 1e-14 * (1.0 + hi); ++it) {
            const double mid = 0.5 * (lo + hi);
            if (window_gap(mid) <= mid)
                hi = mid;
            else
                lo = mid;
        }
    }
    return {std::min(lo, ub), ub};
}

} // namespace skflow
