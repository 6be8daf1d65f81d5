#include "skflow/path.hpp"

#include <algorithm>
#include <cmath>

namespace skflow {

namespace {

void check_domain(const CadlagPath& p, double t) {
    if (!(t >= 0.0) || !(t <= p.horizon()))
        throw DomainError("time outside [0, T]");
}

Eigen::Index segment_of(const std::vector<double>& times, double t) {
    // last k with times[k] <= t, clamped to a segment index
    auto it = std::upper_bound(times.begin(), times.end(), t);
    Eigen::Index k = static_cast<Eigen::Index>(it - times.begin()) - 1;
    Eigen::Index last = static_cast<Eigen::Index>(times.size()) - 2;
    return std::min(k, last);
}

} // namespace

CadlagPath::CadlagPath(std::vector<double> times, Eigen::MatrixXd values, Eigen::MatrixXd slopes)
    : times_(std::move(times)), values_(std::move(values)), slopes_(std::move(slopes)) {
    const auto K = static_cast<Eigen::Index>(times_.size()) - 1;
    if (K < 1)
        throw ShapeError("path needs at least breakpoints {0, T}");
    if (times_.front() != 0.0)
        throw ShapeError("first breakpoint must be 0");
    if (!(times_.back() > 0.0) || !std::isfinite(times_.back()))
        throw ShapeError("horizon must be positive and finite");
    for (std::size_t i = 1; i < times_.size(); ++i)
        if (!(times_[i] > times_[i - 1]))
            throw ShapeError("breakpoints must be strictly increasing");
    if (values_.rows() < 1)
        throw ShapeError("dimension must be positive");
    if (values_.cols() != K + 1 || slopes_.rows() != values_.rows() || slopes_.cols() != K)
        throw ShapeError("values must be dim x (K+1) and slopes dim x K");
    if (!values_.allFinite() || !slopes_.allFinite())
        throw ShapeError("non-finite path data");

    // canonicalize: drop interior breakpoints that carry no jump and no
    // slope change (bitwise comparisons, no fuzzy merge)
    std::vector<Eigen::Index> keep;
    keep.reserve(times_.size());
    keep.push_back(0);
    for (Eigen::Index k = 1; k < K; ++k) {
        const Eigen::Index prev = keep.back();
        const double dt = times_[static_cast<std::size_t>(k)] - times_[static_cast<std::size_t>(prev)];
        const bool same_slope = (slopes_.col(k).array() == slopes_.col(prev).array()).all();
        bool no_jump = true;
        for (Eigen::Index i = 0; i < values_.rows() && no_jump; ++i)
            no_jump = values_(i, k) == values_(i, prev) + slopes_(i, prev) * dt;
        if (!(same_slope && no_jump))
            keep.push_back(k);
    }
    keep.push_back(K);
    if (static_cast<Eigen::Index>(keep.size()) != K + 1) {
        std::vector<double> t2(keep.size());
        Eigen::MatrixXd v2(values_.rows(), static_cast<Eigen::Index>(keep.size()));
        Eigen::MatrixXd c2(values_.rows(), static_cast<Eigen::Index>(keep.size()) - 1);
        for (std::size_t j = 0; j < keep.size(); ++j) {
            t2[j] = times_[static_cast<std::size_t>(keep[j])];
            v2.col(static_cast<Eigen::Index>(j)) = values_.col(keep[j]);
            if (j + 1 < keep.size())
                c2.col(static_cast<Eigen::Index>(j)) = slopes_.col(keep[j]);
        }
        times_ = std::move(t2);
        values_ = std::move(v2);
        slopes_ = std::move(c2);
    }
}

CadlagPath CadlagPath::constant(double horizon, const Eigen::VectorXd& value) {
    Eigen::MatrixXd v(value.size(), 2);
    v.col(0) = value;
    v.col(1) = value;
    return CadlagPath({0.0, horizon}, std::move(v), Eigen::MatrixXd::Zero(value.size(), 1));
}

CadlagPath CadlagPath::constant(double horizon, double value) {
    return constant(horizon, Eigen::VectorXd::Constant(1, value));
}

CadlagPath CadlagPath::zero(Eigen::Index dim, double horizon) {
    return constant(horizon, Eigen::VectorXd::Zero(dim));
}

CadlagPath CadlagPath::step(double horizon, const Eigen::VectorXd& initial,
                            const std::vector<double>& jump_times,
                            const std::vector<Eigen::VectorXd>& post_values) {
    if (jump_times.size() != post_values.size())
        throw ShapeError("jump_times and post_values differ in length");
    std::vector<double> t;
    t.push_back(0.0);
    Eigen::MatrixXd v(initial.size(), static_cast<Eigen::Index>(jump_times.size()) + 2);
    v.col(0) = initial;
    Eigen::Index col = 1;
    for (std::size_t i = 0; i < jump_times.size(); ++i) {
        if (!(jump_times[i] > 0.0) || !(jump_times[i] <= horizon))
            throw DomainError("jump time outside (0, T]");
        if (jump_times[i] == horizon) {
            if (i + 1 != jump_times.size())
                throw ShapeError("only the last jump may sit at T");
            break;
        }
        t.push_back(jump_times[i]);
        v.col(col++) = post_values[i];
    }
    t.push_back(horizon);
    v.col(col) = post_values.empty() ? initial : post_values.back();
    v.conservativeResize(Eigen::NoChange, col + 1);
    return CadlagPath(std::move(t), std::move(v),
                      Eigen::MatrixXd::Zero(initial.size(), col));
}

CadlagPath CadlagPath::step(double horizon, double initial, const std::vector<double>& jump_times,
                            const std::vector<double>& post_values) {
    std::vector<Eigen::VectorXd> pv;
    pv.reserve(post_values.size());
    for (double x : post_values)
        pv.push_back(Eigen::VectorXd::Constant(1, x));
    return step(horizon, Eigen::VectorXd::Constant(1, initial), jump_times, pv);
}

CadlagPath CadlagPath::piecewise_linear(std::vector<double> times, const Eigen::MatrixXd& samples) {
    const auto K = static_cast<Eigen::Index>(times.size()) - 1;
    if (samples.cols() != K + 1)
        throw ShapeError("need one sample per breakpoint");
    Eigen::MatrixXd slopes(samples.rows(), K);
    for (Eigen::Index k = 0; k < K; ++k) {
        const double dt = times[static_cast<std::size_t>(k + 1)] - times[static_cast<std::size_t>(k)];
        slopes.col(k) = (samples.col(k + 1) - samples.col(k)) / dt;
    }
    return CadlagPath(std::move(times), samples, std::move(slopes));
}

bool CadlagPath::is_step() const { return (slopes_.array() == 0.0).all(); }

bool CadlagPath::operator==(const CadlagPath& other) const {
    return times_ == other.times_ && values_.rows() == other.values_.rows() &&
           (values_.array() == other.values_.array()).all() &&
           (slopes_.array() == other.slopes_.array()).all();
}

Eigen::VectorXd eval(const CadlagPath& path, double t) {
    check_domain(path, t);
    if (t == path.horizon())
        return path.values().col(path.segments());
    const Eigen::Index k = segment_of(path.times(), t);
    return path.values().col(k) +
           path.slopes().col(k) * (t - path.times()[static_cast<std::size_t>(k)]);
}

Eigen::VectorXd left_limit(const CadlagPath& path, double t) {
    check_domain(path, t);
    if (t == 0.0)
        return path.values().col(0);
    // segment with times[k] < t <= times[k+1]
    auto it = std::lower_bound(path.times().begin(), path.times().end(), t);
    const Eigen::Index k = static_cast<Eigen::Index>(it - path.times().begin()) - 1;
    return path.values().col(k) +
           path.slopes().col(k) * (t - path.times()[static_cast<std::size_t>(k)]);
}

CadlagPath stop_at(const CadlagPath& path, double t) {
    check_domain(path, t);
    if (t == path.horizon())
        return path;
    const Eigen::VectorXd v = eval(path, t);
    std::vector<double> times;
    const Eigen::Index K = path.segments();
    Eigen::MatrixXd values(path.dim(), K + 2);
    Eigen::MatrixXd slopes(path.dim(), K + 1);
    Eigen::Index col = 0;
    for (Eigen::Index k = 0; k < K && path.times()[static_cast<std::size_t>(k)] < t; ++k) {
        times.push_back(path.times()[static_cast<std::size_t>(k)]);
        values.col(col) = path.values().col(k);
        slopes.col(col) = path.slopes().col(k);
        ++col;
    }
    if (t > 0.0) {
        times.push_back(t);
        values.col(col) = v;
        slopes.col(col) = Eigen::VectorXd::Zero(path.dim());
        ++col;
    } else {
        // stopped at 0: constant path at x(0)
        times.push_back(0.0);
        values.col(0) = v;
        slopes.col(0) = Eigen::VectorXd::Zero(path.dim());
        col = 1;
    }
    times.push_back(path.horizon());
    values.col(col) = v;
    values.conservativeResize(Eigen::NoChange, col + 1);
    slopes.conservativeResize(Eigen::NoChange, col);
    return CadlagPath(std::move(times), std::move(values), std::move(slopes));
}

CadlagPath add_shift(const CadlagPath& path, double r, const Eigen::VectorXd& v) {
    check_domain(path, r);
    if (v.size() != path.dim())
        throw ShapeError("shift dimension mismatch");
    std::vector<double> grid = merge_times(path.times(), {r});
    const auto K = static_cast<Eigen::Index>(grid.size()) - 1;
    Eigen::MatrixXd values(path.dim(), K + 1);
    Eigen::MatrixXd slopes(path.dim(), K);
    for (Eigen::Index j = 0; j < K; ++j) {
        const double s = grid[static_cast<std::size_t>(j)];
        const Eigen::Index k = segment_of(path.times(), s);
        values.col(j) = path.values().col(k) +
                        path.slopes().col(k) * (s - path.times()[static_cast<std::size_t>(k)]);
        if (s >= r)
            values.col(j) += v;
        slopes.col(j) = path.slopes().col(k);
    }
    values.col(K) = path.values().col(path.segments()) + v;
    return CadlagPath(std::move(grid), std::move(values), std::move(slopes));
}

CadlagPath add_shift(const CadlagPath& path, double r, double v) {
    return add_shift(path, r, Eigen::VectorXd::Constant(1, v));
}

std::vector<double> merge_times(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out;
    out.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

namespace {

/// Scalar fast path: no per-node temporaries.
double sup_distance_scalar(const CadlagPath& x, const CadlagPath& y) {
    const auto& xt = x.times();
    const auto& yt = y.times();
    const double* xv = x.values().data();
    const double* xc = x.slopes().data();
    const double* yv = y.values().data();
    const double* yc = y.slopes().data();
    const std::size_t xK = static_cast<std::size_t>(x.segments());
    const std::size_t yK = static_cast<std::size_t>(y.segments());
    std::size_t i = 0, j = 0;
    double best = std::fabs(xv[0] - yv[0]);
    double lo = 0.0;
    while (i < xK || j < yK) {
        const double nx = i + 1 <= xK ? xt[i + 1] : xt.back();
        const double ny = j + 1 <= yK ? yt[j + 1] : yt.back();
        const double hi = std::min(nx, ny);
        // affine difference on [lo, hi): extremes at the closed ends
        const double dxhi = xv[i] + xc[i] * (hi - xt[i]) - (yv[j] + yc[j] * (hi - yt[j]));
        best = std::max(best, std::fabs(dxhi));
        if (hi == nx && i < xK)
            ++i;
        if (hi == ny && j < yK)
            ++j;
        if (i < xK || j < yK) {
            const double dlo = xv[std::min(i, xK - 1)] +
                               xc[std::min(i, xK - 1)] * (hi - xt[std::min(i, xK - 1)]) -
                               (yv[std::min(j, yK - 1)] +
                                yc[std::min(j, yK - 1)] * (hi - yt[std::min(j, yK - 1)]));
            best = std::max(best, std::fabs(dlo));
        }
        lo = hi;
        if (hi >= xt.back())
            break;
    }
    best = std::max(best, std::fabs(xv[xK] - yv[yK]));
    (void)lo;
    return best;
}

} // namespace

double sup_distance(const CadlagPath& x, const CadlagPath& y) {
    if (x.dim() != y.dim())
        throw ShapeError("sup_distance: dimension mismatch");
    if (x.horizon() != y.horizon())
        throw ShapeError("sup_distance: horizon mismatch");
    if (x.dim() == 1)
        return sup_distance_scalar(x, y);
    const std::vector<double> grid = merge_times(x.times(), y.times());
    PathCursor cx(x), cy(y);
    double best = 0.0;
    Eigen::VectorXd vx(x.dim()), vy(y.dim());
    for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
        const double lo = grid[j];
        const double hi = grid[j + 1];
        const Eigen::Index kx = cx.seek(lo);
        const Eigen::Index ky = cy.seek(lo);
        // affine difference on [lo, hi): max norm at the closed ends
        vx = x.values().col(kx) + x.slopes().col(kx) * (lo - x.times()[static_cast<std::size_t>(kx)]);
        vy = y.values().col(ky) + y.slopes().col(ky) * (lo - y.times()[static_cast<std::size_t>(ky)]);
        best = std::max(best, (vx - vy).norm());
        vx = x.values().col(kx) + x.slopes().col(kx) * (hi - x.times()[static_cast<std::size_t>(kx)]);
        vy = y.values().col(ky) + y.slopes().col(ky) * (hi - y.times()[static_cast<std::size_t>(ky)]);
        best = std::max(best, (vx - vy).norm());
    }
    best = std::max(best, (x.values().col(x.segments()) - y.values().col(y.segments())).norm());
    return best;
}

CadlagPath linear_combine(const std::vector<std::pair<double, const CadlagPath*>>& terms) {
    if (terms.empty())
        throw ShapeError("linear_combine: empty term list");
    const Eigen::Index dim = terms.front().second->dim();
    const double T = terms.front().second->horizon();
    for (const auto& [w, p] : terms) {
        if (p->dim() != dim || p->horizon() != T)
            throw ShapeError("linear_combine: mixed dims or horizons");
    }
    std::vector<double> grid = terms.front().second->times();
    for (std::size_t i = 1; i < terms.size(); ++i)
        grid = merge_times(grid, terms[i].second->times());

    const auto K = static_cast<Eigen::Index>(grid.size()) - 1;
    Eigen::MatrixXd values = Eigen::MatrixXd::Zero(dim, K + 1);
    Eigen::MatrixXd slopes = Eigen::MatrixXd::Zero(dim, K);
    for (const auto& [w, p] : terms) {
        PathCursor c(*p);
        for (Eigen::Index j = 0; j < K; ++j) {
            const double s = grid[static_cast<std::size_t>(j)];
            const Eigen::Index k = c.seek(s);
            values.col(j) += w * (p->values().col(k) +
                                  p->slopes().col(k) * (s - p->times()[static_cast<std::size_t>(k)]));
            slopes.col(j) += w * p->slopes().col(k);
        }
        values.col(K) += w * p->values().col(p->segments());
    }
    return CadlagPath(std::move(grid), std::move(values), std::move(slopes));
}

CadlagPath operator+(const CadlagPath& x, const CadlagPath& y) {
    return linear_combine({{1.0, &x}, {1.0, &y}});
}

CadlagPath operator-(const CadlagPath& x, const CadlagPath& y) {
    return linear_combine({{1.0, &x}, {-1.0, &y}});
}

CadlagPath operator*(double w, const CadlagPath& x) { return linear_combine({{w, &x}}); }

double sup_norm_before(const CadlagPath& path, double t) {
    check_domain(path, t);
    if (!(t > 0.0))
        throw DomainError("sup_norm_before needs t > 0");
    double best = 0.0;
    const Eigen::Index K = path.segments();
    for (Eigen::Index k = 0; k < K; ++k) {
        const double s = path.times()[static_cast<std::size_t>(k)];
        if (s >= t)
            break;
        const double hi = std::min(path.times()[static_cast<std::size_t>(k + 1)], t);
        best = std::max(best, path.values().col(k).norm());
        best = std::max(best, (path.values().col(k) + path.slopes().col(k) * (hi - s)).norm());
    }
    return best;
}

double oscillation_from(const CadlagPath& path, double lo, double hi) {
    check_domain(path, lo);
    check_domain(path, hi);
    if (!(lo <= hi))
        throw DomainError("oscillation_from needs lo <= hi");
    const Eigen::VectorXd ref = eval(path, lo);
    double best = 0.0;
    const Eigen::Index K = path.segments();
    for (Eigen::Index k = 0; k < K; ++k) {
        const double a = path.times()[static_cast<std::size_t>(k)];
        const double b = path.times()[static_cast<std::size_t>(k + 1)];
        if (b < lo || a > hi)
            continue;
        const double p = std::max(a, lo);
        const double q = std::min(b, hi);
        best = std::max(best, (path.values().col(k) + path.slopes().col(k) * (p - a) - ref).norm());
        best = std::max(best, (path.values().col(k) + path.slopes().col(k) * (q - a) - ref).norm());
    }
    if (hi == path.horizon())
        best = std::max(best, (path.values().col(K) - ref).norm());
    return best;
}

std::vector<Jump> jumps(const CadlagPath& path) {
    std::vector<Jump> out;
    const Eigen::Index K = path.segments();
    for (Eigen::Index k = 1; k <= K; ++k) {
        const double dt = path.times()[static_cast<std::size_t>(k)] -
                          path.times()[static_cast<std::size_t>(k - 1)];
        const Eigen::VectorXd ext = path.values().col(k - 1) + path.slopes().col(k - 1) * dt;
        const Eigen::VectorXd delta = path.values().col(k) - ext;
        if ((delta.array() != 0.0).any())
            out.push_back({path.times()[static_cast<std::size_t>(k)], delta});
    }
    return out;
}

double total_variation(const CadlagPath& path) {
    double tv = 0.0;
    const Eigen::Index K = path.segments();
    for (Eigen::Index k = 0; k < K; ++k) {
        const double dt = path.times()[static_cast<std::size_t>(k + 1)] -
                          path.times()[static_cast<std::size_t>(k)];
        tv += path.slopes().col(k).norm() * dt;
    }
    for (const auto& j : jumps(path))
        tv += j.delta.norm();
    return tv;
}

Eigen::Index PathCursor::seek(double t) {
    const auto& times = path_->times();
    const Eigen::Index last = static_cast<Eigen::Index>(times.size()) - 2;
    if (t < times[static_cast<std::size_t>(k_)])
        k_ = 0; // non-monotone use: restart
    while (k_ < last && times[static_cast<std::size_t>(k_ + 1)] <= t)
        ++k_;
    return k_;
}

void PathCursor::value(double t, Eigen::Ref<Eigen::VectorXd> out) {
    if (t == path_->horizon()) {
        out = path_->values().col(path_->segments());
        return;
    }
    const Eigen::Index k = seek(t);
    out = path_->values().col(k) +
          path_->slopes().col(k) * (t - path_->times()[static_cast<std::size_t>(k)]);
}

double PathCursor::scalar_value(double t) {
    if (t == path_->horizon())
        return path_->values()(0, path_->segments());
    const Eigen::Index k = seek(t);
    return path_->values()(0, k) +
           path_->slopes()(0, k) * (t - path_->times()[static_cast<std::size_t>(k)]);
}

} // namespace skflow
