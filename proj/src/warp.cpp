#include "skflow/warp.hpp"

#include <algorithm>
#include <cmath>

namespace skflow {

TimeWarp::TimeWarp(std::vector<double> knots, std::vector<double> images)
    : knots_(std::move(knots)), images_(std::move(images)) {
    if (knots_.size() != images_.size() || knots_.size() < 2)
        throw InvalidWarpError("warp needs matching knot/image lists with at least {0, T}");
    if (knots_.front() != 0.0 || images_.front() != 0.0)
        throw InvalidWarpError("warp must fix 0");
    if (knots_.back() != images_.back())
        throw InvalidWarpError("warp must fix T");
    if (!(knots_.back() > 0.0))
        throw InvalidWarpError("horizon must be positive");
    for (std::size_t j = 1; j < knots_.size(); ++j) {
        if (!(knots_[j] > knots_[j - 1]) || !(images_[j] > images_[j - 1]))
            throw InvalidWarpError("warp must be strictly increasing");
        const double slope = (images_[j] - images_[j - 1]) / (knots_[j] - knots_[j - 1]);
        if (!std::isfinite(slope) || !(slope > 0.0))
            throw InvalidWarpError("degenerate warp segment");
    }
}

TimeWarp TimeWarp::identity(double horizon) { return TimeWarp({0.0, horizon}, {0.0, horizon}); }

TimeWarp TimeWarp::single_kink(double horizon, double u, double w) {
    return TimeWarp({0.0, u, horizon}, {0.0, w, horizon});
}

namespace {

double interp(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (x <= xs.front())
        return ys.front();
    if (x >= xs.back())
        return ys.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t j = static_cast<std::size_t>(it - xs.begin());
    const double f = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
    return ys[j - 1] + f * (ys[j] - ys[j - 1]);
}

} // namespace

double TimeWarp::operator()(double t) const {
    if (!(t >= 0.0) || !(t <= horizon()))
        throw DomainError("warp argument outside [0, T]");
    return interp(knots_, images_, t);
}

double TimeWarp::inverse_at(double s) const {
    if (!(s >= 0.0) || !(s <= horizon()))
        throw DomainError("warp argument outside [0, T]");
    return interp(images_, knots_, s);
}

double warp_norm(const TimeWarp& warp) {
    double best = 0.0;
    const auto& u = warp.knots();
    const auto& w = warp.images();
    for (std::size_t j = 1; j < u.size(); ++j) {
        const double slope = (w[j] - w[j - 1]) / (u[j] - u[j - 1]);
        best = std::max(best, std::fabs(std::log(slope)));
    }
    return best;
}

CadlagPath apply_warp(const CadlagPath& path, const TimeWarp& warp) {
    if (path.horizon() != warp.horizon())
        throw ShapeError("apply_warp: horizon mismatch");
    // breakpoints: warp knots plus preimages of path breakpoints, carried
    // as exact (t, image) pairs so pulled-back jumps land bit-exactly
    struct Node {
        double t;
        double image;
        bool exact; // image is a path breakpoint, not a rounded warp value
    };
    std::vector<Node> nodes;
    nodes.reserve(warp.knots().size() + path.times().size());
    for (std::size_t j = 0; j < warp.knots().size(); ++j)
        nodes.push_back({warp.knots()[j], warp.images()[j], false});
    for (double p : path.times())
        nodes.push_back({warp.inverse_at(p), p, true});
    std::sort(nodes.begin(), nodes.end(), [](const Node& a, const Node& b) {
        return a.t < b.t || (a.t == b.t && a.exact < b.exact);
    });
    std::vector<Node> grid;
    for (const Node& n : nodes) {
        if (!grid.empty() && grid.back().t == n.t)
            grid.back() = n; // exact-tagged node wins on ties
        else
            grid.push_back(n);
    }

    const auto K = static_cast<Eigen::Index>(grid.size()) - 1;
    Eigen::MatrixXd values(path.dim(), K + 1);
    Eigen::MatrixXd slopes(path.dim(), K);
    const auto& knots = warp.knots();
    const auto& ptimes = path.times();
    for (Eigen::Index j = 0; j < K; ++j) {
        const double t = grid[static_cast<std::size_t>(j)].t;
        const double s = grid[static_cast<std::size_t>(j)].image;
        const auto it = std::upper_bound(knots.begin(), knots.end(), t);
        const std::size_t seg = std::min(static_cast<std::size_t>(it - knots.begin()),
                                         knots.size() - 1);
        const double wslope = (warp.images()[seg] - warp.images()[seg - 1]) /
                              (knots[seg] - knots[seg - 1]);
        const auto pit = std::upper_bound(ptimes.begin(), ptimes.end(), s);
        const Eigen::Index pk = std::min<Eigen::Index>(
            static_cast<Eigen::Index>(pit - ptimes.begin()) - 1, path.segments() - 1);
        values.col(j) = path.values().col(pk) +
                        path.slopes().col(pk) * (s - ptimes[static_cast<std::size_t>(pk)]);
        slopes.col(j) = path.slopes().col(pk) * wslope;
    }
    values.col(K) = path.values().col(path.segments());
    std::vector<double> ts(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j)
        ts[j] = grid[j].t;
    return CadlagPath(std::move(ts), std::move(values), std::move(slopes));
}

TimeWarp inverse(const TimeWarp& warp) { return TimeWarp(warp.images(), warp.knots()); }

TimeWarp compose(const TimeWarp& a, const TimeWarp& b) {
    if (a.horizon() != b.horizon())
        throw ShapeError("compose: horizon mismatch");
    // knots of b plus preimages under b of a's knots
    std::vector<double> pre;
    pre.reserve(a.knots().size());
    for (double u : a.knots())
        pre.push_back(b.inverse_at(u));
    std::vector<double> knots = merge_times(b.knots(), pre);
    std::vector<double> images;
    images.reserve(knots.size());
    for (double t : knots)
        images.push_back(a(b(t)));
    images.front() = 0.0;
    images.back() = a.horizon();
    return TimeWarp(std::move(knots), std::move(images));
}

} // namespace skflow
