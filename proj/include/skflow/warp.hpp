#pragma once

#include <vector>

#include "skflow/path.hpp"

namespace skflow {

/// Strictly increasing piecewise-linear bijection of [0, T]: lambda(u_j) = w_j
/// with u_0 = w_0 = 0 and u_J = w_J = T. All segment slopes must be finite
/// and positive.
class TimeWarp {
public:
    TimeWarp(std::vector<double> knots, std::vector<double> images);

    static TimeWarp identity(double horizon);
    /// Single interior kink mapping u -> w.
    static TimeWarp single_kink(double horizon, double u, double w);

    double horizon() const { return knots_.back(); }
    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& images() const { return images_; }

    double operator()(double t) const;
    double inverse_at(double s) const;

private:
    std::vector<double> knots_;
    std::vector<double> images_;
};

/// max over segments of |log slope|; equals the sup over all s < t of the
/// |log difference quotient| because every difference quotient of a
/// piecewise-linear warp is a convex combination of segment slopes.
double warp_norm(const TimeWarp& warp);

/// Path composed with the warp: result(t) = path(lambda(t)), exact for
/// piecewise-affine paths (preimages of path breakpoints become breakpoints).
CadlagPath apply_warp(const CadlagPath& path, const TimeWarp& warp);

TimeWarp inverse(const TimeWarp& warp);

/// compose(a, b)(t) = a(b(t)).
TimeWarp compose(const TimeWarp& a, const TimeWarp& b);

} // namespace skflow
