#pragma once

#include "skflow/path.hpp"

namespace skflow {

/// Independent direct search over piecewise-linear time warps, used to
/// cross-validate the exact Skorohod metric. Seeds one- and two-kink
/// lattices, then refines locally (coordinate descent with stepwise kink
/// insertion) down to `resolution`. Returns an upper bound on d^S that is
/// tight for step paths with moderately many jumps.
double skorokhod_warp_search(const CadlagPath& x, const CadlagPath& y,
                             double resolution = 1e-3);

/// Closed-form solution of dX = X_{s-} dY for a piecewise-affine driver
/// with finitely many jumps: X_t = xi * exp(drift part) * prod(1 + jump).
class StochasticExponential {
public:
    StochasticExponential(const CadlagPath& driver, double initial);

    double at(double t) const;
    /// sup over the path's breakpoints (right values and left limits) and
    /// any t in `extra` of |z(t) - at(t)|.
    double sup_error(const CadlagPath& z) const;

private:
    CadlagPath driver_;
    double xi_;
    std::vector<double> anchor_; // exact solution values at driver breakpoints
};

/// Midpoint-refined Stieltjes sum for (int |P|^2 dV^2)^(1/2) + int |P| dV
/// over [0, t]; the independent check for the exact event-driven theta.
double refined_theta(const CadlagPath& P, const CadlagPath& V, double t, int subdivisions);

} // namespace skflow
