#pragma once

#include "skflow/path.hpp"
#include "skflow/warp.hpp"

namespace skflow {

struct SkorokhodBounds {
    double lower = 0.0;
    double upper = 0.0;
};

/// Exact Skorohod distance inf_lambda max(||lambda||, sup_t ||x(t) - y(lambda(t))||)
/// for pure step paths.
///
/// Enumerates monotone partial matchings between the jump-time sets: a
/// matching pins the warp at matched pairs, piecewise-linear interpolation
/// between pins minimizes the warp norm, and the value term is the sup
/// distance of x against the warped y. The matched and unmatched variants
/// of every pair are both enumerated, which covers infima approached at a
/// matching boundary. A final coordinate relaxation (scan plus
/// golden-section polish of each kink) picks up optima at non-pinned warps.
///
/// Throws UnsupportedInputError for non-step inputs or when either path
/// has more than `jump_cap` jumps.
double skorokhod_distance_exact(const CadlagPath& x, const CadlagPath& y, int jump_cap = 12);

/// Certified two-sided bounds for general piecewise-affine paths.
///
/// upper: minimum of the objective over sampled piecewise-linear warps with
/// at most `kinks` interior kinks, searched coarse-to-fine down to
/// resolution `grid`; the identity warp is always sampled, so
/// upper <= sup_distance(x, y).
/// lower: fixed point of the window bound F(delta) = max_t min { ||x(t)-y(s)|| :
/// |log(s/t)| <= delta and |log((T-s)/(T-t))| <= delta }, which every warp
/// with norm <= delta must satisfy; computed by bisection and clamped to
/// [0, upper].
SkorokhodBounds skorokhod_distance_bound(const CadlagPath& x, const CadlagPath& y, int kinks,
                                         double grid);

} // namespace skflow
