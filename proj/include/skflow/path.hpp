#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "skflow/errors.hpp"

namespace skflow {

/// Piecewise-affine cadlag path on [0, T] with values in R^dim.
///
/// Breakpoints 0 = s_0 < s_1 < ... < s_K = T. On [s_k, s_{k+1}) the value is
/// a_k + c_k * (t - s_k); the value at T is stored separately. Right
/// continuity holds by construction, left limits come from the affine
/// extension of the previous segment, and a jump at s_k means the stored
/// value differs (bitwise) from that extension. Pure step paths are the
/// c_k = 0 special case.
///
/// Construction canonicalizes: adjacent segments whose affine extensions
/// agree bitwise are merged, so equality of canonical representations is
/// plain member equality. Instances are immutable; all operations return
/// new paths, so sharing across threads is safe.
class CadlagPath {
public:
    /// values is dim x (K+1): columns 0..K-1 are right values at the
    /// breakpoints, column K is the value at T. slopes is dim x K.
    CadlagPath(std::vector<double> times, Eigen::MatrixXd values, Eigen::MatrixXd slopes);

    static CadlagPath constant(double horizon, const Eigen::VectorXd& value);
    static CadlagPath constant(double horizon, double value);
    static CadlagPath zero(Eigen::Index dim, double horizon);

    /// Pure step path: starts at `initial`, takes value `post_values[i]`
    /// from `jump_times[i]` on. Jump times must be strictly increasing and
    /// lie in (0, horizon].
    static CadlagPath step(double horizon, const Eigen::VectorXd& initial,
                           const std::vector<double>& jump_times,
                           const std::vector<Eigen::VectorXd>& post_values);
    static CadlagPath step(double horizon, double initial, const std::vector<double>& jump_times,
                           const std::vector<double>& post_values);

    /// Continuous piecewise-linear interpolant through (times[i], samples.col(i)).
    static CadlagPath piecewise_linear(std::vector<double> times, const Eigen::MatrixXd& samples);

    Eigen::Index dim() const { return values_.rows(); }
    double horizon() const { return times_.back(); }
    /// Number of affine segments K.
    Eigen::Index segments() const { return static_cast<Eigen::Index>(times_.size()) - 1; }

    const std::vector<double>& times() const { return times_; }
    /// dim x (K+1); column K is the value at T.
    const Eigen::MatrixXd& values() const { return values_; }
    /// dim x K.
    const Eigen::MatrixXd& slopes() const { return slopes_; }

    bool is_step() const;

    /// Canonical-form equality (bitwise on times, values, slopes).
    bool operator==(const CadlagPath& other) const;

private:
    std::vector<double> times_;
    Eigen::MatrixXd values_;
    Eigen::MatrixXd slopes_;
};

/// Right-continuous evaluation; eval(T) is the stored terminal value.
Eigen::VectorXd eval(const CadlagPath& path, double t);

/// Left limit at t; left_limit(path, 0) = eval(path, 0) by convention.
Eigen::VectorXd left_limit(const CadlagPath& path, double t);

/// Stopped path x^t(s) = x(s ^ t); constant on [t, T].
CadlagPath stop_at(const CadlagPath& path, double t);

/// path + v * 1_{[r, T]}; inserts r as a breakpoint when absent.
CadlagPath add_shift(const CadlagPath& path, double r, const Eigen::VectorXd& v);
CadlagPath add_shift(const CadlagPath& path, double r, double v);

/// Exact sup over [0, T] of ||x(t) - y(t)|| (Euclidean), including left
/// limits at jump times. Requires equal dim and horizon.
double sup_distance(const CadlagPath& x, const CadlagPath& y);

/// Pointwise linear combination; breakpoints are the union.
CadlagPath linear_combine(const std::vector<std::pair<double, const CadlagPath*>>& terms);

CadlagPath operator+(const CadlagPath& x, const CadlagPath& y);
CadlagPath operator-(const CadlagPath& x, const CadlagPath& y);
CadlagPath operator*(double w, const CadlagPath& x);

/// sup_{0 <= s < t} ||x(s)|| (left-open at t, so a jump exactly at t does
/// not count; its left limit does). Requires 0 < t <= T.
double sup_norm_before(const CadlagPath& path, double t);

/// sup over s in [lo, hi] of ||x(s) - x(lo)||, left limits included.
double oscillation_from(const CadlagPath& path, double lo, double hi);

struct Jump {
    double time;
    Eigen::VectorXd delta;
};

/// All jumps of the path in (0, T], in time order.
std::vector<Jump> jumps(const CadlagPath& path);

/// Total variation: sum of ||c_k|| * dt over segments plus sum of ||jump||.
double total_variation(const CadlagPath& path);

/// Sorted union of the two breakpoint grids (bitwise dedup).
std::vector<double> merge_times(const std::vector<double>& a, const std::vector<double>& b);

/// Monotone evaluation cursor for tight scans over increasing times.
class PathCursor {
public:
    explicit PathCursor(const CadlagPath& path) : path_(&path) {}

    /// Segment index k with times[k] <= t < times[k+1] (k = K-1 at t = T).
    Eigen::Index seek(double t);

    /// Right value at t; t must be nondecreasing across calls.
    void value(double t, Eigen::Ref<Eigen::VectorXd> out);
    double scalar_value(double t);

private:
    const CadlagPath* path_;
    Eigen::Index k_ = 0;
};

} // namespace skflow
