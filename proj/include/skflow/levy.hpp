#pragma once

#include <cstdint>
#include <vector>

#include "skflow/path.hpp"
#include "skflow/rng.hpp"

namespace skflow {

/// Scalar jump-size law with exact truncated moments (closed forms, no
/// estimation). Sampling is deterministic given the generator state.
class JumpLaw {
public:
    enum class Kind { fixed, normal, uniform };

    static JumpLaw fixed(double size);
    static JumpLaw normal(double mean, double stddev);
    static JumpLaw uniform(double lo, double hi);

    Kind kind() const { return kind_; }
    double param(int i) const { return p_[i]; }

    double sample(CounterRng& rng) const;
    /// E[x 1_{eps < |x| <= 1}]
    double mean_small(double eps) const;
    /// E[x^2 1_{eps < |x| <= 1}]
    double second_moment_small(double eps) const;
    /// E[x^2]
    double second_moment() const;
    /// Quadrature nodes (v_i, w_i) with sum w_i f(v_i) ~ E[f(x)].
    std::vector<std::pair<double, double>> quadrature(int points) const;

private:
    JumpLaw(Kind k, double a, double b) : kind_(k), p_{a, b} {}
    Kind kind_;
    double p_[2];
};

/// Compound-Poisson-plus-drift driver specification. Components are
/// independent: each carries its own Poisson clock with rate `intensity`
/// and i.i.d. sizes from `jump_law`, which keeps all moment bookkeeping
/// exact. Jumps with |x| <= truncation are dropped; with compensate set,
/// the slope is corrected by -intensity * E[x 1_{trunc < |x| <= 1}] per
/// component (the small-jump part then runs in compensated form).
struct LevySpec {
    Eigen::Index dim = 1;
    Eigen::VectorXd drift = Eigen::VectorXd::Zero(1);
    double intensity = 0.0;
    JumpLaw jump_law = JumpLaw::fixed(1.0);
    double truncation = 0.0;
    bool compensate = false;

    void validate() const;
    /// Realized segment slope: drift plus the compensator correction.
    Eigen::VectorXd effective_drift() const;
    /// Compensator slope of the small-jump martingale part per component.
    double compensator_slope() const;
    /// <M, M> slope per component: intensity * E[x^2 1_{trunc < |x| <= 1}].
    double predictable_qv_slope() const;
};

/// Exact compound-Poisson-plus-drift path on [0, T]; deterministic given
/// (spec, seed). Jump count ~ Poisson(intensity * T) per component, times
/// are uniform order statistics, sizes i.i.d. filtered by |x| > truncation.
CadlagPath sample_path(const LevySpec& spec, double horizon, std::uint64_t seed);

struct Decomposition {
    CadlagPath M; // compensated small jumps, M_0 = 0
    CadlagPath A; // drift, large jumps, and the compensator line
};

/// Semimartingale decomposition M + A = path, exact including rounding:
/// A is stored as the bitwise complement of M on the path's grid.
/// Throws DecompositionError when the path's slopes do not match the spec.
Decomposition decompose(const CadlagPath& path, const LevySpec& spec);

struct DominatingProcess {
    CadlagPath V;                     // increasing, exact at every event
    CadlagPath M;
    CadlagPath A;
    CadlagPath quadratic_variation;   // [M, M], summed over components
    CadlagPath predictable_qv;        // <M, M>
    CadlagPath total_variation_A;     // |A|
};

/// V_t = 2 sqrt(2) ([M,M]_t + <M,M>_t)^(1/2) + sqrt(2) |A|_t per component,
/// summed over components (the minimal construction, B = 0). Values are
/// exact at every path event; affine between events.
DominatingProcess dominating_process(const CadlagPath& M, const CadlagPath& A,
                                     double predictable_qv_slope);

/// theta_t(P, V) = (int_0^t |P_s|^2 dV_s^2)^(1/2) + int_0^t |P_s| dV_s as
/// exact Stieltjes sums; the integrand is left-evaluated on atoms of V.
/// P must be a scalar step path and V nondecreasing.
double theta(const CadlagPath& P, const CadlagPath& V, double t);

/// Pathwise integral (int_0^t P_{s-} dY_s) for a d x m matrix step path P
/// (flattened column-major) against an R^m driver Y: drift segments
/// contribute P * slope * dt, each jump contributes P(s-) * dY_s. Exact
/// for step P; for affine P the result is exact at every breakpoint and
/// affine in between.
CadlagPath stochastic_integral(const CadlagPath& P, Eigen::Index d, Eigen::Index m,
                               const CadlagPath& Y);

} // namespace skflow
