#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "skflow/coefficient.hpp"
#include "skflow/levy.hpp"
#include "skflow/path.hpp"

namespace skflow {

/// Per-iterate breakpoint budget exhausted; the driver loop returns the
/// last completed iterate flagged as non-converged.
class NodeBudgetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SolverConfig {
    int n_max = 40;
    double tol = 1e-10; // sup-metric Cauchy tolerance
    bool report_skorokhod = false;
    /// Uniform refinement step of the coefficient-path surrogate as a
    /// fraction of the horizon; crossings are isolated at this resolution
    /// and then solved exactly on the affine surrogate.
    double gamma_scan_guard = 2.5e-4;
    /// Per-iterate freeze-point budget. The threshold set at level n has
    /// about total_variation(coefficient path) * 2^n points, so deep
    /// levels are capped by memory, not time.
    std::size_t max_nodes = 6'000'000;
    bool compute_residual = false;
    /// Floor for the residual refreeze threshold 2^-(n+10); keeps the
    /// diagnostic refreeze affordable at deep levels.
    double residual_floor = 1e-6;

    void validate() const;
};

/// One adaptive-freeze iterate: Z holds the new path, S the step
/// coefficient frozen at the breakpoint times, gap_to_f the sup distance
/// between S and the coefficient path it froze (bounded by 2^-n), and
/// dist_to_prev the sup distance to the previous iterate.
struct IterationState {
    int n = 0;
    CadlagPath Z = CadlagPath::zero(1, 1.0);
    std::shared_ptr<const CadlagPath> Z_prev;
    std::vector<double> breakpoint_times; // tau_0 = 0 < ... <= T, ends at T
    CadlagPath S = CadlagPath::zero(1, 1.0); // d*m flattened step path
    double gap_to_f = 0.0;
    double dist_to_prev = 0.0;
};

enum class StopReason { cauchy, n_max, node_budget };

struct IterationDiagnostics {
    int n = 0;
    double gap_to_f = 0.0;
    double dist_to_prev = 0.0;
    double residual = std::numeric_limits<double>::quiet_NaN();
    double skorokhod_upper = std::numeric_limits<double>::quiet_NaN();
};

struct SolveResult {
    CadlagPath X;
    bool converged = false;
    StopReason stop = StopReason::n_max;
    int iterations = 0;
    std::vector<IterationDiagnostics> diagnostics;
};

/// Piecewise-affine surrogate of t -> f(t, covariate, state_path) on the
/// union of all input breakpoints, declared time events, and a uniform
/// grid of step grid_step; values are flattened d x m matrices. Exact for
/// scalar Markov coefficients composed with piecewise-affine paths up to
/// the chord interpolation between grid nodes.
CadlagPath materialize_coefficient_path(const Coefficient& coef, const CadlagPath& covariate,
                                        const CadlagPath& state_path, const CadlagPath& driver,
                                        double grid_step);

/// Freeze times of the coefficient path at threshold 2^-n: t_0 = 0 and
/// t_{j+1} the first time in (t_j, T] where the surrogate or its left
/// limit moved at least 2^-n from the frozen value (inf of the empty set
/// is T). The left-limit test applies strictly after t_j; re-testing the
/// jump that produced t_j would stall the sequence. In-segment crossings
/// are solved exactly on the affine surrogate.
std::vector<double> breakpoints(const CadlagPath& coefficient_path, Eigen::Index d, Eigen::Index m,
                                int n, std::size_t max_nodes = SolverConfig{}.max_nodes);

/// One iterate: materializes the coefficient path from prev.Z, freezes it
/// at 2^-n, and assembles Z(s) = forcing(s) + sum_j S_j (driver^{t_{j+1}}(s)
/// - driver^{t_j}(s)) exactly by path algebra. Throws NodeBudgetError when
/// the freeze set would exceed config.max_nodes.
IterationState psi_step(const CadlagPath& forcing, const CadlagPath& covariate,
                        const CadlagPath& driver, const IterationState& prev,
                        const Coefficient& coef, int n, const SolverConfig& config);

/// sup_t of the gap between the iterate and the exact pathwise integral of
/// the finely refrozen true coefficient (threshold 2^-(n+10), floored by
/// config.residual_floor): a computable convergence diagnostic.
double residual(const IterationState& state, const CadlagPath& forcing,
                const CadlagPath& covariate, const CadlagPath& driver, const Coefficient& coef,
                const SolverConfig& config);

using IterationObserver = std::function<void(const IterationState&)>;

/// Iterates psi_step from Z^(0) = forcing until consecutive iterates are
/// within config.tol in the sup metric or a stop condition fires. Because
/// a coarse freeze threshold cannot see sub-threshold moves, agreement of
/// consecutive iterates only counts once the freeze was exact (zero gap)
/// or 3 * TV(driver) * 2^-n has dropped below tol. The non-convergent
/// branch returns the last iterate with an explicit flag, never a silent
/// zero path.
SolveResult solve(const CadlagPath& forcing, const CadlagPath& covariate,
                  const CadlagPath& driver, const Coefficient& coef, const SolverConfig& config,
                  const IterationObserver& observer = {});

/// Independent event-driven reference: exact jump updates plus `substeps`
/// classical fourth-order steps for the drift between events. Requires a
/// scalar Markov coefficient, else throws OracleUnsupportedError.
CadlagPath reference_integrate(const Coefficient& coef, const CadlagPath& forcing,
                               const CadlagPath& covariate, const CadlagPath& driver,
                               int substeps);

} // namespace skflow
