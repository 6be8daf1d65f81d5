#pragma once

#include "skflow/levy.hpp"
#include "skflow/solver.hpp"

namespace skflow {

/// Driver-shift probe: the driver gains v * 1_{[r, T]}. The forcing and
/// covariate shifts default to zero paths (deterministic initial data);
/// callers whose forcing depends on the driver must supply its shift.
struct MalliavinProbe {
    double r = 0.0;
    double v = 0.0;
    std::shared_ptr<const CadlagPath> shift_forcing;
    std::shared_ptr<const CadlagPath> shift_covariate;
};

/// Either solve of the difference quotient failed to converge; carries
/// both solver results for inspection.
class DerivativeError : public std::runtime_error {
public:
    DerivativeError(const std::string& msg, SolveResult base_result, SolveResult shifted_result)
        : std::runtime_error(msg), base(std::move(base_result)),
          shifted(std::move(shifted_result)) {}
    const SolveResult base;
    const SolveResult shifted;
};

/// Difference of the universal functional at the shifted and base inputs:
/// two solves and a pointwise difference. Scalar drivers only; the result
/// vanishes identically on [0, r) when the forcing/covariate shifts are
/// zero.
CadlagPath derivative(const Coefficient& coef, const CadlagPath& forcing,
                      const CadlagPath& covariate, const CadlagPath& driver,
                      const MalliavinProbe& probe, const SolverConfig& config);

/// Closed form for dX = g(X_{s-}) dY under a driver shift at (r, v):
/// (int_r^t (g(Xs_{s-}) - g(X_{s-})) dY_s + g(X_{r-}) v) * 1_{t in [r, T]},
/// evaluated by exact path algebra from the base solution X and the
/// shifted solution X_shifted.
CadlagPath closed_form_example(const std::function<double(double)>& g, const CadlagPath& X,
                               const CadlagPath& X_shifted, const CadlagPath& driver, double r,
                               double v);

struct IntegrabilityEstimate {
    double value = 0.0;
    double standard_error = 0.0;
    int paths = 0;
};

/// Monte Carlo over driver paths combined with quadrature over the probe
/// grid [0,T] x jump support: estimates E int int |D_{r,v} X_T|^2 nu(dv) dr
/// with a standard error. Reports square-integrability evidence at the
/// configured scale, never a proof.
IntegrabilityEstimate integrability_estimate(const Coefficient& coef, double initial_value,
                                             const LevySpec& spec, double horizon, int r_points,
                                             int v_points, int n_paths, std::uint64_t seed,
                                             const SolverConfig& config);

} // namespace skflow
