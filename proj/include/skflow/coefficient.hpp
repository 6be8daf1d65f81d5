#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "skflow/path.hpp"

namespace skflow {

/// Operator norm on d x m matrices (largest singular value); the matrix
/// norm used for coefficient bounds and freeze thresholds throughout.
double op_norm(const Eigen::MatrixXd& a);

/// Coefficient functional f(t, zeta, gamma) -> d x m matrix together with
/// its bound function C(t, zeta). t -> f must be cadlag for fixed paths,
/// f may only read the paths up to time t (nonanticipativity), and C must
/// dominate growth and Lipschitz constants in the gamma argument; these
/// are semantic conditions checked by randomized testing, not by proof.
struct Coefficient {
    Eigen::Index d = 1;
    Eigen::Index m = 1;
    Eigen::Index r = 1;
    std::function<Eigen::MatrixXd(double, const CadlagPath&, const CadlagPath&)> eval_f;
    std::function<double(double, const CadlagPath&)> bound_C;

    /// Set when f(t, zeta, gamma) = g(gamma(t)) with scalar state and
    /// driver; enables the exact coefficient-path surrogate and the
    /// event-driven reference integrator.
    std::function<double(double)> markov_scalar;

    /// Known jump times of t -> f(t, ., .) that do not come from the path
    /// arguments (for exact surrogate construction).
    std::vector<double> time_events;

    std::string name = "custom";
};

/// g(t, ., .) = f(t-, ., .): left limit probed along t - 2^-k, k up to 40,
/// accepted once the last refinements agree within 1e-9. g(0) = f(0).
/// Throws NotCadlagError when the probes fail to stabilize.
Eigen::MatrixXd eval_g(const Coefficient& coef, double t, const CadlagPath& zeta,
                       const CadlagPath& gamma);

/// Caglad approximant f(max(0, (ceil(nt) - 1)/n), zeta, gamma); equals
/// f(0, ...) at t = 0. Looks only backward in time.
Eigen::MatrixXd caglad_approx(const Coefficient& coef, int n, double t, const CadlagPath& zeta,
                              const CadlagPath& gamma);

struct AssumptionViolation {
    std::string kind; // "nonanticipativity" | "growth" | "lipschitz" | "cadlag"
    double t;
    std::string detail;
};

struct AssumptionReport {
    int samples = 0;
    std::vector<AssumptionViolation> violations;
    bool passed() const { return violations.empty(); }
};

/// Randomized check of nonanticipativity, the growth and Lipschitz bounds,
/// and left-limit stabilization on random (t, zeta, gamma) triples.
/// Violations are report content, not errors.
AssumptionReport check_assumptions(const Coefficient& coef, int samples, std::uint64_t seed);

/// Scalar Markov coefficient f(t, zeta, gamma) = g(gamma(t)) with constant
/// bound function C = lipschitz_plus_growth.
Coefficient markov_coefficient(std::function<double(double)> g, double lipschitz_plus_growth,
                               std::string name = "custom");

/// Built-in registry addressable from the CLI: `linear`, `affine(a,b)`,
/// `sin`, `indicator(t0)`, `anticipating-bad`.
Coefficient make_coefficient(const std::string& spec);

} // namespace skflow
