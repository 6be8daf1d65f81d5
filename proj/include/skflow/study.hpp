#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skflow/solver.hpp"

namespace skflow {

struct CriterionResult {
    std::string name;
    bool pass = false;
    double value = 0.0;     // measured quantity
    double threshold = 0.0; // required bound
    std::string detail;
    double seconds = 0.0;
};

/// Exact Skorohod metric vs the independent warp-search reference on seeded
/// random step-path pairs, plus the metric axioms and the sup-distance
/// domination, all on the same pair set.
CriterionResult metric_oracle_agreement(std::uint64_t seed, int pairs, std::string* csv);

/// Adaptive-freeze convergence on the linear SDE dX = X_{s-} dY against the
/// closed-form stochastic exponential, over seeded drivers. Returns the
/// convergence criterion and the freeze-gap invariant as separate results.
std::vector<CriterionResult> convergence_vs_n(std::uint64_t seed, int seeds, SolverConfig solver,
                                              std::string* csv);

/// Statistical second-moment estimates for the stochastic integral of a
/// fixed bounded step integrand against seeded drivers: the theta bound and
/// the 4 E[sup |P|^2 V^2] bound, with Monte Carlo slack 1.05.
CriterionResult theta_inequality(std::uint64_t seed, int paths, std::string* csv);

/// Two-representation identity for the driver-shift derivative on the
/// linear SDE: difference of two solves vs the closed-form expression
/// evaluated from the same solutions.
CriterionResult malliavin_identity(std::uint64_t seed, int probes, SolverConfig solver,
                                   std::string* csv);

/// Solve on stopped inputs equals the stopped full solve, and identical
/// inputs produce bit-identical outputs.
CriterionResult adaptedness_universality(std::uint64_t seed, int problems, SolverConfig solver,
                                         std::string* csv);

/// d^S(eta^t, eta^{t_k}) <= sup_{s in [t, t_k]} ||eta(t) - eta(s)||, exactly,
/// on random step paths.
CriterionResult stopped_path_bound(std::uint64_t seed, int paths, std::string* csv);

/// Jump-count moments of the simulated compound Poisson driver, exact
/// decomposition reconstruction, and monotonicity of the dominating
/// process, over many seeds.
std::vector<CriterionResult> driver_statistics(std::uint64_t seed, int paths, std::string* csv);

struct ExperimentConfig {
    std::string study; // convergence-vs-n | metric-oracle-agreement |
                       // theta-inequality | malliavin-identity
    std::uint64_t seed = 1;
    int samples = -1; // study default when negative, no-op when zero
    std::string out_dir;
    SolverConfig solver;
};

struct StudyReport {
    std::string study;
    bool no_op = false;
    std::vector<CriterionResult> criteria;
    std::string csv;
    bool pass() const {
        for (const auto& c : criteria)
            if (!c.pass)
                return false;
        return true;
    }
};

StudyReport run_study(const ExperimentConfig& config);

/// Writes <study>.csv and summary.json under out_dir (created if needed).
void write_report(const StudyReport& report, const std::string& out_dir);

/// Fixed-width decimal with 12 significant digits (the CLI number format).
std::string format_sig12(double x);

} // namespace skflow
