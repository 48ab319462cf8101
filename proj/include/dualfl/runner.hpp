#pragma once

#include "dualfl/config.hpp"
#include "dualfl/trace.hpp"

namespace dualfl {

/// Regularization weight chosen from a target gradient accuracy: one
/// reference solve at alpha0 estimates the solution-norm bound R0, then
/// alpha = epsilon / (2 R0), with the matching run hyperparameters
/// nu = alpha and rho = alpha / (L + alpha).
struct AlphaChoice {
  double alpha = 0.0;
  double nu = 0.0;
  double rho = 0.0;
  double r0_hat = 0.0;
};

AlphaChoice choose_alpha(const std::vector<CompositeOracle>& oracles, double epsilon,
                         double alpha0, const ReferenceOptions& options = {});

/// nu/rho resolved against the family constants, with the documented
/// substitution nu = mu (1 - 1e-6) when gap certification needs a numeric
/// conjugate at nu = mu.
struct ResolvedHyper {
  double nu = 0.0;
  double rho = 0.0;
  bool substituted_nu = false;
  FamilyConstants constants;
};

ResolvedHyper resolve_hyperparameters(const std::vector<CompositeOracle>& oracles,
                                      const RunConfig& config);

struct DualityReport {
  double max_deviation = 0.0;
  long rounds = 0;
};

/// Runs the federated engine and the dual solver side by side on the same
/// family and reports the largest per-client deviation between the engine's
/// exported dual sequence and the dual solver's iterates.
DualityReport run_duality_check(const std::vector<CompositeOracle>& oracles, double nu,
                                double rho, long rounds, bool exact,
                                const DeltaSchedule& delta,
                                const StopCriterion& engine_stop, int threads);

struct RunOutcome {
  int exit_code = 0;  // 0 ok, 1 convergence target missed, 2 config/data error
  std::string message;
  std::vector<std::pair<std::string, RunTrace>> traces;  // output suffix -> trace
};

/// Dispatches one configured run; writes nothing (the CLI owns file output).
RunOutcome execute(const RunConfig& config);

}  // namespace dualfl
