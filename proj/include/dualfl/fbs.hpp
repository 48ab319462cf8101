#pragma once

#include <functional>
#include <limits>

#include "dualfl/common.hpp"

namespace dualfl {

/// Composite objective F(x) = smooth(x) + simple(x) for the accelerated
/// proximal-gradient core. `simple` and `prox` may be left empty for purely
/// smooth problems (simple == 0, prox == identity).
struct FbsProblem {
  std::function<double(const ParameterPoint&, ParameterPoint&)> smooth;  // value, fills grad
  std::function<double(const ParameterPoint&)> simple;
  std::function<ParameterPoint(const ParameterPoint&, double)> prox;  // prox of step*simple
};

struct FbsOptions {
  long max_iters = 100000;
  double initial_step = 1.0;
  bool accelerate = true;
  double min_step = 1e-30;
};

/// View of one accepted iterate handed to the stop predicate.
struct FbsIterate {
  long k = 0;  // iterations completed
  const ParameterPoint& x;
  double objective = 0.0;
  double prev_objective = 0.0;
  double step = 0.0;
  bool restarted = false;
  // Norm of a subgradient of F at x; NaN unless requested (costs one extra
  // gradient evaluation per iteration).
  double residual_norm = std::numeric_limits<double>::quiet_NaN();
};

struct FbsResult {
  ParameterPoint x;
  double objective = 0.0;
  long iters = 0;
  double residual_norm = std::numeric_limits<double>::quiet_NaN();
  bool stopped = false;  // stop predicate fired before max_iters ran out
};

/// Accelerated forward-backward splitting with backtracking line search
/// (step accepted when the composite descent inequality holds, trial step
/// doubled from the previous accepted one) and function-value adaptive
/// restart. The stop predicate runs after every accepted iterate.
FbsResult accelerated_fbs(const FbsProblem& problem, ParameterPoint x0,
                          const FbsOptions& options,
                          const std::function<bool(const FbsIterate&)>& stop,
                          bool want_residual = false);

}  // namespace dualfl
