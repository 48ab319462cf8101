#pragma once

#include "dualfl/engine.hpp"

namespace dualfl {

struct ReferenceOptions {
  double grad_tol = 1e-10;
  long max_newton_iters = 200;
  long max_fbs_iters = 2000000;
  Eigen::Index hessian_budget = 400;  // damped Newton only below this dimension
};

/// High-accuracy solution of the pooled problem, by route:
/// quadratic families -> one direct linear solve; smooth families with a
/// Hessian within budget -> damped Newton with backtracking; everything
/// else -> accelerated proximal gradient driven to the residual tolerance.
/// Throws NumericalError when the tolerance cannot be certified.
ReferencePoint reference_solution(const std::vector<CompositeOracle>& oracles,
                                  const ReferenceOptions& options = {});

}  // namespace dualfl
