#pragma once

#include "dualfl/common.hpp"

namespace dualfl {

/// Momentum recursion state shared by the federated engine and the dual
/// solver. `t` starts at 1 and, for rho > 0, increases monotonically toward
/// the fixed point 1/sqrt(rho); rho = 0 gives the classical accelerated
/// sequence.
struct MomentumState {
  double t = 1.0;
  double rho = 0.0;
  long n = 0;  // completed advances
};

struct MomentumStep {
  MomentumState next;
  double beta = 0.0;
};

/// Validates rho and returns a fresh state (t = 1, n = 0).
MomentumState make_momentum(double rho);

/// One step of the recursion. Returns the advanced state together with the
/// overrelaxation weight beta for the step just taken; beta is 0 on the
/// first advance and stays in [0, 1).
MomentumStep advance(const MomentumState& state);

}  // namespace dualfl
