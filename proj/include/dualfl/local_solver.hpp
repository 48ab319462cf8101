#pragma once

#include <limits>

#include "dualfl/oracle.hpp"

namespace dualfl {

/// One client-round subproblem: minimize f(theta) - nu <zeta, theta>.
struct LocalProblem {
  const CompositeOracle& oracle;
  ParameterPoint zeta;  // control variate
  double nu = 1.0;

  double energy(const ParameterPoint& theta) const {
    return oracle.value(theta) - nu * zeta.dot(theta);
  }
};

enum class GapRegime { nonsmooth, smooth };

/// Per-client duality-gap bound for a given communication round.
/// nonsmooth: 1 / (N nu (n+1)^(4+gamma));  smooth: (1/N) ((1-sqrt(rho))/(1+gamma))^n.
double gap_threshold(GapRegime regime, long round, int clients, double nu, double rho,
                     double gamma);

enum class StopKind {
  gap_nonsmooth,  // scheduled gap bound, nonsmooth regime
  gap_smooth,     // scheduled gap bound, smooth regime
  gap_fixed,      // gap <= gap_delta
  rel_energy,     // relative energy decrease <= rel_tol
  grad_norm,      // subgradient residual <= grad_tol
  exact,          // direct solve (quadratic families only)
};

struct StopCriterion {
  StopKind kind = StopKind::rel_energy;
  double gamma = 1.0;      // schedule exponent for the gap_* kinds
  double gap_delta = 0.0;  // gap_fixed bound
  double rel_tol = 1e-12;
  double grad_tol = 1e-10;
  long max_iters = 200000;
};

/// Round context the engine combines with the criterion: the scheduled gap
/// kinds depend on the round index, the client count, and rho.
struct LocalContext {
  long round = 0;
  int clients = 1;
  double rho = 0.0;
};

struct LocalSolveReport {
  ParameterPoint theta;
  long iters = 0;
  double gap = std::numeric_limits<double>::quiet_NaN();  // last certified gap
  bool criterion_met = false;
  double energy = 0.0;
  // The scheduled gap bound underflowed below numerical resolution; the
  // solver stopped at machine-precision stationarity instead.
  bool threshold_underflow = false;
};

/// Certified duality gap of the local problem at theta:
///   gap = E(theta) + g*(xi) + ||xi - nu zeta||^2 / (2 nu),  xi = nu (zeta - theta).
/// In numeric conjugate mode the result is an upper estimate including the
/// inner-solve slack. `conjugate_warm` (optional, in/out) seeds and receives
/// the inner maximizer across repeated evaluations.
double compute_gap(const LocalProblem& problem, const ParameterPoint& theta,
                   ParameterPoint* conjugate_warm = nullptr);

/// Inexact local solve by accelerated proximal-gradient with backtracking and
/// function-value restart. Gap-based criteria are certified at exit; if
/// max_iters runs out first, the report comes back with criterion_met false
/// and the caller decides whether to proceed.
LocalSolveReport solve_local(const LocalProblem& problem,
                             const ParameterPoint& warm_start,
                             const StopCriterion& stop,
                             const LocalContext& context = {},
                             ParameterPoint* conjugate_warm = nullptr);

}  // namespace dualfl
