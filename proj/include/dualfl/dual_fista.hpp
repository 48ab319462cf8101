#pragma once

#include <vector>

#include "dualfl/local_solver.hpp"
#include "dualfl/schedule.hpp"

namespace dualfl {

/// A point of the dual problem: one block per client.
struct DualPoint {
  std::vector<ParameterPoint> components;

  static DualPoint zero(int clients, Eigen::Index dim) {
    DualPoint p;
    p.components.assign(static_cast<std::size_t>(clients), ParameterPoint::Zero(dim));
    return p;
  }
};

/// Per-iteration inexactness budget for the dual solver.
/// polynomial: delta_n = 1 / (nu (n+1)^(4+gamma)), summable-sqrt regime;
/// geometric:  delta_n = ratio^n with ratio in [0, 1 - sqrt(rho)).
/// Both match the engine's scheduled gap bounds up to the 1/N block split.
struct DeltaSchedule {
  enum class Kind { polynomial, geometric };
  Kind kind = Kind::polynomial;
  double gamma = 1.0;
  double ratio = 0.0;

  static DeltaSchedule polynomial(double gamma = 1.0) {
    return DeltaSchedule{Kind::polynomial, gamma, 0.0};
  }
  static DeltaSchedule geometric(double ratio) {
    return DeltaSchedule{Kind::geometric, 0.0, ratio};
  }
  /// The default geometric ratio (1 - sqrt(rho)) / (1 + gamma).
  static DeltaSchedule geometric_default(double rho, double gamma = 0.1);

  void validate(double rho) const;
  double value(long iteration, double nu) const;
};

/// Dual objective: sum_j g_j*(xi_j) + ||sum_j xi_j||^2 / (2 N nu).
/// May return +inf where a conjugate is an indicator (affine client costs).
double dual_energy(const DualPoint& xi, const std::vector<CompositeOracle>& oracles,
                   double nu);

/// theta = -(1/(N nu)) sum_j xi_j.
ParameterPoint recover_primal(const DualPoint& xi, double nu);

/// Solves one client's block of the prox step,
///   minimize g_j*(xi_j) + (1/2nu) ||xi_j - eta_j + mean(eta)||^2,
/// to sub-optimality <= tolerance, through the equivalent primal local
/// problem (Moreau decomposition). Returns the block minimizer.
ParameterPoint prox_subproblem(int client, const DualPoint& eta,
                               const std::vector<CompositeOracle>& oracles, double nu,
                               double tolerance);

struct FistaConfig {
  double nu = 1.0;
  double rho = 0.0;
  DeltaSchedule delta;
  bool exact_subproblems = false;  // direct block solves (quadratic families)
  long max_inner_iters = 200000;
  int threads = 1;
  bool record_energy = false;  // dual energy per iterate (extra conjugate pass)
};

struct FistaIterationRecord {
  long iteration = 0;  // 1-based, indexes the produced dual iterate
  double beta = 0.0;
  double delta = 0.0;        // budget for this iteration
  double certificate = 0.0;  // sum of certified per-client gaps
  bool certified = false;    // certificate <= delta
  long total_inner_iters = 0;
  double dual_energy = std::numeric_limits<double>::quiet_NaN();
};

struct FistaResult {
  std::vector<DualPoint> dual_iterates;        // xi^(n), n = 1..rounds
  std::vector<ParameterPoint> primal_iterates; // recovered primal per iteration
  std::vector<FistaIterationRecord> records;
};

/// Inexact accelerated forward-backward iteration on the dual problem, with
/// the prox step split into independent per-client blocks.
FistaResult fista_run(const std::vector<CompositeOracle>& oracles,
                      const FistaConfig& config, long rounds);

}  // namespace dualfl
