#pragma once

#include <optional>
#include <vector>

#include "dualfl/local_solver.hpp"
#include "dualfl/schedule.hpp"

namespace dualfl {

struct ServerState {
  ParameterPoint model;       // current server parameter
  ParameterPoint prev_model;  // previous round's server parameter
  MomentumState momentum;
  long round = 0;
  double last_beta = 0.0;
};

struct ClientState {
  ParameterPoint control;       // control variate zeta_j
  ParameterPoint prev_control;  // previous round's control variate
  ParameterPoint local_model;   // latest local iterate
  LocalSolveReport last_report;
  ParameterPoint conjugate_warm;  // carried across rounds for gap evaluations
};

struct RoundRecord {
  long round = 0;  // index of the produced server iterate
  double beta = 0.0;
  double zeta_sum_norm = 0.0;
  double max_control_norm = 0.0;
  double max_gap = std::numeric_limits<double>::quiet_NaN();
  long total_local_iters = 0;
  bool any_unmet = false;
  bool any_underflow = false;
  // Reference-relative metrics; NaN when no reference solution is supplied.
  double sq_param_err = std::numeric_limits<double>::quiet_NaN();
  double energy_err_rel = std::numeric_limits<double>::quiet_NaN();
  double grad_norm = std::numeric_limits<double>::quiet_NaN();
};

/// Auxiliary dual sequences implied by the primal iterates, exported for
/// cross-checking against the dual-side solver.
struct DualExport {
  std::vector<ParameterPoint> duals;    // xi_j
  std::vector<ParameterPoint> relaxed;  // eta_j
};

struct ReferencePoint {
  ParameterPoint model;
  double energy = 0.0;
  // When the reference energy is (numerically) zero the relative energy
  // error column degrades to an absolute error; traces flag this.
  bool absolute_energy_error = false;
};

struct EngineConfig {
  double nu = 1.0;
  double rho = 0.0;
  StopCriterion stop;
  int threads = 1;
  bool abort_on_unmet = false;  // default: proceed with a warning flag
  bool record_duals = false;
};

struct RunControls {
  long rounds = 100;
  std::optional<double> target_sq_err;
  std::optional<double> target_grad_norm;
  std::optional<double> target_rel_energy;
};

struct RunResult {
  std::vector<RoundRecord> records;
  ServerState server;
  std::vector<ClientState> clients;
  std::vector<DualExport> dual_history;  // filled when record_duals is set
  bool target_met = false;
  bool any_unmet = false;
  bool any_underflow = false;
};

/// Zero-initialized server and client states (t = 1, round 0).
std::pair<ServerState, std::vector<ClientState>> init_states(int clients,
                                                             Eigen::Index dim);

/// Rejects configurations the convergence theory does not cover:
/// nu outside (0, mu], rho outside [0, min(1 - 1e-12, nu/L)], rho > 0 for
/// families without a smoothness constant, and scheduled-gap stopping with
/// numeric conjugates at nu >= mu.
void validate_config(const std::vector<CompositeOracle>& oracles,
                     const EngineConfig& config);

/// One communication round: N local solves (possibly concurrent), averaging
/// in ascending client order, control-variate update with the momentum
/// weight for this round. States advance in place.
/// `metrics_family`, when given, is the family the energy/gradient columns
/// are reported against (regularized runs report the unregularized problem).
RoundRecord run_round(ServerState& server, std::vector<ClientState>& clients,
                      const std::vector<CompositeOracle>& oracles,
                      const EngineConfig& config,
                      const ReferencePoint* reference = nullptr,
                      const std::vector<CompositeOracle>* metrics_family = nullptr);

/// Dual variables of the latest completed round; zero exports before round 0.
DualExport extract_duals(const ServerState& server,
                         const std::vector<ClientState>& clients, double nu);

/// Full run: validates, executes up to controls.rounds rounds, stops early
/// when a requested target metric is reached.
RunResult run(const std::vector<CompositeOracle>& oracles, const EngineConfig& config,
              const RunControls& controls, const ReferencePoint* reference = nullptr,
              const std::vector<CompositeOracle>* metrics_family = nullptr);

/// Mean cost at theta across clients.
double family_energy(const std::vector<CompositeOracle>& oracles,
                     const ParameterPoint& theta);

/// Norm of the prox-gradient mapping of the mean cost at theta; equals the
/// plain gradient norm for smooth families.
double family_residual_norm(const std::vector<CompositeOracle>& oracles,
                            const ParameterPoint& theta);

}  // namespace dualfl
