#include "dualfl/engine.hpp"

#include <cmath>

#include "dualfl/parallel.hpp"

namespace dualfl {

namespace {

void check_family(const std::vector<CompositeOracle>& oracles) {
  if (oracles.empty()) throw ConfigError("engine needs at least one client");
  const Eigen::Index dim = oracles.front().dim();
  for (const auto& o : oracles) {
    if (o.dim() != dim) throw ConfigError("clients disagree on parameter dimension");
  }
}

double energy_error(double energy, const ReferencePoint& ref) {
  const double diff = energy - ref.energy;
  return ref.absolute_energy_error ? diff : diff / std::abs(ref.energy);
}

}  // namespace

std::pair<ServerState, std::vector<ClientState>> init_states(int clients,
                                                             Eigen::Index dim) {
  if (clients < 1 || dim < 1) throw ConfigError("init needs clients >= 1, dim >= 1");
  ServerState server;
  server.model = ParameterPoint::Zero(dim);
  server.prev_model = ParameterPoint::Zero(dim);
  server.momentum = make_momentum(0.0);
  std::vector<ClientState> cs(static_cast<std::size_t>(clients));
  for (auto& c : cs) {
    c.control = ParameterPoint::Zero(dim);
    c.prev_control = ParameterPoint::Zero(dim);
    c.local_model = ParameterPoint::Zero(dim);
  }
  return {std::move(server), std::move(cs)};
}

void validate_config(const std::vector<CompositeOracle>& oracles,
                     const EngineConfig& config) {
  check_family(oracles);
  const FamilyConstants fc = family_constants(oracles);
  if (!(config.nu > 0.0 && config.nu <= fc.mu * (1.0 + 1e-12))) {
    throw ConfigError("nu must lie in (0, mu]; mu = " + std::to_string(fc.mu) +
                      ", nu = " + std::to_string(config.nu));
  }
  double rho_max = 1.0 - 1e-12;
  if (fc.smoothness) {
    rho_max = std::min(rho_max, config.nu / *fc.smoothness * (1.0 + 1e-12));
  } else if (config.rho != 0.0) {
    throw ConfigError("rho must be 0 when no smoothness constant is available");
  }
  if (!(config.rho >= 0.0 && config.rho <= rho_max)) {
    throw ConfigError("rho must lie in [0, min(1 - 1e-12, nu/L)]; got " +
                      std::to_string(config.rho) + ", bound " +
                      std::to_string(rho_max));
  }
  const bool gap_based = config.stop.kind == StopKind::gap_nonsmooth ||
                         config.stop.kind == StopKind::gap_smooth ||
                         config.stop.kind == StopKind::gap_fixed;
  for (const auto& o : oracles) {
    if (config.stop.kind == StopKind::exact && !o.has_exact_local_solver()) {
      throw ConfigError("exact local solves need SPD quadratic clients");
    }
    const bool needs_conjugate = gap_based || config.record_duals;
    if (needs_conjugate && o.conjugate_mode() == ConjugateMode::numeric &&
        !(config.nu < o.mu())) {
      throw ConfigError(
          "gap certification with numeric conjugates needs nu < mu strictly; "
          "substitute nu = mu*(1 - 1e-6)");
    }
  }
}

RoundRecord run_round(ServerState& server, std::vector<ClientState>& clients,
                      const std::vector<CompositeOracle>& oracles,
                      const EngineConfig& config, const ReferencePoint* reference,
                      const std::vector<CompositeOracle>* metrics_family) {
  const int n_clients = static_cast<int>(clients.size());
  if (static_cast<int>(oracles.size()) != n_clients) {
    throw ConfigError("oracle/client counts disagree");
  }
  const long n = server.round;
  const LocalContext context{n, n_clients, config.rho};

  std::vector<LocalSolveReport> reports(clients.size());
  parallel_for(n_clients, config.threads, [&](int j) {
    const LocalProblem problem{oracles[static_cast<std::size_t>(j)],
                               clients[static_cast<std::size_t>(j)].control,
                               config.nu};
    reports[static_cast<std::size_t>(j)] =
        solve_local(problem, clients[static_cast<std::size_t>(j)].local_model,
                    config.stop, context,
                    &clients[static_cast<std::size_t>(j)].conjugate_warm);
  });

  RoundRecord rec;
  for (const auto& r : reports) {
    rec.total_local_iters += r.iters;
    rec.any_unmet = rec.any_unmet || !r.criterion_met;
    rec.any_underflow = rec.any_underflow || r.threshold_underflow;
    if (std::isfinite(r.gap)) {
      rec.max_gap = std::isfinite(rec.max_gap) ? std::max(rec.max_gap, r.gap) : r.gap;
    }
  }
  if (rec.any_unmet && config.abort_on_unmet) {
    throw NumericalError("local solver missed its criterion at round " +
                         std::to_string(n));
  }

  // fixed-order aggregation, then one division
  ParameterPoint sum = ParameterPoint::Zero(server.model.size());
  for (const auto& r : reports) sum += r.theta;
  ParameterPoint next_model = sum / static_cast<double>(n_clients);

  const MomentumStep ms = advance(server.momentum);
  const double beta = ms.beta;

  ParameterPoint control_sum = ParameterPoint::Zero(server.model.size());
  for (std::size_t j = 0; j < clients.size(); ++j) {
    ClientState& c = clients[j];
    ParameterPoint next_control =
        (1.0 + beta) * (c.control + next_model - reports[j].theta) -
        beta * (c.prev_control + server.model - c.local_model);
    c.prev_control = std::move(c.control);
    c.control = std::move(next_control);
    c.local_model = reports[j].theta;
    c.last_report = std::move(reports[j]);
    control_sum += c.control;
    rec.max_control_norm = std::max(rec.max_control_norm, c.control.norm());
  }
  rec.zeta_sum_norm = control_sum.norm();

  server.prev_model = std::move(server.model);
  server.model = std::move(next_model);
  server.momentum = ms.next;
  server.last_beta = beta;
  server.round = n + 1;
  rec.round = server.round;
  rec.beta = beta;

  const std::vector<CompositeOracle>& metrics = metrics_family ? *metrics_family : oracles;
  rec.grad_norm = family_residual_norm(metrics, server.model);
  if (reference) {
    rec.sq_param_err = (server.model - reference->model).squaredNorm();
    rec.energy_err_rel = energy_error(family_energy(metrics, server.model), *reference);
  }
  return rec;
}

DualExport extract_duals(const ServerState& server,
                         const std::vector<ClientState>& clients, double nu) {
  DualExport out;
  out.duals.reserve(clients.size());
  out.relaxed.reserve(clients.size());
  const double beta = server.last_beta;
  for (const auto& c : clients) {
    out.duals.push_back(nu * (c.prev_control - c.local_model));
    out.relaxed.push_back(
        nu * (c.control - (1.0 + beta) * server.model + beta * server.prev_model));
  }
  return out;
}

double family_energy(const std::vector<CompositeOracle>& oracles,
                     const ParameterPoint& theta) {
  double sum = 0.0;
  for (const auto& o : oracles) sum += o.value(theta);
  return sum / static_cast<double>(oracles.size());
}

double family_residual_norm(const std::vector<CompositeOracle>& oracles,
                            const ParameterPoint& theta) {
  ParameterPoint mean_grad = ParameterPoint::Zero(theta.size());
  for (const auto& o : oracles) mean_grad += o.smooth_value_grad(theta).second;
  mean_grad /= static_cast<double>(oracles.size());
  if (!oracles.front().has_nonsmooth()) return mean_grad.norm();
  // prox-gradient mapping with unit step on the shared simple part
  const double step = 1.0;
  ParameterPoint mapped =
      (theta - oracles.front().prox_nonsmooth(theta - step * mean_grad, step)) / step;
  return mapped.norm();
}

RunResult run(const std::vector<CompositeOracle>& oracles, const EngineConfig& config,
              const RunControls& controls, const ReferencePoint* reference,
              const std::vector<CompositeOracle>* metrics_family) {
  validate_config(oracles, config);
  if (controls.rounds < 0) throw ConfigError("round count must be nonnegative");
  if ((controls.target_sq_err || controls.target_rel_energy) && !reference) {
    throw ConfigError("error targets need a reference solution");
  }

  RunResult result;
  auto [server, clients] =
      init_states(static_cast<int>(oracles.size()), oracles.front().dim());
  server.momentum = make_momentum(config.rho);
  const EngineConfig& cfg = config;

  result.records.reserve(static_cast<std::size_t>(controls.rounds));
  for (long r = 0; r < controls.rounds; ++r) {
    RoundRecord rec = run_round(server, clients, oracles, cfg, reference, metrics_family);
    result.any_unmet = result.any_unmet || rec.any_unmet;
    result.any_underflow = result.any_underflow || rec.any_underflow;
    if (cfg.record_duals) {
      result.dual_history.push_back(extract_duals(server, clients, cfg.nu));
    }
    result.records.push_back(rec);
    bool met = false;
    if (controls.target_sq_err && rec.sq_param_err <= *controls.target_sq_err) met = true;
    if (controls.target_grad_norm && rec.grad_norm <= *controls.target_grad_norm) met = true;
    if (controls.target_rel_energy &&
        std::abs(rec.energy_err_rel) <= *controls.target_rel_energy) {
      met = true;
    }
    if (met) {
      result.target_met = true;
      break;
    }
  }
  result.server = std::move(server);
  result.clients = std::move(clients);
  return result;
}

}  // namespace dualfl
