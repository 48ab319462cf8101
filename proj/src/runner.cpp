#include "dualfl/runner.hpp"

#include <cmath>
#include <sstream>

namespace dualfl {

namespace {

bool gap_based(StopKind kind) {
  return kind == StopKind::gap_nonsmooth || kind == StopKind::gap_smooth ||
         kind == StopKind::gap_fixed;
}

bool needs_conjugates(const RunConfig& cfg) {
  if (cfg.mode == RunMode::dual_fista || cfg.mode == RunMode::verify_duality) return true;
  return gap_based(cfg.stop.kind) || cfg.stop.kind == StopKind::exact;
}

const char* mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::dualfl: return "dualfl";
    case RunMode::dual_fista: return "dual_fista";
    case RunMode::baseline_gd: return "baseline_gd";
    case RunMode::baseline_fedavg: return "baseline_fedavg";
    case RunMode::verify_duality: return "verify_duality";
    case RunMode::sweep_rho: return "sweep_rho";
    case RunMode::regularized: return "regularized";
  }
  return "?";
}

const char* kind_name(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::quadratic: return "quadratic";
    case ProblemKind::least_squares: return "least_squares";
    case ProblemKind::elastic_net: return "elastic_net";
    case ProblemKind::logistic: return "logistic";
  }
  return "?";
}

const char* stop_name(StopKind kind) {
  switch (kind) {
    case StopKind::gap_nonsmooth: return "gap_nonsmooth";
    case StopKind::gap_smooth: return "gap_smooth";
    case StopKind::gap_fixed: return "gap_fixed";
    case StopKind::rel_energy: return "rel_energy";
    case StopKind::grad_norm: return "grad_norm";
    case StopKind::exact: return "exact";
  }
  return "?";
}

std::vector<std::string> make_header(const RunConfig& cfg, const ResolvedHyper& hyper,
                                     const std::string& reference_note,
                                     const ReferencePoint* ref) {
  std::vector<std::string> h;
  h.push_back(std::string("mode = ") + mode_name(cfg.mode));
  h.push_back(std::string("problem.kind = ") + kind_name(cfg.problem.kind));
  h.push_back("problem.clients = " + std::to_string(cfg.problem.clients));
  h.push_back("run.rounds = " + std::to_string(cfg.rounds));
  h.push_back("run.seed = " + std::to_string(cfg.seed));
  h.push_back("constants.mu = " + format_real(hyper.constants.mu));
  if (hyper.constants.smoothness) {
    h.push_back("constants.L = " + format_real(*hyper.constants.smoothness));
    h.push_back("constants.kappa = " + format_real(hyper.constants.kappa()));
  } else {
    h.push_back("constants.L = unknown (nonsmooth family)");
  }
  h.push_back("dualfl.nu = " + format_real(hyper.nu));
  if (hyper.substituted_nu) {
    h.push_back("substitution: nu = mu*(1 - 1e-6), numeric conjugates need nu < mu");
  }
  h.push_back("dualfl.rho = " + format_real(hyper.rho));
  h.push_back(std::string("local.stop = ") + stop_name(cfg.stop.kind));
  h.push_back("local.max_iters = " + std::to_string(cfg.stop.max_iters));
  h.push_back("reference = " + reference_note);
  if (ref && ref->absolute_energy_error) {
    h.push_back("E_err_rel column holds absolute errors (reference energy is zero)");
  }
  return h;
}

void append_run_flags(RunTrace& trace, bool any_unmet, bool any_underflow) {
  if (any_unmet) {
    trace.header.push_back(
        "warning: some rounds missed the local stop criterion (proceeded)");
  }
  if (any_underflow) {
    trace.header.push_back(
        "flag: gap threshold underflow, local solves stopped at machine stationarity");
  }
}

struct PreparedRun {
  std::vector<CompositeOracle> oracles;
  ResolvedHyper hyper;
  std::optional<ReferencePoint> reference;
  std::string reference_note;
};

PreparedRun prepare(const RunConfig& cfg) {
  PreparedRun p;
  p.oracles = make_family(cfg.problem);
  p.hyper = resolve_hyperparameters(p.oracles, cfg);
  p.reference_note = "disabled";
  if (cfg.reference_enabled) {
    try {
      p.reference = reference_solution(p.oracles, cfg.reference);
      p.reference_note = "computed";
    } catch (const NumericalError& e) {
      p.reference_note = std::string("unavailable (") + e.what() + ")";
    }
  }
  return p;
}

int target_exit_code(const RunConfig& cfg, bool met) {
  const bool has_target =
      cfg.target_sq_err || cfg.target_grad_norm || cfg.target_rel_energy;
  return has_target && !met ? 1 : 0;
}

bool row_meets_targets(const RunConfig& cfg, const RoundRecord& row) {
  if (cfg.target_sq_err && row.sq_param_err <= *cfg.target_sq_err) return true;
  if (cfg.target_grad_norm && row.grad_norm <= *cfg.target_grad_norm) return true;
  if (cfg.target_rel_energy && std::abs(row.energy_err_rel) <= *cfg.target_rel_energy) {
    return true;
  }
  return false;
}

DeltaSchedule resolve_delta(const RunConfig& cfg, double rho) {
  if (cfg.fista_delta_default_ratio) {
    return DeltaSchedule::geometric_default(rho, cfg.fista_delta.gamma);
  }
  return cfg.fista_delta;
}

RunOutcome run_engine_mode(const RunConfig& cfg, double rho_override,
                           bool use_rho_override, const std::string& trace_suffix) {
  PreparedRun p = prepare(cfg);
  const double rho = use_rho_override ? rho_override : p.hyper.rho;

  EngineConfig ec;
  ec.nu = p.hyper.nu;
  ec.rho = rho;
  ec.stop = cfg.stop;
  ec.threads = cfg.threads;
  ec.abort_on_unmet = cfg.abort_on_unmet;

  RunControls rc;
  rc.rounds = cfg.rounds;
  rc.target_sq_err = cfg.target_sq_err;
  rc.target_grad_norm = cfg.target_grad_norm;
  rc.target_rel_energy = cfg.target_rel_energy;

  const ReferencePoint* ref = p.reference ? &*p.reference : nullptr;
  RunResult rr = run(p.oracles, ec, rc, ref);

  RunOutcome out;
  RunTrace trace;
  ResolvedHyper shown = p.hyper;
  shown.rho = rho;
  trace.header = make_header(cfg, shown, p.reference_note, ref);
  append_run_flags(trace, rr.any_unmet, rr.any_underflow);
  trace.rows = std::move(rr.records);
  out.exit_code = target_exit_code(cfg, rr.target_met);
  std::ostringstream msg;
  msg << "dualfl: " << trace.rows.size() << " rounds";
  if (!trace.rows.empty()) {
    msg << ", final grad_norm " << format_real(trace.rows.back().grad_norm);
    if (ref) msg << ", final sq_param_err " << format_real(trace.rows.back().sq_param_err);
  }
  out.message = msg.str();
  out.traces.emplace_back(trace_suffix, std::move(trace));
  return out;
}

RunOutcome run_dual_fista_mode(const RunConfig& cfg) {
  PreparedRun p = prepare(cfg);

  FistaConfig fc;
  fc.nu = p.hyper.nu;
  fc.rho = p.hyper.rho;
  fc.delta = resolve_delta(cfg, p.hyper.rho);
  fc.exact_subproblems = cfg.fista_exact;
  fc.max_inner_iters = cfg.stop.max_iters;
  fc.threads = cfg.threads;
  fc.record_energy = cfg.fista_record_energy;

  FistaResult fr = fista_run(p.oracles, fc, cfg.rounds);

  const ReferencePoint* ref = p.reference ? &*p.reference : nullptr;
  RunTrace trace;
  trace.header = make_header(cfg, p.hyper, p.reference_note, ref);
  trace.header.push_back(
      "columns: zeta_sum_norm is 0 by construction, max_gap holds the summed "
      "per-client certificate");
  bool met = false;
  for (std::size_t i = 0; i < fr.records.size(); ++i) {
    const auto& rec = fr.records[i];
    const ParameterPoint& model = fr.primal_iterates[i];
    RoundRecord row;
    row.round = rec.iteration;
    row.beta = rec.beta;
    row.zeta_sum_norm = 0.0;
    row.max_gap = rec.certificate;
    row.total_local_iters = rec.total_inner_iters;
    row.grad_norm = family_residual_norm(p.oracles, model);
    if (ref) {
      row.sq_param_err = (model - ref->model).squaredNorm();
      const double diff = family_energy(p.oracles, model) - ref->energy;
      row.energy_err_rel =
          ref->absolute_energy_error ? diff : diff / std::abs(ref->energy);
    }
    met = met || row_meets_targets(cfg, row);
    trace.rows.push_back(row);
  }
  RunOutcome out;
  out.exit_code = target_exit_code(cfg, met);
  std::ostringstream msg;
  msg << "dual_fista: " << trace.rows.size() << " iterations";
  if (!trace.rows.empty()) {
    msg << ", final certificate " << format_real(trace.rows.back().max_gap);
  }
  out.message = msg.str();
  out.traces.emplace_back("", std::move(trace));
  return out;
}

RunOutcome run_baseline_mode(const RunConfig& cfg) {
  PreparedRun p = prepare(cfg);
  BaselineConfig bc = cfg.baseline;
  bc.rounds = cfg.rounds;
  bc.kind =
      cfg.mode == RunMode::baseline_fedavg ? BaselineKind::fedavg : BaselineKind::gd;
  const ReferencePoint* ref = p.reference ? &*p.reference : nullptr;
  BaselineResult br = run_baseline(p.oracles, bc, ref);

  RunTrace trace;
  trace.header = make_header(cfg, p.hyper, p.reference_note, ref);
  bool met = false;
  for (const auto& row : br.records) met = met || row_meets_targets(cfg, row);
  trace.rows = std::move(br.records);

  RunOutcome out;
  out.exit_code = target_exit_code(cfg, met);
  std::ostringstream msg;
  msg << (bc.kind == BaselineKind::fedavg ? "baseline_fedavg" : "baseline_gd") << ": "
      << trace.rows.size() << " rounds";
  if (!trace.rows.empty()) {
    msg << ", final grad_norm " << format_real(trace.rows.back().grad_norm);
  }
  out.message = msg.str();
  out.traces.emplace_back("", std::move(trace));
  return out;
}

RunOutcome run_verify_mode(const RunConfig& cfg) {
  PreparedRun p = prepare(cfg);
  const DualityReport report = run_duality_check(
      p.oracles, p.hyper.nu, p.hyper.rho, cfg.duality_rounds, cfg.duality_exact,
      resolve_delta(cfg, p.hyper.rho), cfg.stop, cfg.threads);
  RunOutcome out;
  out.exit_code = report.max_deviation <= cfg.duality_tol ? 0 : 1;
  out.message = format_real(report.max_deviation);
  return out;
}

RunOutcome run_sweep_mode(const RunConfig& cfg) {
  if (cfg.sweep_rho_values.empty()) {
    throw ConfigError("sweep_rho mode needs sweep.rho_values");
  }
  RunOutcome out;
  std::ostringstream msg;
  msg << "sweep_rho:";
  for (std::size_t i = 0; i < cfg.sweep_rho_values.size(); ++i) {
    const double rho = cfg.sweep_rho_values[i];
    RunConfig one = cfg;
    one.mode = RunMode::dualfl;
    RunOutcome sub = run_engine_mode(one, rho, true, "_rho" + std::to_string(i));
    out.exit_code = std::max(out.exit_code, sub.exit_code);
    msg << " rho=" << format_real(rho) << " -> "
        << (sub.exit_code == 0 ? "ok" : "target missed") << ";";
    for (auto& t : sub.traces) out.traces.push_back(std::move(t));
  }
  out.message = msg.str();
  return out;
}

RunOutcome run_regularized_mode(const RunConfig& cfg) {
  std::vector<CompositeOracle> base = make_family(cfg.problem);
  const FamilyConstants base_constants = family_constants(base);

  double alpha = 0.0;
  double r0_hat = std::numeric_limits<double>::quiet_NaN();
  if (cfg.reg_alpha) {
    alpha = *cfg.reg_alpha;
    if (!(alpha > 0.0)) throw ConfigError("regularized.alpha must be positive");
  } else if (cfg.reg_epsilon) {
    const AlphaChoice choice =
        choose_alpha(base, *cfg.reg_epsilon, cfg.reg_alpha0, cfg.reference);
    alpha = choice.alpha;
    r0_hat = choice.r0_hat;
  } else {
    throw ConfigError("regularized mode needs regularized.alpha or regularized.epsilon");
  }

  std::vector<CompositeOracle> solved = regularize(base, alpha);
  const double nu = alpha;
  const double rho = base_constants.smoothness
                         ? alpha / (*base_constants.smoothness + alpha)
                         : 0.0;

  std::optional<ReferencePoint> ref;
  std::string ref_note = "disabled";
  if (cfg.reference_enabled) {
    try {
      ref = reference_solution(solved, cfg.reference);
      // report energies against the unregularized problem
      ref->energy = family_energy(base, ref->model);
      const double scale = std::max(
          1.0, std::abs(family_energy(base, ParameterPoint::Zero(ref->model.size()))));
      ref->absolute_energy_error = std::abs(ref->energy) < 1e-12 * scale;
      ref_note = "computed (regularized minimizer)";
    } catch (const NumericalError& e) {
      ref_note = std::string("unavailable (") + e.what() + ")";
    }
  }

  EngineConfig ec;
  ec.nu = nu;
  ec.rho = rho;
  ec.stop = cfg.stop;
  ec.threads = cfg.threads;
  ec.abort_on_unmet = cfg.abort_on_unmet;

  RunControls rc;
  rc.rounds = cfg.rounds;
  rc.target_sq_err = cfg.target_sq_err;
  rc.target_grad_norm = cfg.target_grad_norm;
  rc.target_rel_energy = cfg.target_rel_energy;

  const ReferencePoint* refp = ref ? &*ref : nullptr;
  RunResult rr = run(solved, ec, rc, refp, &base);

  ResolvedHyper shown;
  shown.nu = nu;
  shown.rho = rho;
  shown.constants = family_constants(solved);

  RunOutcome out;
  RunTrace trace;
  trace.header = make_header(cfg, shown, ref_note, refp);
  trace.header.push_back("regularized.alpha = " + format_real(alpha));
  if (std::isfinite(r0_hat)) {
    trace.header.push_back("regularized.r0_hat = " + format_real(r0_hat));
    trace.header.push_back("regularized.epsilon = " + format_real(*cfg.reg_epsilon));
  }
  trace.header.push_back("metrics reported against the unregularized problem");
  append_run_flags(trace, rr.any_unmet, rr.any_underflow);
  trace.rows = std::move(rr.records);
  out.exit_code = target_exit_code(cfg, rr.target_met);
  std::ostringstream msg;
  msg << "regularized: alpha " << format_real(alpha) << ", " << trace.rows.size()
      << " rounds";
  if (!trace.rows.empty()) {
    msg << ", final grad_norm " << format_real(trace.rows.back().grad_norm);
  }
  out.message = msg.str();
  out.traces.emplace_back("", std::move(trace));
  return out;
}

}  // namespace

AlphaChoice choose_alpha(const std::vector<CompositeOracle>& oracles, double epsilon,
                         double alpha0, const ReferenceOptions& options) {
  if (!(epsilon > 0.0)) throw ConfigError("choose_alpha needs epsilon > 0");
  if (!(alpha0 > 0.0)) throw ConfigError("choose_alpha needs alpha0 > 0");
  const ReferencePoint probe = reference_solution(regularize(oracles, alpha0), options);
  AlphaChoice choice;
  choice.r0_hat = std::max(probe.model.norm(), 1e-12);
  choice.alpha = epsilon / (2.0 * choice.r0_hat);
  choice.nu = choice.alpha;
  const FamilyConstants fc = family_constants(oracles);
  choice.rho = fc.smoothness ? choice.alpha / (*fc.smoothness + choice.alpha) : 0.0;
  return choice;
}

ResolvedHyper resolve_hyperparameters(const std::vector<CompositeOracle>& oracles,
                                      const RunConfig& config) {
  ResolvedHyper hyper;
  hyper.constants = family_constants(oracles);
  if (!(hyper.constants.mu > 0.0)) {
    throw ConfigError(
        "family is not strongly convex (mu = 0); use the regularized mode");
  }
  const double mu = hyper.constants.mu;
  double nu = config.nu.value_or(mu);
  if (nu > mu * (1.0 + 1e-12)) {
    throw ConfigError("dualfl.nu exceeds the family mu");
  }
  bool any_numeric = false;
  for (const auto& o : oracles) {
    any_numeric = any_numeric || o.conjugate_mode() == ConjugateMode::numeric;
  }
  if (needs_conjugates(config) && any_numeric && nu > mu * (1.0 - 1e-6)) {
    nu = mu * (1.0 - 1e-6);
    hyper.substituted_nu = true;
  }
  hyper.nu = nu;

  switch (config.rho.kind) {
    case RhoSpec::Kind::value:
      hyper.rho = config.rho.value;
      break;
    case RhoSpec::Kind::inv_kappa: {
      if (!hyper.constants.smoothness) {
        throw ConfigError("dualfl.rho = inv_kappa needs a smoothness constant");
      }
      hyper.rho = mu / *hyper.constants.smoothness;
      break;
    }
    case RhoSpec::Kind::nu_over_l: {
      if (!hyper.constants.smoothness) {
        throw ConfigError("dualfl.rho = nu_over_L needs a smoothness constant");
      }
      hyper.rho = nu / *hyper.constants.smoothness;
      break;
    }
  }
  return hyper;
}

DualityReport run_duality_check(const std::vector<CompositeOracle>& oracles, double nu,
                                double rho, long rounds, bool exact,
                                const DeltaSchedule& delta,
                                const StopCriterion& engine_stop, int threads) {
  EngineConfig ec;
  ec.nu = nu;
  ec.rho = rho;
  ec.stop = engine_stop;
  if (exact) ec.stop.kind = StopKind::exact;
  ec.threads = threads;
  ec.record_duals = true;

  RunControls rc;
  rc.rounds = rounds;
  RunResult er = run(oracles, ec, rc, nullptr);

  FistaConfig fc;
  fc.nu = nu;
  fc.rho = rho;
  fc.delta = delta;
  fc.exact_subproblems = exact;
  fc.max_inner_iters = engine_stop.max_iters;
  fc.threads = threads;
  FistaResult fr = fista_run(oracles, fc, rounds);

  DualityReport report;
  report.rounds = rounds;
  for (std::size_t n = 0; n < er.dual_history.size(); ++n) {
    for (std::size_t j = 0; j < oracles.size(); ++j) {
      const double dev =
          (er.dual_history[n].duals[j] - fr.dual_iterates[n].components[j]).norm();
      report.max_deviation = std::max(report.max_deviation, dev);
    }
  }
  return report;
}

RunOutcome execute(const RunConfig& config) {
  switch (config.mode) {
    case RunMode::dualfl:
      return run_engine_mode(config, 0.0, false, "");
    case RunMode::dual_fista:
      return run_dual_fista_mode(config);
    case RunMode::baseline_gd:
    case RunMode::baseline_fedavg:
      return run_baseline_mode(config);
    case RunMode::verify_duality:
      return run_verify_mode(config);
    case RunMode::sweep_rho:
      return run_sweep_mode(config);
    case RunMode::regularized:
      return run_regularized_mode(config);
  }
  throw ConfigError("unknown run mode");
}

}  // namespace dualfl
