#include "dualfl/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace dualfl {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double to_real(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
  }
  if (used != value.size() || !std::isfinite(v)) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
  }
  return v;
}

long to_integer(const std::string& key, const std::string& value) {
  const double v = to_real(key, value);
  if (std::floor(v) != v) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + value + "'");
  }
  return static_cast<long>(v);
}

bool to_boolean(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + value + "'");
}

/// Tracks which keys were consumed so leftovers can be rejected.
class KeyReader {
 public:
  explicit KeyReader(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

  std::optional<std::string> raw(const std::string& key) {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    consumed_.insert(key);
    return it->second;
  }

  std::string str(const std::string& key, const std::string& fallback) {
    const auto v = raw(key);
    return v ? *v : fallback;
  }

  double real(const std::string& key, double fallback) {
    const auto v = raw(key);
    return v ? to_real(key, *v) : fallback;
  }

  std::optional<double> real_opt(const std::string& key) {
    const auto v = raw(key);
    if (!v) return std::nullopt;
    return to_real(key, *v);
  }

  long integer(const std::string& key, long fallback) {
    const auto v = raw(key);
    return v ? to_integer(key, *v) : fallback;
  }

  bool boolean(const std::string& key, bool fallback) {
    const auto v = raw(key);
    return v ? to_boolean(key, *v) : fallback;
  }

  void finish() const {
    std::string unknown;
    for (const auto& [key, value] : kv_) {
      if (!consumed_.count(key)) {
        if (!unknown.empty()) unknown += ", ";
        unknown += key;
      }
    }
    if (!unknown.empty()) throw ConfigError("unknown config keys: " + unknown);
  }

 private:
  std::map<std::string, std::string> kv_;
  std::set<std::string> consumed_;
};

RunMode parse_mode(const std::string& v) {
  if (v == "dualfl") return RunMode::dualfl;
  if (v == "dual_fista") return RunMode::dual_fista;
  if (v == "baseline_gd") return RunMode::baseline_gd;
  if (v == "baseline_fedavg") return RunMode::baseline_fedavg;
  if (v == "verify_duality") return RunMode::verify_duality;
  if (v == "sweep_rho") return RunMode::sweep_rho;
  if (v == "regularized") return RunMode::regularized;
  throw ConfigError("unknown run.mode '" + v + "'");
}

ProblemKind parse_kind(const std::string& v) {
  if (v == "quadratic") return ProblemKind::quadratic;
  if (v == "least_squares") return ProblemKind::least_squares;
  if (v == "elastic_net") return ProblemKind::elastic_net;
  if (v == "logistic") return ProblemKind::logistic;
  throw ConfigError("unknown problem.kind '" + v + "'");
}

StopKind parse_stop(const std::string& v) {
  if (v == "gap_nonsmooth") return StopKind::gap_nonsmooth;
  if (v == "gap_smooth") return StopKind::gap_smooth;
  if (v == "gap_fixed") return StopKind::gap_fixed;
  if (v == "rel_energy") return StopKind::rel_energy;
  if (v == "grad_norm") return StopKind::grad_norm;
  if (v == "exact") return StopKind::exact;
  throw ConfigError("unknown local.stop '" + v + "'");
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": empty key or value");
    }
    if (kv.count(key)) {
      throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" +
                        key + "'");
    }
    kv[key] = value;
  }
  return kv;
}

RunConfig parse_run_config(const std::string& text) {
  KeyReader keys(parse_key_values(text));
  RunConfig cfg;

  cfg.mode = parse_mode(keys.str("run.mode", "dualfl"));
  cfg.rounds = keys.integer("run.rounds", 100);
  cfg.seed = static_cast<std::uint64_t>(keys.integer("run.seed", 1));
  cfg.threads = static_cast<int>(keys.integer("run.threads", 1));
  cfg.out_path = keys.str("run.out", "");
  cfg.target_sq_err = keys.real_opt("run.target_sq_err");
  cfg.target_grad_norm = keys.real_opt("run.target_grad_norm");
  cfg.target_rel_energy = keys.real_opt("run.target_rel_energy");

  ProblemSpec& p = cfg.problem;
  p.kind = parse_kind(keys.str("problem.kind", "quadratic"));
  p.clients = static_cast<int>(keys.integer("problem.clients", 2));
  p.dim = static_cast<int>(keys.integer("problem.dim", 10));
  p.kappa = keys.real("problem.kappa", 10.0);
  p.mu_target = keys.real("problem.mu", 1.0);
  p.b_scale = keys.real("problem.scale", 1.0);
  p.rank_fraction = keys.real("problem.rank_fraction", 0.5);
  p.solution_norm = keys.real("problem.solution_norm", 2.0);
  p.noise = keys.real("problem.noise", 0.0);
  p.rows_per_client = static_cast<int>(keys.integer("problem.rows_per_client", 0));
  p.samples_per_client = static_cast<int>(keys.integer("problem.samples_per_client", 30));
  p.l1 = keys.real("problem.l1", 0.1);
  if (const auto ridge = keys.real_opt("problem.ridge")) {
    p.ridge = *ridge;
    p.logistic_ridge = *ridge;
  }
  p.classes = static_cast<int>(keys.integer("problem.classes", 3));
  p.features = static_cast<int>(keys.integer("problem.features", 5));
  p.samples = static_cast<int>(keys.integer("problem.samples", 192));
  p.separation = keys.real("problem.separation", 3.0);
  p.spread = keys.real("problem.spread", 1.0);
  p.unit_rows = keys.boolean("problem.unit_rows", true);
  if (const auto path = keys.raw("problem.data")) p.data_path = *path;
  const std::string format = keys.str("problem.format", "dense_csv");
  if (format == "dense_csv") {
    p.data_format = DatasetFormat::dense_csv;
  } else if (format == "sparse_svm") {
    p.data_format = DatasetFormat::sparse_svm;
  } else {
    throw ConfigError("unknown problem.format '" + format + "'");
  }
  const std::string part = keys.str("problem.partition", "shuffled");
  if (part == "contiguous") {
    p.partition_scheme = PartitionScheme::contiguous;
  } else if (part == "shuffled") {
    p.partition_scheme = PartitionScheme::shuffled;
  } else {
    throw ConfigError("unknown problem.partition '" + part + "'");
  }
  p.seed = cfg.seed;

  if (const auto nu = keys.raw("dualfl.nu")) {
    if (*nu != "mu") cfg.nu = to_real("dualfl.nu", *nu);
  }
  if (const auto rho = keys.raw("dualfl.rho")) {
    if (*rho == "inv_kappa") {
      cfg.rho.kind = RhoSpec::Kind::inv_kappa;
    } else if (*rho == "nu_over_L") {
      cfg.rho.kind = RhoSpec::Kind::nu_over_l;
    } else {
      cfg.rho.kind = RhoSpec::Kind::value;
      cfg.rho.value = to_real("dualfl.rho", *rho);
    }
  }

  cfg.stop.kind = parse_stop(keys.str("local.stop", "rel_energy"));
  cfg.stop.gamma = keys.real("dualfl.gamma", cfg.stop.kind == StopKind::gap_smooth
                                                 ? 0.1
                                                 : 1.0);
  cfg.stop.gap_delta = keys.real("local.gap_delta", 0.0);
  cfg.stop.rel_tol = keys.real("local.rel_tol", 1e-12);
  cfg.stop.grad_tol = keys.real("local.grad_tol", 1e-10);
  cfg.stop.max_iters = keys.integer("local.max_iters", 200000);
  cfg.abort_on_unmet = keys.boolean("local.abort_on_unmet", false);

  const std::string ref = keys.str("reference.kind", "auto");
  if (ref == "auto") {
    cfg.reference_enabled = true;
  } else if (ref == "none") {
    cfg.reference_enabled = false;
  } else {
    throw ConfigError("unknown reference.kind '" + ref + "'");
  }
  cfg.reference.grad_tol = keys.real("reference.grad_tol", 1e-10);
  cfg.reference.hessian_budget = keys.integer("reference.hessian_budget", 400);

  cfg.baseline.kind =
      cfg.mode == RunMode::baseline_fedavg ? BaselineKind::fedavg : BaselineKind::gd;
  cfg.baseline.rounds = cfg.rounds;
  cfg.baseline.local_steps = static_cast<int>(keys.integer("baseline.local_steps", 1));
  if (const auto step = keys.raw("baseline.step")) {
    if (*step == "backtracking") {
      cfg.baseline.step = BaselineStep::backtracking;
    } else if (*step == "opt") {
      cfg.baseline.step = BaselineStep::optimal;
    } else {
      cfg.baseline.step = BaselineStep::fixed;
      cfg.baseline.step_size = to_real("baseline.step", *step);
    }
  }

  const std::string delta = keys.str("fista.delta", "polynomial");
  if (delta == "polynomial") {
    cfg.fista_delta = DeltaSchedule::polynomial(keys.real("fista.gamma", 1.0));
  } else if (delta == "geometric") {
    const auto ratio = keys.raw("fista.ratio");
    const double gamma = keys.real("fista.gamma", 0.1);
    if (!ratio || *ratio == "default") {
      cfg.fista_delta_default_ratio = true;  // ratio derived from rho at run time
      cfg.fista_delta = DeltaSchedule::geometric(0.0);
      cfg.fista_delta.gamma = gamma;
    } else {
      cfg.fista_delta = DeltaSchedule::geometric(to_real("fista.ratio", *ratio));
    }
  } else {
    throw ConfigError("unknown fista.delta '" + delta + "'");
  }
  cfg.fista_exact = keys.boolean("fista.exact", false);
  cfg.fista_record_energy = keys.boolean("fista.record_energy", false);

  cfg.duality_tol = keys.real("duality.tol", 1e-8);
  cfg.duality_rounds = keys.integer("duality.rounds", 50);
  cfg.duality_exact = keys.boolean("duality.exact", true);

  if (const auto list = keys.raw("sweep.rho_values")) {
    std::stringstream ss(*list);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      cfg.sweep_rho_values.push_back(to_real("sweep.rho_values", trim(tok)));
    }
    if (cfg.sweep_rho_values.empty()) {
      throw ConfigError("sweep.rho_values is empty");
    }
  }

  cfg.reg_alpha = keys.real_opt("regularized.alpha");
  cfg.reg_epsilon = keys.real_opt("regularized.epsilon");
  cfg.reg_alpha0 = keys.real("regularized.alpha0", 1e-2);

  keys.finish();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str());
}

}  // namespace dualfl
