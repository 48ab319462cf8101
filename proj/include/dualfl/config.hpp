#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dualfl/baseline.hpp"
#include "dualfl/dual_fista.hpp"
#include "dualfl/problems.hpp"
#include "dualfl/reference.hpp"

namespace dualfl {

enum class RunMode {
  dualfl,
  dual_fista,
  baseline_gd,
  baseline_fedavg,
  verify_duality,
  sweep_rho,
  regularized,
};

/// How rho is specified before the family constants are known.
struct RhoSpec {
  enum class Kind { value, inv_kappa, nu_over_l } kind = Kind::value;
  double value = 0.0;
};

/// Full run description parsed from a flat key-value config file with dotted
/// sections. Unknown keys are errors, not warnings; every key is listed in
/// the README reference table.
struct RunConfig {
  RunMode mode = RunMode::dualfl;
  ProblemSpec problem;

  std::optional<double> nu;  // absent: nu = family mu
  RhoSpec rho;
  StopCriterion stop;

  long rounds = 100;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_path;
  bool abort_on_unmet = false;

  std::optional<double> target_sq_err;
  std::optional<double> target_grad_norm;
  std::optional<double> target_rel_energy;

  bool reference_enabled = true;
  ReferenceOptions reference;

  BaselineConfig baseline;

  DeltaSchedule fista_delta = DeltaSchedule::polynomial();
  bool fista_delta_default_ratio = false;  // geometric ratio derived from rho
  bool fista_exact = false;
  bool fista_record_energy = false;

  double duality_tol = 1e-8;
  long duality_rounds = 50;
  bool duality_exact = true;

  std::vector<double> sweep_rho_values;

  std::optional<double> reg_alpha;
  std::optional<double> reg_epsilon;
  double reg_alpha0 = 1e-2;
};

/// Parses "key = value" lines; '#' starts a comment, blank lines are
/// skipped, duplicate keys are errors.
std::map<std::string, std::string> parse_key_values(const std::string& text);

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

}  // namespace dualfl
