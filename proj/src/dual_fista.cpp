#include "dualfl/dual_fista.hpp"

#include <cmath>

#include "dualfl/parallel.hpp"

namespace dualfl {

namespace {

ParameterPoint mean_of(const std::vector<ParameterPoint>& points) {
  ParameterPoint sum = ParameterPoint::Zero(points.front().size());
  for (const auto& p : points) sum += p;
  return sum / static_cast<double>(points.size());
}

struct BlockResult {
  ParameterPoint xi;
  ParameterPoint theta;
  double gap = 0.0;
  long iters = 0;
};

BlockResult solve_block(const CompositeOracle& oracle, const ParameterPoint& center,
                        double nu, double tolerance, bool exact, long max_iters,
                        const ParameterPoint& warm_theta,
                        ParameterPoint* conjugate_warm) {
  // center = eta_j - mean(eta); the block is the local primal problem with
  // zeta = center / nu, and its solution maps back by xi = center - nu theta.
  const ParameterPoint zeta = center / nu;
  const LocalProblem problem{oracle, zeta, nu};
  BlockResult out;
  if (exact) {
    out.theta = oracle.exact_local_minimizer(zeta, nu);
    out.gap = compute_gap(problem, out.theta, conjugate_warm);
    out.iters = 1;
  } else {
    StopCriterion stop;
    stop.kind = StopKind::gap_fixed;
    stop.gap_delta = tolerance;
    stop.max_iters = max_iters;
    LocalSolveReport report =
        solve_local(problem, warm_theta, stop, LocalContext{}, conjugate_warm);
    if (!report.criterion_met && !report.threshold_underflow) {
      throw NumericalError("dual prox block missed tolerance " +
                               std::to_string(tolerance),
                           report.gap);
    }
    out.theta = std::move(report.theta);
    out.gap = report.gap;
    out.iters = report.iters;
  }
  out.xi = center - nu * out.theta;
  return out;
}

}  // namespace

DeltaSchedule DeltaSchedule::geometric_default(double rho, double gamma) {
  if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("delta schedule: bad rho");
  if (!(gamma > 0.0)) throw ConfigError("delta schedule: gamma must be positive");
  return geometric((1.0 - std::sqrt(rho)) / (1.0 + gamma));
}

void DeltaSchedule::validate(double rho) const {
  switch (kind) {
    case Kind::polynomial:
      if (!(gamma > 0.0)) {
        throw ConfigError("polynomial delta schedule needs gamma > 0");
      }
      return;
    case Kind::geometric: {
      const double bound = 1.0 - std::sqrt(std::max(rho, 0.0));
      if (!(ratio >= 0.0 && ratio < bound)) {
        throw ConfigError("geometric delta schedule needs ratio in [0, 1 - sqrt(rho))");
      }
      return;
    }
  }
  throw ConfigError("unknown delta schedule");
}

double DeltaSchedule::value(long iteration, double nu) const {
  switch (kind) {
    case Kind::polynomial:
      return 1.0 /
             (nu * std::pow(static_cast<double>(iteration + 1), 4.0 + gamma));
    case Kind::geometric:
      return std::pow(ratio, static_cast<double>(iteration));
  }
  throw ConfigError("unknown delta schedule");
}

double dual_energy(const DualPoint& xi, const std::vector<CompositeOracle>& oracles,
                   double nu) {
  if (xi.components.size() != oracles.size()) {
    throw ConfigError("dual point/oracle counts disagree");
  }
  const int n = static_cast<int>(oracles.size());
  double sum = 0.0;
  ParameterPoint total = ParameterPoint::Zero(oracles.front().dim());
  for (int j = 0; j < n; ++j) {
    const ConjugateResult c = oracles[static_cast<std::size_t>(j)].conjugate_g(
        xi.components[static_cast<std::size_t>(j)], nu);
    if (!std::isfinite(c.value)) return std::numeric_limits<double>::infinity();
    sum += c.value;
    total += xi.components[static_cast<std::size_t>(j)];
  }
  return sum + total.squaredNorm() / (2.0 * n * nu);
}

ParameterPoint recover_primal(const DualPoint& xi, double nu) {
  if (xi.components.empty()) throw ConfigError("empty dual point");
  const double n = static_cast<double>(xi.components.size());
  ParameterPoint sum = ParameterPoint::Zero(xi.components.front().size());
  for (const auto& c : xi.components) sum += c;
  return -sum / (n * nu);
}

ParameterPoint prox_subproblem(int client, const DualPoint& eta,
                               const std::vector<CompositeOracle>& oracles, double nu,
                               double tolerance) {
  if (client < 0 || client >= static_cast<int>(oracles.size())) {
    throw ConfigError("prox_subproblem: client index out of range");
  }
  if (!(tolerance > 0.0)) throw ConfigError("prox_subproblem: tolerance must be positive");
  const ParameterPoint mean = mean_of(eta.components);
  const ParameterPoint center =
      eta.components[static_cast<std::size_t>(client)] - mean;
  const CompositeOracle& oracle = oracles[static_cast<std::size_t>(client)];
  ParameterPoint warm = ParameterPoint::Zero(oracle.dim());
  BlockResult block = solve_block(oracle, center, nu, tolerance,
                                  /*exact=*/false, 200000, warm, nullptr);
  return block.xi;
}

FistaResult fista_run(const std::vector<CompositeOracle>& oracles,
                      const FistaConfig& config, long rounds) {
  if (oracles.empty()) throw ConfigError("fista_run needs at least one client");
  const FamilyConstants fc = family_constants(oracles);
  if (!(config.nu > 0.0 && config.nu <= fc.mu * (1.0 + 1e-12))) {
    throw ConfigError("fista_run needs nu in (0, mu]");
  }
  if (!(config.rho >= 0.0 && config.rho < 1.0)) {
    throw ConfigError("fista_run needs rho in [0, 1)");
  }
  config.delta.validate(config.rho);
  const int n_clients = static_cast<int>(oracles.size());
  const Eigen::Index dim = oracles.front().dim();

  DualPoint xi = DualPoint::zero(n_clients, dim);
  DualPoint eta = xi;
  MomentumState momentum = make_momentum(config.rho);
  std::vector<ParameterPoint> warm_theta(
      static_cast<std::size_t>(n_clients), ParameterPoint::Zero(dim));
  std::vector<ParameterPoint> conjugate_warm(static_cast<std::size_t>(n_clients));

  FistaResult result;
  result.dual_iterates.reserve(static_cast<std::size_t>(rounds));
  result.primal_iterates.reserve(static_cast<std::size_t>(rounds));
  result.records.reserve(static_cast<std::size_t>(rounds));

  for (long n = 0; n < rounds; ++n) {
    const double delta_n = config.delta.value(n, config.nu);
    const double tolerance = delta_n / n_clients;
    const ParameterPoint mean_eta = mean_of(eta.components);

    std::vector<BlockResult> blocks(static_cast<std::size_t>(n_clients));
    parallel_for(n_clients, config.threads, [&](int j) {
      const auto ju = static_cast<std::size_t>(j);
      const ParameterPoint center = eta.components[ju] - mean_eta;
      blocks[ju] = solve_block(oracles[ju], center, config.nu, tolerance,
                               config.exact_subproblems, config.max_inner_iters,
                               warm_theta[ju], &conjugate_warm[ju]);
    });

    FistaIterationRecord rec;
    rec.iteration = n + 1;
    rec.delta = delta_n;
    DualPoint xi_next;
    xi_next.components.reserve(static_cast<std::size_t>(n_clients));
    for (int j = 0; j < n_clients; ++j) {
      auto& block = blocks[static_cast<std::size_t>(j)];
      rec.certificate += std::max(block.gap, 0.0);
      rec.total_inner_iters += block.iters;
      warm_theta[static_cast<std::size_t>(j)] = block.theta;
      xi_next.components.push_back(std::move(block.xi));
    }
    rec.certified = rec.certificate <= delta_n;

    const MomentumStep ms = advance(momentum);
    momentum = ms.next;
    rec.beta = ms.beta;
    for (int j = 0; j < n_clients; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      eta.components[ju] =
          (1.0 + ms.beta) * xi_next.components[ju] - ms.beta * xi.components[ju];
    }
    xi = std::move(xi_next);

    if (config.record_energy) {
      rec.dual_energy = dual_energy(xi, oracles, config.nu);
    }
    result.primal_iterates.push_back(recover_primal(xi, config.nu));
    result.dual_iterates.push_back(xi);
    result.records.push_back(rec);
  }
  return result;
}

}  // namespace dualfl
