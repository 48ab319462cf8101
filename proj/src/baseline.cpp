#include "dualfl/baseline.hpp"

#include <cmath>

namespace dualfl {

namespace {

double resolve_step(const std::vector<CompositeOracle>& oracles,
                    const BaselineConfig& config) {
  switch (config.step) {
    case BaselineStep::backtracking:
      return 0.0;
    case BaselineStep::optimal: {
      const FamilyConstants fc = family_constants(oracles);
      if (!fc.smoothness || !(fc.mu > 0.0)) {
        throw ConfigError("optimal baseline step needs known mu > 0 and L");
      }
      return 2.0 / (*fc.smoothness + fc.mu);
    }
    case BaselineStep::fixed:
      if (!(config.step_size > 0.0)) {
        throw ConfigError("fixed baseline step must be positive");
      }
      return config.step_size;
  }
  throw ConfigError("unknown baseline step rule");
}

RoundRecord make_record(const std::vector<CompositeOracle>& oracles, long round,
                        const ParameterPoint& model, long iters,
                        const ReferencePoint* reference) {
  RoundRecord rec;
  rec.round = round;
  rec.total_local_iters = iters;
  rec.grad_norm = family_residual_norm(oracles, model);
  if (reference) {
    rec.sq_param_err = (model - reference->model).squaredNorm();
    const double diff = family_energy(oracles, model) - reference->energy;
    rec.energy_err_rel =
        reference->absolute_energy_error ? diff : diff / std::abs(reference->energy);
  }
  return rec;
}

ParameterPoint prox_gradient_step(const CompositeOracle& oracle,
                                  const ParameterPoint& theta,
                                  const ParameterPoint& grad, double step) {
  return oracle.prox_nonsmooth(theta - step * grad, step);
}

}  // namespace

BaselineResult run_baseline(const std::vector<CompositeOracle>& oracles,
                            const BaselineConfig& config,
                            const ReferencePoint* reference) {
  if (oracles.empty()) throw ConfigError("baseline needs at least one client");
  const Eigen::Index dim = oracles.front().dim();
  const double n = static_cast<double>(oracles.size());
  const double fixed_step = resolve_step(oracles, config);

  BaselineResult result;
  result.model = ParameterPoint::Zero(dim);
  result.records.reserve(static_cast<std::size_t>(config.rounds));

  if (config.kind == BaselineKind::gd) {
    double step = fixed_step > 0.0 ? fixed_step : 1.0;
    for (long r = 0; r < config.rounds; ++r) {
      ParameterPoint grad = ParameterPoint::Zero(dim);
      double energy = 0.0;
      for (const auto& o : oracles) {
        auto [v, g] = o.smooth_value_grad(result.model);
        energy += v;
        grad += g;
      }
      energy /= n;
      grad /= n;
      ParameterPoint next;
      if (fixed_step > 0.0) {
        next = prox_gradient_step(oracles.front(), result.model, grad, fixed_step);
      } else {
        step *= 2.0;
        while (true) {
          next = prox_gradient_step(oracles.front(), result.model, grad, step);
          const ParameterPoint diff = next - result.model;
          double trial = 0.0;
          for (const auto& o : oracles) trial += o.smooth_value_grad(next).first;
          trial /= n;
          const double model_value =
              energy + grad.dot(diff) + diff.squaredNorm() / (2.0 * step);
          if (trial <= model_value + 1e-14 * (1.0 + std::abs(trial))) break;
          step *= 0.5;
          if (step < 1e-30) throw NumericalError("baseline line search stalled");
        }
      }
      result.model = std::move(next);
      result.records.push_back(
          make_record(oracles, r + 1, result.model, 1, reference));
    }
    return result;
  }

  // fedavg
  if (config.local_steps < 1) throw ConfigError("fedavg needs local_steps >= 1");
  std::vector<double> local_step(oracles.size(), fixed_step);
  if (fixed_step == 0.0) {
    for (std::size_t j = 0; j < oracles.size(); ++j) {
      const auto L = oracles[j].smoothness();
      if (!L || !(*L > 0.0)) {
        throw ConfigError("fedavg default step needs a smoothness constant; "
                          "set an explicit step size");
      }
      local_step[j] = 1.0 / *L;
    }
  }
  for (long r = 0; r < config.rounds; ++r) {
    ParameterPoint sum = ParameterPoint::Zero(dim);
    for (std::size_t j = 0; j < oracles.size(); ++j) {
      ParameterPoint local = result.model;
      for (int k = 0; k < config.local_steps; ++k) {
        const ParameterPoint grad = oracles[j].smooth_value_grad(local).second;
        local = prox_gradient_step(oracles[j], local, grad, local_step[j]);
      }
      sum += local;
    }
    result.model = sum / n;
    result.records.push_back(make_record(
        oracles, r + 1, result.model,
        static_cast<long>(oracles.size()) * config.local_steps, reference));
  }
  return result;
}

}  // namespace dualfl
