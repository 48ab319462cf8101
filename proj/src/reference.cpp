#include "dualfl/reference.hpp"

#include <cmath>

#include "dualfl/fbs.hpp"

namespace dualfl {

namespace {

bool all_analytic_quadratic(const std::vector<CompositeOracle>& oracles) {
  for (const auto& o : oracles) {
    if (o.conjugate_mode() != ConjugateMode::analytic || o.has_nonsmooth()) return false;
  }
  return true;
}

bool all_smooth_with_hessian(const std::vector<CompositeOracle>& oracles) {
  const ParameterPoint zero = ParameterPoint::Zero(oracles.front().dim());
  for (const auto& o : oracles) {
    if (o.has_nonsmooth() || !o.hessian(zero)) return false;
  }
  return true;
}

ReferencePoint finalize(const std::vector<CompositeOracle>& oracles,
                        ParameterPoint model) {
  ReferencePoint ref;
  ref.energy = family_energy(oracles, model);
  ref.model = std::move(model);
  const double scale =
      std::max(1.0, std::abs(family_energy(oracles, ParameterPoint::Zero(ref.model.size()))));
  ref.absolute_energy_error = std::abs(ref.energy) < 1e-12 * scale;
  return ref;
}

ReferencePoint solve_direct(const std::vector<CompositeOracle>& oracles) {
  const Eigen::Index dim = oracles.front().dim();
  const ParameterPoint zero = ParameterPoint::Zero(dim);
  Eigen::MatrixXd mean_hessian = Eigen::MatrixXd::Zero(dim, dim);
  ParameterPoint mean_rhs = ParameterPoint::Zero(dim);
  for (const auto& o : oracles) {
    mean_hessian += *o.hessian(zero);
    mean_rhs -= o.smooth_value_grad(zero).second;  // grad(0) = -b
  }
  mean_hessian /= static_cast<double>(oracles.size());
  mean_rhs /= static_cast<double>(oracles.size());
  Eigen::LLT<Eigen::MatrixXd> llt(mean_hessian);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(
        "reference solve failed: pooled quadratic is not positive definite");
  }
  return finalize(oracles, llt.solve(mean_rhs));
}

ReferencePoint solve_newton(const std::vector<CompositeOracle>& oracles,
                            const ReferenceOptions& options) {
  const Eigen::Index dim = oracles.front().dim();
  const double n = static_cast<double>(oracles.size());
  ParameterPoint theta = ParameterPoint::Zero(dim);
  for (long it = 0; it < options.max_newton_iters; ++it) {
    ParameterPoint grad = ParameterPoint::Zero(dim);
    double energy = 0.0;
    for (const auto& o : oracles) {
      auto [v, g] = o.smooth_value_grad(theta);
      energy += v;
      grad += g;
    }
    energy /= n;
    grad /= n;
    if (grad.norm() <= options.grad_tol) return finalize(oracles, std::move(theta));

    Eigen::MatrixXd hessian = Eigen::MatrixXd::Zero(dim, dim);
    for (const auto& o : oracles) hessian += *o.hessian(theta);
    hessian /= n;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
    ParameterPoint step = ldlt.solve(-grad);
    const double slope = grad.dot(step);

    // Armijo with a machine-noise allowance so full Newton steps stay
    // acceptable once energy differences fall below resolution.
    const double noise =
        8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(energy));
    double t = 1.0;
    while (t > 1e-16) {
      const double trial = family_energy(oracles, theta + t * step);
      if (trial <= energy + 1e-4 * t * slope + noise) break;
      t *= 0.5;
    }
    theta += t * step;
  }
  const double achieved = family_residual_norm(oracles, theta);
  if (achieved <= options.grad_tol) return finalize(oracles, std::move(theta));
  throw NumericalError("reference Newton did not reach gradient tolerance", achieved);
}

ReferencePoint solve_fbs(const std::vector<CompositeOracle>& oracles,
                         const ReferenceOptions& options) {
  const Eigen::Index dim = oracles.front().dim();
  const double n = static_cast<double>(oracles.size());
  FbsProblem problem;
  problem.smooth = [&](const ParameterPoint& theta, ParameterPoint& grad) {
    grad.setZero();
    double v = 0.0;
    for (const auto& o : oracles) {
      auto [sv, sg] = o.smooth_value_grad(theta);
      v += sv;
      grad += sg;
    }
    grad /= n;
    return v / n;
  };
  if (oracles.front().has_nonsmooth()) {
    problem.simple = [&](const ParameterPoint& theta) {
      return oracles.front().nonsmooth_value(theta);
    };
    problem.prox = [&](const ParameterPoint& z, double step) {
      return oracles.front().prox_nonsmooth(z, step);
    };
  }
  FbsOptions opts;
  opts.max_iters = options.max_fbs_iters;
  FbsResult res = accelerated_fbs(
      problem, ParameterPoint::Zero(dim), opts,
      [&](const FbsIterate& it) { return it.residual_norm <= options.grad_tol; },
      /*want_residual=*/true);
  if (!res.stopped) {
    throw NumericalError("reference solve did not reach residual tolerance",
                         res.residual_norm);
  }
  return finalize(oracles, std::move(res.x));
}

}  // namespace

ReferencePoint reference_solution(const std::vector<CompositeOracle>& oracles,
                                  const ReferenceOptions& options) {
  if (oracles.empty()) throw ConfigError("reference_solution: empty family");
  if (all_analytic_quadratic(oracles)) return solve_direct(oracles);
  if (all_smooth_with_hessian(oracles) && oracles.front().dim() <= options.hessian_budget) {
    return solve_newton(oracles, options);
  }
  return solve_fbs(oracles, options);
}

}  // namespace dualfl
