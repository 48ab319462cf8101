#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "dualfl/common.hpp"

namespace dualfl {

enum class ConjugateMode { analytic, numeric };

/// How conjugate values are reported when the conjugate is an indicator-like
/// function (affine pieces of quadratic costs at nu == mu). `strict` returns
/// +inf off the effective domain; `projected` evaluates at the projection of
/// the argument onto the domain and reports the projection distance.
enum class ConjugatePolicy { strict, projected };

struct ConjugateResult {
  double value = 0.0;
  ParameterPoint maximizer;  // point attaining the sup (min-norm on flat directions)
  // Certificate of the evaluation: subgradient norm reached by the inner
  // solve in numeric mode; distance to the conjugate's domain in analytic
  // mode (0 when the argument is feasible).
  double residual = 0.0;
  ParameterPoint feasible_point;  // the dual point actually evaluated
};

struct NumericConjugateSettings {
  double tol_scale = 1e-10;  // residual target: tol_scale * (||xi|| + 1)
  long max_iters = 200000;
};

/// Per-client composite cost f = smooth + simple, with the constants and
/// accessors the solvers need: strong convexity mu, optional smoothness L,
/// gradient of the smooth part, prox of the simple part, and the conjugate
/// of the nu-shifted cost g(theta) = f(theta) - (nu/2)||theta||^2.
///
/// Oracles are immutable after construction and safe to share across
/// concurrent workers.
class CompositeOracle {
 public:
  using SmoothFn = std::function<double(const ParameterPoint&, ParameterPoint&)>;
  using ValueFn = std::function<double(const ParameterPoint&)>;
  using ProxFn = std::function<ParameterPoint(const ParameterPoint&, double)>;
  using HessianFn = std::function<Eigen::MatrixXd(const ParameterPoint&)>;

  /// f(theta) = 0.5 theta'A theta - b'theta + constant, A symmetric positive
  /// definite. Throws ConfigError when A is not SPD.
  static CompositeOracle quadratic(const Eigen::MatrixXd& A, const ParameterPoint& b,
                                   double constant = 0.0);

  /// f(theta) = 0.5 ||design*theta - target||^2. The Gram matrix may be
  /// singular (mu = 0); such oracles must be regularized before use in the
  /// strongly convex solvers.
  static CompositeOracle least_squares(const Eigen::MatrixXd& design,
                                       const ParameterPoint& target);

  /// f(theta) = 0.5 ||design*theta - target||^2 + l1 ||theta||_1
  ///            + (ridge/2) ||theta||^2.
  /// mu is taken from the explicit ridge term. With l1 == 0 the oracle
  /// degenerates to an analytic quadratic.
  static CompositeOracle elastic_net(const Eigen::MatrixXd& design,
                                     const ParameterPoint& target, double l1,
                                     double ridge);

  /// Multinomial logistic regression with intercepts on one data shard.
  /// features: m x d (one row per sample), labels in [1, classes].
  /// f(theta) = (1/m) sum_i [logsumexp(z_i) - z_i,y_i] + (ridge/2)||theta||^2
  /// with z_i,l = w_l . x_i + b_l and theta the flattened (w, b),
  /// class-major blocks of size d+1.
  static CompositeOracle logistic(const Eigen::MatrixXd& features,
                                  const std::vector<int>& labels, int classes,
                                  double ridge);

  /// Caller-supplied parts, mainly for tests.
  static CompositeOracle custom(Eigen::Index dim, double mu,
                                std::optional<double> smoothness, SmoothFn smooth,
                                ValueFn nonsmooth = {}, ProxFn prox = {});

  Eigen::Index dim() const { return dim_; }
  double mu() const { return mu_; }
  std::optional<double> smoothness() const { return smoothness_; }
  ConjugateMode conjugate_mode() const {
    return quad_ ? ConjugateMode::analytic : ConjugateMode::numeric;
  }
  bool has_nonsmooth() const { return static_cast<bool>(nonsmooth_); }

  /// Full cost and gradient of the smooth part only.
  std::pair<double, ParameterPoint> evaluate(const ParameterPoint& theta) const;

  double value(const ParameterPoint& theta) const;
  std::pair<double, ParameterPoint> smooth_value_grad(const ParameterPoint& theta) const;
  double nonsmooth_value(const ParameterPoint& theta) const;
  ParameterPoint prox_nonsmooth(const ParameterPoint& z, double step) const;

  /// Hessian of the smooth part when the family provides one.
  std::optional<Eigen::MatrixXd> hessian(const ParameterPoint& theta) const;

  /// g*(xi) = sup_theta { <xi,theta> - f(theta) + (nu/2)||theta||^2 }.
  /// Requires nu <= mu (analytic) or nu < mu strictly (numeric). `warm`
  /// seeds the inner maximization in numeric mode.
  ConjugateResult conjugate_g(const ParameterPoint& xi, double nu,
                              ConjugatePolicy policy = ConjugatePolicy::strict,
                              const ParameterPoint* warm = nullptr) const;

  /// Quadratic families expose a direct solve of
  /// argmin_theta f(theta) - nu <zeta, theta>.
  bool has_exact_local_solver() const;
  ParameterPoint exact_local_minimizer(const ParameterPoint& zeta, double nu) const;

  /// Returns a copy with (alpha/2)||theta||^2 added to the smooth part.
  CompositeOracle regularized(double alpha) const;

  NumericConjugateSettings conjugate_settings;

 private:
  struct QuadraticPayload;
  static std::shared_ptr<const QuadraticPayload> make_quadratic_payload(
      const Eigen::MatrixXd& A, const ParameterPoint& b, double c);

  CompositeOracle() = default;

  Eigen::Index dim_ = 0;
  double mu_ = 0.0;
  std::optional<double> smoothness_;
  SmoothFn smooth_;
  ValueFn nonsmooth_;
  ProxFn prox_;
  HessianFn hessian_;
  std::shared_ptr<const QuadraticPayload> quad_;
  double indicator_tol_ = 1e-8;
};

/// Slack to add to a conjugate value to make it a certified upper bound on
/// the true g*(xi): residual^2 / (2 (mu - nu)) in numeric mode, 0 otherwise.
double conjugate_upper_slack(const CompositeOracle& oracle,
                             const ConjugateResult& result, double nu);

/// Adds (alpha/2)||theta||^2 to every client cost; mu and L shift by alpha.
std::vector<CompositeOracle> regularize(const std::vector<CompositeOracle>& oracles,
                                        double alpha);

struct FamilyConstants {
  double mu = 0.0;
  std::optional<double> smoothness;  // present only if every client reports one
  double kappa() const {
    return smoothness && mu > 0.0 ? *smoothness / mu
                                  : std::numeric_limits<double>::infinity();
  }
};

FamilyConstants family_constants(const std::vector<CompositeOracle>& oracles);

}  // namespace dualfl
