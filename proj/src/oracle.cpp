#include "dualfl/oracle.hpp"

#include <cmath>

#include "dualfl/fbs.hpp"

namespace dualfl {

struct CompositeOracle::QuadraticPayload {
  Eigen::MatrixXd A;  // symmetric
  ParameterPoint b;
  double c = 0.0;
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // columns
  Eigen::LLT<Eigen::MatrixXd> llt;
  bool spd = false;
};

std::shared_ptr<const CompositeOracle::QuadraticPayload>
CompositeOracle::make_quadratic_payload(const Eigen::MatrixXd& A_in,
                                        const ParameterPoint& b, double c) {
  if (A_in.rows() != A_in.cols() || A_in.rows() != b.size()) {
    throw ConfigError("quadratic form dimensions are inconsistent");
  }
  auto payload = std::make_shared<CompositeOracle::QuadraticPayload>();
  payload->A = 0.5 * (A_in + A_in.transpose());
  payload->b = b;
  payload->c = c;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(payload->A);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition of quadratic form failed");
  }
  payload->eigenvalues = eig.eigenvalues();
  payload->eigenvectors = eig.eigenvectors();
  const double lambda_max = payload->eigenvalues.tail(1)(0);
  const double spd_cut = 1e-12 * std::max(1.0, std::abs(lambda_max));
  payload->spd = payload->eigenvalues(0) > spd_cut;
  if (payload->spd) payload->llt.compute(payload->A);
  return payload;
}

namespace {

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

}  // namespace

CompositeOracle CompositeOracle::quadratic(const Eigen::MatrixXd& A,
                                           const ParameterPoint& b, double constant) {
  auto payload = make_quadratic_payload(A, b, constant);
  if (!payload->spd) {
    throw ConfigError("quadratic cost is not positive definite (lambda_min = " +
                      std::to_string(payload->eigenvalues(0)) + ")");
  }
  CompositeOracle o;
  o.dim_ = b.size();
  o.quad_ = payload;
  o.mu_ = payload->eigenvalues(0);
  o.smoothness_ = payload->eigenvalues.tail(1)(0);
  o.smooth_ = [payload](const ParameterPoint& theta, ParameterPoint& grad) {
    grad = payload->A * theta - payload->b;
    return 0.5 * theta.dot(payload->A * theta) - payload->b.dot(theta) + payload->c;
  };
  o.hessian_ = [payload](const ParameterPoint&) { return payload->A; };
  return o;
}

CompositeOracle CompositeOracle::least_squares(const Eigen::MatrixXd& design,
                                               const ParameterPoint& target) {
  if (design.rows() != target.size()) {
    throw ConfigError("least squares design/target sizes disagree");
  }
  Eigen::MatrixXd gram = design.transpose() * design;
  ParameterPoint rhs = design.transpose() * target;
  const double c = 0.5 * target.squaredNorm();
  auto payload = make_quadratic_payload(gram, rhs, c);
  CompositeOracle o;
  o.dim_ = gram.rows();
  o.quad_ = payload;
  o.mu_ = std::max(0.0, payload->spd ? payload->eigenvalues(0) : 0.0);
  o.smoothness_ = std::max(0.0, payload->eigenvalues.tail(1)(0));
  o.smooth_ = [payload](const ParameterPoint& theta, ParameterPoint& grad) {
    grad = payload->A * theta - payload->b;
    return 0.5 * theta.dot(payload->A * theta) - payload->b.dot(theta) + payload->c;
  };
  o.hessian_ = [payload](const ParameterPoint&) { return payload->A; };
  return o;
}

CompositeOracle CompositeOracle::elastic_net(const Eigen::MatrixXd& design,
                                             const ParameterPoint& target, double l1,
                                             double ridge) {
  if (design.rows() != target.size()) {
    throw ConfigError("elastic net design/target sizes disagree");
  }
  if (l1 < 0.0 || ridge <= 0.0) {
    throw ConfigError("elastic net needs l1 >= 0 and ridge > 0");
  }
  if (l1 == 0.0) {
    // pure ridge regression is an analytic quadratic
    Eigen::MatrixXd gram = design.transpose() * design;
    gram.diagonal().array() += ridge;
    return quadratic(gram, design.transpose() * target, 0.5 * target.squaredNorm());
  }
  struct Payload {
    Eigen::MatrixXd design;
    ParameterPoint target;
    double l1, ridge;
  };
  auto p = std::make_shared<Payload>(Payload{design, target, l1, ridge});
  CompositeOracle o;
  o.dim_ = design.cols();
  o.mu_ = ridge;  // from the explicit quadratic term; the data term only adds curvature
  o.smoothness_ = std::nullopt;
  o.smooth_ = [p](const ParameterPoint& theta, ParameterPoint& grad) {
    ParameterPoint r = p->design * theta - p->target;
    grad = p->design.transpose() * r + p->ridge * theta;
    return 0.5 * r.squaredNorm() + 0.5 * p->ridge * theta.squaredNorm();
  };
  o.nonsmooth_ = [p](const ParameterPoint& theta) {
    return p->l1 * theta.lpNorm<1>();
  };
  o.prox_ = [p](const ParameterPoint& z, double step) {
    ParameterPoint out(z.size());
    const double t = step * p->l1;
    for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = soft_threshold(z[i], t);
    return out;
  };
  return o;
}

CompositeOracle CompositeOracle::logistic(const Eigen::MatrixXd& features,
                                          const std::vector<int>& labels, int classes,
                                          double ridge) {
  const Eigen::Index m = features.rows();
  if (m == 0) throw ConfigError("logistic oracle built from an empty shard");
  if (static_cast<Eigen::Index>(labels.size()) != m) {
    throw ConfigError("logistic features/labels sizes disagree");
  }
  if (classes < 2) throw ConfigError("logistic needs at least 2 classes");
  if (ridge <= 0.0) throw ConfigError("logistic ridge must be positive");
  for (int y : labels) {
    if (y < 1 || y > classes) {
      throw DataError("label out of range [1, classes]: " + std::to_string(y));
    }
  }
  struct Payload {
    Eigen::MatrixXd aug;  // m x (d+1), last column 1
    std::vector<int> labels;
    int k;
    double ridge;
  };
  auto p = std::make_shared<Payload>();
  p->aug.resize(m, features.cols() + 1);
  p->aug.leftCols(features.cols()) = features;
  p->aug.col(features.cols()).setOnes();
  p->labels = labels;
  p->k = classes;
  p->ridge = ridge;

  const Eigen::Index block = features.cols() + 1;
  const Eigen::Index dim = block * classes;

  auto scores = [p, block](const ParameterPoint& theta) {
    Eigen::Map<const Eigen::MatrixXd> U(theta.data(), block, p->k);
    return Eigen::MatrixXd(p->aug * U);  // m x k
  };
  auto probabilities = [](Eigen::MatrixXd z) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const double zmax = z.row(i).maxCoeff();
      z.row(i) = (z.row(i).array() - zmax).exp();
      z.row(i) /= z.row(i).sum();
    }
    return z;
  };

  CompositeOracle o;
  o.dim_ = dim;
  o.mu_ = ridge;
  // Frobenius-based upper bound on the data curvature; rates only need an
  // upper bound.
  o.smoothness_ = ridge + 0.5 * p->aug.squaredNorm() / static_cast<double>(m);
  o.smooth_ = [p, block, scores](const ParameterPoint& theta, ParameterPoint& grad) {
    const Eigen::Index m_loc = p->aug.rows();
    Eigen::MatrixXd z = scores(theta);
    double loss = 0.0;
    Eigen::MatrixXd residual(m_loc, p->k);  // softmax(z) - onehot(y)
    for (Eigen::Index i = 0; i < m_loc; ++i) {
      const double zmax = z.row(i).maxCoeff();
      const Eigen::ArrayXd e = (z.row(i).transpose().array() - zmax).exp();
      const double sum = e.sum();
      loss += std::log(sum) + zmax - z(i, p->labels[i] - 1);
      residual.row(i) = (e / sum).matrix().transpose();
      residual(i, p->labels[i] - 1) -= 1.0;
    }
    Eigen::MatrixXd g = p->aug.transpose() * residual / static_cast<double>(m_loc);
    grad = Eigen::Map<ParameterPoint>(g.data(), g.size()) + p->ridge * theta;
    return loss / static_cast<double>(m_loc) + 0.5 * p->ridge * theta.squaredNorm();
  };
  o.hessian_ = [p, block, dim, scores, probabilities](const ParameterPoint& theta) {
    const Eigen::Index m_loc = p->aug.rows();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::MatrixXd prob = probabilities(scores(theta));
    for (Eigen::Index i = 0; i < m_loc; ++i) {
      const Eigen::MatrixXd outer = p->aug.row(i).transpose() * p->aug.row(i);
      for (int a = 0; a < p->k; ++a) {
        for (int b = 0; b < p->k; ++b) {
          const double w = prob(i, a) * ((a == b ? 1.0 : 0.0) - prob(i, b));
          if (w != 0.0) H.block(a * block, b * block, block, block) += w * outer;
        }
      }
    }
    H /= static_cast<double>(m_loc);
    H.diagonal().array() += p->ridge;
    return H;
  };
  return o;
}

CompositeOracle CompositeOracle::custom(Eigen::Index dim, double mu,
                                        std::optional<double> smoothness,
                                        SmoothFn smooth, ValueFn nonsmooth,
                                        ProxFn prox) {
  if (dim < 1) throw ConfigError("oracle dimension must be positive");
  CompositeOracle o;
  o.dim_ = dim;
  o.mu_ = mu;
  o.smoothness_ = smoothness;
  o.smooth_ = std::move(smooth);
  o.nonsmooth_ = std::move(nonsmooth);
  o.prox_ = std::move(prox);
  return o;
}

std::pair<double, ParameterPoint> CompositeOracle::evaluate(
    const ParameterPoint& theta) const {
  require_dim(theta, dim_, "oracle evaluation");
  require_finite(theta, "oracle evaluation");
  ParameterPoint grad(dim_);
  const double sv = smooth_(theta, grad);
  const double total = sv + nonsmooth_value(theta);
  if (!std::isfinite(total)) {
    throw NumericalError("oracle produced a non-finite value");
  }
  return {total, std::move(grad)};
}

double CompositeOracle::value(const ParameterPoint& theta) const {
  ParameterPoint grad(dim_);
  return smooth_(theta, grad) + nonsmooth_value(theta);
}

std::pair<double, ParameterPoint> CompositeOracle::smooth_value_grad(
    const ParameterPoint& theta) const {
  ParameterPoint grad(dim_);
  const double v = smooth_(theta, grad);
  return {v, std::move(grad)};
}

double CompositeOracle::nonsmooth_value(const ParameterPoint& theta) const {
  return nonsmooth_ ? nonsmooth_(theta) : 0.0;
}

ParameterPoint CompositeOracle::prox_nonsmooth(const ParameterPoint& z,
                                               double step) const {
  if (!(step > 0.0)) throw ConfigError("prox step must be positive");
  return prox_ ? prox_(z, step) : z;
}

std::optional<Eigen::MatrixXd> CompositeOracle::hessian(
    const ParameterPoint& theta) const {
  if (!hessian_) return std::nullopt;
  return hessian_(theta);
}

ConjugateResult CompositeOracle::conjugate_g(const ParameterPoint& xi, double nu,
                                             ConjugatePolicy policy,
                                             const ParameterPoint* warm) const {
  require_dim(xi, dim_, "conjugate argument");
  require_finite(xi, "conjugate argument");
  if (!(nu > 0.0)) throw ConfigError("conjugate needs nu > 0");
  if (nu > mu_ * (1.0 + 1e-12)) {
    throw ConfigError("conjugate needs nu <= mu (got nu = " + std::to_string(nu) +
                      ", mu = " + std::to_string(mu_) + ")");
  }

  if (quad_) {
    // g is quadratic with Hessian A - nu I; sup in closed form through the
    // spectral decomposition, with flat directions handled as an indicator.
    const auto& q = *quad_;
    const ParameterPoint w = xi + q.b;
    const Eigen::VectorXd coeffs = q.eigenvectors.transpose() * w;
    const double lambda_max = q.eigenvalues.tail(1)(0);
    const double cut = 1e-12 * std::max(1.0, std::abs(lambda_max));

    double value = -q.c;
    double null_sq = 0.0;
    Eigen::VectorXd max_coeffs = Eigen::VectorXd::Zero(dim_);
    Eigen::VectorXd feas_coeffs = coeffs;
    for (Eigen::Index i = 0; i < dim_; ++i) {
      const double shifted = q.eigenvalues(i) - nu;
      if (shifted > cut) {
        value += 0.5 * coeffs(i) * coeffs(i) / shifted;
        max_coeffs(i) = coeffs(i) / shifted;
      } else {
        null_sq += coeffs(i) * coeffs(i);
        feas_coeffs(i) = 0.0;
      }
    }
    ConjugateResult out;
    out.residual = std::sqrt(null_sq);
    out.maximizer = q.eigenvectors * max_coeffs;
    out.feasible_point = q.eigenvectors * feas_coeffs - q.b;
    out.value = value;
    if (policy == ConjugatePolicy::strict &&
        out.residual > indicator_tol_ * (1.0 + w.norm())) {
      out.value = std::numeric_limits<double>::infinity();
    }
    return out;
  }

  if (!(nu < mu_)) {
    throw ConfigError(
        "numeric conjugate needs nu < mu strictly; request a substituted nu");
  }

  // Inner problem: minimize h(theta) = f(theta) - (nu/2)||theta||^2 - <xi,theta>,
  // which is (mu - nu)-strongly convex; g*(xi) = -min h.
  FbsProblem inner;
  inner.smooth = [this, &xi, nu](const ParameterPoint& theta, ParameterPoint& grad) {
    const double sv = smooth_(theta, grad);
    grad -= nu * theta + xi;
    return sv - 0.5 * nu * theta.squaredNorm() - xi.dot(theta);
  };
  inner.simple = nonsmooth_;
  inner.prox = prox_;

  const double tol = conjugate_settings.tol_scale * (xi.norm() + 1.0);
  FbsOptions opts;
  opts.max_iters = conjugate_settings.max_iters;
  ParameterPoint start =
      warm && warm->size() == dim_ ? *warm : ParameterPoint::Zero(dim_);
  FbsResult res = accelerated_fbs(
      inner, std::move(start), opts,
      [tol](const FbsIterate& it) { return it.residual_norm <= tol; },
      /*want_residual=*/true);
  if (!res.stopped) {
    throw NumericalError("conjugate evaluation did not reach tolerance " +
                             std::to_string(tol),
                         res.residual_norm);
  }
  ConjugateResult out;
  out.value = -res.objective;
  out.maximizer = std::move(res.x);
  out.residual = res.residual_norm;
  out.feasible_point = xi;
  return out;
}

bool CompositeOracle::has_exact_local_solver() const { return quad_ && quad_->spd; }

ParameterPoint CompositeOracle::exact_local_minimizer(const ParameterPoint& zeta,
                                                      double nu) const {
  if (!has_exact_local_solver()) {
    throw ConfigError("exact local solves are only available for SPD quadratics");
  }
  require_dim(zeta, dim_, "exact local solve");
  return quad_->llt.solve(quad_->b + nu * zeta);
}

CompositeOracle CompositeOracle::regularized(double alpha) const {
  if (!(alpha > 0.0)) throw ConfigError("regularization weight must be positive");
  if (quad_) {
    Eigen::MatrixXd A = quad_->A;
    A.diagonal().array() += alpha;
    CompositeOracle o = quadratic(A, quad_->b, quad_->c);
    o.conjugate_settings = conjugate_settings;
    return o;
  }
  CompositeOracle o;
  o.dim_ = dim_;
  o.mu_ = mu_ + alpha;
  if (smoothness_) o.smoothness_ = *smoothness_ + alpha;
  const SmoothFn base = smooth_;
  o.smooth_ = [base, alpha](const ParameterPoint& theta, ParameterPoint& grad) {
    const double v = base(theta, grad);
    grad += alpha * theta;
    return v + 0.5 * alpha * theta.squaredNorm();
  };
  o.nonsmooth_ = nonsmooth_;
  o.prox_ = prox_;
  if (hessian_) {
    const HessianFn base_h = hessian_;
    o.hessian_ = [base_h, alpha](const ParameterPoint& theta) {
      Eigen::MatrixXd H = base_h(theta);
      H.diagonal().array() += alpha;
      return H;
    };
  }
  o.conjugate_settings = conjugate_settings;
  return o;
}

double conjugate_upper_slack(const CompositeOracle& oracle,
                             const ConjugateResult& result, double nu) {
  if (oracle.conjugate_mode() == ConjugateMode::analytic) return 0.0;
  const double gap = oracle.mu() - nu;
  return result.residual * result.residual / (2.0 * gap);
}

std::vector<CompositeOracle> regularize(const std::vector<CompositeOracle>& oracles,
                                        double alpha) {
  std::vector<CompositeOracle> out;
  out.reserve(oracles.size());
  for (const auto& o : oracles) out.push_back(o.regularized(alpha));
  return out;
}

FamilyConstants family_constants(const std::vector<CompositeOracle>& oracles) {
  if (oracles.empty()) throw ConfigError("empty oracle family");
  FamilyConstants fc;
  fc.mu = oracles.front().mu();
  fc.smoothness = oracles.front().smoothness();
  for (const auto& o : oracles) {
    fc.mu = std::min(fc.mu, o.mu());
    if (!o.smoothness()) {
      fc.smoothness = std::nullopt;
    } else if (fc.smoothness) {
      fc.smoothness = std::max(*fc.smoothness, *o.smoothness());
    }
  }
  return fc;
}

}  // namespace dualfl
