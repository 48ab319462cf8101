#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dualfl/oracle.hpp"
#include "dualfl/problems.hpp"
#include "dualfl/rng.hpp"

using namespace dualfl;

namespace {

CompositeOracle one_dim_quadratic(double a, double center, double weight = 1.0) {
  // f(x) = (weight/2) * a * (x - center)^2, expanded into A, b, c form
  Eigen::MatrixXd A(1, 1);
  A(0, 0) = weight * a;
  ParameterPoint b(1);
  b(0) = weight * a * center;
  return CompositeOracle::quadratic(A, b, 0.5 * weight * a * center * center);
}

double central_difference(const CompositeOracle& oracle, const ParameterPoint& theta,
                          Eigen::Index i, double h) {
  ParameterPoint lo = theta, hi = theta;
  lo[i] -= h;
  hi[i] += h;
  return (oracle.smooth_value_grad(hi).first - oracle.smooth_value_grad(lo).first) /
         (2.0 * h);
}

void check_gradient(const CompositeOracle& oracle, Rng& rng, double rel_tol = 1e-6) {
  for (int trial = 0; trial < 20; ++trial) {
    const ParameterPoint theta = rng.normal_vector(oracle.dim());
    const ParameterPoint grad = oracle.smooth_value_grad(theta).second;
    const double scale = grad.norm() + 1.0;
    for (Eigen::Index i = 0; i < oracle.dim(); ++i) {
      const double fd = central_difference(oracle, theta, i, 1e-5);
      CHECK(std::abs(fd - grad[i]) <= rel_tol * scale);
    }
  }
}

}  // namespace

TEST_CASE("quadratic oracle: value and gradient at the minimizer") {
  CompositeOracle f = one_dim_quadratic(1.0, 1.0);
  ParameterPoint theta(1);
  theta << 1.0;
  auto [value, grad] = f.evaluate(theta);
  CHECK(value == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(grad[0] == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("random SPD quadratic: gradient equals A theta - b entrywise") {
  Rng rng(17);
  const Eigen::MatrixXd g = rng.normal_matrix(5, 5);
  const Eigen::MatrixXd a = g * g.transpose() + 5.0 * Eigen::MatrixXd::Identity(5, 5);
  const ParameterPoint b = rng.normal_vector(5);
  CompositeOracle f = CompositeOracle::quadratic(a, b);
  for (int trial = 0; trial < 10; ++trial) {
    const ParameterPoint theta = rng.normal_vector(5);
    const ParameterPoint grad = f.smooth_value_grad(theta).second;
    const ParameterPoint direct = a * theta - b;
    for (Eigen::Index i = 0; i < 5; ++i) {
      CHECK(grad[i] == doctest::Approx(direct[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("non-SPD quadratic construction is rejected") {
  Eigen::MatrixXd a(2, 2);
  a << 1.0, 0.0, 0.0, -0.5;
  CHECK_THROWS_AS(CompositeOracle::quadratic(a, ParameterPoint::Zero(2)), ConfigError);
}

TEST_CASE("dimension mismatch and non-finite input are rejected") {
  CompositeOracle f = one_dim_quadratic(1.0, 0.0);
  CHECK_THROWS_AS(f.evaluate(ParameterPoint::Zero(2)), ConfigError);
  ParameterPoint bad(1);
  bad << std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(f.evaluate(bad), std::invalid_argument);
}

TEST_CASE("logistic at zero parameters: loss log k, uniform-minus-onehot bias grad") {
  Rng rng(3);
  const int k = 10;
  const Eigen::MatrixXd x = rng.normal_matrix(40, 6);
  std::vector<int> y(40);
  for (int i = 0; i < 40; ++i) y[static_cast<std::size_t>(i)] = (i % k) + 1;
  CompositeOracle f = CompositeOracle::logistic(x, y, k, 1e-2);
  const ParameterPoint zero = ParameterPoint::Zero(f.dim());
  auto [value, grad] = f.evaluate(zero);
  CHECK(value == doctest::Approx(std::log(10.0)).epsilon(1e-14));
  // bias entries sit at the end of each class block
  const Eigen::Index block = 7;
  for (int l = 0; l < k; ++l) {
    double count = 0.0;
    for (int i = 0; i < 40; ++i) count += (y[static_cast<std::size_t>(i)] == l + 1);
    const double expected = 1.0 / k - count / 40.0;
    CHECK(grad[block * l + block - 1] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("gradients match central differences across families") {
  Rng rng(11);
  SUBCASE("quadratic") {
    auto family = make_quadratic_family(1, 6, 0.5, 20.0, 1.0, rng);
    check_gradient(family[0], rng);
  }
  SUBCASE("elastic net smooth part") {
    auto family = make_elastic_net_family(1, 8, 20, 0.3, 0.05, 0.1, rng);
    check_gradient(family[0], rng);
  }
  SUBCASE("logistic") {
    Dataset data = make_blob_dataset(60, 4, 3, 2.0, 1.0, true, rng);
    auto family = make_logistic_family(data, 1, 1e-2, PartitionScheme::contiguous, 1);
    check_gradient(family[0], rng, 2e-6);
  }
}

TEST_CASE("conjugate of a one-dimensional quadratic in closed form") {
  // f = theta^2/2, nu = 1/2 leaves g = theta^2/4, so g*(xi) = xi^2
  CompositeOracle f = one_dim_quadratic(1.0, 0.0);
  ParameterPoint xi(1);
  xi << 0.3;
  const ConjugateResult r = f.conjugate_g(xi, 0.5);
  CHECK(r.value == doctest::Approx(0.09).epsilon(1e-14));
  CHECK(r.maximizer[0] == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(r.residual == 0.0);
}

TEST_CASE("conjugate of an affine shifted cost is an indicator") {
  // f = (theta-1)^2/2 at nu = 1: g(theta) = -theta + 1/2
  CompositeOracle f = one_dim_quadratic(1.0, 1.0);
  ParameterPoint at_support(1), off_support(1);
  at_support << -1.0;
  off_support << 0.2;
  const ConjugateResult ok = f.conjugate_g(at_support, 1.0);
  CHECK(ok.value == doctest::Approx(-0.5).epsilon(1e-13));
  const ConjugateResult inf = f.conjugate_g(off_support, 1.0);
  CHECK(std::isinf(inf.value));
  CHECK(inf.residual > 0.0);
  // the projected policy evaluates the feasible projection instead
  const ConjugateResult proj =
      f.conjugate_g(off_support, 1.0, ConjugatePolicy::projected);
  CHECK(std::isfinite(proj.value));
  CHECK(proj.feasible_point[0] == doctest::Approx(-1.0).epsilon(1e-13));
}

TEST_CASE("Fenchel-Young equality at matched pairs, inequality elsewhere") {
  Rng rng(23);
  auto family = make_quadratic_family(1, 5, 1.0, 8.0, 1.0, rng);
  const CompositeOracle& f = family[0];
  const double nu = 0.6;
  auto g_value = [&](const ParameterPoint& theta) {
    return f.value(theta) - 0.5 * nu * theta.squaredNorm();
  };
  auto g_grad = [&](const ParameterPoint& theta) {
    return ParameterPoint(f.smooth_value_grad(theta).second - nu * theta);
  };
  for (int trial = 0; trial < 20; ++trial) {
    const ParameterPoint theta_hat = rng.normal_vector(5);
    const ParameterPoint xi = g_grad(theta_hat);
    const ConjugateResult r = f.conjugate_g(xi, nu);
    CHECK(r.value ==
          doctest::Approx(xi.dot(theta_hat) - g_value(theta_hat)).epsilon(1e-10));
    // inequality at 5 unrelated points
    for (int other = 0; other < 5; ++other) {
      const ParameterPoint theta = rng.normal_vector(5);
      CHECK(r.value + g_value(theta) >= xi.dot(theta) - 1e-10);
    }
  }
}

TEST_CASE("numeric conjugate agrees with the analytic one on a quadratic") {
  Rng rng(29);
  const Eigen::MatrixXd g = rng.normal_matrix(4, 4);
  const Eigen::MatrixXd a = g * g.transpose() + 2.0 * Eigen::MatrixXd::Identity(4, 4);
  const ParameterPoint b = rng.normal_vector(4);
  CompositeOracle analytic = CompositeOracle::quadratic(a, b);
  // the same cost expressed through callbacks has no analytic payload
  CompositeOracle numeric = CompositeOracle::custom(
      4, analytic.mu(), analytic.smoothness(),
      [a, b](const ParameterPoint& theta, ParameterPoint& grad) {
        grad = a * theta - b;
        return 0.5 * theta.dot(a * theta) - b.dot(theta);
      });
  CHECK(numeric.conjugate_mode() == ConjugateMode::numeric);
  const double nu = 0.5 * analytic.mu();
  for (int trial = 0; trial < 5; ++trial) {
    const ParameterPoint xi = rng.normal_vector(4);
    const ConjugateResult exact = analytic.conjugate_g(xi, nu);
    const ConjugateResult approx = numeric.conjugate_g(xi, nu);
    CHECK(approx.value == doctest::Approx(exact.value).epsilon(1e-8));
    CHECK(approx.residual <= 1e-10 * (xi.norm() + 1.0));
    CHECK((approx.maximizer - exact.maximizer).norm() <= 1e-6);
  }
}

TEST_CASE("conjugate preconditions: nu > mu rejected, numeric nu = mu rejected") {
  CompositeOracle quad = one_dim_quadratic(1.0, 0.0);
  ParameterPoint xi = ParameterPoint::Zero(1);
  CHECK_THROWS_AS(quad.conjugate_g(xi, 1.5), ConfigError);
  CompositeOracle numeric = CompositeOracle::custom(
      1, 1.0, 1.0, [](const ParameterPoint& theta, ParameterPoint& grad) {
        grad = theta;
        return 0.5 * theta.squaredNorm();
      });
  CHECK_THROWS_AS(numeric.conjugate_g(xi, 1.0), ConfigError);
  CHECK_NOTHROW(numeric.conjugate_g(xi, 0.999));
}

TEST_CASE("elastic net prox satisfies the subgradient optimality condition") {
  Rng rng(31);
  auto family = make_elastic_net_family(1, 6, 15, 0.4, 0.05, 0.1, rng);
  const CompositeOracle& f = family[0];
  const double l1 = 0.4;
  for (int trial = 0; trial < 20; ++trial) {
    const ParameterPoint z = 2.0 * rng.normal_vector(6);
    const double step = rng.uniform(0.1, 2.0);
    const ParameterPoint p = f.prox_nonsmooth(z, step);
    for (Eigen::Index i = 0; i < 6; ++i) {
      const double sub = (z[i] - p[i]) / step;  // must lie in l1 * sign(p_i)
      if (p[i] > 0.0) {
        CHECK(sub == doctest::Approx(l1).epsilon(1e-12));
      } else if (p[i] < 0.0) {
        CHECK(sub == doctest::Approx(-l1).epsilon(1e-12));
      } else {
        CHECK(std::abs(sub) <= l1 + 1e-12);
      }
    }
  }
}

TEST_CASE("strong convexity certificate across families") {
  Rng rng(37);
  auto check = [&](const CompositeOracle& f, int dim) {
    for (int trial = 0; trial < 20; ++trial) {
      const ParameterPoint theta = rng.normal_vector(dim);
      const ParameterPoint phi = rng.normal_vector(dim);
      const ParameterPoint grad_smooth = f.smooth_value_grad(phi).second;
      // subgradient of the l1 part at phi (sign vector works off zero)
      ParameterPoint sub = grad_smooth;
      if (f.has_nonsmooth()) {
        const double h = 1e-7;
        for (Eigen::Index i = 0; i < dim; ++i) {
          ParameterPoint lo = phi, hi = phi;
          lo[i] -= h;
          hi[i] += h;
          sub[i] += (f.nonsmooth_value(hi) - f.nonsmooth_value(lo)) / (2.0 * h);
        }
      }
      const double lhs = f.value(theta);
      const double rhs = f.value(phi) + sub.dot(theta - phi) +
                         0.5 * f.mu() * (theta - phi).squaredNorm();
      CHECK(lhs >= rhs - 1e-9 * (1.0 + std::abs(lhs)));
    }
  };
  SUBCASE("quadratic") {
    auto family = make_quadratic_family(1, 5, 0.7, 12.0, 1.0, rng);
    check(family[0], 5);
  }
  SUBCASE("elastic net") {
    auto family = make_elastic_net_family(1, 5, 12, 0.2, 0.05, 0.1, rng);
    check(family[0], 5);
  }
  SUBCASE("logistic") {
    Dataset data = make_blob_dataset(45, 4, 3, 2.0, 1.0, true, rng);
    auto family = make_logistic_family(data, 1, 1e-2, PartitionScheme::contiguous, 1);
    check(family[0], static_cast<int>(family[0].dim()));
  }
}

TEST_CASE("regularize: flat cost turns into a pure quadratic") {
  CompositeOracle flat = CompositeOracle::custom(
      1, 0.0, 0.0, [](const ParameterPoint&, ParameterPoint& grad) {
        grad.setZero();
        return 0.0;
      });
  CompositeOracle reg = flat.regularized(2.0);
  ParameterPoint theta(1);
  theta << 3.0;
  auto [value, grad] = reg.evaluate(theta);
  CHECK(value == doctest::Approx(9.0));
  CHECK(grad[0] == doctest::Approx(6.0));
  CHECK(reg.mu() == doctest::Approx(2.0));
}

TEST_CASE("regularize: underdetermined least squares becomes solvable") {
  Rng rng(41);
  auto family = make_least_squares_family(2, 8, 6, 0.5, 2.0, 0.0, rng);
  CHECK(family.oracles[0].mu() == doctest::Approx(0.0).epsilon(1e-10));
  CHECK_FALSE(family.oracles[0].has_exact_local_solver());
  const double alpha = 1e-2;
  auto reg = regularize(family.oracles, alpha);
  CHECK(reg[0].mu() == doctest::Approx(alpha).epsilon(1e-6));
  CHECK(reg[0].has_exact_local_solver());
  // unique ridge minimizer matches the normal equations solved directly
  const ParameterPoint minimizer =
      reg[0].exact_local_minimizer(ParameterPoint::Zero(8), alpha);
  const Eigen::MatrixXd hessian = *reg[0].hessian(ParameterPoint::Zero(8));
  const ParameterPoint rhs = -reg[0].smooth_value_grad(ParameterPoint::Zero(8)).second;
  const ParameterPoint direct = hessian.ldlt().solve(rhs);
  CHECK((minimizer - direct).norm() <= 1e-10);
}

TEST_CASE("regularizing twice equals once with the summed weight") {
  Rng rng(43);
  Dataset data = make_blob_dataset(30, 3, 3, 2.0, 1.0, true, rng);
  auto family = make_logistic_family(data, 1, 1e-2, PartitionScheme::contiguous, 1);
  const CompositeOracle twice = family[0].regularized(0.3).regularized(0.7);
  const CompositeOracle once = family[0].regularized(1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const ParameterPoint theta = rng.normal_vector(family[0].dim());
    CHECK(twice.value(theta) ==
          doctest::Approx(once.value(theta)).epsilon(1e-12));
  }
  CHECK(twice.mu() == doctest::Approx(once.mu()).epsilon(1e-12));
  CHECK_THROWS_AS(family[0].regularized(0.0), ConfigError);
  CHECK_THROWS_AS(family[0].regularized(-1.0), ConfigError);
}

TEST_CASE("family constants aggregate min mu and max L") {
  Rng rng(47);
  auto family = make_quadratic_family(3, 4, 0.5, 10.0, 1.0, rng);
  const FamilyConstants fc = family_constants(family);
  CHECK(fc.mu == doctest::Approx(0.5).epsilon(1e-9));
  REQUIRE(fc.smoothness.has_value());
  CHECK(*fc.smoothness == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(fc.kappa() == doctest::Approx(10.0).epsilon(1e-8));
}

TEST_CASE("weighted-center family: pooled minimizer is the weighted mean") {
  // f_1 = (2/2)(x-1)^2, f_2 = (1/2)(x+1)^2 -> minimizer (2*1 + 1*(-1))/3
  std::vector<CompositeOracle> family;
  family.push_back(one_dim_quadratic(1.0, 1.0, 2.0));
  family.push_back(one_dim_quadratic(1.0, -1.0, 1.0));
  const ParameterPoint zero = ParameterPoint::Zero(1);
  const Eigen::MatrixXd pooled = 0.5 * (*family[0].hessian(zero) + *family[1].hessian(zero));
  const ParameterPoint rhs = -0.5 * (family[0].smooth_value_grad(zero).second +
                                     family[1].smooth_value_grad(zero).second);
  const ParameterPoint minimizer = pooled.llt().solve(rhs);
  CHECK(minimizer(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}
