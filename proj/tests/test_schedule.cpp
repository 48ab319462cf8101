#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dualfl/schedule.hpp"

using namespace dualfl;

namespace {

// Independent step of the recursion, written directly from the update rule.
void naive_step(double rho, double& t, double& beta) {
  const double u = 1.0 - rho * t * t;
  const double t_next = (u + std::sqrt(u * u + 4.0 * t * t)) / 2.0;
  beta = (t - 1.0) / t_next * (1.0 - t_next * rho) / (1.0 - rho);
  t = t_next;
}

}  // namespace

TEST_CASE("first advance: rho = 0 gives the golden-ratio step and beta 0") {
  MomentumState s = make_momentum(0.0);
  const MomentumStep step = advance(s);
  CHECK(step.next.t == doctest::Approx((1.0 + std::sqrt(5.0)) / 2.0).epsilon(1e-15));
  CHECK(step.beta == 0.0);
}

TEST_CASE("second advance at rho = 0 matches the direct recursion") {
  // recompute the expected values with the naive recursion
  double t = 1.0, beta = 0.0;
  naive_step(0.0, t, beta);
  naive_step(0.0, t, beta);
  // frozen from the recursion above: t2 = (1 + sqrt(5 + 4*t1))/2
  const double t1 = (1.0 + std::sqrt(5.0)) / 2.0;
  const double t2_closed = (1.0 + std::sqrt(5.0 + 4.0 * t1)) / 2.0;
  CHECK(t == doctest::Approx(t2_closed).epsilon(1e-15));

  MomentumState s = make_momentum(0.0);
  s = advance(s).next;
  const MomentumStep second = advance(s);
  CHECK(second.next.t == doctest::Approx(t).epsilon(1e-15));
  CHECK(second.beta == doctest::Approx(beta).epsilon(1e-15));
  CHECK(second.beta == doctest::Approx((t1 - 1.0) / t2_closed).epsilon(1e-15));
}

TEST_CASE("rho = 0.01 first step evaluates the update rule directly") {
  MomentumState s = make_momentum(0.01);
  const MomentumStep step = advance(s);
  const double expected = (0.99 + std::sqrt(0.99 * 0.99 + 4.0)) / 2.0;
  CHECK(step.next.t == doctest::Approx(expected).epsilon(1e-15));
  CHECK(step.next.t == doctest::Approx(1.6108071).epsilon(1e-7));
  CHECK(step.beta == 0.0);
}

TEST_CASE("rho = 0 reduces to the classical accelerated sequence over 1000 steps") {
  MomentumState s = make_momentum(0.0);
  double t_classic = 1.0;
  for (int i = 0; i < 1000; ++i) {
    const double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t_classic * t_classic)) / 2.0;
    const double beta_classic = (t_classic - 1.0) / t_next;
    const MomentumStep step = advance(s);
    CHECK(std::abs(step.next.t - t_next) <= 1e-12 * t_next);
    CHECK(std::abs(step.beta - beta_classic) <= 1e-12);
    t_classic = t_next;
    s = step.next;
  }
}

TEST_CASE("rho > 0: t climbs monotonically to 1/sqrt(rho), beta to its limit") {
  for (const double rho : {0.3, 0.01, 1e-3}) {
    CAPTURE(rho);
    MomentumState s = make_momentum(rho);
    const double t_limit = 1.0 / std::sqrt(rho);
    double beta = 0.0;
    double t_prev = s.t;
    for (int i = 0; i < 10000; ++i) {
      const MomentumStep step = advance(s);
      CHECK(step.next.t >= t_prev - 1e-14);
      CHECK(step.next.t <= t_limit * (1.0 + 1e-12));
      CHECK(step.beta >= 0.0);
      CHECK(step.beta < 1.0);
      t_prev = step.next.t;
      beta = step.beta;
      s = step.next;
    }
    CHECK(s.t == doctest::Approx(t_limit).epsilon(1e-8));
    const double beta_limit = (1.0 - std::sqrt(rho)) / (1.0 + std::sqrt(rho));
    CHECK(beta == doctest::Approx(beta_limit).epsilon(1e-8));
  }
}

TEST_CASE("t = 1/sqrt(rho) is an exact fixed point") {
  for (const double rho : {0.5, 0.02, 1e-4}) {
    CAPTURE(rho);
    MomentumState s{1.0 / std::sqrt(rho), rho, 0};
    const MomentumStep step = advance(s);
    CHECK(std::abs(step.next.t - s.t) <= 4.0 * std::numeric_limits<double>::epsilon() * s.t);
  }
}

TEST_CASE("rho outside [0, 1) is rejected") {
  CHECK_THROWS_AS(make_momentum(1.0), ConfigError);
  CHECK_THROWS_AS(make_momentum(1.5), ConfigError);
  CHECK_THROWS_AS(make_momentum(-0.1), ConfigError);
  MomentumState bad{1.0, 1.0, 0};
  CHECK_THROWS_AS(advance(bad), ConfigError);
}
