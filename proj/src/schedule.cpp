#include "dualfl/schedule.hpp"

#include <cmath>

namespace dualfl {

MomentumState make_momentum(double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw ConfigError("momentum parameter rho must lie in [0, 1), got " +
                      std::to_string(rho));
  }
  return MomentumState{1.0, rho, 0};
}

MomentumStep advance(const MomentumState& state) {
  const double rho = state.rho;
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw ConfigError("momentum parameter rho must lie in [0, 1)");
  }
  const double t = state.t;
  const double u = 1.0 - rho * t * t;
  const double t_next = 0.5 * (u + std::sqrt(u * u + 4.0 * t * t));
  const double beta = (t - 1.0) / t_next * (1.0 - t_next * rho) / (1.0 - rho);
  return MomentumStep{MomentumState{t_next, rho, state.n + 1}, beta};
}

}  // namespace dualfl
