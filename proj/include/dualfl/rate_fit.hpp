#pragma once

#include <cstddef>
#include <vector>

#include "dualfl/common.hpp"

namespace dualfl {

struct RateFit {
  // exp(slope) of the least-squares fit of log(error) against the round index
  double linear_factor = 0.0;
  // max over the window of n^2 * error, normalized by its value at the
  // window start; bounded for O(1/n^2) sequences
  double sublinear_sup = 0.0;
};

/// Fits convergence behavior of a positive error sequence indexed by round.
/// The window [first, last] is inclusive and needs at least 5 entries.
RateFit rate_fit(const std::vector<double>& errors, std::size_t first,
                 std::size_t last);

}  // namespace dualfl
