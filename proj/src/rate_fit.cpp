#include "dualfl/rate_fit.hpp"

#include <cmath>

namespace dualfl {

RateFit rate_fit(const std::vector<double>& errors, std::size_t first,
                 std::size_t last) {
  if (last >= errors.size() || first > last) {
    throw ConfigError("rate_fit: window out of range");
  }
  const std::size_t count = last - first + 1;
  if (count < 5) throw ConfigError("rate_fit: window needs at least 5 entries");
  for (std::size_t i = first; i <= last; ++i) {
    if (!(errors[i] > 0.0)) {
      throw NumericalError("rate_fit: nonpositive error at round " + std::to_string(i),
                           errors[i]);
    }
  }

  // least squares on (n, log e_n)
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = first; i <= last; ++i) {
    const double x = static_cast<double>(i);
    const double y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(count);
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);

  const double base =
      static_cast<double>(first) * static_cast<double>(first) * errors[first];
  double sup = 0.0;
  for (std::size_t i = first; i <= last; ++i) {
    const double s = static_cast<double>(i) * static_cast<double>(i) * errors[i];
    sup = std::max(sup, s);
  }

  RateFit fit;
  fit.linear_factor = std::exp(slope);
  fit.sublinear_sup = base > 0.0 ? sup / base : std::numeric_limits<double>::infinity();
  return fit;
}

}  // namespace dualfl
