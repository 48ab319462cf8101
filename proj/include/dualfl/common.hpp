#pragma once

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>
#include <string>

namespace dualfl {

/// A point in the flat parameter space shared by server and clients.
using ParameterPoint = Eigen::VectorXd;

/// Invalid run configuration: bad hyperparameters, dimension mismatches,
/// inconsistent module wiring. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (datasets, trace paths).
/// Maps to CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative computation failed to reach its certified tolerance.
/// Carries the residual that was actually achieved.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what,
                          double achieved = std::numeric_limits<double>::quiet_NaN())
      : std::runtime_error(what), achieved_(achieved) {}
  double achieved_residual() const { return achieved_; }

 private:
  double achieved_;
};

inline bool is_finite(const ParameterPoint& v) { return v.allFinite(); }

inline void require_finite(const ParameterPoint& v, const char* what) {
  if (!v.allFinite()) {
    throw std::invalid_argument(std::string("non-finite input: ") + what);
  }
}

inline void require_dim(const ParameterPoint& v, Eigen::Index dim, const char* what) {
  if (v.size() != dim) {
    throw ConfigError(std::string("dimension mismatch in ") + what + ": got " +
                      std::to_string(v.size()) + ", expected " + std::to_string(dim));
  }
}

}  // namespace dualfl
