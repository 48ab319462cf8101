#pragma once

#include "dualfl/engine.hpp"

namespace dualfl {

enum class BaselineKind { gd, fedavg };

enum class BaselineStep {
  backtracking,  // per-step line search (gd only)
  optimal,       // 2/(L + mu) from the family constants
  fixed,         // explicit step_size
};

struct BaselineConfig {
  BaselineKind kind = BaselineKind::gd;
  long rounds = 100;
  int local_steps = 1;  // fedavg: gradient steps per client per round
  BaselineStep step = BaselineStep::backtracking;
  double step_size = 0.0;
};

struct BaselineResult {
  std::vector<RoundRecord> records;
  ParameterPoint model;
};

/// gd: full proximal-gradient descent on the pooled cost, one round per
/// step. fedavg: K local proximal-gradient steps per client, then a plain
/// average, with no control variate. Both emit the engine's trace schema.
BaselineResult run_baseline(const std::vector<CompositeOracle>& oracles,
                            const BaselineConfig& config,
                            const ReferencePoint* reference = nullptr);

}  // namespace dualfl
