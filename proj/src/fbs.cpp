#include "dualfl/fbs.hpp"

#include <cmath>

#include "dualfl/schedule.hpp"

namespace dualfl {

namespace {

double simple_value(const FbsProblem& p, const ParameterPoint& x) {
  return p.simple ? p.simple(x) : 0.0;
}

ParameterPoint apply_prox(const FbsProblem& p, const ParameterPoint& z, double step) {
  return p.prox ? p.prox(z, step) : z;
}

}  // namespace

FbsResult accelerated_fbs(const FbsProblem& problem, ParameterPoint x0,
                          const FbsOptions& options,
                          const std::function<bool(const FbsIterate&)>& stop,
                          bool want_residual) {
  ParameterPoint x = std::move(x0);
  ParameterPoint x_prev = x;
  ParameterPoint y = x;
  ParameterPoint grad_y(x.size()), grad_x(x.size());

  MomentumState momentum = make_momentum(0.0);
  double step = options.initial_step;
  double fx = problem.smooth(x, grad_y) + simple_value(problem, x);

  // Stall detection: when momentum plus step growth stops paying off at the
  // numerical floor, fall back to plain monotone proximal-gradient steps;
  // grown steps can pass the pointwise descent test along benign directions
  // while still amplifying stiff modes, which pins the residual above the
  // floor otherwise.
  double best = fx;
  long stall = 0;
  bool polish = !options.accelerate;
  constexpr long kStallWindow = 50;

  FbsResult out;
  out.x = x;
  out.objective = fx;

  for (long k = 0; k < options.max_iters; ++k) {
    const double sy = problem.smooth(y, grad_y);

    const double prev_step = step;
    if (!polish) step *= 2.0;
    ParameterPoint cand;
    double s_cand = 0.0;
    while (true) {
      cand = apply_prox(problem, y - step * grad_y, step);
      ParameterPoint diff = cand - y;
      s_cand = problem.smooth(cand, grad_x);
      const double model = sy + grad_y.dot(diff) + diff.squaredNorm() / (2.0 * step);
      const double gap = s_cand - model;
      if (gap <= 0.0) break;
      // ambiguous at machine noise: accept only without step growth
      const double noise = 8.0 * std::numeric_limits<double>::epsilon() *
                           (std::abs(sy) + std::abs(s_cand));
      if (gap <= noise && step <= prev_step) break;
      step *= 0.5;
      if (step < options.min_step) {
        throw NumericalError("backtracking line search stalled", step);
      }
    }

    const double f_cand = s_cand + simple_value(problem, cand);
    const double f_prev = fx;

    double residual = std::numeric_limits<double>::quiet_NaN();
    if (want_residual) {
      // subgradient of F at cand: (y - cand)/step - grad(y) + grad(cand);
      // grad_x holds grad(cand) from the last line-search evaluation
      residual = ((y - cand) / step - grad_y + grad_x).norm();
    }

    bool restarted = false;
    x_prev = std::move(x);
    x = std::move(cand);
    fx = f_cand;

    if (fx < best - 8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(best))) {
      best = fx;
      stall = 0;
    } else if (!polish) {
      if (++stall >= kStallWindow) polish = true;
    }

    if (polish) {
      y = x;
    } else if (f_cand > f_prev) {
      momentum = make_momentum(0.0);
      restarted = true;
      y = x;
    } else {
      const MomentumStep ms = advance(momentum);
      momentum = ms.next;
      y = x + ms.beta * (x - x_prev);
    }

    out.iters = k + 1;
    out.residual_norm = residual;
    const FbsIterate view{k + 1, x, fx, f_prev, step, restarted, residual};
    if (stop && stop(view)) {
      out.stopped = true;
      break;
    }
  }

  out.x = x;
  out.objective = fx;
  return out;
}

}  // namespace dualfl
