#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "rmtmean/errors.hpp"
#include "rmtmean/geometry.hpp"
#include "rmtmean/spd.hpp"

namespace rmtmean {

/// Riemannian gradient descent with Armijo backtracking on the SPD manifold.
/// The optional validity guard keeps every accepted iterate's cost at or above
/// -alpha/p; the corrected distance drifts below that floor only when the
/// iterate has left the regime where the estimator is meaningful, so hitting
/// the floor is a stopping signal rather than an error.

enum class StopReason {
  step_tolerance,    ///< squared step distance fell below step_tol
  validity_bound,    ///< cost floor -alpha/p reached or no admissible step left
  max_iterations,    ///< iteration budget exhausted
  linesearch_failed  ///< no finite Armijo step within max_backtracks
};

[[nodiscard]] inline const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::step_tolerance: return "step_tol";
    case StopReason::validity_bound: return "validity";
    case StopReason::max_iterations: return "max_iters";
    case StopReason::linesearch_failed: return "linesearch_failed";
  }
  return "unknown";
}

struct DescentConfig {
  enum class InitialStep { unit, inverse_grad_norm };

  int max_iters = 100;
  double step_tol = 1e-6;        ///< squared Fisher distance between iterates
  double validity_alpha = 10.0;  ///< cost floor -alpha/p; 0 disables the guard
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 25;
  /// First trial step of the first iteration; 1/(1+|grad|) keeps the
  /// retraction well inside the cone when gradients are large. Subsequent
  /// iterations retry the last accepted step grown by 1/backtrack, so the
  /// line search can reach the natural step scale of the objective.
  InitialStep initial_step = InitialStep::inverse_grad_norm;
};

/// One accepted iterate. grad_norm is the metric norm at the iterate the step
/// originated from; the row for iteration 0 records the starting cost.
struct DescentRecord {
  int iter = 0;
  double cost = 0;
  double grad_norm = 0;
  double step = 0;
};

struct DescentTrace {
  std::vector<DescentRecord> records;
  StopReason reason = StopReason::max_iterations;

  /// Columns iter,cost,grad_norm,step,reason; the reason is printed on the
  /// final row only.
  void write_csv(std::ostream& os) const {
    os << "iter,cost,grad_norm,step,reason\n";
    char buf[96];
    for (std::size_t i = 0; i < records.size(); ++i) {
      const DescentRecord& r = records[i];
      std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,", r.iter, r.cost,
                    r.grad_norm, r.step);
      os << buf;
      if (i + 1 == records.size()) os << to_string(reason);
      os << "\n";
    }
  }
};

template <typename Scalar>
struct DescentResult {
  SpdMatrix<Scalar> point;
  DescentTrace trace;
};

namespace detail {

inline void check_descent_config(const DescentConfig& cfg) {
  if (cfg.max_iters < 1) throw InvalidInput("descend: max_iters must be at least 1");
  if (!(cfg.step_tol >= 0)) throw InvalidInput("descend: step_tol must be nonnegative");
  if (!(cfg.validity_alpha >= 0)) {
    throw InvalidInput("descend: validity_alpha must be nonnegative");
  }
  if (!(cfg.armijo_c1 > 0 && cfg.armijo_c1 < 1)) {
    throw InvalidInput("descend: armijo_c1 must lie in (0, 1)");
  }
  if (!(cfg.backtrack > 0 && cfg.backtrack < 1)) {
    throw InvalidInput("descend: backtrack must lie in (0, 1)");
  }
  if (cfg.max_backtracks < 0) {
    throw InvalidInput("descend: max_backtracks must be nonnegative");
  }
}

}  // namespace detail

/// Minimizes cost(R) from the given start. cost maps SpdMatrix to Scalar,
/// grad maps SpdMatrix to its symmetric Riemannian gradient. Accepted steps
/// satisfy both the Armijo condition and, when the guard is active, the cost
/// floor. Returns the best iterate found together with the trace; a failed
/// line search is reported through the trace, not an exception.
template <typename Scalar, typename CostFn, typename GradFn>
[[nodiscard]] DescentResult<Scalar> descend(const SpdMatrix<Scalar>& start, CostFn&& cost,
                                            GradFn&& grad, const DescentConfig& cfg) {
  detail::check_descent_config(cfg);
  const Scalar p = static_cast<Scalar>(start.dim());
  const bool guard = cfg.validity_alpha > 0;
  const Scalar bound = -static_cast<Scalar>(cfg.validity_alpha) / p;

  SpdMatrix<Scalar> current = start;
  Scalar f = cost(current);
  DescentTrace trace;

  if (guard && f < bound) {
    trace.records.push_back({0, static_cast<double>(f), 0.0, 0.0});
    trace.reason = StopReason::validity_bound;
    return {std::move(current), std::move(trace)};
  }

  Scalar prev_step = 0;
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    const DenseMatrix<Scalar> g = grad(current);
    const Scalar gn2 = fisher_inner(current, g, g);
    const Scalar gn = std::sqrt(std::max(gn2, Scalar(0)));
    if (iter == 1) {
      trace.records.push_back({0, static_cast<double>(f), static_cast<double>(gn), 0.0});
    }

    Scalar t = cfg.initial_step == DescentConfig::InitialStep::unit
                   ? Scalar(1)
                   : Scalar(1) / (Scalar(1) + gn);
    if (prev_step > 0) t = std::max(t, prev_step / static_cast<Scalar>(cfg.backtrack));

    bool accepted = false;
    bool blocked_by_guard = false;
    SpdMatrix<Scalar> next = current;
    Scalar fn = f;
    for (int bt = 0; bt <= cfg.max_backtracks; ++bt) {
      bool stepped = false;
      try {
        next = retract(current, DenseMatrix<Scalar>(-t * g));
        stepped = true;
      } catch (const Error&) {
        // Shrink and retry; the trial step overshot the cone numerically.
      }
      if (stepped) {
        fn = cost(next);
        const bool armijo =
            std::isfinite(static_cast<double>(fn)) &&
            fn <= f - static_cast<Scalar>(cfg.armijo_c1) * t * gn2;
        const bool admissible = !guard || fn >= bound;
        if (armijo && admissible) {
          accepted = true;
          break;
        }
        if (armijo && !admissible) blocked_by_guard = true;
      }
      t *= static_cast<Scalar>(cfg.backtrack);
    }

    if (!accepted) {
      trace.reason = blocked_by_guard ? StopReason::validity_bound
                                      : StopReason::linesearch_failed;
      return {std::move(current), std::move(trace)};
    }

    const Scalar moved2 = fisher_dist2(next, current);
    current = std::move(next);
    f = fn;
    prev_step = t;
    trace.records.push_back({iter, static_cast<double>(f), static_cast<double>(gn),
                             static_cast<double>(t)});
    if (moved2 < static_cast<Scalar>(cfg.step_tol)) {
      trace.reason = StopReason::step_tolerance;
      return {std::move(current), std::move(trace)};
    }
  }

  trace.reason = StopReason::max_iterations;
  return {std::move(current), std::move(trace)};
}

}  // namespace rmtmean
