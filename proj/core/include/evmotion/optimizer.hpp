#pragma once

#include <functional>
#include <span>
#include <vector>

namespace evmotion {

using Objective = std::function<double(std::span<const double>)>;

struct SimplexOptions {
  int max_iters = 400;
  /// Converged when (worst - best) over the simplex <= tol * max(1, |best|).
  double tol = 1e-6;
  /// Per-coordinate offsets used to build the initial simplex around x0.
  std::vector<double> initial_step;
  /// After convergence, rebuild the simplex around the best point with the
  /// step scaled by `restart_shrink`, at most this many times.
  int restarts = 2;
  double restart_shrink = 0.5;
};

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  /// Best value after each iteration; non-increasing.
  std::vector<double> best_history;
};

/// Derivative-free Nelder-Mead minimization with standard coefficients
/// (reflection 1, expansion 2, contraction 0.5, shrink 0.5). Deterministic.
SimplexResult minimize_simplex(const Objective& f, std::vector<double> x0,
                               const SimplexOptions& options);

}  // namespace evmotion
