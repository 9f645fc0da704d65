#include "evmotion/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "evmotion/errors.hpp"

namespace evmotion {
namespace {

struct Vertex {
  std::vector<double> x;
  double f = 0.0;
};

}  // namespace

SimplexResult minimize_simplex(const Objective& f, std::vector<double> x0,
                               const SimplexOptions& options) {
  const std::size_t n = x0.size();
  if (n == 0) throw InvalidArgument("cannot minimize over zero parameters");
  if (options.initial_step.size() != n) throw InvalidArgument("initial_step size mismatch");
  if (options.max_iters <= 0 || !(options.tol > 0.0)) {
    throw InvalidArgument("max_iters and tol must be positive");
  }

  SimplexResult result;
  const auto eval = [&](const std::vector<double>& x) {
    ++result.evaluations;
    return f(x);
  };

  std::vector<Vertex> simplex(n + 1);
  std::vector<double> step = options.initial_step;
  const auto build = [&](const std::vector<double>& origin, double origin_f) {
    simplex[0] = {origin, origin_f};
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> x = origin;
      x[i] += step[i];
      simplex[i + 1] = {x, eval(x)};
    }
  };

  build(x0, eval(x0));
  double best_so_far = std::min_element(simplex.begin(), simplex.end(), [](auto& a, auto& b) {
                         return a.f < b.f;
                       })->f;

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n);
  int restarts_left = options.restarts;

  while (result.iterations < options.max_iters) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return simplex[a].f < simplex[b].f; });
    const Vertex& best = simplex[order.front()];
    const Vertex& worst = simplex[order.back()];

    if (worst.f - best.f <= options.tol * std::max(1.0, std::abs(best.f))) {
      if (restarts_left-- <= 0) {
        result.converged = true;
        break;
      }
      for (double& s : step) s *= options.restart_shrink;
      const Vertex origin = best;
      build(origin.x, origin.f);
      continue;
    }
    ++result.iterations;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const auto& x = simplex[order[k]].x;
      for (std::size_t i = 0; i < n; ++i) centroid[i] += x[i];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    const auto along = [&](double coeff) {
      for (std::size_t i = 0; i < n; ++i) {
        trial[i] = centroid[i] + coeff * (worst.x[i] - centroid[i]);
      }
      return trial;
    };

    const double second_worst = simplex[order[n - 1]].f;
    const std::size_t w = order.back();

    std::vector<double> reflected = along(-1.0);
    const double fr = eval(reflected);
    if (fr < best.f) {
      std::vector<double> expanded = along(-2.0);
      const double fe = eval(expanded);
      simplex[w] = fe < fr ? Vertex{expanded, fe} : Vertex{reflected, fr};
    } else if (fr < second_worst) {
      simplex[w] = {reflected, fr};
    } else {
      const bool outside = fr < worst.f;
      std::vector<double> contracted = along(outside ? -0.5 : 0.5);
      const double fc = eval(contracted);
      if (fc < std::min(fr, worst.f)) {
        simplex[w] = {contracted, fc};
      } else {
        const std::vector<double> anchor = simplex[order.front()].x;
        for (std::size_t k = 1; k <= n; ++k) {
          Vertex& v = simplex[order[k]];
          for (std::size_t i = 0; i < n; ++i) v.x[i] = anchor[i] + 0.5 * (v.x[i] - anchor[i]);
          v.f = eval(v.x);
        }
      }
    }

    for (const Vertex& v : simplex) best_so_far = std::min(best_so_far, v.f);
    result.best_history.push_back(best_so_far);
  }

  const auto best = std::min_element(simplex.begin(), simplex.end(),
                                     [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
  result.x = best->x;
  result.value = best->f;
  return result;
}

}  // namespace evmotion
