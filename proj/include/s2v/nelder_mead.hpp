#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <numeric>

#include "s2v/error.hpp"

namespace s2v {

template <std::size_t N>
struct SimplexResult {
  std::array<double, N> x{};
  double f = 0.0;
  std::size_t evaluations = 0;
  std::size_t iterations = 0;
};

/// Downhill simplex (Nelder-Mead) minimisation with reflection 1, expansion 2,
/// contraction 1/2 and shrink 1/2.
///
/// The initial simplex is x0 plus x0 + step[i] * e_i. Iteration stops when the
/// spread between best and worst vertex drops below `tol` or after `max_evals`
/// objective calls. The best point ever evaluated is returned, so
/// f <= objective(x0). `on_iteration(best_f)` is called after each iteration.
template <std::size_t N, typename Objective, typename Observer>
SimplexResult<N> nelder_mead(Objective&& objective, const std::array<double, N>& x0,
                             const std::array<double, N>& step, std::size_t max_evals, double tol,
                             Observer&& on_iteration) {
  require(max_evals >= 1, "max_evals must be positive");
  require(tol > 0.0, "tolerance must be positive");
  for (double s : step) require(s > 0.0, "simplex steps must be positive");

  using Point = std::array<double, N>;
  SimplexResult<N> result;
  result.x = x0;

  auto eval = [&](const Point& p) {
    const double f = objective(p);
    ++result.evaluations;
    if (f < result.f) {
      result.f = f;
      result.x = p;
    }
    return f;
  };
  result.f = objective(x0);
  result.evaluations = 1;

  std::array<Point, N + 1> vertex;
  std::array<double, N + 1> value;
  vertex[0] = x0;
  value[0] = result.f;
  for (std::size_t i = 0; i < N; ++i) {
    if (result.evaluations >= max_evals) return result;
    vertex[i + 1] = x0;
    vertex[i + 1][i] += step[i];
    value[i + 1] = eval(vertex[i + 1]);
  }

  std::array<std::size_t, N + 1> order;
  auto along = [](const Point& from, const Point& to, double t) {
    Point p;
    for (std::size_t i = 0; i < N; ++i) p[i] = from[i] + t * (to[i] - from[i]);
    return p;
  };

  while (true) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[N - 1];
    if (!(value[worst] - value[best] >= tol) || result.evaluations >= max_evals) break;

    Point centroid{};
    for (std::size_t k = 0; k < N; ++k)
      for (std::size_t i = 0; i < N; ++i) centroid[i] += vertex[order[k]][i];
    for (double& c : centroid) c /= static_cast<double>(N);

    ++result.iterations;
    const Point reflected = along(centroid, vertex[worst], -1.0);
    const double fr = eval(reflected);
    if (fr < value[best]) {
      if (result.evaluations >= max_evals) {
        vertex[worst] = reflected;
        value[worst] = fr;
      } else {
        const Point expanded = along(centroid, vertex[worst], -2.0);
        const double fe = eval(expanded);
        if (fe < fr) {
          vertex[worst] = expanded;
          value[worst] = fe;
        } else {
          vertex[worst] = reflected;
          value[worst] = fr;
        }
      }
    } else if (fr < value[second]) {
      vertex[worst] = reflected;
      value[worst] = fr;
    } else {
      bool accepted = false;
      if (result.evaluations < max_evals) {
        if (fr < value[worst]) {
          const Point outside = along(centroid, reflected, 0.5);
          const double fc = eval(outside);
          if (fc <= fr) {
            vertex[worst] = outside;
            value[worst] = fc;
            accepted = true;
          }
        } else {
          const Point inside = along(centroid, vertex[worst], 0.5);
          const double fc = eval(inside);
          if (fc < value[worst]) {
            vertex[worst] = inside;
            value[worst] = fc;
            accepted = true;
          }
        }
      }
      if (!accepted) {
        for (std::size_t k = 1; k <= N && result.evaluations < max_evals; ++k) {
          const std::size_t v = order[k];
          vertex[v] = along(vertex[best], vertex[v], 0.5);
          value[v] = eval(vertex[v]);
        }
      }
    }
    on_iteration(result.f);
  }
  return result;
}

template <std::size_t N, typename Objective>
SimplexResult<N> nelder_mead(Objective&& objective, const std::array<double, N>& x0,
                             const std::array<double, N>& step, std::size_t max_evals,
                             double tol) {
  return nelder_mead<N>(std::forward<Objective>(objective), x0, step, max_evals, tol,
                        [](double) {});
}

}  // namespace s2v
