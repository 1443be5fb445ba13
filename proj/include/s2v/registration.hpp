#pragma once

// Registration drivers: the incremental discrete loop, the continuous simplex
// baseline and the refined (discrete then simplex) mode, all run coarse to
// fine over matched Gaussian pyramids of the slice and the volume.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "s2v/error.hpp"
#include "s2v/image.hpp"
#include "s2v/matching.hpp"
#include "s2v/mrf.hpp"
#include "s2v/nelder_mead.hpp"
#include "s2v/pyramid.hpp"
#include "s2v/rigid.hpp"
#include "s2v/slice_cost.hpp"

namespace s2v {

enum class Method { simplex, discrete, refined };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::simplex: return "simplex";
    case Method::discrete: return "discrete";
    case Method::refined: return "refined";
  }
  return "?";
}

inline Method parse_method(std::string_view name) {
  if (name == "simplex") return Method::simplex;
  if (name == "discrete") return Method::discrete;
  if (name == "refined") return Method::refined;
  throw Error("unknown method '" + std::string(name) + "'");
}

/// Hyperparameters of the incremental discrete search on one pyramid level.
struct LevelConfig {
  double omega_rot = 0.02;
  double omega_trans = 7.0;
  double alpha = 0.08;
  std::size_t max_iters = 200;
  std::size_t kappa = 2;
  double min_omega_factor = 0.01;
  /// Consecutive non-improving iterations before the level stops early.
  std::size_t patience = 3;
};

struct SimplexConfig {
  std::array<double, kNumParams> step{0.05, 0.05, 0.05, 5.0, 5.0, 5.0};
  double tol = 1e-6;
  std::size_t max_evals = 2000;
};

/// Per-level lists are ordered coarse to fine.
struct Schedule {
  std::size_t num_levels = 4;
  std::vector<double> omega_rot{0.02, 0.015, 0.0125, 0.01};
  std::vector<double> omega_trans{7.0, 6.5, 6.0, 5.0};
  std::vector<double> alpha{0.08, 0.07, 0.05, 0.03};
  std::vector<std::size_t> max_iters{200, 100, 150, 600};
  std::size_t kappa = 2;
  double min_omega_factor = 0.01;
  std::size_t patience = 3;
  SimplexConfig simplex;
  /// Workers used to fill cost tables (0 = hardware concurrency).
  std::size_t threads = 1;

  void validate() const {
    require(num_levels >= 1, "schedule needs at least one level");
    require(omega_rot.size() == num_levels && omega_trans.size() == num_levels &&
                alpha.size() == num_levels && max_iters.size() == num_levels,
            "schedule lists must have one entry per pyramid level");
    for (std::size_t l = 0; l < num_levels; ++l) {
      require(omega_rot[l] > 0.0 && omega_trans[l] > 0.0, "omegas must be positive");
      require(alpha[l] > 0.0 && alpha[l] < 1.0, "alpha must lie in (0, 1)");
      require(max_iters[l] >= 1, "max_iters must be positive");
    }
    require(kappa >= 1, "kappa must be positive");
    require(min_omega_factor > 0.0 && min_omega_factor < 1.0,
            "min_omega_factor must lie in (0, 1)");
    require(patience >= 1, "patience must be positive");
  }

  LevelConfig level(std::size_t l) const {
    return {omega_rot[l], omega_trans[l], alpha[l], max_iters[l], kappa, min_omega_factor,
            patience};
  }

  /// Same omegas and decay factors with shortened iteration budgets.
  static Schedule desk() {
    Schedule s;
    s.max_iters = {50, 25, 40, 100};
    return s;
  }

  /// One level per entry of the default lists, truncated to the finest ones.
  Schedule with_levels(std::size_t levels) const {
    require(levels >= 1 && levels <= num_levels, "cannot derive schedule with that many levels");
    Schedule s = *this;
    const std::size_t skip = num_levels - levels;
    auto tail = [&](const auto& v) { return std::decay_t<decltype(v)>(v.begin() + skip, v.end()); };
    s.num_levels = levels;
    s.omega_rot = tail(omega_rot);
    s.omega_trans = tail(omega_trans);
    s.alpha = tail(alpha);
    s.max_iters = tail(max_iters);
    return s;
  }
};

/// Label-space size after `steps` decays: max(w0 (1 - alpha)^steps, floor * w0).
inline double decayed_omega(double omega0, double alpha, std::size_t steps, double floor_factor) {
  return std::max(omega0 * std::pow(1.0 - alpha, static_cast<double>(steps)),
                  floor_factor * omega0);
}

struct TraceEntry {
  std::size_t level = 0;
  std::size_t iteration = 0;
  double cost = 0.0;
};

struct LevelResult {
  RigidParams params;
  double cost = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  /// Accepted costs; entry 0 is the cost of the initialisation.
  std::vector<TraceEntry> trace;
};

/// Incremental discrete search on one level.
///
/// Each iteration builds the label space around the current estimate, fills
/// the pairwise tables, solves them exactly and keeps the candidate only if it
/// strictly lowers the true criterion. Omega decays by (1 - alpha) after every
/// iteration down to min_omega_factor of its starting value.
inline LevelResult register_discrete_level(const ImageGrid2& image, const Volume3& volume,
                                           const RigidParams& init, const LevelConfig& cfg,
                                           Criterion criterion, std::size_t level = 0,
                                           std::size_t threads = 1) {
  require(init.finite(), "initial parameters must be finite");
  SliceCost cost(image, volume, criterion);
  LevelResult out;
  out.params = init;
  out.cost = cost(init);
  out.trace.push_back({level, 0, out.cost});

  std::size_t rejected = 0;
  for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
    const double w_rot = decayed_omega(cfg.omega_rot, cfg.alpha, it - 1, cfg.min_omega_factor);
    const double w_trans = decayed_omega(cfg.omega_trans, cfg.alpha, it - 1, cfg.min_omega_factor);
    const LabelSpace ls = build_label_space(w_rot, w_trans, cfg.kappa);
    const PairwiseMrf mrf = build_pairwise_costs(image, volume, out.params, ls, criterion, threads);
    out.evaluations += mrf.distinct_evaluations;
    const RigidParams candidate = apply_labeling(out.params, ls, solve_exact(mrf));
    const double c = cost(candidate);
    out.iterations = it;
    if (c < out.cost) {
      out.params = candidate;
      out.cost = c;
      out.trace.push_back({level, it, c});
      rejected = 0;
    } else if (++rejected >= cfg.patience) {
      break;
    }
  }
  out.evaluations += cost.evaluations();
  return out;
}

/// Nelder-Mead on one level, started at `init`.
inline LevelResult register_simplex_level(const ImageGrid2& image, const Volume3& volume,
                                          const RigidParams& init, const SimplexConfig& cfg,
                                          Criterion criterion, std::size_t level = 0) {
  require(init.finite(), "initial parameters must be finite");
  SliceCost cost(image, volume, criterion);
  LevelResult out;
  std::size_t iteration = 0;
  double last = 0.0;
  auto objective = [&](const std::array<double, kNumParams>& x) {
    const double f = cost(RigidParams{x});
    if (cost.evaluations() == 1) {
      out.trace.push_back({level, 0, f});
      last = f;
    }
    return f;
  };
  auto observe = [&](double best) {
    ++iteration;
    if (best < last) {
      out.trace.push_back({level, iteration, best});
      last = best;
    }
  };
  const auto r = nelder_mead<kNumParams>(objective, init.values, cfg.step, cfg.max_evals, cfg.tol,
                                         observe);
  out.params = RigidParams{r.x};
  out.cost = r.f;
  out.iterations = r.iterations;
  out.evaluations = cost.evaluations();
  return out;
}

struct RegistrationResult {
  Method method = Method::discrete;
  RigidParams init_params;
  RigidParams final_params;
  /// Criterion value of the final slice at full resolution.
  double final_cost = 0.0;
  /// Full-resolution criterion value at the initialisation.
  double init_cost = 0.0;
  std::vector<TraceEntry> cost_trace;
  std::size_t num_cost_evaluations = 0;
  double wall_time = 0.0;
  /// Full-resolution result of the discrete pass (refined mode only).
  RigidParams discrete_params;
  double discrete_cost = 0.0;
};

namespace detail {

inline LevelResult run_pass(Method pass, const Pyramid<ImageGrid2>& images,
                            const Pyramid<Volume3>& volumes, const RigidParams& init,
                            const Schedule& schedule, Criterion criterion,
                            RegistrationResult& result) {
  LevelResult level_result;
  level_result.params = init;
  for (std::size_t l = 0; l < images.size(); ++l) {
    level_result =
        pass == Method::simplex
            ? register_simplex_level(images[l], volumes[l], level_result.params,
                                     schedule.simplex, criterion, l)
            : register_discrete_level(images[l], volumes[l], level_result.params,
                                      schedule.level(l), criterion, l, schedule.threads);
    result.cost_trace.insert(result.cost_trace.end(), level_result.trace.begin(),
                             level_result.trace.end());
    result.num_cost_evaluations += level_result.evaluations;
  }
  return level_result;
}

}  // namespace detail

/// Runs one registration mode over prebuilt pyramids; level k of the slice
/// pyramid is paired with level k of the volume pyramid.
///
/// Translations stay in mm across levels. The returned parameters are the
/// best, at full resolution, of the initialisation and the pass results
/// (for refined: initialisation, discrete pass, simplex pass), so
/// final_cost never exceeds init_cost and refined never ends above discrete.
inline RegistrationResult register_slice(Method method, const Pyramid<ImageGrid2>& images,
                                         const Pyramid<Volume3>& volumes, const RigidParams& init,
                                         const Schedule& schedule, Criterion criterion) {
  schedule.validate();
  require(images.size() == schedule.num_levels && volumes.size() == schedule.num_levels,
          "pyramid depth does not match the schedule");
  const auto start = std::chrono::steady_clock::now();

  RegistrationResult result;
  result.method = method;
  result.init_params = init;
  SliceCost full(images.finest(), volumes.finest(), criterion);
  result.init_cost = full(init);
  result.final_params = init;
  result.final_cost = result.init_cost;

  auto consider = [&](const RigidParams& p) {
    const double c = full(p);
    if (c < result.final_cost) {
      result.final_cost = c;
      result.final_params = p;
    }
    return c;
  };

  RigidParams simplex_start = init;
  if (method != Method::simplex) {
    const auto d = detail::run_pass(Method::discrete, images, volumes, init, schedule, criterion, result);
    consider(d.params);
    result.discrete_params = result.final_params;
    result.discrete_cost = result.final_cost;
    simplex_start = result.discrete_params;
  }
  if (method != Method::discrete) {
    const auto s = detail::run_pass(Method::simplex, images, volumes, simplex_start, schedule,
                                    criterion, result);
    consider(s.params);
  }

  result.num_cost_evaluations += full.evaluations();
  result.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

inline RegistrationResult register_slice(Method method, const ImageGrid2& image,
                                         const Volume3& volume, const RigidParams& init,
                                         const Schedule& schedule, Criterion criterion) {
  schedule.validate();
  return register_slice(method, build_pyramid(image, schedule.num_levels),
                        build_pyramid(volume, schedule.num_levels), init, schedule, criterion);
}

/// Refined mode started from an already computed discrete result on the same
/// inputs; equivalent to register_slice(Method::refined, ...) without
/// repeating the discrete pass.
inline RegistrationResult refine_discrete(const RegistrationResult& discrete,
                                          const Pyramid<ImageGrid2>& images,
                                          const Pyramid<Volume3>& volumes,
                                          const Schedule& schedule, Criterion criterion) {
  require(discrete.method == Method::discrete, "refine_discrete needs a discrete result");
  const auto start = std::chrono::steady_clock::now();
  RegistrationResult result = discrete;
  result.method = Method::refined;
  result.discrete_params = discrete.final_params;
  result.discrete_cost = discrete.final_cost;

  SliceCost full(images.finest(), volumes.finest(), criterion);
  const auto s =
      detail::run_pass(Method::simplex, images, volumes, discrete.final_params, schedule, criterion,
                       result);
  const double c = full(s.params);
  if (c < result.final_cost) {
    result.final_cost = c;
    result.final_params = s.params;
  }
  result.num_cost_evaluations += full.evaluations();
  result.wall_time +=
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace s2v
