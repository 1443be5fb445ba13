#pragma once

// Discrete formulation of rigid slice-to-volume registration: one node per
// rigid parameter, a fully connected pairwise graph over the six nodes, and
// pairwise costs M(I, pi_{l_i,l_j}[J]) where only parameters i and j deviate
// from the current estimate.

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include "s2v/error.hpp"
#include "s2v/image.hpp"
#include "s2v/matching.hpp"
#include "s2v/parallel.hpp"
#include "s2v/rigid.hpp"
#include "s2v/slice_cost.hpp"

namespace s2v {

inline constexpr std::size_t kNumNodes = kNumParams;
inline constexpr std::size_t kNumEdges = kNumNodes * (kNumNodes - 1) / 2;

using Edge = std::pair<std::size_t, std::size_t>;

/// All unordered node pairs (i, j), i < j, in lexicographic order.
inline constexpr std::array<Edge, kNumEdges> kEdges = [] {
  std::array<Edge, kNumEdges> edges{};
  std::size_t e = 0;
  for (std::size_t i = 0; i < kNumNodes; ++i)
    for (std::size_t j = i + 1; j < kNumNodes; ++j) edges[e++] = {i, j};
  return edges;
}();

/// Per-node discrete variations {-w, ..., -w/k, 0, w/k, ..., w}.
struct LabelSpace {
  std::array<double, kNumNodes> omegas{};
  std::size_t kappa = 1;
  std::array<std::vector<double>, kNumNodes> offsets;

  std::size_t num_labels() const { return 2 * kappa + 1; }
  /// Label index of the zero offset.
  std::size_t zero_label() const { return kappa; }
};

inline LabelSpace build_label_space(const std::array<double, kNumNodes>& omegas,
                                    std::size_t kappa) {
  require(kappa >= 1, "kappa must be at least 1");
  LabelSpace ls;
  ls.omegas = omegas;
  ls.kappa = kappa;
  const auto k = static_cast<double>(kappa);
  for (std::size_t i = 0; i < kNumNodes; ++i) {
    require(std::isfinite(omegas[i]) && omegas[i] > 0.0, "omega must be finite and positive");
    auto& offs = ls.offsets[i];
    offs.resize(ls.num_labels());
    for (std::size_t l = 0; l < offs.size(); ++l) {
      const double step = static_cast<double>(l) - k;
      offs[l] = step * omegas[i] / k;
    }
  }
  return ls;
}

/// Same omega for the three rotations and for the three translations.
inline LabelSpace build_label_space(double omega_rot, double omega_trans, std::size_t kappa) {
  return build_label_space({omega_rot, omega_rot, omega_rot, omega_trans, omega_trans, omega_trans},
                           kappa);
}

using Labeling = std::array<std::size_t, kNumNodes>;

inline Labeling zero_labeling(const LabelSpace& ls) {
  Labeling x;
  x.fill(ls.zero_label());
  return x;
}

inline RigidParams apply_labeling(const RigidParams& base, const LabelSpace& ls,
                                  const Labeling& x) {
  RigidParams out = base;
  for (std::size_t i = 0; i < kNumNodes; ++i) {
    require(x[i] < ls.num_labels(), "label index out of range");
    out[i] = base[i] + ls.offsets[i][x[i]];
  }
  return out;
}

/// Fully connected six-node pairwise MRF with dense L x L cost tables.
class PairwiseMrf {
 public:
  /// tables[e][li * L + lj] is the cost of edge kEdges[e] under labels (li, lj).
  PairwiseMrf(std::size_t num_labels, std::array<std::vector<double>, kNumEdges> tables)
      : num_labels_(num_labels), tables_(std::move(tables)) {
    require(num_labels_ >= 1, "need at least one label");
    for (const auto& t : tables_) {
      require(t.size() == num_labels_ * num_labels_, "pairwise table has wrong size");
      for (double v : t) require(std::isfinite(v), "pairwise costs must be finite");
    }
  }

  std::size_t num_labels() const { return num_labels_; }
  static constexpr std::size_t num_nodes() { return kNumNodes; }
  static constexpr const std::array<Edge, kNumEdges>& edges() { return kEdges; }

  double cost(std::size_t edge, std::size_t li, std::size_t lj) const {
    return tables_[edge][li * num_labels_ + lj];
  }
  const std::vector<double>& table(std::size_t edge) const { return tables_[edge]; }

  bool in_range(const Labeling& x) const {
    for (auto l : x)
      if (l >= num_labels_) return false;
    return true;
  }

  /// Parameters the tables were built around (zero for hand-built instances).
  RigidParams base;
  /// Distinct slice extractions performed while filling the tables.
  std::size_t distinct_evaluations = 0;

 private:
  std::size_t num_labels_;
  std::array<std::vector<double>, kNumEdges> tables_;
};

/// Sum of the 15 pairwise table entries selected by x.
inline double mrf_energy(const PairwiseMrf& mrf, const Labeling& x) {
  require(mrf.in_range(x), "label index out of range");
  double energy = 0.0;
  for (std::size_t e = 0; e < kNumEdges; ++e)
    energy += mrf.cost(e, x[kEdges[e].first], x[kEdges[e].second]);
  return energy;
}

/// Fills every pairwise table by extracting slices. Offset vectors shared by
/// several entries (the all-zero one, single-parameter variations) are
/// evaluated once; unique vectors are evaluated across `threads` workers
/// into fixed slots, so the result does not depend on the thread count.
inline PairwiseMrf build_pairwise_costs(const ImageGrid2& image, const Volume3& volume,
                                        const RigidParams& base, const LabelSpace& ls,
                                        Criterion criterion, std::size_t threads = 1) {
  const std::size_t L = ls.num_labels();
  using Key = std::array<double, kNumNodes>;
  std::map<Key, std::size_t> slot_of;
  std::vector<Key> unique;
  std::array<std::vector<std::size_t>, kNumEdges> entry_slot;

  for (std::size_t e = 0; e < kNumEdges; ++e) {
    const auto [i, j] = kEdges[e];
    entry_slot[e].resize(L * L);
    for (std::size_t li = 0; li < L; ++li) {
      for (std::size_t lj = 0; lj < L; ++lj) {
        Key key{};
        key[i] = ls.offsets[i][li];
        key[j] = ls.offsets[j][lj];
        auto [it, inserted] = slot_of.try_emplace(key, unique.size());
        if (inserted) unique.push_back(key);
        entry_slot[e][li * L + lj] = it->second;
      }
    }
  }

  std::vector<double> values(unique.size());
  const std::size_t workers = std::min(resolve_threads(threads), unique.size());
  std::vector<SliceCost> evaluators(workers, SliceCost(image, volume, criterion));
  parallel_for(unique.size(), workers, [&](std::size_t k, std::size_t w) {
    RigidParams p = base;
    for (std::size_t i = 0; i < kNumNodes; ++i) p[i] += unique[k][i];
    values[k] = evaluators[w](p);
  });

  std::array<std::vector<double>, kNumEdges> tables;
  for (std::size_t e = 0; e < kNumEdges; ++e) {
    tables[e].resize(L * L);
    for (std::size_t n = 0; n < L * L; ++n) tables[e][n] = values[entry_slot[e][n]];
  }
  PairwiseMrf mrf(L, std::move(tables));
  mrf.base = base;
  mrf.distinct_evaluations = unique.size();
  return mrf;
}

/// Exact MAP labeling by exhaustive enumeration of all L^6 labelings in
/// lexicographic order; ties keep the lexicographically smallest labeling.
inline Labeling solve_exact(const PairwiseMrf& mrf) {
  const std::size_t L = mrf.num_labels();
  Labeling x{};
  Labeling best = x;
  double best_energy = std::numeric_limits<double>::infinity();
  while (true) {
    const double energy = mrf_energy(mrf, x);
    if (energy < best_energy) {
      best_energy = energy;
      best = x;
    }
    // odometer increment, last node fastest
    std::size_t pos = kNumNodes;
    while (pos > 0) {
      --pos;
      if (++x[pos] < L) break;
      x[pos] = 0;
      if (pos == 0) return best;
    }
  }
}

/// Iterated conditional modes: sweeps nodes 0..5, moving each to its
/// conditionally best label when that strictly lowers the energy. Stops after
/// a sweep without changes or after max_sweeps sweeps. If `sweep_energies` is
/// given, the energy after each sweep is appended to it.
inline Labeling solve_icm(const PairwiseMrf& mrf, Labeling init, std::size_t max_sweeps,
                          std::vector<double>* sweep_energies = nullptr) {
  require(mrf.in_range(init), "label index out of range");
  require(max_sweeps >= 1, "max_sweeps must be positive");
  const std::size_t L = mrf.num_labels();
  Labeling x = init;

  auto local_cost = [&](std::size_t node, std::size_t label) {
    double c = 0.0;
    for (std::size_t e = 0; e < kNumEdges; ++e) {
      const auto [i, j] = kEdges[e];
      if (i == node) c += mrf.cost(e, label, x[j]);
      else if (j == node) c += mrf.cost(e, x[i], label);
    }
    return c;
  };

  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    bool changed = false;
    for (std::size_t node = 0; node < kNumNodes; ++node) {
      std::size_t best_label = x[node];
      double best = local_cost(node, x[node]);
      for (std::size_t l = 0; l < L; ++l) {
        const double c = local_cost(node, l);
        if (c < best) {
          best = c;
          best_label = l;
        }
      }
      if (best_label != x[node]) {
        x[node] = best_label;
        changed = true;
      }
    }
    if (sweep_energies) sweep_energies->push_back(mrf_energy(mrf, x));
    if (!changed) break;
  }
  return x;
}

}  // namespace s2v
