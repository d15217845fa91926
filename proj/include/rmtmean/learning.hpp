#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rmtmean/covariance.hpp"
#include "rmtmean/descent.hpp"
#include "rmtmean/errors.hpp"
#include "rmtmean/geometry.hpp"
#include "rmtmean/means.hpp"
#include "rmtmean/rng.hpp"
#include "rmtmean/rmt_distance.hpp"
#include "rmtmean/spd.hpp"

namespace rmtmean {

/// How a centroid is computed from a group of datasets, and which distance is
/// used against it at prediction time. The corrected method pairs the
/// corrected Frechet mean with the corrected distance to a raw sample
/// covariance; the classical methods pair the Karcher mean of per-dataset
/// estimates (raw or shrunk) with the Fisher distance to the matching
/// per-dataset estimate.
enum class CentroidMethod { rmt, classical_scm, classical_lw };

[[nodiscard]] inline const char* to_string(CentroidMethod m) {
  switch (m) {
    case CentroidMethod::rmt: return "rmt";
    case CentroidMethod::classical_scm: return "classical-scm";
    case CentroidMethod::classical_lw: return "classical-lw";
  }
  return "rmt";
}

[[nodiscard]] inline CentroidMethod parse_centroid_method(const std::string& name) {
  if (name == "rmt") return CentroidMethod::rmt;
  if (name == "classical-scm") return CentroidMethod::classical_scm;
  if (name == "classical-lw") return CentroidMethod::classical_lw;
  throw InvalidInput("unknown centroid method '" + name + "'");
}

template <typename Scalar>
struct LabeledSet {
  std::vector<DataMatrix<Scalar>> items;
  std::vector<int> labels;  // class ids 1..Z, every class nonempty
};

template <typename Scalar>
struct CentroidModel {
  CentroidMethod method = CentroidMethod::rmt;
  long samples = 0;  // common dataset sample count the model was fit on
  std::vector<SpdMatrix<Scalar>> centroids;  // centroid of class z at index z-1

  [[nodiscard]] int classes() const { return static_cast<int>(centroids.size()); }
  [[nodiscard]] Index dim() const {
    return centroids.empty() ? 0 : centroids.front().dim();
  }
};

namespace detail {

template <typename Scalar>
void check_common_shape(std::span<const DataMatrix<Scalar>> items) {
  if (items.empty()) throw InvalidInput("need at least one dataset");
  const Index p = items.front().features();
  const Index n = items.front().samples();
  for (const auto& x : items) {
    if (x.features() != p) throw DimMismatch("datasets disagree on feature dimension");
    if (x.samples() != n) throw DimMismatch("datasets disagree on sample count");
  }
}

/// Centroid of a group of datasets under the chosen method.
template <typename Scalar>
[[nodiscard]] SpdMatrix<Scalar> group_centroid(std::span<const DataMatrix<Scalar>> group,
                                               CentroidMethod method,
                                               const DescentConfig& cfg,
                                               const SpdMatrix<Scalar>* warm_start) {
  if (method == CentroidMethod::rmt) {
    if (warm_start != nullptr) return rmt_mean<Scalar>(group, *warm_start, cfg).point;
    return rmt_mean<Scalar>(group, cfg).point;
  }
  std::vector<SpdMatrix<Scalar>> estimates;
  estimates.reserve(group.size());
  for (const auto& x : group) {
    estimates.push_back(method == CentroidMethod::classical_scm
                            ? scm(x)
                            : lw_linear(x).estimate);
  }
  // The Karcher mean is a convex problem; the identity start is kept even when
  // a warm start is offered, so classical centroids stay permutation-canonical.
  return classical_mean<Scalar>(std::span<const SpdMatrix<Scalar>>(estimates), cfg)
      .point;
}

/// Squared distance of a dataset to a centroid under the method's pairing.
template <typename Scalar>
[[nodiscard]] Scalar centroid_dist2(const SpdMatrix<Scalar>& centroid,
                                    const DataMatrix<Scalar>& x,
                                    CentroidMethod method) {
  switch (method) {
    case CentroidMethod::rmt:
      return rmt_dist2(centroid, scm(x), static_cast<long>(x.samples()));
    case CentroidMethod::classical_scm: return fisher_dist2(centroid, scm(x));
    case CentroidMethod::classical_lw:
      return fisher_dist2(centroid, lw_linear(x).estimate);
  }
  throw Error("unreachable centroid method");
}

}  // namespace detail

/// Nearest-centroid fit: one centroid per class label.
template <typename Scalar>
[[nodiscard]] CentroidModel<Scalar> nc_fit(
    const LabeledSet<Scalar>& train, CentroidMethod method = CentroidMethod::rmt,
    const DescentConfig& cfg = mean_descent_defaults()) {
  if (train.items.size() != train.labels.size()) {
    throw InvalidInput("nc_fit: items and labels differ in length");
  }
  detail::check_common_shape<Scalar>(train.items);
  int classes = 0;
  for (int label : train.labels) {
    if (label < 1) throw InvalidInput("nc_fit: labels must be positive");
    classes = std::max(classes, label);
  }

  CentroidModel<Scalar> model;
  model.method = method;
  model.samples = static_cast<long>(train.items.front().samples());
  model.centroids.reserve(static_cast<std::size_t>(classes));
  for (int z = 1; z <= classes; ++z) {
    std::vector<DataMatrix<Scalar>> group;
    for (std::size_t i = 0; i < train.items.size(); ++i) {
      if (train.labels[i] == z) group.push_back(train.items[i]);
    }
    if (group.empty()) {
      throw InvalidInput("nc_fit: class " + std::to_string(z) + " has no items");
    }
    model.centroids.push_back(detail::group_centroid<Scalar>(
        std::span<const DataMatrix<Scalar>>(group), method, cfg, nullptr));
  }
  return model;
}

/// Predicted class of one dataset: argmin over centroids of the method's
/// squared distance, ties resolved toward the smallest class id.
template <typename Scalar>
[[nodiscard]] int nc_predict(const CentroidModel<Scalar>& model,
                             const DataMatrix<Scalar>& x) {
  if (model.centroids.empty()) throw InvalidInput("nc_predict: model has no centroids");
  if (x.features() != model.dim()) {
    throw DimMismatch("nc_predict: dataset feature dimension does not match model");
  }
  if (static_cast<long>(x.samples()) != model.samples) {
    throw DimMismatch("nc_predict: dataset sample count does not match model");
  }
  int best = 1;
  Scalar best_dist = std::numeric_limits<Scalar>::infinity();
  for (int z = 1; z <= model.classes(); ++z) {
    const Scalar d = detail::centroid_dist2<Scalar>(
        model.centroids[static_cast<std::size_t>(z - 1)], x, model.method);
    if (d < best_dist) {
      best_dist = d;
      best = z;
    }
  }
  return best;
}

struct KmeansOptions {
  int clusters = 2;
  int restarts = 5;
  int max_sweeps = 100;
  double label_change_tol = 0.0;  // stop once the changed fraction is <= tol
  bool select_min_inertia = false;  // default keeps the restart of max inertia
  CentroidMethod method = CentroidMethod::rmt;
  DescentConfig descent = mean_descent_defaults();
};

template <typename Scalar>
struct KmeansResult {
  std::vector<int> labels;  // cluster ids 1..Z
  std::vector<SpdMatrix<Scalar>> centroids;
  double inertia = 0.0;
  int sweeps = 0;
  int chosen_restart = 0;
  std::vector<double> restart_inertias;
};

namespace detail {

template <typename Scalar>
struct KmeansSweepState {
  std::vector<int> labels;
  std::vector<Scalar> assigned_dist;       // distance to the owning centroid
  std::vector<std::vector<Scalar>> dist;   // full item-by-centroid distances
};

// Assigns every item to its nearest centroid (ties toward the smaller id) and
// keeps the full distance table, so the monotonicity check and the inertia
// come from the same numbers.
template <typename Scalar>
[[nodiscard]] KmeansSweepState<Scalar> kmeans_assign(
    std::span<const DataMatrix<Scalar>> items,
    const std::vector<SpdMatrix<Scalar>>& centroids, CentroidMethod method) {
  KmeansSweepState<Scalar> state;
  state.labels.resize(items.size());
  state.assigned_dist.resize(items.size());
  state.dist.resize(items.size());
  for (std::size_t k = 0; k < items.size(); ++k) {
    auto& row = state.dist[k];
    row.resize(centroids.size());
    int best = 1;
    Scalar best_dist = std::numeric_limits<Scalar>::infinity();
    for (std::size_t z = 0; z < centroids.size(); ++z) {
      row[z] = centroid_dist2<Scalar>(centroids[z], items[k], method);
      if (row[z] < best_dist) {
        best_dist = row[z];
        best = static_cast<int>(z) + 1;
      }
    }
    state.labels[k] = best;
    state.assigned_dist[k] = best_dist;
  }
  return state;
}

// Any cluster left empty captures the item farthest from its current owner;
// clusters are processed in id order and an item reseeds at most once.
template <typename Scalar>
void kmeans_reseed_empty(KmeansSweepState<Scalar>& state, int clusters) {
  std::vector<bool> occupied(static_cast<std::size_t>(clusters), false);
  for (int label : state.labels) occupied[static_cast<std::size_t>(label - 1)] = true;
  std::vector<bool> moved(state.labels.size(), false);
  for (int z = 0; z < clusters; ++z) {
    if (occupied[static_cast<std::size_t>(z)]) continue;
    std::size_t farthest = state.labels.size();
    Scalar far_dist = -std::numeric_limits<Scalar>::infinity();
    for (std::size_t k = 0; k < state.labels.size(); ++k) {
      if (moved[k]) continue;
      if (state.assigned_dist[k] > far_dist) {
        far_dist = state.assigned_dist[k];
        farthest = k;
      }
    }
    if (farthest == state.labels.size()) break;
    state.labels[farthest] = z + 1;
    state.assigned_dist[farthest] = state.dist[farthest][static_cast<std::size_t>(z)];
    moved[farthest] = true;
  }
}

}  // namespace detail

/// K-means over datasets with method-matched centroids and distances. Each
/// restart seeds its centroids from the per-item estimates of Z distinct
/// random items, alternates centroid updates (warm-started from the previous
/// sweep for the corrected method) with nearest-centroid assignment, and stops
/// once the fraction of changed labels drops to the tolerance. Restarts are
/// scored by final inertia; by default the largest wins. `init_indices`, when
/// given, pins the seeding of each restart for reproduction.
template <typename Scalar>
[[nodiscard]] KmeansResult<Scalar> kmeans_fit(
    std::span<const DataMatrix<Scalar>> items, const KmeansOptions& opts,
    std::uint64_t seed,
    const std::vector<std::vector<std::size_t>>* init_indices = nullptr) {
  detail::check_common_shape<Scalar>(items);
  const int count = static_cast<int>(items.size());
  if (opts.clusters < 1) throw InvalidInput("kmeans_fit: need at least one cluster");
  if (opts.clusters > count) {
    throw InvalidInput("kmeans_fit: more clusters than datasets");
  }
  if (opts.restarts < 1) throw InvalidInput("kmeans_fit: need at least one restart");
  if (opts.max_sweeps < 1) throw InvalidInput("kmeans_fit: need at least one sweep");
  if (init_indices != nullptr &&
      static_cast<int>(init_indices->size()) != opts.restarts) {
    throw InvalidInput("kmeans_fit: init_indices must cover every restart");
  }
  if (opts.method == CentroidMethod::rmt) {
    detail::check_aspect<Scalar>(items.front().features(),
                                 static_cast<long>(items.front().samples()));
  }

  KmeansResult<Scalar> best;
  best.restart_inertias.reserve(static_cast<std::size_t>(opts.restarts));
  for (int restart = 0; restart < opts.restarts; ++restart) {
    std::vector<std::size_t> picks;
    if (init_indices != nullptr) {
      picks = (*init_indices)[static_cast<std::size_t>(restart)];
      if (static_cast<int>(picks.size()) != opts.clusters) {
        throw InvalidInput("kmeans_fit: init_indices entry of wrong size");
      }
      for (std::size_t idx : picks) {
        if (idx >= items.size()) throw InvalidInput("kmeans_fit: init index out of range");
      }
      std::vector<std::size_t> sorted(picks);
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw InvalidInput("kmeans_fit: init indices must be distinct");
      }
    } else {
      Rng rng(seed, derive_stream({0x6b6d65616e73ull, static_cast<std::uint64_t>(restart)}));
      std::vector<std::size_t> deck(items.size());
      std::iota(deck.begin(), deck.end(), std::size_t{0});
      for (int z = 0; z < opts.clusters; ++z) {
        const std::size_t j =
            static_cast<std::size_t>(z) +
            static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(count - z)));
        std::swap(deck[static_cast<std::size_t>(z)], deck[j]);
        picks.push_back(deck[static_cast<std::size_t>(z)]);
      }
    }

    std::vector<SpdMatrix<Scalar>> centroids;
    centroids.reserve(static_cast<std::size_t>(opts.clusters));
    for (std::size_t idx : picks) {
      centroids.push_back(opts.method == CentroidMethod::classical_lw
                              ? lw_linear(items[idx]).estimate
                              : scm(items[idx]));
    }

    auto state = detail::kmeans_assign<Scalar>(items, centroids, opts.method);
    detail::kmeans_reseed_empty<Scalar>(state, opts.clusters);
    int sweeps = 0;
    for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
      sweeps = sweep;
      for (int z = 1; z <= opts.clusters; ++z) {
        std::vector<DataMatrix<Scalar>> group;
        for (std::size_t k = 0; k < items.size(); ++k) {
          if (state.labels[k] == z) group.push_back(items[k]);
        }
        const auto zi = static_cast<std::size_t>(z - 1);
        centroids[zi] = detail::group_centroid<Scalar>(
            std::span<const DataMatrix<Scalar>>(group), opts.method, opts.descent,
            &centroids[zi]);
      }
      auto next = detail::kmeans_assign<Scalar>(items, centroids, opts.method);
      // Reassignment picks each row's minimum, so against the same centroids
      // the total must not exceed the total at the previous labels.
      Scalar held = 0;
      Scalar taken = 0;
      for (std::size_t k = 0; k < items.size(); ++k) {
        held += next.dist[k][static_cast<std::size_t>(state.labels[k] - 1)];
        taken += next.assigned_dist[k];
      }
      if (taken > held) {
        throw Error("kmeans_fit: assignment increased the objective");
      }
      detail::kmeans_reseed_empty<Scalar>(next, opts.clusters);
      int changed = 0;
      for (std::size_t k = 0; k < items.size(); ++k) {
        if (next.labels[k] != state.labels[k]) ++changed;
      }
      state = std::move(next);
      if (static_cast<double>(changed) / static_cast<double>(count) <=
          opts.label_change_tol) {
        break;
      }
    }

    double inertia = 0;
    for (Scalar d : state.assigned_dist) inertia += static_cast<double>(d);
    best.restart_inertias.push_back(inertia);
    const bool better = opts.select_min_inertia ? inertia < best.inertia
                                                : inertia > best.inertia;
    if (restart == 0 || better) {
      best.labels = state.labels;
      best.centroids = centroids;
      best.inertia = inertia;
      best.sweeps = sweeps;
      best.chosen_restart = restart;
    }
  }
  return best;
}

}  // namespace rmtmean
