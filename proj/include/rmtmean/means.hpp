#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rmtmean/covariance.hpp"
#include "rmtmean/descent.hpp"
#include "rmtmean/errors.hpp"
#include "rmtmean/geometry.hpp"
#include "rmtmean/rmt_distance.hpp"
#include "rmtmean/rmt_gradients.hpp"
#include "rmtmean/spd.hpp"

namespace rmtmean {

/// Mean problems run with the validity guard off: the classical cost is
/// nonnegative and the corrected population cost concentrates near zero, so a
/// spurious floor would only mask genuine line-search trouble.
[[nodiscard]] inline DescentConfig mean_descent_defaults() {
  DescentConfig cfg;
  cfg.validity_alpha = 0.0;
  return cfg;
}

namespace detail {

// Accumulation order over inputs follows a content-derived canonical order, so
// means are bit-for-bit invariant under permutations of the input list.
template <typename Scalar>
[[nodiscard]] std::uint64_t content_hash(const DenseMatrix<Scalar>& m) {
  std::uint64_t h = 1469598103934665603ull;
  const auto* bytes = reinterpret_cast<const unsigned char*>(m.data());
  const std::size_t count = sizeof(Scalar) * static_cast<std::size_t>(m.size());
  for (std::size_t i = 0; i < count; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

template <typename Scalar, typename GetMatrix>
[[nodiscard]] std::vector<std::size_t> canonical_order(std::size_t count,
                                                       GetMatrix&& matrix_of) {
  std::vector<std::uint64_t> hashes(count);
  for (std::size_t i = 0; i < count; ++i) hashes[i] = content_hash(matrix_of(i));
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (hashes[a] != hashes[b]) return hashes[a] < hashes[b];
    const DenseMatrix<Scalar>& ma = matrix_of(a);
    const DenseMatrix<Scalar>& mb = matrix_of(b);
    const auto* pa = reinterpret_cast<const unsigned char*>(ma.data());
    const auto* pb = reinterpret_cast<const unsigned char*>(mb.data());
    const std::size_t na = sizeof(Scalar) * static_cast<std::size_t>(ma.size());
    const std::size_t nb = sizeof(Scalar) * static_cast<std::size_t>(mb.size());
    return std::lexicographical_compare(pa, pa + na, pb, pb + nb);
  });
  return order;
}

}  // namespace detail

/// Karcher mean of SPD matrices under the Fisher metric, by Riemannian descent
/// of the average squared distance from the identity start.
template <typename Scalar>
[[nodiscard]] DescentResult<Scalar> classical_mean(
    std::span<const SpdMatrix<Scalar>> mats,
    const DescentConfig& cfg = mean_descent_defaults()) {
  if (mats.empty()) throw InvalidInput("classical_mean: empty input");
  const Index p = mats.front().dim();
  for (const auto& m : mats) {
    if (m.dim() != p) throw DimMismatch("classical_mean: mixed dimensions");
  }

  const auto order = detail::canonical_order<Scalar>(
      mats.size(), [&](std::size_t i) -> const DenseMatrix<Scalar>& {
        return mats[i].matrix();
      });
  std::vector<SpdMatrix<Scalar>> sorted;
  sorted.reserve(mats.size());
  for (std::size_t i : order) sorted.push_back(mats[i]);

  const Scalar inv_count = Scalar(1) / static_cast<Scalar>(sorted.size());
  auto cost = [&sorted, inv_count](const SpdMatrix<Scalar>& r) {
    Scalar acc = 0;
    for (const auto& m : sorted) acc += fisher_dist2(r, m);
    return acc * inv_count;
  };
  auto grad = [&sorted](const SpdMatrix<Scalar>& r) {
    return fisher_mean_grad<Scalar>(r, std::span<const SpdMatrix<Scalar>>(sorted));
  };
  return descend(SpdMatrix<Scalar>::identity(p), cost, grad, cfg);
}

/// Initialization preset for the corrected mean.
enum class MeanInit { identity, lw_mean };

/// Corrected Frechet mean: descends the average corrected squared distance to
/// the per-dataset sample covariances, consuming each dataset's own sample
/// count. Requires n_k > p for every dataset.
template <typename Scalar>
[[nodiscard]] DescentResult<Scalar> rmt_mean(
    std::span<const DataMatrix<Scalar>> xs, const SpdMatrix<Scalar>& start,
    const DescentConfig& cfg = mean_descent_defaults()) {
  if (xs.empty()) throw InvalidInput("rmt_mean: empty input");
  const Index p = xs.front().features();
  if (start.dim() != p) throw DimMismatch("rmt_mean: start dimension mismatch");
  for (const auto& x : xs) {
    if (x.features() != p) throw DimMismatch("rmt_mean: mixed feature dimensions");
    detail::check_aspect<Scalar>(p, static_cast<long>(x.samples()));
  }

  const auto order = detail::canonical_order<Scalar>(
      xs.size(), [&](std::size_t i) -> const DenseMatrix<Scalar>& {
        return xs[i].matrix();
      });
  std::vector<SpdMatrix<Scalar>> scms;
  std::vector<long> counts;
  scms.reserve(xs.size());
  counts.reserve(xs.size());
  for (std::size_t i : order) {
    scms.push_back(scm(xs[i]));
    counts.push_back(static_cast<long>(xs[i].samples()));
  }

  const Scalar inv_count = Scalar(1) / static_cast<Scalar>(scms.size());
  auto cost = [&scms, &counts, inv_count](const SpdMatrix<Scalar>& r) {
    Scalar acc = 0;
    for (std::size_t k = 0; k < scms.size(); ++k) {
      acc += rmt_dist2(r, scms[k], counts[k]);
    }
    return acc * inv_count;
  };
  auto grad = [&scms, &counts](const SpdMatrix<Scalar>& r) {
    return rmt_mean_grad<Scalar>(r, std::span<const SpdMatrix<Scalar>>(scms),
                                 std::span<const long>(counts));
  };
  return descend(start, cost, grad, cfg);
}

template <typename Scalar>
[[nodiscard]] DescentResult<Scalar> rmt_mean(
    std::span<const DataMatrix<Scalar>> xs,
    const DescentConfig& cfg = mean_descent_defaults(),
    MeanInit init = MeanInit::identity) {
  if (xs.empty()) throw InvalidInput("rmt_mean: empty input");
  const Index p = xs.front().features();
  SpdMatrix<Scalar> start = SpdMatrix<Scalar>::identity(p);
  if (init == MeanInit::lw_mean) {
    std::vector<SpdMatrix<Scalar>> shrunk;
    shrunk.reserve(xs.size());
    for (const auto& x : xs) shrunk.push_back(lw_linear(x).estimate);
    start = classical_mean<Scalar>(std::span<const SpdMatrix<Scalar>>(shrunk)).point;
  }
  return rmt_mean(xs, start, cfg);
}

}  // namespace rmtmean
