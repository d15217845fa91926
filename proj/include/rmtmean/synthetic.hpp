#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rmtmean/errors.hpp"
#include "rmtmean/geometry.hpp"
#include "rmtmean/rng.hpp"
#include "rmtmean/spd.hpp"

namespace rmtmean {

/// Random SPD matrix with prescribed condition number: Haar-random basis
/// (sign-fixed QR of a Gaussian matrix) and spectrum pinned to
/// [1/sqrt(a), sqrt(a)] with both endpoints attained and interior eigenvalues
/// uniform on that interval. condition == 1 returns the exact identity.
/// Consumes p*p normals, then p-2 uniforms.
template <typename Scalar>
[[nodiscard]] SpdMatrix<Scalar> random_spd(Index p, Scalar condition, Rng& rng) {
  if (p < 1) throw InvalidInput("random_spd: dimension must be positive");
  if (!(condition >= Scalar(1))) {
    throw InvalidInput("random_spd: condition number must be >= 1");
  }
  if (condition == Scalar(1)) return SpdMatrix<Scalar>::identity(p);
  if (p == 1) return SpdMatrix<Scalar>::identity(1);

  DenseMatrix<Scalar> gauss(p, p);
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < p; ++i) gauss(i, j) = static_cast<Scalar>(rng.normal());
  }
  Eigen::HouseholderQR<DenseMatrix<Scalar>> qr(gauss);
  DenseMatrix<Scalar> basis = qr.householderQ();
  // Fixing the sign of each R diagonal entry makes Q Haar-distributed.
  const DenseVector<Scalar> rdiag = qr.matrixQR().diagonal();
  for (Index j = 0; j < p; ++j) {
    if (rdiag[j] < Scalar(0)) basis.col(j) = -basis.col(j);
  }

  const Scalar hi = std::sqrt(condition);
  const Scalar lo = Scalar(1) / hi;
  DenseVector<Scalar> values(p);
  values[0] = lo;
  for (Index i = 1; i + 1 < p; ++i) {
    values[i] = static_cast<Scalar>(rng.uniform(static_cast<double>(lo),
                                                static_cast<double>(hi)));
  }
  values[p - 1] = hi;
  std::sort(values.data(), values.data() + p);
  return SpdMatrix<Scalar>::from_spectrum({values, basis});
}

/// Population cluster around a center: exponentiates centered symmetric
/// Gaussian perturbations (entrywise variance sigma2, mirrored across the
/// diagonal) and conjugates by the square root of the center. The perturbations
/// are recentred to sum to zero, so the cluster is balanced around `center`
/// and sigma2 == 0 reproduces it exactly up to roundoff. Consumes
/// count * p(p+1)/2 normals.
template <typename Scalar>
[[nodiscard]] std::vector<SpdMatrix<Scalar>> spawn_cluster(
    const SpdMatrix<Scalar>& center, int count, Scalar sigma2, Rng& rng) {
  if (count < 2) throw InvalidInput("spawn_cluster: need at least 2 members");
  if (!(sigma2 >= Scalar(0))) throw InvalidInput("spawn_cluster: variance must be >= 0");
  const Index p = center.dim();
  const Scalar sigma = std::sqrt(sigma2);

  std::vector<DenseMatrix<Scalar>> tangents;
  tangents.reserve(static_cast<std::size_t>(count));
  DenseMatrix<Scalar> mean = DenseMatrix<Scalar>::Zero(p, p);
  for (int k = 0; k < count; ++k) {
    DenseMatrix<Scalar> s(p, p);
    for (Index j = 0; j < p; ++j) {
      for (Index i = 0; i <= j; ++i) {
        const Scalar v = sigma * static_cast<Scalar>(rng.normal());
        s(i, j) = v;
        s(j, i) = v;
      }
    }
    mean += s;
    tangents.push_back(std::move(s));
  }
  mean /= static_cast<Scalar>(count);

  const DenseMatrix<Scalar> half = center.sqrt_matrix();
  std::vector<SpdMatrix<Scalar>> members;
  members.reserve(tangents.size());
  for (auto& s : tangents) {
    s -= mean;
    const SpdMatrix<Scalar> boost = spd_expm<Scalar>(s);
    members.emplace_back(sym_part(DenseMatrix<Scalar>(half * boost.matrix() * half)));
  }
  return members;
}

/// n columns drawn from N(0, cov): a standard normal block multiplied by the
/// matrix square root of cov. Consumes p*n normals, columns first.
template <typename Scalar>
[[nodiscard]] DataMatrix<Scalar> sample_gaussian(const SpdMatrix<Scalar>& cov, Index n,
                                                 Rng& rng) {
  if (n < 1) throw InvalidInput("sample_gaussian: need at least 1 sample");
  const Index p = cov.dim();
  DenseMatrix<Scalar> z(p, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < p; ++i) z(i, j) = static_cast<Scalar>(rng.normal());
  }
  return DataMatrix<Scalar>(cov.sqrt_matrix() * z);
}

/// One synthetic experiment instance: a center, a balanced cluster of
/// population matrices around it, and a Gaussian dataset per member.
template <typename Scalar>
struct GroundTruth {
  SpdMatrix<Scalar> center;
  std::vector<SpdMatrix<Scalar>> members;
  std::vector<DataMatrix<Scalar>> data;
};

/// Builds a GroundTruth from named substreams of (seed, trial_stream), so any
/// trial can be regenerated independently of evaluation order: substream 0
/// draws the center, 1 the cluster, and (2, k) dataset k.
template <typename Scalar>
[[nodiscard]] GroundTruth<Scalar> make_ground_truth(Index p, int count, Index n,
                                                    Scalar sigma2, Scalar condition,
                                                    std::uint64_t seed,
                                                    std::uint64_t trial_stream) {
  Rng center_rng(seed, derive_stream({trial_stream, 0}));
  SpdMatrix<Scalar> center = random_spd<Scalar>(p, condition, center_rng);
  Rng cluster_rng(seed, derive_stream({trial_stream, 1}));
  std::vector<SpdMatrix<Scalar>> members =
      spawn_cluster<Scalar>(center, count, sigma2, cluster_rng);
  std::vector<DataMatrix<Scalar>> data;
  data.reserve(members.size());
  for (std::size_t k = 0; k < members.size(); ++k) {
    Rng data_rng(seed, derive_stream({trial_stream, 2, static_cast<std::uint64_t>(k)}));
    data.push_back(sample_gaussian<Scalar>(members[k], n, data_rng));
  }
  return GroundTruth<Scalar>{std::move(center), std::move(members), std::move(data)};
}

}  // namespace rmtmean
