#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "rmtmean/errors.hpp"
#include "rmtmean/geometry.hpp"
#include "rmtmean/spd.hpp"

namespace rmtmean {

/// Estimator of the squared Fisher distance between a reference SPD matrix R
/// and the population covariance behind a sample covariance Chat built from n
/// samples. The plug-in spectrum is debiased through the eigenvalues of a
/// rank-one downdate of the whitened spectrum; the estimate is consistent in
/// the regime where p/n stays below one, and may legitimately be negative at
/// finite n. Values are never clamped.

template <typename Scalar>
struct RmtSpectralContext {
  DenseVector<Scalar> whitened_eigs;    ///< eigenvalues of R^{-1/2} Chat R^{-1/2}, ascending
  DenseMatrix<Scalar> whitened_basis;   ///< matching orthonormal eigenvectors
  DenseVector<Scalar> downdated_eigs;   ///< eigenvalues of diag(l) - sqrt(l)sqrt(l)^T/n
  DenseMatrix<Scalar> downdated_basis;  ///< matching orthonormal eigenvectors
  Index dim = 0;                        ///< p
  long samples = 0;                     ///< n
  Scalar aspect = 0;                    ///< p/n, strictly below one
};

namespace detail {

template <typename Scalar>
void check_aspect(Index p, long n) {
  if (n <= p) {
    throw AspectRatioOutOfRange("corrected distance requires n > p, got p=" +
                                std::to_string(p) + " n=" + std::to_string(n));
  }
}

template <typename Scalar>
[[nodiscard]] DenseMatrix<Scalar> rank_one_downdate(const DenseVector<Scalar>& eigs,
                                                    long n) {
  const DenseVector<Scalar> root = eigs.cwiseSqrt();
  DenseMatrix<Scalar> out = (-(root * root.transpose()) / static_cast<Scalar>(n));
  out.diagonal() += eigs;
  return out;
}

}  // namespace detail

/// Spectral data shared by the corrected distance and its gradients.
template <typename Scalar>
[[nodiscard]] RmtSpectralContext<Scalar> spectral_context(const SpdMatrix<Scalar>& r,
                                                          const SpdMatrix<Scalar>& chat,
                                                          long n) {
  if (r.dim() != chat.dim()) {
    throw DimMismatch("spectral_context: dimensions " + std::to_string(r.dim()) +
                      " vs " + std::to_string(chat.dim()));
  }
  const Index p = r.dim();
  detail::check_aspect<Scalar>(p, n);

  const DenseMatrix<Scalar> white = r.inv_sqrt_matrix();
  const DenseMatrix<Scalar> m = sym_part(DenseMatrix<Scalar>(white * chat.matrix() * white));
  SpectralPair<Scalar> whitened = sym_eig(m);
  if (!(whitened.values[0] > Scalar(0))) {
    throw NotPositiveDefinite("spectral_context: whitened spectrum is not positive");
  }
  SpectralPair<Scalar> downdated =
      sym_eig<Scalar>(detail::rank_one_downdate(whitened.values, n));

  RmtSpectralContext<Scalar> ctx;
  ctx.whitened_eigs = std::move(whitened.values);
  ctx.whitened_basis = std::move(whitened.vectors);
  ctx.downdated_eigs = std::move(downdated.values);
  ctx.downdated_basis = std::move(downdated.vectors);
  ctx.dim = p;
  ctx.samples = n;
  ctx.aspect = static_cast<Scalar>(p) / static_cast<Scalar>(n);
  return ctx;
}

/// Pairwise kernel over a positive spectrum:
///   K_ij = (l_i log(l_i/l_j) - (l_i - l_j)) / (l_i - l_j)^2,  K_ii = 1/(2 l_i),
/// i.e. -l_i times the second divided difference of log at (l_i, l_i, l_j).
/// Relative separations below 1e-8 switch to the analytic limit at the pair
/// midpoint; the direct formula has lost every digit by that point.
template <typename Scalar>
[[nodiscard]] DenseMatrix<Scalar> pair_log_kernel(const DenseVector<Scalar>& eigs) {
  const Index p = eigs.size();
  if (p == 0) throw DimMismatch("pair_log_kernel: empty spectrum");
  if (!eigs.allFinite() || !(eigs.minCoeff() > Scalar(0))) {
    throw InvalidInput("pair_log_kernel: spectrum must be positive and finite");
  }
  constexpr Scalar kDegenerate = Scalar(1e-8);
  DenseMatrix<Scalar> kernel(p, p);
  for (Index i = 0; i < p; ++i) {
    kernel(i, i) = Scalar(1) / (Scalar(2) * eigs[i]);
    for (Index j = 0; j < p; ++j) {
      if (j == i) continue;
      const Scalar li = eigs[i];
      const Scalar lj = eigs[j];
      const Scalar gap = li - lj;
      if (std::abs(gap) <= kDegenerate * std::max(li, lj)) {
        const Scalar mid = (li + lj) / Scalar(2);
        const Scalar rel = gap / (Scalar(2) * mid);
        kernel(i, j) = (Scalar(1) + rel / Scalar(3)) / (Scalar(2) * mid);
      } else {
        const Scalar logratio = std::log1p(gap / lj);
        kernel(i, j) = (li * logratio - gap) / (gap * gap);
      }
    }
  }
  return kernel;
}

/// Pointwise weights log(l_i)/l_i over a positive spectrum.
template <typename Scalar>
[[nodiscard]] DenseVector<Scalar> point_log_weights(const DenseVector<Scalar>& eigs) {
  if (eigs.size() == 0) throw DimMismatch("point_log_weights: empty spectrum");
  if (!eigs.allFinite() || !(eigs.minCoeff() > Scalar(0))) {
    throw InvalidInput("point_log_weights: spectrum must be positive and finite");
  }
  return (eigs.array().log() / eigs.array()).matrix();
}

/// Weight vector applied to the spectral shifts (l - z) in the corrected
/// distance: (1/p) K 1 + ((1-c)/c) q.
template <typename Scalar>
[[nodiscard]] DenseVector<Scalar> correction_weights(const DenseVector<Scalar>& eigs,
                                                     long n) {
  const Index p = eigs.size();
  const Scalar aspect = static_cast<Scalar>(p) / static_cast<Scalar>(n);
  return (pair_log_kernel(eigs).rowwise().sum() / static_cast<Scalar>(p)) +
         ((Scalar(1) - aspect) / aspect) * point_log_weights(eigs);
}

namespace detail {

template <typename Scalar>
[[nodiscard]] Scalar corrected_from_spectra(const DenseVector<Scalar>& eigs,
                                            const DenseVector<Scalar>& downdated,
                                            Index p, long n) {
  const Scalar pd = static_cast<Scalar>(p);
  const Scalar aspect = pd / static_cast<Scalar>(n);
  const Scalar log_gap = std::log1p(-aspect);
  const Scalar plug_in = eigs.array().log().square().sum() / (Scalar(2) * pd);
  const Scalar log_volume = eigs.array().log().sum() / pd;
  const Scalar shift_term = (eigs - downdated).dot(correction_weights(eigs, n));
  const Scalar constant = (Scalar(1) - aspect) / (Scalar(2) * aspect) * log_gap * log_gap;
  return plug_in + log_volume - shift_term - constant;
}

}  // namespace detail

/// Corrected squared-distance estimate from a precomputed context.
template <typename Scalar>
[[nodiscard]] Scalar rmt_dist2(const RmtSpectralContext<Scalar>& ctx) {
  return detail::corrected_from_spectra(ctx.whitened_eigs, ctx.downdated_eigs,
                                        ctx.dim, ctx.samples);
}

/// Corrected squared-distance estimate between a reference point r and the
/// population behind the sample covariance chat (n samples). Eigenvalue-only
/// path; cheaper than building a full context when no gradient is needed.
template <typename Scalar>
[[nodiscard]] Scalar rmt_dist2(const SpdMatrix<Scalar>& r, const SpdMatrix<Scalar>& chat,
                               long n) {
  if (r.dim() != chat.dim()) {
    throw DimMismatch("rmt_dist2: dimensions " + std::to_string(r.dim()) + " vs " +
                      std::to_string(chat.dim()));
  }
  const Index p = r.dim();
  detail::check_aspect<Scalar>(p, n);

  const DenseMatrix<Scalar> white = r.inv_sqrt_matrix();
  const DenseMatrix<Scalar> m = sym_part(DenseMatrix<Scalar>(white * chat.matrix() * white));
  Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> whitened(m, Eigen::EigenvaluesOnly);
  if (whitened.info() != Eigen::Success) {
    throw Error("rmt_dist2: eigensolver did not converge");
  }
  const DenseVector<Scalar> eigs = whitened.eigenvalues();
  if (!(eigs[0] > Scalar(0))) {
    throw NotPositiveDefinite("rmt_dist2: whitened spectrum is not positive");
  }
  Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> downdated(
      detail::rank_one_downdate(eigs, n), Eigen::EigenvaluesOnly);
  if (downdated.info() != Eigen::Success) {
    throw Error("rmt_dist2: eigensolver did not converge");
  }
  return detail::corrected_from_spectra(eigs, DenseVector<Scalar>(downdated.eigenvalues()),
                                        p, n);
}

}  // namespace rmtmean
