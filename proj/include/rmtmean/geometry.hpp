#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "rmtmean/errors.hpp"
#include "rmtmean/spd.hpp"

namespace rmtmean {

/// Affine-invariant geometry of the SPD cone. Squared distances carry the
/// 1/(2p) normalization throughout, so values are comparable across dimensions.

template <typename Scalar>
[[nodiscard]] SpdMatrix<Scalar> spd_sqrtm(const SpdMatrix<Scalar>& c) {
  SpectralPair<Scalar> spec = c.spectrum();
  spec.values = spec.values.cwiseSqrt();
  return SpdMatrix<Scalar>::from_spectrum(std::move(spec));
}

template <typename Scalar>
[[nodiscard]] SpdMatrix<Scalar> spd_inv_sqrtm(const SpdMatrix<Scalar>& c) {
  const SpectralPair<Scalar>& spec = c.spectrum();
  SpectralPair<Scalar> inv;
  // 1/sqrt reverses the eigenvalue order; flip to keep values ascending.
  inv.values = spec.values.cwiseSqrt().cwiseInverse().reverse();
  inv.vectors = spec.vectors.rowwise().reverse();
  return SpdMatrix<Scalar>::from_spectrum(std::move(inv));
}

/// Principal matrix logarithm of an SPD matrix; the result is symmetric.
template <typename Scalar>
[[nodiscard]] DenseMatrix<Scalar> spd_logm(const SpdMatrix<Scalar>& c) {
  return spectral_apply(c.spectrum(), [](Scalar v) { return std::log(v); });
}

/// Matrix exponential of a symmetric matrix; the result is SPD.
template <typename Scalar>
[[nodiscard]] SpdMatrix<Scalar> spd_expm(const DenseMatrix<Scalar>& sym) {
  SpectralPair<Scalar> spec = sym_eig<Scalar>(sym_part(sym));
  spec.values = spec.values.array().exp().matrix();
  return SpdMatrix<Scalar>::from_spectrum(std::move(spec));
}

namespace detail {

/// Eigenvalues of a^{-1} b (ascending) via the generalized symmetric problem.
template <typename Scalar>
[[nodiscard]] DenseVector<Scalar> relative_eigenvalues(const SpdMatrix<Scalar>& a,
                                                       const SpdMatrix<Scalar>& b) {
  if (a.dim() != b.dim()) {
    throw DimMismatch("relative_eigenvalues: dimensions " + std::to_string(a.dim()) +
                      " vs " + std::to_string(b.dim()));
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix<Scalar>> solver(
      b.matrix(), a.matrix(), Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success) {
    throw Error("relative_eigenvalues: generalized eigensolver did not converge");
  }
  DenseVector<Scalar> values = solver.eigenvalues();
  if (!(values[0] > Scalar(0))) {
    throw NotPositiveDefinite("relative_eigenvalues: nonpositive generalized eigenvalue");
  }
  return values;
}

}  // namespace detail

/// Squared Fisher distance (1/2p) sum_i log^2 lambda_i(c1^{-1} c2).
template <typename Scalar>
[[nodiscard]] Scalar fisher_dist2(const SpdMatrix<Scalar>& c1, const SpdMatrix<Scalar>& c2) {
  const DenseVector<Scalar> values = detail::relative_eigenvalues(c1, c2);
  return values.array().log().square().sum() /
         (Scalar(2) * static_cast<Scalar>(c1.dim()));
}

/// Affine-invariant inner product tr(r^{-1} xi r^{-1} eta) of two symmetric
/// tangent matrices at the base point r.
template <typename Scalar>
[[nodiscard]] Scalar fisher_inner(const SpdMatrix<Scalar>& r,
                                  const DenseMatrix<Scalar>& xi,
                                  const DenseMatrix<Scalar>& eta) {
  const Index p = r.dim();
  if (xi.rows() != p || xi.cols() != p || eta.rows() != p || eta.cols() != p) {
    throw DimMismatch("fisher_inner: tangent shapes do not match the base point");
  }
  const DenseMatrix<Scalar> inv = r.inverse_matrix();
  const DenseMatrix<Scalar> a = inv * xi;
  const DenseMatrix<Scalar> b = inv * eta;
  // tr(ab) without forming the product.
  return a.cwiseProduct(b.transpose()).sum();
}

/// Second-order retraction r + xi + (1/2) xi r^{-1} xi. Always maps into the
/// SPD cone in exact arithmetic; numerical escape is reported as
/// RetractionBreakdown.
template <typename Scalar>
[[nodiscard]] SpdMatrix<Scalar> retract(const SpdMatrix<Scalar>& r,
                                        const DenseMatrix<Scalar>& xi) {
  const Index p = r.dim();
  if (xi.rows() != p || xi.cols() != p) {
    throw DimMismatch("retract: tangent shape does not match the base point");
  }
  if (!xi.allFinite()) throw InvalidInput("retract: tangent has non-finite entries");
  const DenseMatrix<Scalar> step =
      r.matrix() + xi + Scalar(0.5) * xi * r.inverse_matrix() * xi;
  try {
    return SpdMatrix<Scalar>(step);
  } catch (const Error& e) {
    throw RetractionBreakdown(std::string("retract: step left the SPD cone (") +
                              e.what() + ")");
  }
}

}  // namespace rmtmean
