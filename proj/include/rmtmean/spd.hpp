#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <type_traits>
#include <utility>

#include "rmtmean/errors.hpp"

namespace rmtmean {

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

/// Relative eigenvalue floor below which a matrix is rejected as not positive
/// definite: smallest eigenvalue must exceed this fraction of the largest.
template <typename Scalar>
[[nodiscard]] constexpr Scalar spd_floor_ratio() {
  return std::max(static_cast<Scalar>(1e-12),
                  static_cast<Scalar>(16) * std::numeric_limits<Scalar>::epsilon());
}

/// Symmetric part of a square matrix.
template <typename Derived>
[[nodiscard]] DenseMatrix<typename Derived::Scalar> sym_part(
    const Eigen::MatrixBase<Derived>& m) {
  return ((m + m.transpose()) / typename Derived::Scalar(2)).eval();
}

/// Eigen-decomposition of a symmetric matrix: values ascending, orthonormal
/// column eigenvectors. Reconstruction vectors * diag(values) * vectors^T
/// reproduces the input to solver accuracy.
template <typename Scalar>
struct SpectralPair {
  DenseVector<Scalar> values;
  DenseMatrix<Scalar> vectors;
};

template <typename Scalar>
[[nodiscard]] SpectralPair<Scalar> sym_eig(const DenseMatrix<Scalar>& m) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    throw DimMismatch("sym_eig: expected a non-empty square matrix, got " +
                      std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  if (!m.allFinite()) throw InvalidInput("sym_eig: matrix has non-finite entries");
  Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> solver(m);
  if (solver.info() != Eigen::Success) {
    throw Error("sym_eig: eigensolver did not converge");
  }
  return SpectralPair<Scalar>{solver.eigenvalues(), solver.eigenvectors()};
}

/// vectors * diag(f(values)) * vectors^T, symmetrized.
template <typename Scalar, typename Fn>
[[nodiscard]] DenseMatrix<Scalar> spectral_apply(const SpectralPair<Scalar>& spec, Fn&& fn) {
  DenseVector<Scalar> mapped(spec.values.size());
  for (Index i = 0; i < spec.values.size(); ++i) mapped[i] = fn(spec.values[i]);
  return sym_part(DenseMatrix<Scalar>(spec.vectors * mapped.asDiagonal() *
                                      spec.vectors.transpose()));
}

/// Symmetric positive definite matrix. The full matrix is symmetrized on
/// ingest and the spectral decomposition is computed once at construction;
/// instances are immutable and safe to share across threads.
template <typename Scalar>
class SpdMatrix {
  static_assert(std::is_floating_point_v<Scalar>);

 public:
  /// Validating constructor: symmetrizes, then rejects matrices whose smallest
  /// eigenvalue is at most spd_floor_ratio() times the largest.
  explicit SpdMatrix(const DenseMatrix<Scalar>& m) : mat_(sym_part(m)) {
    spec_ = sym_eig(mat_);
    const Scalar lo = spec_.values[0];
    const Scalar hi = spec_.values[spec_.values.size() - 1];
    if (!(lo > spd_floor_ratio<Scalar>() * std::max(hi, Scalar(0)))) {
      throw NotPositiveDefinite(
          "SpdMatrix: eigenvalue range [" + std::to_string(static_cast<double>(lo)) +
          ", " + std::to_string(static_cast<double>(hi)) +
          "] fails the positive definite floor");
    }
  }

  [[nodiscard]] static SpdMatrix identity(Index p) {
    if (p <= 0) throw DimMismatch("SpdMatrix::identity: dimension must be positive");
    SpdMatrix out;
    out.mat_ = DenseMatrix<Scalar>::Identity(p, p);
    out.spec_.values = DenseVector<Scalar>::Ones(p);
    out.spec_.vectors = DenseMatrix<Scalar>::Identity(p, p);
    return out;
  }

  /// Builds vectors * diag(values) * vectors^T from an already-known spectral
  /// decomposition. The values are validated against the positive definite
  /// floor; the vectors are trusted to be orthonormal.
  [[nodiscard]] static SpdMatrix from_spectrum(SpectralPair<Scalar> spec) {
    const Index p = spec.values.size();
    if (p == 0 || spec.vectors.rows() != p || spec.vectors.cols() != p) {
      throw DimMismatch("SpdMatrix::from_spectrum: inconsistent shapes");
    }
    if (!spec.values.allFinite() || !spec.vectors.allFinite()) {
      throw InvalidInput("SpdMatrix::from_spectrum: non-finite entries");
    }
    for (Index i = 0; i + 1 < p; ++i) {
      if (spec.values[i] > spec.values[i + 1]) {
        throw InvalidInput("SpdMatrix::from_spectrum: values must be ascending");
      }
    }
    const Scalar lo = spec.values[0];
    const Scalar hi = spec.values[p - 1];
    if (!(lo > spd_floor_ratio<Scalar>() * std::max(hi, Scalar(0)))) {
      throw NotPositiveDefinite("SpdMatrix::from_spectrum: values fail the floor");
    }
    SpdMatrix out;
    out.mat_ = sym_part(DenseMatrix<Scalar>(spec.vectors * spec.values.asDiagonal() *
                                            spec.vectors.transpose()));
    out.spec_ = std::move(spec);
    return out;
  }

  [[nodiscard]] Index dim() const { return mat_.rows(); }
  [[nodiscard]] const DenseMatrix<Scalar>& matrix() const { return mat_; }
  [[nodiscard]] const SpectralPair<Scalar>& spectrum() const { return spec_; }

  [[nodiscard]] DenseMatrix<Scalar> sqrt_matrix() const {
    return spectral_apply(spec_, [](Scalar v) { return std::sqrt(v); });
  }
  [[nodiscard]] DenseMatrix<Scalar> inv_sqrt_matrix() const {
    return spectral_apply(spec_, [](Scalar v) { return Scalar(1) / std::sqrt(v); });
  }
  [[nodiscard]] DenseMatrix<Scalar> inverse_matrix() const {
    return spectral_apply(spec_, [](Scalar v) { return Scalar(1) / v; });
  }

 private:
  SpdMatrix() = default;

  DenseMatrix<Scalar> mat_;
  SpectralPair<Scalar> spec_;
};

/// Raw observation matrix, one column per sample (p features, n samples).
template <typename Scalar>
class DataMatrix {
 public:
  explicit DataMatrix(DenseMatrix<Scalar> samples) : mat_(std::move(samples)) {
    if (mat_.rows() == 0 || mat_.cols() == 0) {
      throw DimMismatch("DataMatrix: empty sample matrix");
    }
    if (!mat_.allFinite()) throw InvalidInput("DataMatrix: non-finite entries");
  }

  [[nodiscard]] Index features() const { return mat_.rows(); }
  [[nodiscard]] Index samples() const { return mat_.cols(); }
  [[nodiscard]] const DenseMatrix<Scalar>& matrix() const { return mat_; }

 private:
  DenseMatrix<Scalar> mat_;
};

}  // namespace rmtmean
