#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "rmtmean/descent.hpp"
#include "rmtmean/errors.hpp"
#include "rmtmean/rmt_distance.hpp"
#include "rmtmean/rmt_gradients.hpp"
#include "rmtmean/spd.hpp"

namespace rmtmean {

/// Sample covariance (1/n) X X^T of column-sample data. With centering enabled
/// the column mean is subtracted and the 1/(n-1) normalization is used.
template <typename Scalar>
[[nodiscard]] SpdMatrix<Scalar> scm(const DataMatrix<Scalar>& x, bool center = false) {
  const Index p = x.features();
  const Index n = x.samples();
  if (n < p) {
    throw NotPositiveDefinite("scm: need at least as many samples as features, got p=" +
                              std::to_string(p) + " n=" + std::to_string(n));
  }
  if (center && n < 2) throw InvalidInput("scm: centering requires at least 2 samples");
  DenseMatrix<Scalar> second_moment;
  if (center) {
    const DenseVector<Scalar> mean = x.matrix().rowwise().mean();
    const DenseMatrix<Scalar> centered = x.matrix().colwise() - mean;
    second_moment = (centered * centered.transpose()) / static_cast<Scalar>(n - 1);
  } else {
    second_moment = (x.matrix() * x.matrix().transpose()) / static_cast<Scalar>(n);
  }
  return SpdMatrix<Scalar>(second_moment);
}

/// Linear shrinkage estimate rho*mu*I + (1-rho)*scm with the oracle-free
/// intensity of Ledoit & Wolf (2004). The shrinkage intensity always lies in
/// [0, 1]; zero sample dispersion (every rank-one term equal to the sample
/// covariance) yields rho = 1 and the isotropic target, which keeps the output
/// positive definite where the raw sample covariance would be singular.
template <typename Scalar>
struct LwEstimate {
  SpdMatrix<Scalar> estimate;
  Scalar rho;
  Scalar mu;
};

template <typename Scalar>
[[nodiscard]] LwEstimate<Scalar> lw_linear(const DataMatrix<Scalar>& x) {
  const Index p = x.features();
  const Index n = x.samples();
  if (n < 2) throw InvalidInput("lw_linear: need at least 2 samples");

  const DenseMatrix<Scalar> sample = (x.matrix() * x.matrix().transpose()) /
                                     static_cast<Scalar>(n);
  const Scalar pd = static_cast<Scalar>(p);
  const Scalar nd = static_cast<Scalar>(n);
  const Scalar mu = sample.trace() / pd;
  // Norms carry the 1/p scale of the original estimator; it cancels in rho.
  const Scalar d2 =
      (sample - mu * DenseMatrix<Scalar>::Identity(p, p)).squaredNorm() / pd;
  // sum_k |x_k x_k^T - S|_F^2 = sum_k |x_k|^4 - n |S|_F^2.
  Scalar fourth = 0;
  for (Index k = 0; k < n; ++k) {
    const Scalar norm2 = x.matrix().col(k).squaredNorm();
    fourth += norm2 * norm2;
  }
  const Scalar dispersion =
      std::max(Scalar(0), (fourth - nd * sample.squaredNorm()) / (pd * nd * nd));

  Scalar rho;
  if (dispersion == Scalar(0) || d2 == Scalar(0)) {
    rho = Scalar(1);
  } else {
    rho = std::min(dispersion, d2) / d2;
  }

  DenseMatrix<Scalar> shrunk = (Scalar(1) - rho) * sample;
  shrunk.diagonal().array() += rho * mu;
  return LwEstimate<Scalar>{SpdMatrix<Scalar>(shrunk), rho, mu};
}

/// Initialization preset for the corrected covariance estimator. The linear
/// shrinkage start is preferred: it is always well inside the cone and is a
/// data-independent distance away from the sample covariance, unlike starting
/// at the sample covariance itself, which begins at the degenerate point the
/// validity guard exists to reject.
enum class CovInit { lw, identity };

/// Covariance estimation by descending the corrected squared distance
/// R -> rmt_dist2(R, scm(x), n) with the validity guard active (config
/// default alpha = 10). Requires n > p.
template <typename Scalar>
[[nodiscard]] DescentResult<Scalar> rmt_cov(const DataMatrix<Scalar>& x,
                                            const SpdMatrix<Scalar>& start,
                                            const DescentConfig& cfg = {}) {
  const Index p = x.features();
  const long n = static_cast<long>(x.samples());
  detail::check_aspect<Scalar>(p, n);
  if (start.dim() != p) throw DimMismatch("rmt_cov: start dimension mismatch");
  const SpdMatrix<Scalar> chat = scm(x);
  auto cost = [&chat, n](const SpdMatrix<Scalar>& r) { return rmt_dist2(r, chat, n); };
  auto grad = [&chat, n](const SpdMatrix<Scalar>& r) {
    return rmt_dist2_grad(r, chat, n);
  };
  return descend(start, cost, grad, cfg);
}

template <typename Scalar>
[[nodiscard]] DescentResult<Scalar> rmt_cov(const DataMatrix<Scalar>& x,
                                            const DescentConfig& cfg = {},
                                            CovInit init = CovInit::lw) {
  const Index p = x.features();
  const long n = static_cast<long>(x.samples());
  detail::check_aspect<Scalar>(p, n);
  const SpdMatrix<Scalar> start = init == CovInit::lw
                                      ? lw_linear(x).estimate
                                      : SpdMatrix<Scalar>::identity(p);
  return rmt_cov(x, start, cfg);
}

}  // namespace rmtmean
