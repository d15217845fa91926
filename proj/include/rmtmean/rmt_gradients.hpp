#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "rmtmean/errors.hpp"
#include "rmtmean/geometry.hpp"
#include "rmtmean/rmt_distance.hpp"
#include "rmtmean/spd.hpp"

namespace rmtmean {

/// Riemannian gradients of the corrected squared distance, in eigenvalue
/// coordinates and on the SPD manifold, plus the classical counterparts used
/// as baselines. All gradients are with respect to the affine-invariant
/// metric; finite-difference directional derivatives are the ground truth the
/// test suite holds these to.

namespace detail {

/// Derivatives of the pairwise log kernel K with respect to its two spectrum
/// arguments: own(i,j) = dK_ij/dl_i, other(i,j) = dK_ij/dl_j. The diagonal
/// derivative dK_ii/dl_i = -1/(2 l_i^2) is split as own -1/l_i^2 plus other
/// +1/(2 l_i^2); only the row sums own*1 and column-weighted sums other^T s
/// enter the gradient, so the split is a convention.
template <typename Scalar>
struct KernelDerivatives {
  DenseMatrix<Scalar> own;
  DenseMatrix<Scalar> other;
};

template <typename Scalar>
[[nodiscard]] KernelDerivatives<Scalar> pair_log_kernel_derivatives(
    const DenseVector<Scalar>& eigs) {
  const Index p = eigs.size();
  constexpr Scalar kDegenerate = Scalar(1e-8);
  KernelDerivatives<Scalar> out;
  out.own.resize(p, p);
  out.other.resize(p, p);
  for (Index i = 0; i < p; ++i) {
    out.own(i, i) = Scalar(-1) / (eigs[i] * eigs[i]);
    out.other(i, i) = Scalar(1) / (Scalar(2) * eigs[i] * eigs[i]);
    for (Index j = 0; j < p; ++j) {
      if (j == i) continue;
      const Scalar li = eigs[i];
      const Scalar lj = eigs[j];
      const Scalar gap = li - lj;
      if (std::abs(gap) <= kDegenerate * std::max(li, lj)) {
        const Scalar mid = (li + lj) / Scalar(2);
        const Scalar rel = gap / (Scalar(2) * mid);
        out.own(i, j) = Scalar(-1) / (Scalar(6) * mid * mid);
        out.other(i, j) = -(Scalar(1) + rel) / (Scalar(3) * mid * mid);
      } else {
        const Scalar logratio = std::log1p(gap / lj);
        const Scalar gap3 = gap * gap * gap;
        out.own(i, j) = (Scalar(2) * gap - (li + lj) * logratio) / gap3;
        out.other(i, j) =
            (Scalar(2) * li * logratio - Scalar(2) * gap - gap * gap / lj) / gap3;
      }
    }
  }
  return out;
}

}  // namespace detail

/// Precomputed pieces of the eigenvalue-space gradient, reusable between the
/// gradient and diagnostics on the same context.
template <typename Scalar>
struct GradWorkspace {
  RmtSpectralContext<Scalar> ctx;
  DenseVector<Scalar> weights;  ///< correction_weights of the whitened spectrum
  DenseVector<Scalar> shift;    ///< whitened_eigs - downdated_eigs
  detail::KernelDerivatives<Scalar> kernel_derivs;
};

template <typename Scalar>
[[nodiscard]] GradWorkspace<Scalar> make_grad_workspace(RmtSpectralContext<Scalar> ctx) {
  GradWorkspace<Scalar> ws;
  ws.weights = correction_weights(ctx.whitened_eigs, ctx.samples);
  ws.shift = ctx.whitened_eigs - ctx.downdated_eigs;
  ws.kernel_derivs = detail::pair_log_kernel_derivatives(ctx.whitened_eigs);
  ws.ctx = std::move(ctx);
  return ws;
}

/// Riemannian gradient of the corrected squared distance in eigenvalue
/// coordinates (metric sum_i dl_i^2 / l_i^2), returned as the diagonal vector.
///
/// Four pieces, matching the differential of the estimator:
///   plug-in spectrum terms, variation of the shift (l - z) through the
///   downdated eigenvalues, variation of the pairwise kernel, and variation of
///   the pointwise weights. The shift-variation term enters with a minus sign
///   inside the bracket (w - mid); the directional-derivative suite pins this
///   sign, and the alternatives fail it.
template <typename Scalar>
[[nodiscard]] DenseVector<Scalar> rmt_spectrum_grad(const GradWorkspace<Scalar>& ws) {
  const RmtSpectralContext<Scalar>& ctx = ws.ctx;
  const Index p = ctx.dim;
  const Scalar pd = static_cast<Scalar>(p);
  const Scalar nd = static_cast<Scalar>(ctx.samples);
  const Scalar ratio = (Scalar(1) - ctx.aspect) / ctx.aspect;

  const DenseVector<Scalar>& eigs = ctx.whitened_eigs;
  const auto larr = eigs.array();
  const DenseVector<Scalar> logs = larr.log().matrix();

  // mid_t = diag(A V diag(w) V^T)_t with A_tj = delta_tj - sqrt(l_j/l_t)/n:
  // the diagonal of the conjugated weight matrix minus its sqrt(l)-weighted
  // row sums, rescaled.
  const DenseMatrix<Scalar> conj = ws.ctx.downdated_basis *
                                   ws.weights.asDiagonal() *
                                   ws.ctx.downdated_basis.transpose();
  const DenseVector<Scalar> root = eigs.cwiseSqrt();
  const DenseVector<Scalar> mid =
      conj.diagonal() - (conj * root).cwiseQuotient(root * nd);

  const DenseVector<Scalar> own_rows = ws.kernel_derivs.own.rowwise().sum();
  const DenseVector<Scalar> other_cols = ws.kernel_derivs.other.transpose() * ws.shift;

  DenseVector<Scalar> grad(p);
  const auto sq = larr.square();
  grad = ((larr * (logs.array() + Scalar(1))) / pd).matrix();
  grad -= (sq * (ws.weights.array() - mid.array())).matrix();
  grad -= (sq / pd * (ws.shift.array() * own_rows.array() + other_cols.array())).matrix();
  grad -= (ratio * (Scalar(1) - logs.array()) * ws.shift.array()).matrix();
  return grad;
}

template <typename Scalar>
[[nodiscard]] DenseVector<Scalar> rmt_spectrum_grad(const RmtSpectralContext<Scalar>& ctx) {
  return rmt_spectrum_grad(make_grad_workspace(ctx));
}

/// Lifts an eigenvalue-space gradient through the whitening chain:
///   grad = - R^{1/2} U diag(g_i / l_i) U^T R^{1/2}.
template <typename Scalar>
[[nodiscard]] DenseMatrix<Scalar> lift_spectrum_grad(const SpdMatrix<Scalar>& r,
                                                     const RmtSpectralContext<Scalar>& ctx,
                                                     const DenseVector<Scalar>& spectrum_grad) {
  const DenseMatrix<Scalar> half = r.sqrt_matrix();
  const DenseVector<Scalar> scaled = spectrum_grad.cwiseQuotient(ctx.whitened_eigs);
  const DenseMatrix<Scalar> inner = ctx.whitened_basis * scaled.asDiagonal() *
                                    ctx.whitened_basis.transpose();
  return sym_part(DenseMatrix<Scalar>(-half * inner * half));
}

/// Riemannian gradient on the SPD manifold of R -> rmt_dist2(R, chat, n).
template <typename Scalar>
[[nodiscard]] DenseMatrix<Scalar> rmt_dist2_grad(const SpdMatrix<Scalar>& r,
                                                 const RmtSpectralContext<Scalar>& ctx) {
  return lift_spectrum_grad(r, ctx, rmt_spectrum_grad(ctx));
}

template <typename Scalar>
[[nodiscard]] DenseMatrix<Scalar> rmt_dist2_grad(const SpdMatrix<Scalar>& r,
                                                 const SpdMatrix<Scalar>& chat, long n) {
  return rmt_dist2_grad(r, spectral_context(r, chat, n));
}

/// Gradient of the averaged corrected distance R -> (1/K) sum_k
/// rmt_dist2(R, chat_k, n_k). Terms are accumulated in the order given.
template <typename Scalar>
[[nodiscard]] DenseMatrix<Scalar> rmt_mean_grad(const SpdMatrix<Scalar>& r,
                                                std::span<const SpdMatrix<Scalar>> chats,
                                                std::span<const long> samples) {
  if (chats.empty()) throw InvalidInput("rmt_mean_grad: empty input list");
  if (chats.size() != samples.size()) {
    throw DimMismatch("rmt_mean_grad: one sample count per matrix required");
  }
  const Index p = r.dim();
  const DenseMatrix<Scalar> white = r.inv_sqrt_matrix();
  const DenseMatrix<Scalar> half = r.sqrt_matrix();
  DenseMatrix<Scalar> acc = DenseMatrix<Scalar>::Zero(p, p);
  for (std::size_t k = 0; k < chats.size(); ++k) {
    if (chats[k].dim() != p) throw DimMismatch("rmt_mean_grad: dimension mismatch");
    detail::check_aspect<Scalar>(p, samples[k]);
    const DenseMatrix<Scalar> m =
        sym_part(DenseMatrix<Scalar>(white * chats[k].matrix() * white));
    SpectralPair<Scalar> whitened = sym_eig(m);
    if (!(whitened.values[0] > Scalar(0))) {
      throw NotPositiveDefinite("rmt_mean_grad: whitened spectrum is not positive");
    }
    RmtSpectralContext<Scalar> ctx;
    ctx.dim = p;
    ctx.samples = samples[k];
    ctx.aspect = static_cast<Scalar>(p) / static_cast<Scalar>(samples[k]);
    SpectralPair<Scalar> downdated =
        sym_eig<Scalar>(detail::rank_one_downdate(whitened.values, samples[k]));
    ctx.whitened_eigs = std::move(whitened.values);
    ctx.whitened_basis = std::move(whitened.vectors);
    ctx.downdated_eigs = std::move(downdated.values);
    ctx.downdated_basis = std::move(downdated.vectors);

    const DenseVector<Scalar> g = rmt_spectrum_grad(ctx);
    const DenseVector<Scalar> scaled = g.cwiseQuotient(ctx.whitened_eigs);
    acc.noalias() += ctx.whitened_basis * scaled.asDiagonal() *
                     ctx.whitened_basis.transpose();
  }
  acc /= static_cast<Scalar>(chats.size());
  return sym_part(DenseMatrix<Scalar>(-half * acc * half));
}

template <typename Scalar>
[[nodiscard]] DenseMatrix<Scalar> rmt_mean_grad(const SpdMatrix<Scalar>& r,
                                                std::span<const SpdMatrix<Scalar>> chats,
                                                long n) {
  const std::vector<long> samples(chats.size(), n);
  return rmt_mean_grad(r, chats, std::span<const long>(samples));
}

/// Gradient of the classical Fréchet objective R -> (1/K) sum_k
/// fisher_dist2(R, c_k):  -(1/(K p)) R^{1/2} sum_k logm(R^{-1/2} c_k R^{-1/2}) R^{1/2}.
template <typename Scalar>
[[nodiscard]] DenseMatrix<Scalar> fisher_mean_grad(const SpdMatrix<Scalar>& r,
                                                   std::span<const SpdMatrix<Scalar>> cs) {
  if (cs.empty()) throw InvalidInput("fisher_mean_grad: empty input list");
  const Index p = r.dim();
  const DenseMatrix<Scalar> white = r.inv_sqrt_matrix();
  const DenseMatrix<Scalar> half = r.sqrt_matrix();
  DenseMatrix<Scalar> acc = DenseMatrix<Scalar>::Zero(p, p);
  for (const SpdMatrix<Scalar>& c : cs) {
    if (c.dim() != p) throw DimMismatch("fisher_mean_grad: dimension mismatch");
    const DenseMatrix<Scalar> m = sym_part(DenseMatrix<Scalar>(white * c.matrix() * white));
    const SpectralPair<Scalar> spec = sym_eig(m);
    if (!(spec.values[0] > Scalar(0))) {
      throw NotPositiveDefinite("fisher_mean_grad: whitened spectrum is not positive");
    }
    acc += spectral_apply(spec, [](Scalar v) { return std::log(v); });
  }
  const Scalar scale =
      Scalar(-1) / (static_cast<Scalar>(cs.size()) * static_cast<Scalar>(p));
  return sym_part(DenseMatrix<Scalar>(scale * half * acc * half));
}

}  // namespace rmtmean
