#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "rmtmean/covariance.hpp"
#include "rmtmean/geometry.hpp"
#include "rmtmean/rng.hpp"
#include "rmtmean/spd.hpp"
#include "rmtmean/synthetic.hpp"

using namespace rmtmean;

namespace {

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  return v[mid];
}

}  // namespace

TEST_CASE("sample covariance closed forms") {
  DenseMatrix<double> one(1, 1);
  one(0, 0) = 3.0;
  CHECK(scm(DataMatrix<double>(one)).matrix()(0, 0) == doctest::Approx(9.0));

  // Rows of a Hadamard matrix are orthogonal with squared norm n, so the
  // sample covariance of any row subset is exactly the identity.
  DenseMatrix<double> h(8, 8);
  h.setOnes();
  for (Index i = 0; i < 8; ++i) {
    for (Index j = 0; j < 8; ++j) {
      int bits = static_cast<int>(i) & static_cast<int>(j);
      int parity = 0;
      while (bits != 0) {
        parity ^= bits & 1;
        bits >>= 1;
      }
      if (parity != 0) h(i, j) = -1.0;
    }
  }
  const DataMatrix<double> x(DenseMatrix<double>(h.topRows(4)));
  CHECK((scm(x).matrix() - DenseMatrix<double>::Identity(4, 4)).norm() == 0.0);
}

TEST_CASE("sample covariance rejects rank-deficient data") {
  CHECK_THROWS_AS((void)scm(DataMatrix<double>(DenseMatrix<double>::Ones(3, 2))),
                  NotPositiveDefinite);
  DenseMatrix<double> repeated(2, 4);
  repeated.col(0) << 1.0, 2.0;
  for (Index k = 1; k < 4; ++k) repeated.col(k) = repeated.col(0);
  CHECK_THROWS_AS((void)scm(DataMatrix<double>(repeated)), NotPositiveDefinite);
}

TEST_CASE("centering subtracts the sample mean and switches to n-1") {
  DenseMatrix<double> x(1, 2);
  x << 1.0, 3.0;
  CHECK(scm(DataMatrix<double>(x)).matrix()(0, 0) == doctest::Approx(5.0));
  CHECK(scm(DataMatrix<double>(x), true).matrix()(0, 0) == doctest::Approx(2.0));

  Rng rng(101, 0);
  DenseMatrix<double> y(3, 12);
  for (Index i = 0; i < y.rows(); ++i) {
    for (Index j = 0; j < y.cols(); ++j) y(i, j) = rng.normal();
  }
  DenseMatrix<double> shifted = y;
  shifted.colwise() += DenseVector<double>::Constant(3, 7.5);
  const auto base = scm(DataMatrix<double>(y), true);
  const auto moved = scm(DataMatrix<double>(shifted), true);
  CHECK((base.matrix() - moved.matrix()).norm() <= 1e-10);

  CHECK_THROWS_AS((void)scm(DataMatrix<double>(DenseMatrix<double>::Ones(1, 1)), true),
                  InvalidInput);
}

TEST_CASE("sample covariance is consistent at large n") {
  Rng rng(102, 0);
  std::vector<double> errs;
  for (int t = 0; t < 100; ++t) {
    const SpdMatrix<double> truth = random_spd<double>(16, 10.0, rng);
    const DataMatrix<double> x = sample_gaussian(truth, 2048, rng);
    errs.push_back(fisher_dist2(scm(x), truth));
  }
  CHECK(median(std::move(errs)) <= 0.05);
}

TEST_CASE("linear shrinkage intensity stays in the unit interval") {
  Rng rng(103, 0);
  for (int t = 0; t < 20; ++t) {
    const Index p = 2 + static_cast<Index>(rng.below(7));
    const long n = static_cast<long>(p) + 1 + static_cast<long>(rng.below(40));
    const SpdMatrix<double> truth = random_spd<double>(p, 5.0, rng);
    const auto est = lw_linear(sample_gaussian(truth, n, rng));
    CHECK(est.rho >= 0.0);
    CHECK(est.rho <= 1.0);
    CHECK(est.mu > 0.0);
  }
}

TEST_CASE("zero sample dispersion collapses to the isotropic target") {
  DenseMatrix<double> x(3, 5);
  DenseVector<double> col(3);
  col << 1.0, -2.0, 0.5;
  for (Index k = 0; k < 5; ++k) x.col(k) = col;
  const auto est = lw_linear(DataMatrix<double>(x));
  CHECK(est.rho == doctest::Approx(1.0));
  const double mu = col.squaredNorm() / 3.0;
  CHECK(est.mu == doctest::Approx(mu));
  CHECK((est.estimate.matrix() - mu * DenseMatrix<double>::Identity(3, 3)).norm() <=
        1e-12 * mu);
}

TEST_CASE("shrinkage interpolates between the isotropic level and sample eigenvalues") {
  Rng rng(104, 0);
  const SpdMatrix<double> truth = random_spd<double>(6, 25.0, rng);
  const DataMatrix<double> x = sample_gaussian(truth, 40, rng);
  const auto est = lw_linear(x);
  const DenseVector<double> sample_eigs = scm(x).spectrum().values;
  const DenseVector<double> out_eigs = est.estimate.spectrum().values;
  for (Index i = 0; i < 6; ++i) {
    const double lo = std::min(est.mu, sample_eigs[i]);
    const double hi = std::max(est.mu, sample_eigs[i]);
    CHECK(out_eigs[i] >= lo - 1e-10);
    CHECK(out_eigs[i] <= hi + 1e-10);
    CHECK(out_eigs[i] ==
          doctest::Approx(est.rho * est.mu + (1.0 - est.rho) * sample_eigs[i]));
  }
}

TEST_CASE("shrinkage intensity vanishes for spread spectra at large n") {
  // A dispersed true spectrum keeps the cross-sectional dispersion d2 at order
  // one while the sampling noise term decays like 1/n, driving rho to zero.
  Rng rng(105, 0);
  DenseVector<double> diag(8);
  for (Index i = 0; i < 8; ++i) diag[i] = static_cast<double>(i + 1);
  const SpdMatrix<double> truth(DenseMatrix<double>(diag.asDiagonal()));
  const DataMatrix<double> x = sample_gaussian(truth, 10000, rng);
  const auto est = lw_linear(x);
  CHECK(est.rho <= 0.02);
  CHECK(fisher_dist2(est.estimate, scm(x)) <= 1e-3);
}

TEST_CASE("shrinkage tracks an isotropic truth") {
  Rng rng(106, 0);
  const DataMatrix<double> x =
      sample_gaussian(SpdMatrix<double>::identity(8), 10000, rng);
  const auto est = lw_linear(x);
  CHECK((est.estimate.matrix() - DenseMatrix<double>::Identity(8, 8)).norm() <= 0.15);
}

TEST_CASE("corrected estimator agrees with the sample covariance when samples abound") {
  Rng rng(107, 0);
  const SpdMatrix<double> truth = random_spd<double>(8, 10.0, rng);
  const DataMatrix<double> x = sample_gaussian(truth, 4096, rng);
  const auto res = rmt_cov(x);
  CHECK(fisher_dist2(res.point, scm(x)) <= 1e-2);
  REQUIRE(!res.trace.records.empty());
  for (std::size_t i = 1; i < res.trace.records.size(); ++i) {
    CHECK(res.trace.records[i].cost <= res.trace.records[i - 1].cost);
  }
}

TEST_CASE("corrected estimator beats the sample covariance at low sample support") {
  Rng rng(108, 0);
  std::vector<double> scm_err;
  std::vector<double> rmt_err;
  for (int t = 0; t < 200; ++t) {
    const SpdMatrix<double> truth = random_spd<double>(32, 20.0, rng);
    const DataMatrix<double> x = sample_gaussian(truth, 64, rng);
    const SpdMatrix<double> chat = scm(x);
    const auto res = rmt_cov(x);
    scm_err.push_back(fisher_dist2(chat, truth));
    rmt_err.push_back(fisher_dist2(res.point, truth));
    const double ratio = res.point.matrix().trace() / chat.matrix().trace();
    CHECK(ratio > 0.1);
    CHECK(ratio < 10.0);
  }
  CHECK(median(std::move(rmt_err)) < median(std::move(scm_err)));
}

TEST_CASE("sample covariance start trips the validity guard immediately") {
  Rng rng(109, 0);
  const SpdMatrix<double> truth = random_spd<double>(32, 10.0, rng);
  const DataMatrix<double> x = sample_gaussian(truth, 64, rng);
  const SpdMatrix<double> chat = scm(x);
  const auto res = rmt_cov(x, chat);
  CHECK(res.trace.reason == StopReason::validity_bound);
  REQUIRE(res.trace.records.size() == 1);
  CHECK((res.point.matrix() - chat.matrix()).norm() == 0.0);
}

TEST_CASE("initialization presets match explicit starts") {
  Rng rng(110, 0);
  const SpdMatrix<double> truth = random_spd<double>(8, 10.0, rng);
  const DataMatrix<double> x = sample_gaussian(truth, 64, rng);
  const auto via_preset = rmt_cov(x, DescentConfig{}, CovInit::identity);
  const auto via_start = rmt_cov(x, SpdMatrix<double>::identity(8));
  CHECK((via_preset.point.matrix() - via_start.point.matrix()).norm() == 0.0);
  const auto via_lw = rmt_cov(x);
  const auto via_lw_start = rmt_cov(x, lw_linear(x).estimate);
  CHECK((via_lw.point.matrix() - via_lw_start.point.matrix()).norm() == 0.0);
}

TEST_CASE("corrected estimator rejects inadequate aspect ratios") {
  CHECK_THROWS_AS((void)rmt_cov(DataMatrix<double>(DenseMatrix<double>::Ones(4, 4))),
                  AspectRatioOutOfRange);
  Rng rng(111, 0);
  const DataMatrix<double> x =
      sample_gaussian(SpdMatrix<double>::identity(4), 16, rng);
  CHECK_THROWS_AS((void)rmt_cov(x, SpdMatrix<double>::identity(5)), DimMismatch);
}
