#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rmtmean/descent.hpp"
#include "rmtmean/means.hpp"
#include "rmtmean/spd.hpp"

namespace rmtmean {

/// Quantile summaries of per-trial squared Fisher errors, one row per grid
/// point and one column per method. Rows across the three quantile blocks are
/// aligned. Trials whose estimator threw are excluded from the quantiles and
/// counted in `failures`; a cell with no surviving trials holds NaN.
struct QuantileTable {
  std::string axis_name;                       // "n_samples" or "n_matrices"
  std::vector<long> axis;                      // grid values, one per row
  std::vector<std::string> methods;            // column order
  std::vector<std::vector<double>> median;     // [row][method]
  std::vector<std::vector<double>> q05;
  std::vector<std::vector<double>> q95;
  std::vector<std::vector<long>> failures;

  [[nodiscard]] std::size_t rows() const { return axis.size(); }
};

/// Monte-Carlo study of mean estimation error. Sweeps either the per-dataset
/// sample count (grid = n values, fixed cluster size) or the cluster size
/// (grid = K values, fixed n). Methods, in column order: "SCM" (Karcher mean
/// of raw sample covariances), "LW_linear" (Karcher mean of linear-shrinkage
/// estimates), "RMT" (corrected Frechet mean).
struct MeanBenchOptions {
  Index p = 16;
  int cluster = 10;          // K when sweeping n
  long samples = 32;         // n when sweeping K
  std::vector<long> grid;
  bool sweep_matrices = false;  // false sweeps n, true sweeps K
  int trials = 100;
  double sigma2 = 0.1;
  double condition = 100.0;
  DescentConfig descent = mean_descent_defaults();
  int threads = 0;
};

[[nodiscard]] QuantileTable mse_mean_experiment(const MeanBenchOptions& opts,
                                                std::uint64_t seed);

/// Single-covariance analogue: per trial draws a random SPD truth and one
/// Gaussian dataset, estimates by raw SCM, linear shrinkage, and the corrected
/// descent estimator, and records the squared Fisher distance to the truth.
struct CovBenchOptions {
  Index p = 16;
  std::vector<long> grid;  // n values
  int trials = 100;
  double condition = 100.0;
  DescentConfig descent{};  // validity guard on by default
  int threads = 0;
};

[[nodiscard]] QuantileTable mse_cov_experiment(const CovBenchOptions& opts,
                                               std::uint64_t seed);

namespace detail {

/// Linear-interpolation sample quantile (the common "type 7" rule) of an
/// already sorted sample.
[[nodiscard]] double quantile_sorted(const std::vector<double>& sorted, double q);

}  // namespace detail

}  // namespace rmtmean
