#include "rmtmean/bench.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "rmtmean/covariance.hpp"
#include "rmtmean/errors.hpp"
#include "rmtmean/geometry.hpp"
#include "rmtmean/parallel.hpp"
#include "rmtmean/synthetic.hpp"

namespace rmtmean {
namespace detail {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (sorted.size() == 1) return sorted.front();
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

namespace {

constexpr std::uint64_t kMeanBenchTag = 0x6d65616e2d6d7365ull;
constexpr std::uint64_t kCovBenchTag = 0x636f762d6d736500ull;

// Collapses the per-trial error grid into the three quantile blocks. cells is
// trial-major within a grid row: cells[(row * trials + trial)][method].
QuantileTable summarize(std::string axis_name, const std::vector<long>& axis,
                        std::vector<std::string> methods, int trials,
                        const std::vector<std::vector<double>>& cells) {
  QuantileTable table;
  table.axis_name = std::move(axis_name);
  table.axis = axis;
  table.methods = std::move(methods);
  const std::size_t method_count = table.methods.size();
  for (std::size_t row = 0; row < axis.size(); ++row) {
    std::vector<double> med(method_count), lo(method_count), hi(method_count);
    std::vector<long> failed(method_count, 0);
    for (std::size_t m = 0; m < method_count; ++m) {
      std::vector<double> ok;
      ok.reserve(static_cast<std::size_t>(trials));
      for (int t = 0; t < trials; ++t) {
        const double v = cells[row * static_cast<std::size_t>(trials) +
                               static_cast<std::size_t>(t)][m];
        if (std::isnan(v)) {
          ++failed[m];
        } else {
          ok.push_back(v);
        }
      }
      std::sort(ok.begin(), ok.end());
      med[m] = quantile_sorted(ok, 0.5);
      lo[m] = quantile_sorted(ok, 0.05);
      hi[m] = quantile_sorted(ok, 0.95);
    }
    table.median.push_back(std::move(med));
    table.q05.push_back(std::move(lo));
    table.q95.push_back(std::move(hi));
    table.failures.push_back(std::move(failed));
  }
  return table;
}

}  // namespace
}  // namespace detail

QuantileTable mse_mean_experiment(const MeanBenchOptions& opts, std::uint64_t seed) {
  if (opts.grid.empty()) throw InvalidInput("mse_mean_experiment: empty grid");
  if (opts.trials < 1) throw InvalidInput("mse_mean_experiment: need at least 1 trial");
  if (opts.p < 1) throw InvalidInput("mse_mean_experiment: dimension must be positive");
  for (long g : opts.grid) {
    const long n = opts.sweep_matrices ? opts.samples : g;
    const long k = opts.sweep_matrices ? g : static_cast<long>(opts.cluster);
    if (k < 2) throw InvalidInput("mse_mean_experiment: cluster size must be >= 2");
    if (n <= opts.p) {
      throw InvalidInput("mse_mean_experiment: sample count must exceed dimension");
    }
  }

  const std::vector<std::string> methods{"SCM", "LW_linear", "RMT"};
  const auto rows = opts.grid.size();
  const auto trials = static_cast<std::size_t>(opts.trials);
  std::vector<std::vector<double>> cells(
      rows * trials,
      std::vector<double>(methods.size(), std::numeric_limits<double>::quiet_NaN()));

  parallel_for(static_cast<int>(rows * trials), opts.threads, [&](int job) {
    const std::size_t row = static_cast<std::size_t>(job) / trials;
    const std::size_t trial = static_cast<std::size_t>(job) % trials;
    const long grid_value = opts.grid[row];
    const long n = opts.sweep_matrices ? opts.samples : grid_value;
    const int k = opts.sweep_matrices ? static_cast<int>(grid_value) : opts.cluster;

    const std::uint64_t trial_stream = derive_stream(
        {detail::kMeanBenchTag, static_cast<std::uint64_t>(grid_value),
         static_cast<std::uint64_t>(trial)});
    const GroundTruth<double> truth = make_ground_truth<double>(
        opts.p, k, n, opts.sigma2, opts.condition, seed, trial_stream);
    const std::span<const DataMatrix<double>> data(truth.data);

    auto& out = cells[static_cast<std::size_t>(job)];
    try {
      std::vector<SpdMatrix<double>> scms;
      scms.reserve(data.size());
      for (const auto& x : data) scms.push_back(scm(x));
      const auto est =
          classical_mean<double>(std::span<const SpdMatrix<double>>(scms), opts.descent);
      out[0] = fisher_dist2(est.point, truth.center);
    } catch (const Error&) {
    }
    try {
      std::vector<SpdMatrix<double>> shrunk;
      shrunk.reserve(data.size());
      for (const auto& x : data) shrunk.push_back(lw_linear(x).estimate);
      const auto est = classical_mean<double>(
          std::span<const SpdMatrix<double>>(shrunk), opts.descent);
      out[1] = fisher_dist2(est.point, truth.center);
    } catch (const Error&) {
    }
    try {
      const auto est = rmt_mean<double>(data, opts.descent);
      out[2] = fisher_dist2(est.point, truth.center);
    } catch (const Error&) {
    }
  });

  return detail::summarize(opts.sweep_matrices ? "n_matrices" : "n_samples", opts.grid,
                           methods, opts.trials, cells);
}

QuantileTable mse_cov_experiment(const CovBenchOptions& opts, std::uint64_t seed) {
  if (opts.grid.empty()) throw InvalidInput("mse_cov_experiment: empty grid");
  if (opts.trials < 1) throw InvalidInput("mse_cov_experiment: need at least 1 trial");
  if (opts.p < 1) throw InvalidInput("mse_cov_experiment: dimension must be positive");
  for (long n : opts.grid) {
    if (n <= opts.p) {
      throw InvalidInput("mse_cov_experiment: sample count must exceed dimension");
    }
  }

  const std::vector<std::string> methods{"SCM", "LW_linear", "RMT"};
  const auto rows = opts.grid.size();
  const auto trials = static_cast<std::size_t>(opts.trials);
  std::vector<std::vector<double>> cells(
      rows * trials,
      std::vector<double>(methods.size(), std::numeric_limits<double>::quiet_NaN()));

  parallel_for(static_cast<int>(rows * trials), opts.threads, [&](int job) {
    const std::size_t row = static_cast<std::size_t>(job) / trials;
    const std::size_t trial = static_cast<std::size_t>(job) % trials;
    const long n = opts.grid[row];

    Rng truth_rng(seed, derive_stream({detail::kCovBenchTag,
                                       static_cast<std::uint64_t>(n),
                                       static_cast<std::uint64_t>(trial), 0}));
    const SpdMatrix<double> truth = random_spd<double>(opts.p, opts.condition, truth_rng);
    Rng data_rng(seed, derive_stream({detail::kCovBenchTag,
                                      static_cast<std::uint64_t>(n),
                                      static_cast<std::uint64_t>(trial), 1}));
    const DataMatrix<double> x = sample_gaussian<double>(truth, n, data_rng);

    auto& out = cells[static_cast<std::size_t>(job)];
    try {
      out[0] = fisher_dist2(scm(x), truth);
    } catch (const Error&) {
    }
    try {
      out[1] = fisher_dist2(lw_linear(x).estimate, truth);
    } catch (const Error&) {
    }
    try {
      const auto est = rmt_cov(x, opts.descent);
      out[2] = fisher_dist2(est.point, truth);
    } catch (const Error&) {
    }
  });

  return detail::summarize("n_samples", opts.grid, methods, opts.trials, cells);
}

}  // namespace rmtmean
