#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <span>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rmtmean/bench.hpp"
#include "rmtmean/covariance.hpp"
#include "rmtmean/errors.hpp"
#include "rmtmean/geometry.hpp"
#include "rmtmean/io.hpp"
#include "rmtmean/learning.hpp"
#include "rmtmean/means.hpp"
#include "rmtmean/rmt_distance.hpp"
#include "rmtmean/rmt_gradients.hpp"
#include "rmtmean/rng.hpp"
#include "rmtmean/spd.hpp"
#include "rmtmean/synthetic.hpp"
#include "rmtmean/version.hpp"

namespace {

using namespace rmtmean;

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

/// Grid syntax: "a:b" doubles from a while <= b; "v1,v2,..." is taken as-is.
std::vector<long> parse_grid(const std::string& text, const std::string& flag) {
  const auto bad = [&](const std::string& why) {
    throw InvalidInput(flag + ": " + why + " in '" + text + "'");
  };
  std::vector<long> grid;
  const std::size_t colon = text.find(':');
  if (colon != std::string::npos) {
    char* end = nullptr;
    const long a = std::strtol(text.c_str(), &end, 10);
    if (end != text.c_str() + colon) bad("bad start value");
    const char* tail = text.c_str() + colon + 1;
    const long b = std::strtol(tail, &end, 10);
    if (*tail == '\0' || *end != '\0') bad("bad end value");
    if (a < 1 || b < a) bad("need 1 <= start <= end");
    for (long v = a; v <= b; v *= 2) grid.push_back(v);
  } else {
    std::stringstream fields(text);
    std::string field;
    while (std::getline(fields, field, ',')) {
      char* end = nullptr;
      const long v = std::strtol(field.c_str(), &end, 10);
      if (field.empty() || *end != '\0' || v < 1) bad("bad grid value '" + field + "'");
      grid.push_back(v);
    }
    if (grid.empty()) bad("empty grid");
  }
  return grid;
}

std::string join_grid(const std::vector<long>& grid) {
  std::string out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i > 0) out += ",";
    out += std::to_string(grid[i]);
  }
  return out;
}

/// Descent knobs shared by the iterative subcommands.
struct DescentFlags {
  double alpha = 0;
  int max_iters = 100;
  double step_tol = 1e-6;

  [[nodiscard]] DescentConfig config() const {
    DescentConfig cfg;
    cfg.validity_alpha = alpha;
    cfg.max_iters = max_iters;
    cfg.step_tol = step_tol;
    return cfg;
  }
  [[nodiscard]] std::string describe() const {
    return "alpha=" + fmt_num(alpha) + " max_iters=" + std::to_string(max_iters) +
           " eps=" + fmt_num(step_tol);
  }
};

void add_descent_flags(CLI::App* cmd, DescentFlags& flags, double default_alpha) {
  flags.alpha = default_alpha;
  cmd->add_option("--alpha", flags.alpha,
                  "validity guard level (cost floor -alpha/p; 0 disables)")
      ->capture_default_str();
  cmd->add_option("--max-iters", flags.max_iters, "descent iteration cap")
      ->capture_default_str();
  cmd->add_option("--eps", flags.step_tol,
                  "stop when the squared step length falls below this")
      ->capture_default_str();
}

/// First line of every emitted file: version, seed, and the canonical flag
/// set. Thread count and output locations are deliberately left out so reruns
/// that only move the output or change parallelism stay byte-identical.
std::string provenance(std::uint64_t seed, const std::string& detail) {
  return std::string("rmtmean ") + kVersion + " seed=" + std::to_string(seed) + " " +
         detail;
}

void report_failures(const QuantileTable& table) {
  for (std::size_t row = 0; row < table.rows(); ++row) {
    for (std::size_t m = 0; m < table.methods.size(); ++m) {
      if (table.failures[row][m] > 0) {
        std::cerr << "warning: " << table.methods[m] << " failed "
                  << table.failures[row][m] << " trial(s) at " << table.axis_name << "="
                  << table.axis[row] << "\n";
      }
    }
  }
}

std::vector<DataMatrix<double>> load_datasets(const std::vector<ManifestEntry>& entries) {
  std::vector<DataMatrix<double>> items;
  items.reserve(entries.size());
  for (const auto& e : entries) items.push_back(read_data_csv(e.path));
  return items;
}

int run_gradcheck(std::uint64_t seed, Index p, long n, int instances, int directions,
                  double tol) {
  if (p < 1) throw InvalidInput("--p must be positive");
  if (n <= p) throw InvalidInput("--n must exceed --p");
  if (instances < 1 || directions < 1) {
    throw InvalidInput("--trials and --dirs must be positive");
  }
  double worst = 0;
  for (int inst = 0; inst < instances; ++inst) {
    Rng rng(seed, derive_stream({0x67726164ull, static_cast<std::uint64_t>(inst)}));
    const SpdMatrix<double> truth = random_spd<double>(p, 20.0, rng);
    const DataMatrix<double> x = sample_gaussian<double>(truth, n, rng);
    const SpdMatrix<double> chat = scm(x);
    const SpdMatrix<double> r = random_spd<double>(p, 5.0, rng);
    const DenseMatrix<double> grad = rmt_dist2_grad(r, chat, n);
    const DenseMatrix<double> rinv = r.inverse_matrix();
    for (int dir = 0; dir < directions; ++dir) {
      DenseMatrix<double> xi(p, p);
      for (Index j = 0; j < p; ++j) {
        for (Index i = 0; i <= j; ++i) {
          const double v = rng.normal();
          xi(i, j) = v;
          xi(j, i) = v;
        }
      }
      xi /= xi.norm();
      const double h = 1e-6;
      const auto eval = [&](double t) {
        return rmt_dist2(SpdMatrix<double>(DenseMatrix<double>(r.matrix() + t * xi)),
                         chat, n);
      };
      const double fd = (eval(h) - eval(-h)) / (2 * h);
      const double an = (rinv * grad * rinv * xi).trace();
      const double rel =
          std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6});
      worst = std::max(worst, rel);
    }
  }
  std::printf("max relative error = %.6g (tolerance %g)\n", worst, tol);
  return worst <= tol ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fisher-metric covariance estimation, means, and classification"};
  app.set_config("--config", "", "flat key=value configuration file; flags override");
  app.set_version_flag("--version", kVersion);
  std::uint64_t seed = 0;
  int threads = 0;
  app.add_option("--seed", seed, "master seed for all randomized work")
      ->capture_default_str();
  app.add_option("--threads", threads, "worker threads (0 = all cores)")
      ->capture_default_str();
  app.require_subcommand(1);

  // estimate-cov
  auto* cov_cmd =
      app.add_subcommand("estimate-cov", "estimate a covariance matrix from data");
  cov_cmd->fallthrough();
  std::string cov_data, cov_out, cov_trace;
  std::string cov_method = "rmt";
  std::string cov_init = "lw";
  bool cov_center = false;
  DescentFlags cov_descent;
  cov_cmd->add_option("--input", cov_data, "data CSV, rows = features, columns = samples")
      ->required();
  cov_cmd->add_option("--output", cov_out, "output CSV for the estimate")->required();
  cov_cmd->add_option("--method", cov_method, "scm, lw, or rmt")
      ->check(CLI::IsMember({"scm", "lw", "rmt"}))
      ->capture_default_str();
  cov_cmd->add_option("--init", cov_init, "rmt start: lw or identity")
      ->check(CLI::IsMember({"lw", "identity"}))
      ->capture_default_str();
  cov_cmd->add_flag("--center", cov_center, "subtract the column mean (scm only)");
  cov_cmd->add_option("--trace", cov_trace, "write the descent trace CSV here (rmt)");
  add_descent_flags(cov_cmd, cov_descent, 10.0);

  // mean
  auto* mean_cmd = app.add_subcommand("mean", "Frechet mean of a matrix collection");
  mean_cmd->fallthrough();
  std::string mean_manifest, mean_out, mean_trace;
  std::string mean_method = "rmt";
  std::string mean_init = "identity";
  std::string mean_kind = "data";
  DescentFlags mean_descent;
  mean_cmd
      ->add_option("--inputs", mean_manifest,
                   "manifest listing the input files, or a directory of CSVs")
      ->required();
  mean_cmd->add_option("--output", mean_out, "output CSV for the mean")->required();
  mean_cmd->add_option("--method", mean_method, "rmt, classical-scm, or classical-lw")
      ->check(CLI::IsMember({"rmt", "classical-scm", "classical-lw"}))
      ->capture_default_str();
  mean_cmd->add_option("--init", mean_init, "rmt start: identity or lw-mean")
      ->check(CLI::IsMember({"identity", "lw-mean"}))
      ->capture_default_str();
  mean_cmd
      ->add_option("--input-kind", mean_kind,
                   "data (datasets) or spd (ready-made SPD matrices)")
      ->check(CLI::IsMember({"data", "spd"}))
      ->capture_default_str();
  mean_cmd->add_option("--trace", mean_trace, "write the descent trace CSV here");
  add_descent_flags(mean_cmd, mean_descent, 0.0);

  // nearest-centroid
  auto* nc_cmd = app.add_subcommand("nearest-centroid",
                                    "minimum-distance-to-mean classification");
  nc_cmd->fallthrough();
  nc_cmd->require_subcommand(1);
  auto* nc_fit_cmd = nc_cmd->add_subcommand("fit", "fit one centroid per class");
  nc_fit_cmd->fallthrough();
  std::string ncf_manifest, ncf_model;
  std::string ncf_method = "rmt";
  DescentFlags ncf_descent;
  nc_fit_cmd
      ->add_option("--manifest", ncf_manifest, "labeled manifest: label,path per line")
      ->required();
  nc_fit_cmd->add_option("--model-dir", ncf_model, "directory for the fitted model")
      ->required();
  nc_fit_cmd->add_option("--method", ncf_method, "rmt, classical-scm, or classical-lw")
      ->check(CLI::IsMember({"rmt", "classical-scm", "classical-lw"}))
      ->capture_default_str();
  add_descent_flags(nc_fit_cmd, ncf_descent, 0.0);

  auto* nc_pred_cmd = nc_cmd->add_subcommand("predict", "classify datasets");
  nc_pred_cmd->fallthrough();
  std::string ncp_manifest, ncp_model, ncp_out;
  nc_pred_cmd->add_option("--model-dir", ncp_model, "fitted model directory")
      ->required();
  nc_pred_cmd
      ->add_option("--manifest", ncp_manifest,
                   "manifest of datasets; labels, when present, score accuracy")
      ->required();
  nc_pred_cmd->add_option("--output", ncp_out, "write index,predicted[,truth] CSV here");

  // kmeans
  auto* km_cmd = app.add_subcommand("kmeans", "cluster datasets by their covariance");
  km_cmd->fallthrough();
  std::string km_manifest, km_out, km_model;
  std::string km_method = "rmt";
  int km_clusters = 2;
  int km_restarts = 5;
  int km_sweeps = 100;
  double km_tol = 0.0;
  DescentFlags km_descent;
  km_cmd->add_option("--manifest", km_manifest, "manifest of datasets")->required();
  km_cmd->add_option("--clusters", km_clusters, "number of clusters")->required();
  km_cmd->add_option("--output", km_out, "write index,label CSV here")->required();
  km_cmd->add_option("--model-dir", km_model, "also store centroids as a model");
  km_cmd->add_option("--restarts", km_restarts, "independent initializations")
      ->capture_default_str();
  km_cmd->add_option("--max-sweeps", km_sweeps, "sweep cap per restart")
      ->capture_default_str();
  km_cmd
      ->add_option("--tol", km_tol,
                   "stop once the changed-label fraction is at or below this")
      ->capture_default_str();
  std::string km_select = "max";
  km_cmd
      ->add_option("--restart-select", km_select,
                   "restart scoring: max (default) or min final inertia")
      ->check(CLI::IsMember({"max", "min"}))
      ->capture_default_str();
  km_cmd->add_option("--method", km_method, "rmt, classical-scm, or classical-lw")
      ->check(CLI::IsMember({"rmt", "classical-scm", "classical-lw"}))
      ->capture_default_str();
  add_descent_flags(km_cmd, km_descent, 0.0);

  // bench-mean
  auto* bm_cmd = app.add_subcommand("bench-mean", "Monte-Carlo mean-estimation study");
  bm_cmd->fallthrough();
  long bm_p = 16, bm_cluster = 10, bm_n = 32;
  std::string bm_ngrid, bm_kgrid, bm_outdir;
  int bm_trials = 100;
  double bm_sigma2 = 0.1, bm_condition = 100.0;
  DescentFlags bm_descent;
  bm_cmd->add_option("--p", bm_p, "matrix dimension")->capture_default_str();
  bm_cmd->add_option("--k", bm_cluster, "matrices per trial when sweeping n")
      ->capture_default_str();
  bm_cmd->add_option("--n", bm_n, "samples per dataset when sweeping K")
      ->capture_default_str();
  auto* bm_ngrid_opt =
      bm_cmd->add_option("--n-grid", bm_ngrid, "sample-count grid, a:b doubling or list");
  auto* bm_kgrid_opt =
      bm_cmd->add_option("--k-grid", bm_kgrid, "matrix-count grid, a:b doubling or list");
  bm_ngrid_opt->excludes(bm_kgrid_opt);
  bm_cmd->add_option("--trials", bm_trials, "trials per grid point")
      ->capture_default_str();
  bm_cmd->add_option("--sigma2", bm_sigma2, "cluster spread around the true mean")
      ->capture_default_str();
  bm_cmd->add_option("--condition", bm_condition, "condition number of the true mean")
      ->capture_default_str();
  bm_cmd->add_option("--out-dir", bm_outdir, "directory for mean.csv, 5.csv, 95.csv")
      ->required();
  add_descent_flags(bm_cmd, bm_descent, 0.0);

  // bench-cov
  auto* bc_cmd =
      app.add_subcommand("bench-cov", "Monte-Carlo covariance-estimation study");
  bc_cmd->fallthrough();
  long bc_p = 16;
  std::string bc_ngrid = "32:256";
  std::string bc_outdir;
  int bc_trials = 100;
  double bc_condition = 100.0;
  DescentFlags bc_descent;
  bc_cmd->add_option("--p", bc_p, "matrix dimension")->capture_default_str();
  bc_cmd->add_option("--n-grid", bc_ngrid, "sample-count grid, a:b doubling or list")
      ->capture_default_str();
  bc_cmd->add_option("--trials", bc_trials, "trials per grid point")
      ->capture_default_str();
  bc_cmd->add_option("--condition", bc_condition, "condition number of the truth")
      ->capture_default_str();
  bc_cmd->add_option("--out-dir", bc_outdir, "directory for mean.csv, 5.csv, 95.csv")
      ->required();
  add_descent_flags(bc_cmd, bc_descent, 10.0);

  // gradcheck
  auto* gc_cmd = app.add_subcommand(
      "gradcheck", "finite-difference validation of the analytic gradients");
  gc_cmd->fallthrough();
  long gc_p = 8, gc_n = 32;
  int gc_trials = 10, gc_dirs = 20;
  double gc_tol = 1e-4;
  gc_cmd->add_option("--p", gc_p, "matrix dimension")->capture_default_str();
  gc_cmd->add_option("--n", gc_n, "samples per dataset")->capture_default_str();
  gc_cmd->add_option("--trials", gc_trials, "random instances")->capture_default_str();
  gc_cmd->add_option("--dirs", gc_dirs, "directions per instance")
      ->capture_default_str();
  gc_cmd->add_option("--tol", gc_tol, "pass threshold on the max relative error")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*cov_cmd) {
      if (!cov_trace.empty() && cov_method != "rmt") {
        throw InvalidInput("--trace requires --method rmt");
      }
      const DataMatrix<double> x = read_data_csv(cov_data);
      const std::string detail = "estimate-cov method=" + cov_method +
                                 " init=" + cov_init +
                                 " center=" + std::string(cov_center ? "1" : "0") + " " +
                                 cov_descent.describe() + " input=" + cov_data;
      if (cov_method == "scm") {
        write_matrix_csv(cov_out, scm(x, cov_center).matrix(), provenance(seed, detail));
        std::cout << "scm: p=" << x.features() << " n=" << x.samples() << "\n";
      } else if (cov_method == "lw") {
        const auto lw = lw_linear(x);
        write_matrix_csv(cov_out, lw.estimate.matrix(), provenance(seed, detail));
        std::cout << "lw: p=" << x.features() << " n=" << x.samples()
                  << " rho=" << lw.rho << "\n";
      } else {
        const auto res =
            rmt_cov(x, cov_descent.config(),
                    cov_init == "lw" ? CovInit::lw : CovInit::identity);
        write_matrix_csv(cov_out, res.point.matrix(), provenance(seed, detail));
        if (!cov_trace.empty()) {
          write_trace_csv(cov_trace, res.trace, provenance(seed, detail));
        }
        std::cout << "rmt: p=" << x.features() << " n=" << x.samples()
                  << " iterations=" << res.trace.records.size() - 1
                  << " stop=" << to_string(res.trace.reason) << "\n";
      }
      return 0;
    }

    if (*mean_cmd) {
      std::vector<ManifestEntry> entries;
      if (std::filesystem::is_directory(mean_manifest)) {
        for (const auto& f : std::filesystem::directory_iterator(mean_manifest)) {
          if (f.is_regular_file() && f.path().extension() == ".csv") {
            entries.push_back({0, f.path().string()});
          }
        }
        std::sort(entries.begin(), entries.end(),
                  [](const auto& a, const auto& b) { return a.path < b.path; });
        if (entries.empty()) {
          throw InvalidInput("no .csv files in directory '" + mean_manifest + "'");
        }
      } else {
        entries = read_manifest(mean_manifest);
      }
      const std::string detail = "mean method=" + mean_method + " input=" + mean_kind +
                                 " init=" + mean_init + " " + mean_descent.describe() +
                                 " inputs=" + mean_manifest;
      DescentTrace trace;
      SpdMatrix<double> result = SpdMatrix<double>::identity(1);
      if (mean_kind == "spd") {
        if (mean_method == "rmt") {
          throw InvalidInput("--input-kind spd requires a classical --method");
        }
        std::vector<SpdMatrix<double>> mats;
        mats.reserve(entries.size());
        for (const auto& e : entries) mats.push_back(read_spd_csv(e.path));
        auto res = classical_mean<double>(std::span<const SpdMatrix<double>>(mats),
                                          mean_descent.config());
        result = res.point;
        trace = std::move(res.trace);
      } else {
        const auto items = load_datasets(entries);
        const std::span<const DataMatrix<double>> data(items);
        if (mean_method == "rmt") {
          auto res = rmt_mean<double>(data, mean_descent.config(),
                                      mean_init == "lw-mean" ? MeanInit::lw_mean
                                                             : MeanInit::identity);
          result = res.point;
          trace = std::move(res.trace);
        } else {
          std::vector<SpdMatrix<double>> mats;
          mats.reserve(items.size());
          for (const auto& x : items) {
            mats.push_back(mean_method == "classical-scm" ? scm(x)
                                                          : lw_linear(x).estimate);
          }
          auto res = classical_mean<double>(std::span<const SpdMatrix<double>>(mats),
                                            mean_descent.config());
          result = res.point;
          trace = std::move(res.trace);
        }
      }
      write_matrix_csv(mean_out, result.matrix(), provenance(seed, detail));
      if (!mean_trace.empty()) {
        write_trace_csv(mean_trace, trace, provenance(seed, detail));
      }
      std::cout << "mean: inputs=" << entries.size() << " p=" << result.dim()
                << " iterations=" << trace.records.size() - 1
                << " stop=" << to_string(trace.reason) << "\n";
      return 0;
    }

    if (*nc_fit_cmd) {
      const auto entries = read_manifest(ncf_manifest);
      LabeledSet<double> train;
      for (const auto& e : entries) {
        if (e.label < 1) {
          throw InvalidInput("manifest " + ncf_manifest +
                             " has an unlabeled line; fit needs label,path");
        }
        train.items.push_back(read_data_csv(e.path));
        train.labels.push_back(e.label);
      }
      const auto model = nc_fit<double>(train, parse_centroid_method(ncf_method),
                                        ncf_descent.config());
      const std::string detail = "nearest-centroid fit method=" + ncf_method + " " +
                                 ncf_descent.describe() + " manifest=" + ncf_manifest;
      write_centroid_model(ncf_model, model, provenance(seed, detail));
      std::cout << "fit: classes=" << model.classes() << " p=" << model.dim()
                << " n=" << model.samples << "\n";
      return 0;
    }

    if (*nc_pred_cmd) {
      const auto model = read_centroid_model(ncp_model);
      const auto entries = read_manifest(ncp_manifest);
      std::vector<int> predicted;
      bool all_labeled = true;
      int correct = 0;
      for (const auto& e : entries) {
        const int yhat = nc_predict(model, read_data_csv(e.path));
        predicted.push_back(yhat);
        if (e.label < 1) {
          all_labeled = false;
        } else if (yhat == e.label) {
          ++correct;
        }
      }
      if (!ncp_out.empty()) {
        std::ofstream out(ncp_out);
        if (!out) throw Error("cannot open '" + ncp_out + "' for writing");
        const std::string detail = "nearest-centroid predict model=" + ncp_model +
                                   " manifest=" + ncp_manifest;
        out << "# " << provenance(seed, detail) << "\n";
        out << "index,predicted" << (all_labeled ? ",truth" : "") << "\n";
        for (std::size_t i = 0; i < predicted.size(); ++i) {
          out << i << "," << predicted[i];
          if (all_labeled) out << "," << entries[i].label;
          out << "\n";
        }
      }
      std::cout << "predicted " << predicted.size() << " dataset(s)";
      if (all_labeled) {
        std::cout << "; accuracy = "
                  << static_cast<double>(correct) /
                         static_cast<double>(predicted.size());
      }
      std::cout << "\n";
      return 0;
    }

    if (*km_cmd) {
      const auto entries = read_manifest(km_manifest);
      const auto items = load_datasets(entries);
      KmeansOptions opts;
      opts.clusters = km_clusters;
      opts.restarts = km_restarts;
      opts.max_sweeps = km_sweeps;
      opts.label_change_tol = km_tol;
      opts.select_min_inertia = km_select == "min";
      opts.method = parse_centroid_method(km_method);
      opts.descent = km_descent.config();
      const auto result =
          kmeans_fit<double>(std::span<const DataMatrix<double>>(items), opts, seed);
      const std::string detail =
          "kmeans clusters=" + std::to_string(km_clusters) +
          " restarts=" + std::to_string(km_restarts) +
          " max_sweeps=" + std::to_string(km_sweeps) + " tol=" + fmt_num(km_tol) +
          " select=" + km_select + " method=" + km_method + " " +
          km_descent.describe() + " manifest=" + km_manifest;
      {
        std::ofstream out(km_out);
        if (!out) throw Error("cannot open '" + km_out + "' for writing");
        out << "# " << provenance(seed, detail) << "\n";
        out << "index,label\n";
        for (std::size_t i = 0; i < result.labels.size(); ++i) {
          out << i << "," << result.labels[i] << "\n";
        }
      }
      if (!km_model.empty()) {
        CentroidModel<double> model;
        model.method = opts.method;
        model.samples = static_cast<long>(items.front().samples());
        model.centroids = result.centroids;
        write_centroid_model(km_model, model, provenance(seed, detail));
      }
      std::cout << "kmeans: items=" << items.size() << " clusters=" << km_clusters
                << " inertia=" << result.inertia << " sweeps=" << result.sweeps
                << " restart=" << result.chosen_restart << "\n";
      return 0;
    }

    if (*bm_cmd) {
      MeanBenchOptions opts;
      opts.p = bm_p;
      opts.cluster = static_cast<int>(bm_cluster);
      opts.samples = bm_n;
      opts.trials = bm_trials;
      opts.sigma2 = bm_sigma2;
      opts.condition = bm_condition;
      opts.descent = bm_descent.config();
      opts.threads = threads;
      if (!bm_kgrid.empty()) {
        opts.sweep_matrices = true;
        opts.grid = parse_grid(bm_kgrid, "--k-grid");
      } else {
        opts.sweep_matrices = false;
        opts.grid = parse_grid(bm_ngrid.empty() ? "32:256" : bm_ngrid, "--n-grid");
      }
      const QuantileTable table = mse_mean_experiment(opts, seed);
      const std::string detail =
          "bench-mean p=" + std::to_string(bm_p) +
          " sweep=" + (opts.sweep_matrices ? "k" : "n") + " grid=" +
          join_grid(opts.grid) +
          (opts.sweep_matrices ? " n=" + std::to_string(bm_n)
                               : " k=" + std::to_string(bm_cluster)) +
          " trials=" + std::to_string(bm_trials) + " sigma2=" + fmt_num(bm_sigma2) +
          " condition=" + fmt_num(bm_condition) + " " + bm_descent.describe();
      write_quantile_tables(bm_outdir, table, provenance(seed, detail));
      report_failures(table);
      std::cout << "bench-mean: wrote mean.csv, 5.csv, 95.csv to " << bm_outdir << "\n";
      return 0;
    }

    if (*bc_cmd) {
      CovBenchOptions opts;
      opts.p = bc_p;
      opts.grid = parse_grid(bc_ngrid, "--n-grid");
      opts.trials = bc_trials;
      opts.condition = bc_condition;
      opts.descent = bc_descent.config();
      opts.threads = threads;
      const QuantileTable table = mse_cov_experiment(opts, seed);
      const std::string detail = "bench-cov p=" + std::to_string(bc_p) + " grid=" +
                                 join_grid(opts.grid) +
                                 " trials=" + std::to_string(bc_trials) +
                                 " condition=" + fmt_num(bc_condition) + " " +
                                 bc_descent.describe();
      write_quantile_tables(bc_outdir, table, provenance(seed, detail));
      report_failures(table);
      std::cout << "bench-cov: wrote mean.csv, 5.csv, 95.csv to " << bc_outdir << "\n";
      return 0;
    }

    if (*gc_cmd) {
      return run_gradcheck(seed, gc_p, gc_n, gc_trials, gc_dirs, gc_tol);
    }
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DimMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NotPositiveDefinite& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const AspectRatioOutOfRange& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
