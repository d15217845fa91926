#pragma once

#include <string>
#include <vector>

#include "rmtmean/bench.hpp"
#include "rmtmean/descent.hpp"
#include "rmtmean/learning.hpp"
#include "rmtmean/spd.hpp"

namespace rmtmean {

/// CSV conventions: comma-separated numeric rows, lines starting with '#'
/// are comments, numbers are written as %.17g so round-trips are lossless.
/// Every writer puts the caller-supplied provenance comment on the first line.

[[nodiscard]] DenseMatrix<double> read_matrix_csv(const std::string& path);

void write_matrix_csv(const std::string& path, const DenseMatrix<double>& m,
                      const std::string& comment);

/// Reads a matrix that must be square and symmetric to a relative asymmetry of
/// 1e-8; the symmetrized matrix must be positive definite. Diagnostics name
/// the offending file.
[[nodiscard]] SpdMatrix<double> read_spd_csv(const std::string& path);

[[nodiscard]] DataMatrix<double> read_data_csv(const std::string& path);

/// One manifest line: "path" or "label,path". Labels are positive integers;
/// label 0 means the line carried no label. Relative paths resolve against
/// the manifest's own directory.
struct ManifestEntry {
  int label = 0;
  std::string path;
};

[[nodiscard]] std::vector<ManifestEntry> read_manifest(const std::string& path);

/// Centroid models live in a directory: model.json holds the method, the
/// sample count, and the centroid file names; each centroid is a CSV in the
/// same directory.
void write_centroid_model(const std::string& dir, const CentroidModel<double>& model,
                          const std::string& comment);

[[nodiscard]] CentroidModel<double> read_centroid_model(const std::string& dir);

/// Writes mean.csv (median), 5.csv, and 95.csv into dir, one row per grid
/// point, columns axis then one per method. The central file keeps the name
/// mean.csv for compatibility with the figure-data layout even though the
/// statistic is the median.
void write_quantile_tables(const std::string& dir, const QuantileTable& table,
                           const std::string& comment);

void write_trace_csv(const std::string& path, const DescentTrace& trace,
                     const std::string& comment);

namespace detail {

[[nodiscard]] std::string format_g17(double v);

}  // namespace detail

}  // namespace rmtmean
