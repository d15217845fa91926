#include "rmtmean/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rmtmean/errors.hpp"

namespace rmtmean {
namespace detail {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

[[nodiscard]] bool is_comment_or_blank(const std::string& line) {
  for (char ch : line) {
    if (std::isspace(static_cast<unsigned char>(ch))) continue;
    return ch == '#';
  }
  return true;
}

[[nodiscard]] std::string trimmed(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[nodiscard]] double parse_double(const std::string& field, const std::string& path,
                                  std::size_t line_no) {
  const std::string t = trimmed(field);
  if (!t.empty()) {
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end == t.c_str() + t.size()) return v;
  }
  throw InvalidInput("bad number '" + field + "' in " + path + " line " +
                     std::to_string(line_no));
}

[[nodiscard]] std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace
}  // namespace detail

DenseMatrix<double> read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_comment_or_blank(line)) continue;
    std::vector<double> row;
    std::stringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) {
      row.push_back(detail::parse_double(field, path, line_no));
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw InvalidInput("ragged row in " + path + " line " + std::to_string(line_no));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().empty()) {
    throw InvalidInput("no numeric rows in " + path);
  }
  DenseMatrix<double> m(static_cast<Index>(rows.size()),
                        static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows.front().size(); ++j) {
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  return m;
}

void write_matrix_csv(const std::string& path, const DenseMatrix<double>& m,
                      const std::string& comment) {
  std::ofstream out = detail::open_output(path);
  out << "# " << comment << "\n";
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ",";
      out << detail::format_g17(m(i, j));
    }
    out << "\n";
  }
  if (!out) throw Error("write failed for '" + path + "'");
}

SpdMatrix<double> read_spd_csv(const std::string& path) {
  const DenseMatrix<double> m = read_matrix_csv(path);
  if (m.rows() != m.cols()) {
    throw InvalidInput("matrix in " + path + " is not square");
  }
  const double scale = std::max(m.cwiseAbs().maxCoeff(), 1e-300);
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff() / scale;
  if (asym > 1e-8) {
    throw InvalidInput("matrix in " + path + " is not symmetric");
  }
  try {
    return SpdMatrix<double>(m);
  } catch (const Error& e) {
    throw NotPositiveDefinite(std::string(e.what()) + " (from " + path + ")");
  }
}

DataMatrix<double> read_data_csv(const std::string& path) {
  try {
    return DataMatrix<double>(read_matrix_csv(path));
  } catch (const Error& e) {
    throw InvalidInput(std::string(e.what()) + " (from " + path + ")");
  }
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_comment_or_blank(line)) continue;
    ManifestEntry entry;
    std::string target = detail::trimmed(line);
    const std::size_t comma = target.find(',');
    if (comma != std::string::npos) {
      const std::string label = detail::trimmed(target.substr(0, comma));
      char* end = nullptr;
      const long v = std::strtol(label.c_str(), &end, 10);
      if (end != label.c_str() + label.size() || v < 1) {
        throw InvalidInput("bad label '" + label + "' in " + path + " line " +
                           std::to_string(line_no));
      }
      entry.label = static_cast<int>(v);
      target = detail::trimmed(target.substr(comma + 1));
    }
    if (target.empty()) {
      throw InvalidInput("missing path in " + path + " line " + std::to_string(line_no));
    }
    const std::filesystem::path item(target);
    entry.path = item.is_absolute() ? item.string() : (base / item).string();
    entries.push_back(std::move(entry));
  }
  if (entries.empty()) throw InvalidInput("manifest " + path + " lists no files");
  return entries;
}

void write_centroid_model(const std::string& dir, const CentroidModel<double>& model,
                          const std::string& comment) {
  if (model.centroids.empty()) {
    throw InvalidInput("write_centroid_model: model has no centroids");
  }
  std::filesystem::create_directories(dir);
  nlohmann::json meta;
  meta["comment"] = comment;
  meta["method"] = to_string(model.method);
  meta["dim"] = model.dim();
  meta["samples"] = model.samples;
  meta["classes"] = model.classes();
  std::vector<std::string> names;
  for (int z = 1; z <= model.classes(); ++z) {
    names.push_back("centroid_" + std::to_string(z) + ".csv");
  }
  meta["centroids"] = names;
  {
    std::ofstream out =
        detail::open_output((std::filesystem::path(dir) / "model.json").string());
    out << meta.dump(2) << "\n";
  }
  for (int z = 1; z <= model.classes(); ++z) {
    write_matrix_csv((std::filesystem::path(dir) / names[static_cast<std::size_t>(z - 1)])
                         .string(),
                     model.centroids[static_cast<std::size_t>(z - 1)].matrix(), comment);
  }
}

CentroidModel<double> read_centroid_model(const std::string& dir) {
  const std::string meta_path = (std::filesystem::path(dir) / "model.json").string();
  std::ifstream in(meta_path);
  if (!in) throw InvalidInput("cannot open '" + meta_path + "'");
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("bad model file " + meta_path + ": " + e.what());
  }
  CentroidModel<double> model;
  try {
    model.method = parse_centroid_method(meta.at("method").get<std::string>());
    model.samples = meta.at("samples").get<long>();
    for (const auto& name : meta.at("centroids")) {
      model.centroids.push_back(read_spd_csv(
          (std::filesystem::path(dir) / name.get<std::string>()).string()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("bad model file " + meta_path + ": " + e.what());
  }
  if (model.centroids.empty()) {
    throw InvalidInput("model " + meta_path + " lists no centroids");
  }
  const Index p = model.centroids.front().dim();
  for (const auto& c : model.centroids) {
    if (c.dim() != p) throw InvalidInput("model " + meta_path + " mixes dimensions");
  }
  if (model.samples < 1) throw InvalidInput("model " + meta_path + " has bad samples");
  if (meta.contains("dim") && meta["dim"].get<Index>() != p) {
    throw InvalidInput("model " + meta_path + " dim disagrees with centroid files");
  }
  if (meta.contains("classes") &&
      meta["classes"].get<int>() != static_cast<int>(model.centroids.size())) {
    throw InvalidInput("model " + meta_path + " classes disagrees with centroid files");
  }
  return model;
}

namespace detail {
namespace {

void write_quantile_file(const std::string& path, const QuantileTable& table,
                         const std::vector<std::vector<double>>& block,
                         const std::string& comment) {
  std::ofstream out = open_output(path);
  out << "# " << comment << "\n";
  out << table.axis_name;
  for (const auto& m : table.methods) out << "," << m;
  out << "\n";
  for (std::size_t row = 0; row < table.rows(); ++row) {
    out << table.axis[row];
    for (std::size_t m = 0; m < table.methods.size(); ++m) {
      out << "," << format_g17(block[row][m]);
    }
    out << "\n";
  }
  if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace
}  // namespace detail

void write_quantile_tables(const std::string& dir, const QuantileTable& table,
                           const std::string& comment) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  detail::write_quantile_file((base / "mean.csv").string(), table, table.median,
                              comment);
  detail::write_quantile_file((base / "5.csv").string(), table, table.q05, comment);
  detail::write_quantile_file((base / "95.csv").string(), table, table.q95, comment);
}

void write_trace_csv(const std::string& path, const DescentTrace& trace,
                     const std::string& comment) {
  std::ofstream out = detail::open_output(path);
  out << "# " << comment << "\n";
  trace.write_csv(out);
  if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace rmtmean
