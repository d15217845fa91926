#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "rmtmean/io.hpp"
#include "rmtmean/rng.hpp"
#include "rmtmean/synthetic.hpp"

using namespace rmtmean;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("rmtmean_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  [[nodiscard]] std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return text;
}

}  // namespace

TEST_CASE("seventeen significant digits round-trip every double") {
  for (double v : {0.1, 1.0 / 3.0, 3.141592653589793, -1e300, 5e-324, 0.0,
                   123456.78901234567, -7.0}) {
    const std::string text = detail::format_g17(v);
    CHECK(std::strtod(text.c_str(), nullptr) == v);
  }
}

TEST_CASE("matrix CSV round-trip is lossless") {
  TempDir tmp;
  DenseMatrix<double> m(2, 3);
  m << 1.0 / 3.0, -2.5e-17, 1e300, 0.0, 3.141592653589793, -42.0;
  write_matrix_csv(tmp.file("m.csv"), m, "round trip");
  const std::string text = read_text(tmp.file("m.csv"));
  CHECK(text.rfind("# round trip\n", 0) == 0);
  const DenseMatrix<double> back = read_matrix_csv(tmp.file("m.csv"));
  REQUIRE(back.rows() == 2);
  REQUIRE(back.cols() == 3);
  for (Index i = 0; i < 2; ++i) {
    for (Index j = 0; j < 3; ++j) CHECK(back(i, j) == m(i, j));
  }
}

TEST_CASE("reader skips comments and blank lines") {
  TempDir tmp;
  write_text(tmp.file("c.csv"),
             "# header comment\n"
             "\n"
             "1,2\n"
             "  # indented comment\n"
             "3,4\n");
  const DenseMatrix<double> m = read_matrix_csv(tmp.file("c.csv"));
  REQUIRE(m.rows() == 2);
  CHECK(m(0, 1) == 2.0);
  CHECK(m(1, 0) == 3.0);
}

TEST_CASE("reader diagnostics name the file") {
  TempDir tmp;
  write_text(tmp.file("ragged.csv"), "1,2\n3\n");
  CHECK_THROWS_WITH_AS((void)read_matrix_csv(tmp.file("ragged.csv")),
                       doctest::Contains("ragged.csv"), InvalidInput);
  write_text(tmp.file("bad.csv"), "1,oops\n");
  CHECK_THROWS_WITH_AS((void)read_matrix_csv(tmp.file("bad.csv")),
                       doctest::Contains("line 1"), InvalidInput);
  write_text(tmp.file("empty.csv"), "# nothing here\n");
  CHECK_THROWS_AS((void)read_matrix_csv(tmp.file("empty.csv")), InvalidInput);
  CHECK_THROWS_WITH_AS((void)read_matrix_csv(tmp.file("absent.csv")),
                       doctest::Contains("absent.csv"), InvalidInput);
}

TEST_CASE("SPD reader validates shape, symmetry, and definiteness") {
  TempDir tmp;
  Rng rng(181, 0);
  const SpdMatrix<double> c = random_spd<double>(4, 10.0, rng);
  write_matrix_csv(tmp.file("spd.csv"), c.matrix(), "spd");
  const SpdMatrix<double> back = read_spd_csv(tmp.file("spd.csv"));
  CHECK((back.matrix() - c.matrix()).norm() == 0.0);

  write_text(tmp.file("rect.csv"), "1,2,3\n4,5,6\n");
  CHECK_THROWS_WITH_AS((void)read_spd_csv(tmp.file("rect.csv")),
                       doctest::Contains("not square"), InvalidInput);
  write_text(tmp.file("asym.csv"), "1,0.5\n0.4,1\n");
  CHECK_THROWS_WITH_AS((void)read_spd_csv(tmp.file("asym.csv")),
                       doctest::Contains("not symmetric"), InvalidInput);
  write_text(tmp.file("indef.csv"), "1,2\n2,1\n");
  CHECK_THROWS_WITH_AS((void)read_spd_csv(tmp.file("indef.csv")),
                       doctest::Contains("indef.csv"), NotPositiveDefinite);
}

TEST_CASE("data reader reports the source file") {
  TempDir tmp;
  write_text(tmp.file("x.csv"), "1,2,3\n4,5,6\n");
  const DataMatrix<double> x = read_data_csv(tmp.file("x.csv"));
  CHECK(x.features() == 2);
  CHECK(x.samples() == 3);
  write_text(tmp.file("nan.csv"), "1,nope\n");
  CHECK_THROWS_AS((void)read_data_csv(tmp.file("nan.csv")), InvalidInput);
}

TEST_CASE("manifest lines carry optional labels and resolve relative paths") {
  TempDir tmp;
  write_text(tmp.file("list.txt"),
             "# training files\n"
             "3, first.csv\n"
             "second.csv\n"
             "1,/abs/third.csv\n");
  const auto entries = read_manifest(tmp.file("list.txt"));
  REQUIRE(entries.size() == 3);
  CHECK(entries[0].label == 3);
  CHECK(entries[0].path == tmp.file("first.csv"));
  CHECK(entries[1].label == 0);
  CHECK(entries[1].path == tmp.file("second.csv"));
  CHECK(entries[2].label == 1);
  CHECK(entries[2].path == "/abs/third.csv");

  write_text(tmp.file("badlabel.txt"), "zero,x.csv\n");
  CHECK_THROWS_WITH_AS((void)read_manifest(tmp.file("badlabel.txt")),
                       doctest::Contains("bad label"), InvalidInput);
  write_text(tmp.file("nopath.txt"), "2,\n");
  CHECK_THROWS_AS((void)read_manifest(tmp.file("nopath.txt")), InvalidInput);
  write_text(tmp.file("blank.txt"), "# only comments\n");
  CHECK_THROWS_AS((void)read_manifest(tmp.file("blank.txt")), InvalidInput);
}

TEST_CASE("centroid models survive a directory round-trip") {
  TempDir tmp;
  Rng rng(182, 0);
  CentroidModel<double> model;
  model.method = CentroidMethod::classical_lw;
  model.samples = 24;
  model.centroids = {random_spd<double>(5, 8.0, rng), random_spd<double>(5, 3.0, rng)};
  const std::string dir = tmp.file("model");
  write_centroid_model(dir, model, "fit artifacts");
  const auto back = read_centroid_model(dir);
  CHECK(back.method == CentroidMethod::classical_lw);
  CHECK(back.samples == 24);
  REQUIRE(back.classes() == 2);
  for (std::size_t z = 0; z < 2; ++z) {
    CHECK((back.centroids[z].matrix() - model.centroids[z].matrix()).norm() == 0.0);
  }
}

TEST_CASE("centroid model readers reject inconsistent metadata") {
  TempDir tmp;
  CHECK_THROWS_AS((void)read_centroid_model(tmp.file("missing")), InvalidInput);

  Rng rng(183, 0);
  CentroidModel<double> model;
  model.method = CentroidMethod::rmt;
  model.samples = 16;
  model.centroids = {random_spd<double>(3, 4.0, rng)};
  const std::string dir = tmp.file("broken");
  write_centroid_model(dir, model, "x");
  write_text((std::filesystem::path(dir) / "model.json").string(),
             "{\"method\":\"rmt\",\"samples\":16,\"classes\":2,"
             "\"centroids\":[\"centroid_1.csv\"]}");
  CHECK_THROWS_WITH_AS((void)read_centroid_model(dir),
                       doctest::Contains("classes"), InvalidInput);
  write_text((std::filesystem::path(dir) / "model.json").string(), "not json at all");
  CHECK_THROWS_AS((void)read_centroid_model(dir), InvalidInput);
}

TEST_CASE("quantile tables land in three aligned files") {
  TempDir tmp;
  QuantileTable table;
  table.axis_name = "n_samples";
  table.axis = {16, 32};
  table.methods = {"SCM", "LW_linear", "RMT"};
  // Dyadic values print without a 17-digit expansion.
  table.median = {{0.5, 0.25, 0.125}, {0.25, 0.125, 0.0625}};
  table.q05 = {{0.125, 0.0625, 0.03125}, {0.0625, 0.03125, 0.015625}};
  table.q95 = {{0.75, 0.5, 0.375}, {0.375, 0.25, 0.1875}};
  table.failures = {{0, 0, 0}, {0, 0, 0}};
  const std::string dir = tmp.file("bench");
  write_quantile_tables(dir, table, "sweep");

  const std::string mean_text = read_text((std::filesystem::path(dir) / "mean.csv").string());
  CHECK(mean_text.find("n_samples,SCM,LW_linear,RMT\n") != std::string::npos);
  CHECK(mean_text.find("16,0.5,0.25,0.125\n") != std::string::npos);
  CHECK(mean_text.find("32,0.25,0.125,0.0625\n") != std::string::npos);
  const std::string lo_text = read_text((std::filesystem::path(dir) / "5.csv").string());
  CHECK(lo_text.find("n_samples,SCM,LW_linear,RMT\n") != std::string::npos);
  CHECK(lo_text.find("16,0.125,0.0625,0.03125\n") != std::string::npos);
  const std::string hi_text = read_text((std::filesystem::path(dir) / "95.csv").string());
  CHECK(hi_text.find("32,0.375,0.25,0.1875\n") != std::string::npos);
}

TEST_CASE("trace files carry provenance then the trace") {
  TempDir tmp;
  DescentTrace trace;
  trace.records.push_back({0, 2.0, 1.0, 0.0});
  trace.records.push_back({1, 1.0, 0.5, 0.25});
  trace.reason = StopReason::max_iterations;
  write_trace_csv(tmp.file("trace.csv"), trace, "run details");
  const std::string text = read_text(tmp.file("trace.csv"));
  CHECK(text.rfind("# run details\n", 0) == 0);
  CHECK(text.find("iter,cost,grad_norm,step,reason\n") != std::string::npos);
  CHECK(text.find("1,1,0.5,0.25,max_iters\n") != std::string::npos);
}
