#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "rmtgrid/ingest.hpp"
#include "rmtgrid/io.hpp"
#include "rmtgrid/rng.hpp"

using Catch::Approx;
using namespace rmtgrid;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "rmtgrid_ingest_test";
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("standardize_rows centers and scales by the population std",
          "[ingest]") {
  Eigen::MatrixXd m(1, 3);
  m << 1.0, 2.0, 3.0;
  const Eigen::MatrixXd s = standardize_rows(m);
  // mean 2, population variance 2/3
  const double r = std::sqrt(1.5);
  CHECK(s(0, 0) == Approx(-r).epsilon(1e-12));
  CHECK(s(0, 1) == Approx(0.0).margin(1e-12));
  CHECK(s(0, 2) == Approx(r).epsilon(1e-12));
  CHECK(is_standardized(s));
}

TEST_CASE("standardization is idempotent", "[ingest]") {
  Rng rng(5);
  const Eigen::MatrixXd raw = 3.0 * rng.normal_matrix(4, 50);
  const Eigen::MatrixXd once = standardize_rows(raw);
  const Eigen::MatrixXd twice = standardize_rows(once);
  CHECK((once - twice).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("constant rows are jittered or rejected by policy", "[ingest]") {
  Eigen::MatrixXd m(2, 20);
  m.row(0).setConstant(7.0);
  m.row(1).setLinSpaced(20, 0.0, 1.0);

  StandardizeOptions opt;
  opt.seed = 3;
  const Eigen::MatrixXd a = standardize_rows(m, opt);
  CHECK(is_standardized(a));
  const Eigen::MatrixXd b = standardize_rows(m, opt);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);  // seeded jitter reproduces

  StandardizeOptions rej;
  rej.policy = ZeroVariancePolicy::reject;
  std::vector<std::string> ids = {"n7", "n8"};
  rej.node_ids = &ids;
  CHECK_THROWS_WITH(standardize_rows(m, rej),
                    Catch::Matchers::ContainsSubstring("n7"));
}

TEST_CASE("csv writer and reader are duals", "[ingest]") {
  const fs::path dir = temp_dir();
  const fs::path path = dir / "roundtrip.csv";
  RawSeriesSet set;
  set.node_ids = {"n1", "n2", "n3"};
  set.sample_period = 1.0;
  Rng rng(11);
  set.values = rng.normal_matrix(3, 40);
  set.quantity = Quantity::activePower;
  save_series_csv(path.string(), set);

  const RawSeriesSet back = load_csv(path.string(), Quantity::activePower);
  REQUIRE(back.node_ids == set.node_ids);
  CHECK(back.sample_period == Approx(1.0));
  REQUIRE(back.values.rows() == 3);
  REQUIRE(back.values.cols() == 40);
  CHECK((back.values - set.values).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("csv parse failures name the problem", "[ingest]") {
  const fs::path dir = temp_dir();

  const fs::path dup = dir / "dup.csv";
  write_text(dup, "t,n1,n1\n0,1,2\n1,3,4\n");
  CHECK_THROWS_AS(load_csv(dup.string(), Quantity::activePower), InputError);

  const fs::path ragged = dir / "ragged.csv";
  write_text(ragged, "t,n1,n2\n0,1,2\n1,3\n");
  CHECK_THROWS_AS(load_csv(ragged.string(), Quantity::activePower), InputError);

  const fs::path bad_cell = dir / "bad_cell.csv";
  write_text(bad_cell, "t,n1\n0,1\n1,zap\n");
  CHECK_THROWS_AS(load_csv(bad_cell.string(), Quantity::activePower), InputError);

  const fs::path jitter = dir / "jitter.csv";
  write_text(jitter, "t,n1\n0,1\n1,2\n2.5,3\n3.5,4\n");
  CHECK_THROWS_WITH(load_csv(jitter.string(), Quantity::activePower),
                    Catch::Matchers::ContainsSubstring("non-uniform"));

  CHECK_THROWS_AS(load_csv((dir / "missing.csv").string(), Quantity::activePower),
                  InputError);
}

TEST_CASE("window counts over a day of samples", "[ingest]") {
  CHECK(window_count(9600, 100, 1) == 9501);
  CHECK(window_count(9600, 100, 100) == 96);
  CHECK(window_count(9600, 100, 4) == 2376);
  CHECK(window_count(100, 100, 1) == 1);
  CHECK(window_count(1, 1, 1) == 1);
  CHECK_THROWS_WITH(window_count(50, 100, 1),
                    Catch::Matchers::ContainsSubstring("insufficient"));
  CHECK_THROWS_AS(window_count(50, 10, 0), InputError);
}

TEST_CASE("windows are never transposed", "[ingest]") {
  Rng rng(1);
  const Eigen::MatrixXd tall = rng.normal_matrix(30, 40);
  StandardizeOptions opt;
  CHECK_THROWS_WITH(
      for_each_window(tall, 20, 1, opt, [](TimeSeriesWindow&) {}),
      Catch::Matchers::ContainsSubstring("never transposed"));
}

TEST_CASE("sliding windows cover the series and come out standardized",
          "[ingest]") {
  RawSeriesSet set;
  set.node_ids = {"n1", "n2"};
  Rng rng(8);
  set.values = rng.normal_matrix(2, 25);

  const std::vector<TimeSeriesWindow> ws = sliding_windows(set, 10, 5);
  REQUIRE(ws.size() == 4);
  CHECK(ws[0].start_index == 0);
  CHECK(ws[1].start_index == 5);
  CHECK(ws[3].start_index == 15);
  for (const TimeSeriesWindow& w : ws) {
    CHECK(w.n() == 2);
    CHECK(w.t() == 10);
    CHECK(w.c() == Approx(0.2));
    CHECK(is_standardized(w.data));
  }

  // Non-overlapping cadence: step == window length.
  CHECK(sliding_windows(set, 10, 10).size() == 2);
}

TEST_CASE("rmtw sidecar round-trips bitwise", "[ingest]") {
  const fs::path dir = temp_dir();
  const fs::path path = dir / "w.rmtw";
  TimeSeriesWindow w;
  Rng rng(77);
  w.data = rng.normal_matrix(5, 9);
  w.start_index = 123;
  save_window_rmtw(path.string(), w);
  const TimeSeriesWindow back = load_window_rmtw(path.string());
  REQUIRE(back.data.rows() == 5);
  REQUIRE(back.data.cols() == 9);
  CHECK((back.data - w.data).cwiseAbs().maxCoeff() == 0.0);

  write_text(dir / "bad.rmtw", "NOPE");
  CHECK_THROWS_WITH(load_window_rmtw((dir / "bad.rmtw").string()),
                    Catch::Matchers::ContainsSubstring("RMTW"));
}
