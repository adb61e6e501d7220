#include <catch2/catch_amalgamated.hpp>

#include "rmtgrid/concat.hpp"
#include "rmtgrid/rng.hpp"

using Catch::Approx;
using namespace rmtgrid;

TEST_CASE("default duplication count is 30 percent of the state rows",
          "[concat]") {
  CHECK(default_dup_rows(33) == 10);
  CHECK(default_dup_rows(10) == 3);
  CHECK(default_dup_rows(1) == 1);  // never below one row
}

TEST_CASE("snr sets the duplication noise scale from the series", "[concat]") {
  // Series with population std 2: eta at 20 dB is 2 * 10^(-1) = 0.2.
  Eigen::VectorXd s(4);
  s << -2.0, 2.0, -2.0, 2.0;
  CHECK(eta_for_snr_db(s, 20.0) == Approx(0.2));
  CHECK(eta_for_snr_db(s, 0.0) == Approx(2.0));
}

TEST_CASE("noiseless duplication copies the series exactly", "[concat]") {
  Rng rng(4);
  const Eigen::VectorXd c_j = rng.normal_vector(60);
  ConcatSpec spec;
  spec.k = 5;
  spec.eta = 0.0;
  const Eigen::MatrixXd d = build_factor_matrix(c_j, spec);
  REQUIRE(d.rows() == 5);
  REQUIRE(d.cols() == 60);
  for (int i = 0; i < 5; ++i)
    CHECK((d.row(i).transpose() - c_j).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("duplication noise has the requested scale", "[concat]") {
  Rng rng(9);
  const Eigen::VectorXd c_j = rng.normal_vector(2000);
  ConcatSpec spec;
  spec.k = 10;
  spec.eta = 0.5;
  spec.seed = 21;
  const Eigen::MatrixXd d = build_factor_matrix(c_j, spec);
  const Eigen::MatrixXd resid = d.rowwise() - c_j.transpose();
  const double var = resid.array().square().mean();
  CHECK(std::sqrt(var) == Approx(0.5).epsilon(0.05));
}

TEST_CASE("factor matrices are bitwise deterministic in the seed", "[concat]") {
  Rng rng(2);
  const Eigen::VectorXd c_j = rng.normal_vector(100);
  ConcatSpec spec;
  spec.k = 4;
  spec.eta = 0.3;
  spec.seed = 77;
  const Eigen::MatrixXd a = build_factor_matrix(c_j, spec);
  const Eigen::MatrixXd b = build_factor_matrix(c_j, spec);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  spec.seed = 78;
  const Eigen::MatrixXd c = build_factor_matrix(c_j, spec);
  CHECK((a - c).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("concatenate stacks state above the factor block", "[concat]") {
  Rng rng(6);
  const Eigen::MatrixXd state = rng.normal_matrix(3, 40);
  const Eigen::MatrixXd factor = rng.normal_matrix(2, 40);
  const ConcatMatrix cm = concatenate(state, factor, "n9");
  REQUIRE(cm.data.rows() == 5);
  REQUIRE(cm.data.cols() == 40);
  CHECK(cm.n_state == 3);
  CHECK(cm.k_factor == 2);
  CHECK(cm.factor_node == "n9");
  CHECK((cm.data.topRows(3) - state).cwiseAbs().maxCoeff() == 0.0);
  CHECK((cm.data.bottomRows(2) - factor).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("concatenate rejects malformed inputs", "[concat]") {
  Rng rng(6);
  const Eigen::MatrixXd state = rng.normal_matrix(3, 40);
  CHECK_THROWS_WITH(concatenate(state, rng.normal_matrix(2, 39)),
                    Catch::Matchers::ContainsSubstring("column mismatch"));
  CHECK_THROWS_AS(concatenate(Eigen::MatrixXd(0, 40), state), InputError);
  // 3 + 38 rows over 40 columns would push the aspect ratio past 1.
  CHECK_THROWS_WITH(concatenate(state, rng.normal_matrix(38, 40)),
                    Catch::Matchers::ContainsSubstring("aspect ratio"));

  ConcatSpec bad;
  bad.k = 0;
  CHECK_THROWS_AS(build_factor_matrix(rng.normal_vector(10), bad), InputError);
  CHECK_THROWS_AS(build_factor_matrix(Eigen::VectorXd(0), ConcatSpec{}),
                  InputError);
}
