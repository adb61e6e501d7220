#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "rmtgrid/rng.hpp"
#include "rmtgrid/stats.hpp"

using Catch::Approx;
using namespace rmtgrid;

TEST_CASE("median handles odd and even lengths", "[stats]") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
  CHECK(median({5.0}) == 5.0);
  CHECK_THROWS_AS(median({}), InputError);
}

TEST_CASE("mad is the median absolute deviation", "[stats]") {
  // median 3, |x - 3| = {2, 1, 0, 1, 2} -> mad 1
  CHECK(mad({1.0, 2.0, 3.0, 4.0, 5.0}) == 1.0);
  CHECK(mad({7.0, 7.0, 7.0}) == 0.0);
}

TEST_CASE("excess kurtosis hits the textbook values", "[stats]") {
  // Symmetric Bernoulli: m4 = m2^2 exactly, so the excess is -2.
  std::vector<double> pm1;
  for (int i = 0; i < 100; ++i) pm1.push_back(i % 2 == 0 ? 1.0 : -1.0);
  CHECK(excess_kurtosis(pm1.data(), pm1.size()) == Approx(-2.0).margin(1e-12));

  Rng rng(42);
  std::vector<double> unif(200000);
  for (double& v : unif) v = rng.uniform();
  CHECK(excess_kurtosis(unif.data(), unif.size()) == Approx(-1.2).margin(0.02));

  std::vector<double> gauss(200000);
  for (double& v : gauss) v = rng.normal();
  CHECK(std::abs(excess_kurtosis(gauss.data(), gauss.size())) < 0.05);

  CHECK_THROWS_AS(excess_kurtosis(nullptr, 0), InputError);
  std::vector<double> flat(10, 2.0);
  CHECK_THROWS_AS(excess_kurtosis(flat.data(), flat.size()), NumericError);
}

TEST_CASE("boxcar smoothing matches a same-length zero-padded convolution",
          "[stats]") {
  const std::vector<double> x = {1, 2, 3, 4, 5};
  const std::vector<double> w3 = boxcar_same(x, 3);
  CHECK(w3[0] == Approx(1.0));
  CHECK(w3[1] == Approx(2.0));
  CHECK(w3[2] == Approx(3.0));
  CHECK(w3[3] == Approx(4.0));
  CHECK(w3[4] == Approx(3.0));

  // Even widths put the extra tap on the left.
  const std::vector<double> w2 = boxcar_same(x, 2);
  CHECK(w2[0] == Approx(0.5));
  CHECK(w2[1] == Approx(1.5));
  CHECK(w2[4] == Approx(4.5));

  CHECK(boxcar_same(x, 1) == x);
  CHECK_THROWS_AS(boxcar_same(x, 0), InputError);
}

TEST_CASE("fnv1a64 reproduces the published vectors", "[stats]") {
  CHECK(fnv1a64(nullptr, 0) == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a", 1) == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar", 6) == 0x85944171f73967e8ULL);
  CHECK(to_hex64(0xcbf29ce484222325ULL) == "cbf29ce484222325");
  CHECK(to_hex64(0) == "0000000000000000");
}

TEST_CASE("normal cdf and KS distance behave", "[stats]") {
  CHECK(normal_cdf(0.0) == Approx(0.5));
  CHECK(normal_cdf(1.959964) == Approx(0.975).margin(1e-6));
  CHECK(normal_cdf(-1.959964) == Approx(0.025).margin(1e-6));

  // Quantile placement at (i - 0.5)/n gives a KS distance of exactly 1/(2n).
  const int n = 40;
  std::vector<double> q(n);
  for (int i = 0; i < n; ++i) {
    const double p = (i + 0.5) / n;
    // crude bisection inverse of the normal cdf
    double lo = -10, hi = 10;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (normal_cdf(mid) < p ? lo : hi) = mid;
    }
    q[static_cast<std::size_t>(i)] = 0.5 * (lo + hi);
  }
  CHECK(ks_distance_to_normal(q, 0.0, 1.0) == Approx(1.0 / (2.0 * n)).margin(1e-9));
  CHECK_THROWS_AS(ks_distance_to_normal({}, 0.0, 1.0), InputError);
  CHECK_THROWS_AS(ks_distance_to_normal({1.0}, 0.0, 0.0), InputError);
}

TEST_CASE("rng streams are deterministic and seed-separated", "[rng]") {
  Rng a(123), b(123), c(124);
  bool all_equal = true;
  bool any_differ = false;
  for (int i = 0; i < 100; ++i) {
    const double va = a.normal();
    if (va != b.normal()) all_equal = false;
    if (va != c.normal()) any_differ = true;
  }
  CHECK(all_equal);
  CHECK(any_differ);
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
  CHECK(mix_seed(7, 0) == mix_seed(7, 0));
}

TEST_CASE("normal_matrix fills row-major from the same stream", "[rng]") {
  Rng a(99);
  const Eigen::MatrixXd m = a.normal_matrix(2, 3);
  Rng b(99);
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) CHECK(m(i, j) == b.normal());
}

TEST_CASE("uniform and normal have the right moments", "[rng]") {
  Rng rng(2024);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    s += u;
    s2 += u * u;
  }
  CHECK(s / n == Approx(0.5).margin(0.005));
  CHECK(s2 / n - 0.25 == Approx(1.0 / 12.0).margin(0.005));

  s = s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(s / n == Approx(0.0).margin(0.02));
  CHECK(s2 / n == Approx(1.0).margin(0.02));
}
