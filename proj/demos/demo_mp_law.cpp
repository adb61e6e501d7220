// Draws a standardized Gaussian window, prints how close its covariance
// spectrum sits to the Marchenko-Pastur law, and tabulates the empirical
// versus theoretical CDF at a few quantiles.

#include <Eigen/Dense>

#include <cstdint>
#include <iomanip>
#include <iostream>
#include <string>

#include <rmtgrid/ingest.hpp>
#include <rmtgrid/les.hpp>
#include <rmtgrid/rng.hpp>
#include <rmtgrid/spectral.hpp>

int main(int argc, char** argv) {
  using namespace rmtgrid;
  const std::uint64_t seed = argc > 1 ? std::stoull(argv[1]) : 42;
  const Eigen::Index n = 200;
  const Eigen::Index t = 800;
  const double c = static_cast<double>(n) / static_cast<double>(t);

  Rng rng(seed);
  const Eigen::MatrixXd x = standardize_rows(rng.normal_matrix(n, t));
  const CovarianceSpectrum spec =
      covariance_spectrum(x, SpectrumConvention::overT);
  const MpLaw law = MpLaw::make(c, SpectrumConvention::overT);

  std::cout << "window " << n << " x " << t << " (c=" << c << "), seed "
            << seed << "\n";
  std::cout << "support [" << law.a << ", " << law.b << "]\n";
  std::cout << "KS distance to the Marchenko-Pastur law: "
            << ks_distance(spec, law) << "\n\n";

  std::cout << std::setw(10) << "lambda" << std::setw(14) << "empirical"
            << std::setw(14) << "theory" << "\n";
  const Eigen::VectorXd& ev = spec.eigenvalues;
  for (double q : {0.1, 0.25, 0.5, 0.75, 0.9}) {
    const double lam = law.a + q * (law.b - law.a);
    Eigen::Index below = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      if (ev(i) <= lam) ++below;
    const double emp = static_cast<double>(below) /
                       static_cast<double>(ev.size());
    std::cout << std::setw(10) << std::setprecision(4) << std::fixed << lam
              << std::setw(14) << emp << std::setw(14) << mp_cdf(law, lam)
              << "\n";
  }

  const double tau = les_stat(spec, chebyshev_t2());
  std::cout << "\nquadratic statistic " << std::setprecision(2) << tau
            << ", theory mean "
            << les_mean(chebyshev_t2(), c, static_cast<double>(n))
            << ", theory sd "
            << std::sqrt(t2_variance_closed_form(c, 0.0)) << "\n";
  return 0;
}
