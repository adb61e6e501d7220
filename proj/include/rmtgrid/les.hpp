#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <string>
#include <tuple>

#include "rmtgrid/errors.hpp"
#include "rmtgrid/quadrature.hpp"
#include "rmtgrid/spectral.hpp"

namespace rmtgrid {

// Test function phi for linear eigenvalue statistics sum_i phi(lambda_i).
// dphi is optional; when absent a central difference stands in for the
// divided-difference fallback inside the variance kernel. domain_min marks
// an open lower domain boundary (e.g. 0 for the likelihood-ratio function).
struct TestFunction {
  std::string name;
  std::function<double(double)> phi;
  std::function<double(double)> dphi;
  double domain_min = -std::numeric_limits<double>::infinity();

  double deriv(double x) const {
    if (dphi) return dphi(x);
    const double h = 1e-6 * std::max(1.0, std::abs(x));
    return (phi(x + h) - phi(x - h)) / (2.0 * h);
  }
};

inline TestFunction chebyshev_t2() {
  TestFunction f;
  f.name = "chebyshevT2";
  f.phi = [](double x) { return 2.0 * x * x - 1.0; };
  f.dphi = [](double x) { return 4.0 * x; };
  return f;
}

inline TestFunction likelihood_ratio() {
  TestFunction f;
  f.name = "likelihoodRatio";
  f.phi = [](double x) { return x - std::log(x) - 1.0; };
  f.dphi = [](double x) { return 1.0 - 1.0 / x; };
  f.domain_min = 0.0;
  return f;
}

inline TestFunction test_function_by_name(const std::string& name) {
  if (name == "chebyshevT2") return chebyshev_t2();
  if (name == "likelihoodRatio") return likelihood_ratio();
  throw InputError("unknown test function '" + name + "'");
}

// Linear eigenvalue statistic sum_i phi(lambda_i).
inline double les_stat(const CovarianceSpectrum& spectrum,
                       const TestFunction& f) {
  if (spectrum.eigenvalues.size() == 0) throw InputError("empty spectrum");
  double s = 0.0;
  for (Eigen::Index i = 0; i < spectrum.eigenvalues.size(); ++i) {
    const double ev = spectrum.eigenvalues(i);
    if (ev <= f.domain_min)
      throw NumericError(f.name + " is undefined at eigenvalue " +
                         std::to_string(ev));
    s += f.phi(ev);
  }
  return s;
}

namespace detail {

// Spectral-edge parametrization of the N-normalized M-P law: the support
// [(1/sqrt(c)-1)^2, (1/sqrt(c)+1)^2] maps to theta in [-pi/2, pi/2] via
// zeta(theta) = 1 + 1/c + (2/sqrt(c)) sin(theta), and the law's measure
// becomes (2/(pi c)) cos^2(theta)/zeta(theta) dtheta, which is smooth.
inline double zeta_of_theta(double c, double theta) {
  return 1.0 + 1.0 / c + (2.0 / std::sqrt(c)) * std::sin(theta);
}

inline void check_les_domain(const TestFunction& f, double c) {
  if (!(c > 0.0) || c > 1.0)
    throw InputError("aspect ratio c must be in (0, 1], got " +
                     std::to_string(c));
  const double s = std::sqrt(c);
  const double zeta_min = (1.0 / s - 1.0) * (1.0 / s - 1.0);
  if (zeta_min <= f.domain_min)
    throw NumericError(f.name +
                       " domain excludes the lower spectral edge at c = " +
                       std::to_string(c));
}

struct VarianceParts {
  double base = 0.0;      // kurtosis-independent block
  double kurt_coef = 0.0; // multiplies kappa4
};

// One tensor-quadrature evaluation of the variance decomposition at a fixed
// node count.
inline VarianceParts les_variance_parts(const TestFunction& f, double c,
                                        int nodes) {
  const QuadRule& rule = gauss_legendre(nodes);
  const double half = M_PI / 2.0;
  std::vector<double> theta(static_cast<std::size_t>(nodes));
  std::vector<double> wt(static_cast<std::size_t>(nodes));
  std::vector<double> zeta(static_cast<std::size_t>(nodes));
  std::vector<double> phi_z(static_cast<std::size_t>(nodes));
  std::vector<double> sin_t(static_cast<std::size_t>(nodes));
  for (int i = 0; i < nodes; ++i) {
    theta[i] = half * rule.nodes[i];
    wt[i] = half * rule.weights[i];
    zeta[i] = zeta_of_theta(c, theta[i]);
    phi_z[i] = f.phi(zeta[i]);
    sin_t[i] = std::sin(theta[i]);
  }
  double quad = 0.0;
  for (int i = 0; i < nodes; ++i) {
    for (int j = 0; j < nodes; ++j) {
      const double dz = zeta[i] - zeta[j];
      double psi;
      if (std::abs(dz) < 1e-10)
        psi = f.deriv(zeta_of_theta(c, 0.5 * (theta[i] + theta[j])));
      else
        psi = (phi_z[i] - phi_z[j]) / dz;
      quad += wt[i] * wt[j] * psi * psi * (1.0 - sin_t[i] * sin_t[j]);
    }
  }
  double lin = 0.0;
  for (int i = 0; i < nodes; ++i) lin += wt[i] * phi_z[i] * sin_t[i];
  VarianceParts parts;
  parts.base = 2.0 / (c * M_PI * M_PI) * quad;
  parts.kurt_coef = (lin * lin) / (M_PI * M_PI);
  return parts;
}

inline const VarianceParts& les_variance_cached(const TestFunction& f,
                                                double c, int nodes) {
  static std::map<std::tuple<std::string, double, int>, VarianceParts> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  const auto key = std::make_tuple(f.name, c, nodes);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  VarianceParts coarse = les_variance_parts(f, c, nodes);
  VarianceParts fine = les_variance_parts(f, c, 2 * nodes);
  // The floor keeps functions with (near) zero variance, like constants,
  // from tripping the relative-drift gate on roundoff noise.
  const double scale =
      std::max({std::abs(fine.base), std::abs(fine.kurt_coef), 1e-12});
  const double drift = std::max(std::abs(fine.base - coarse.base),
                                std::abs(fine.kurt_coef - coarse.kurt_coef));
  if (drift > 1e-6 * scale)
    throw NumericError(
        "variance quadrature did not converge; doubling the node count moved "
        "the result by a relative " +
        std::to_string(drift / scale));
  return cache.emplace(key, fine).first->second;
}

}  // namespace detail

// Asymptotic mean of the linear eigenvalue statistic for an N x T window of
// standardized iid entries, N-normalized covariance convention. n_rows
// scales the unit-mass law integral up to the full sum over N eigenvalues.
inline double les_mean(const TestFunction& f, double c, double n_rows,
                       int quad_nodes = 128) {
  if (quad_nodes < 32) throw InputError("quad_nodes must be at least 32");
  detail::check_les_domain(f, c);
  auto integrand = [&](double theta) {
    const double z = detail::zeta_of_theta(c, theta);
    const double ct = std::cos(theta);
    return f.phi(z) * ct * ct / z;
  };
  // x(theta) = 1/c + 1 + (2/sqrt(c)) sin(theta) maps the law onto
  // (-pi/2, pi/2); the density times dx/dtheta leaves radius^2 = 4/c
  // over 2 pi x, hence the 2/(pi c) prefactor.
  const double lawint = (2.0 / (M_PI * c)) *
                        integrate_gl(integrand, -M_PI / 2.0, M_PI / 2.0,
                                     quad_nodes);
  return n_rows * lawint;
}

// Asymptotic variance of the statistic. kappa4 is the excess kurtosis of the
// matrix entries (0 Gaussian, -2 symmetric Bernoulli). The kurtosis enters
// affinely, so the two quadrature blocks are cached per (function, c, nodes)
// after an internal node-doubling convergence check.
inline double les_variance(const TestFunction& f, double c, double kappa4,
                           int quad_nodes = 128) {
  if (quad_nodes < 32) throw InputError("quad_nodes must be at least 32");
  detail::check_les_domain(f, c);
  const detail::VarianceParts& parts =
      detail::les_variance_cached(f, c, quad_nodes);
  return parts.base + kappa4 * parts.kurt_coef;
}

// Closed forms for the Chebyshev T2 statistic, used as quadrature oracles.
inline double t2_mean_closed_form(double c, double n_rows) {
  return n_rows * (2.0 * (1.0 + c) / (c * c) - 1.0);
}

inline double t2_variance_closed_form(double c, double kappa4) {
  const double g = (1.0 + 1.0 / c) * (1.0 + 1.0 / c) / c;
  return 32.0 * g + 16.0 / (c * c) + 16.0 * kappa4 * g;
}

// At finite size the T2 statistic over raw iid windows sits above the
// asymptotic centering by exactly this amount: E[tau] - les_mean =
// 2 T (1 + kappa4) / N for an N x T matrix of unit-variance entries.
inline double t2_finite_size_offset(double n_rows, double t_cols,
                                    double kappa4) {
  return 2.0 * t_cols * (1.0 + kappa4) / n_rows;
}

// Pooled excess kurtosis of all matrix entries, the plug-in kappa4 estimate.
inline double kappa4_estimate(const Eigen::MatrixXd& x) {
  return excess_kurtosis(x.data(), static_cast<std::size_t>(x.size()));
}

}  // namespace rmtgrid
