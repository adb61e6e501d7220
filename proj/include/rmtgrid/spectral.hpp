#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "rmtgrid/errors.hpp"
#include "rmtgrid/ingest.hpp"
#include "rmtgrid/quadrature.hpp"
#include "rmtgrid/rng.hpp"

namespace rmtgrid {

enum class SpectrumConvention { overT, overN };

inline std::string to_string(SpectrumConvention c) {
  return c == SpectrumConvention::overT ? "overT" : "overN";
}

// Eigenvalues of the sample covariance matrix of one window, ascending.
struct CovarianceSpectrum {
  Eigen::VectorXd eigenvalues;
  SpectrumConvention convention = SpectrumConvention::overN;
  double c = 0.0;  // aspect ratio N/T
};

// Covariance spectrum of a standardized N x T matrix: eigenvalues of
// (1/T) X X' (overT) or (1/N) X X' (overN).
inline CovarianceSpectrum covariance_spectrum(const Eigen::MatrixXd& x,
                                              SpectrumConvention convention) {
  if (x.rows() < 1 || x.cols() < 1) throw InputError("empty matrix");
  if (!x.allFinite()) throw NumericError("matrix contains non-finite entries");
  const double denom = convention == SpectrumConvention::overT
                           ? static_cast<double>(x.cols())
                           : static_cast<double>(x.rows());
  Eigen::MatrixXd m = (x * x.transpose()) / denom;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw NumericError("eigendecomposition failed");
  CovarianceSpectrum out;
  out.eigenvalues = es.eigenvalues();  // ascending
  for (Eigen::Index i = 0; i < out.eigenvalues.size(); ++i) {
    double& ev = out.eigenvalues(i);
    if (ev < 0.0) {
      if (ev < -1e-10)
        throw NumericError("covariance eigenvalue " + std::to_string(ev) +
                           " below the PSD clamp");
      ev = 0.0;
    }
  }
  out.convention = convention;
  out.c = static_cast<double>(x.rows()) / static_cast<double>(x.cols());
  return out;
}

inline CovarianceSpectrum covariance_spectrum(const TimeSeriesWindow& w,
                                              SpectrumConvention convention) {
  if (w.c() > 1.0) throw InputError("window aspect ratio exceeds 1");
  if (!is_standardized(w.data))
    throw InputError("window rows are not standardized");
  return covariance_spectrum(w.data, convention);
}

// Marchenko-Pastur law for aspect ratio c in (0, 1], in either covariance
// convention. overT support [(1-sqrt(c))^2, (1+sqrt(c))^2]; overN support
// [(1/sqrt(c)-1)^2, (1/sqrt(c)+1)^2].
struct MpLaw {
  double c = 1.0;
  double a = 0.0;
  double b = 4.0;
  SpectrumConvention convention = SpectrumConvention::overT;

  static MpLaw make(double c, SpectrumConvention convention) {
    if (!(c > 0.0) || c > 1.0)
      throw InputError("aspect ratio c must be in (0, 1], got " + std::to_string(c));
    MpLaw law;
    law.c = c;
    law.convention = convention;
    const double s = std::sqrt(c);
    if (convention == SpectrumConvention::overT) {
      law.a = (1.0 - s) * (1.0 - s);
      law.b = (1.0 + s) * (1.0 + s);
    } else {
      law.a = (1.0 / s - 1.0) * (1.0 / s - 1.0);
      law.b = (1.0 / s + 1.0) * (1.0 / s + 1.0);
    }
    return law;
  }
};

// Density of the M-P law; zero outside the open support interval. The overN
// spectrum is the overT spectrum scaled by 1/c, so transporting the density
// through that change of variables drops the 1/c prefactor: both branches
// integrate to unit mass over their own support.
inline double mp_density(const MpLaw& law, double x) {
  if (x <= law.a || x >= law.b) return 0.0;
  const double wing = std::sqrt((x - law.a) * (law.b - x));
  if (law.convention == SpectrumConvention::overT)
    return wing / (2.0 * M_PI * law.c * x);
  return wing / (2.0 * M_PI * x);
}

// CDF by the trigonometric substitution x = center + radius*sin(theta),
// which removes the square-root endpoint singularities. 256 fixed
// Gauss-Legendre nodes resolve the smooth integrand far below 1e-10.
inline double mp_cdf(const MpLaw& law, double x) {
  if (x <= law.a) return 0.0;
  if (x >= law.b) return 1.0;
  const double center = 0.5 * (law.a + law.b);
  const double radius = 0.5 * (law.b - law.a);
  const double theta = std::asin(std::clamp((x - center) / radius, -1.0, 1.0));
  auto integrand = [&](double th) {
    const double xx = center + radius * std::sin(th);
    const double costh = std::cos(th);
    // mp_density(xx) * dx with dx = radius*cos(th) dth; the wing term equals
    // radius*cos(th), so the product is smooth.
    const double wing = radius * costh;
    const double dens = law.convention == SpectrumConvention::overT
                            ? wing / (2.0 * M_PI * law.c * xx)
                            : wing / (2.0 * M_PI * xx);
    return dens * radius * costh;
  };
  const double v = integrate_gl(integrand, -M_PI / 2.0, theta, 256);
  return std::clamp(v, 0.0, 1.0);
}

// Inverse CDF by bisection on the support.
inline double mp_quantile(const MpLaw& law, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InputError("quantile level outside [0,1]");
  double lo = law.a, hi = law.b;
  for (int i = 0; i < 200 && hi - lo > 1e-13 * (law.b - law.a); ++i) {
    const double mid = 0.5 * (lo + hi);
    (mp_cdf(law, mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Exact sup distance between the empirical CDF of the eigenvalues and the
// M-P CDF.
inline double ks_distance(const CovarianceSpectrum& spectrum, const MpLaw& law) {
  if (spectrum.convention != law.convention)
    throw InputError("spectrum and law use different covariance conventions");
  const Eigen::Index n = spectrum.eigenvalues.size();
  if (n == 0) throw InputError("empty spectrum");
  std::vector<double> ev(spectrum.eigenvalues.data(),
                         spectrum.eigenvalues.data() + n);
  std::sort(ev.begin(), ev.end());
  double sup = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double f = mp_cdf(law, ev[static_cast<std::size_t>(i)]);
    const double lo = static_cast<double>(i) / static_cast<double>(n);
    const double hi = static_cast<double>(i + 1) / static_cast<double>(n);
    sup = std::max({sup, std::abs(f - lo), std::abs(f - hi)});
  }
  return sup;
}

// Haar-distributed orthogonal matrix: QR of a seeded Gaussian matrix with
// the R-diagonal sign fix.
inline Eigen::MatrixXd haar_orthogonal(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd g = rng.normal_matrix(n, n);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

inline constexpr std::uint64_t kRingSeed = 0x52494e47ULL;  // "RING"

// Square matrix whose eigenvalues follow the single-ring law for a
// standardized N x T window: keep the left singular frame and singular
// values, replace the (rectangular) right frame by an N x N Haar-orthogonal
// factor, then rescale every row to unit norm so each entry has second
// moment 1/N.
inline Eigen::VectorXcd ring_transform(const Eigen::MatrixXd& x,
                                       std::uint64_t seed = kRingSeed) {
  if (x.rows() > x.cols()) throw InputError("ring transform needs c <= 1");
  if (!x.allFinite()) throw NumericError("matrix contains non-finite entries");
  const Eigen::Index n = x.rows();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU);
  if (svd.info() != Eigen::Success) throw NumericError("SVD failed");
  Eigen::MatrixXd z = svd.matrixU() * svd.singularValues().asDiagonal() *
                      haar_orthogonal(n, seed).transpose();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = z.row(i).norm();
    if (norm < 1e-300)
      throw NumericError("ring transform hit a zero row; matrix is degenerate");
    z.row(i) /= norm;
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(z, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
  return es.eigenvalues();
}

inline Eigen::VectorXcd ring_transform(const TimeSeriesWindow& w,
                                       std::uint64_t seed = kRingSeed) {
  if (!is_standardized(w.data))
    throw InputError("window rows are not standardized");
  return ring_transform(w.data, seed);
}

// Fraction of eigenvalue moduli inside [inner, outer].
inline double annulus_fraction(const Eigen::VectorXcd& eigs, double inner,
                               double outer) {
  if (eigs.size() == 0) throw InputError("empty eigenvalue list");
  Eigen::Index hit = 0;
  for (Eigen::Index i = 0; i < eigs.size(); ++i) {
    const double r = std::abs(eigs(i));
    if (r >= inner && r <= outer) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(eigs.size());
}

}  // namespace rmtgrid
