#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "rmtgrid/errors.hpp"
#include "rmtgrid/patterns.hpp"
#include "rmtgrid/stats.hpp"

namespace rmtgrid {

struct CoefficientVector {
  std::vector<std::string> ids;
  Eigen::VectorXd values;
  double residual_norm = 0.0;

  double value_of(const std::string& id) const {
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (ids[i] == id) return values(static_cast<Eigen::Index>(i));
    throw InputError("no coefficient for pattern '" + id + "'");
  }
};

namespace detail {

inline Eigen::MatrixXd pattern_matrix(const std::vector<LoadPattern>& patterns,
                                      std::size_t s_len) {
  Eigen::MatrixXd p(static_cast<Eigen::Index>(s_len),
                    static_cast<Eigen::Index>(patterns.size()));
  for (std::size_t j = 0; j < patterns.size(); ++j) {
    if (patterns[j].profile.size() != s_len)
      throw InputError("pattern '" + patterns[j].id + "' has length " +
                       std::to_string(patterns[j].profile.size()) +
                       ", series has " + std::to_string(s_len));
    for (std::size_t i = 0; i < s_len; ++i)
      p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          patterns[j].profile[i];
  }
  return p;
}

}  // namespace detail

// Least-squares coefficients of the aggregate series over the pattern matrix,
// solved by QR after an SVD conditioning screen. A rank-deficient matrix
// raises an error naming the patterns spanning the null direction.
inline CoefficientVector solve_ls(const std::vector<LoadPattern>& patterns,
                                  const std::vector<double>& p_sigma) {
  if (patterns.empty()) throw InputError("empty pattern library");
  if (p_sigma.empty()) throw InputError("empty aggregate series");
  const Eigen::MatrixXd p = detail::pattern_matrix(patterns, p_sigma.size());
  Eigen::Map<const Eigen::VectorXd> y(p_sigma.data(),
                                      static_cast<Eigen::Index>(p_sigma.size()));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(p);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= 1e-10 * sv(0)) {
    // Name the null-direction patterns for the error message.
    Eigen::JacobiSVD<Eigen::MatrixXd> svdv(p, Eigen::ComputeThinV);
    const Eigen::VectorXd v = svdv.matrixV().col(sv.size() - 1);
    const double vmax = v.cwiseAbs().maxCoeff();
    std::string names;
    for (Eigen::Index j = 0; j < v.size(); ++j)
      if (std::abs(v(j)) > 1e-8 * vmax)
        names += (names.empty() ? "" : ", ") +
                 patterns[static_cast<std::size_t>(j)].id;
    throw InputError("collinear patterns: " + names);
  }
  CoefficientVector out;
  for (const LoadPattern& pat : patterns) out.ids.push_back(pat.id);
  out.values = p.householderQr().solve(y);
  out.residual_norm = (p * out.values - y).norm();
  return out;
}

// Solve over the routine library extended by the reconstructed step profiles.
// With no detected units this reduces to solve_ls on the library alone.
inline CoefficientVector augment_and_estimate(
    const std::vector<LoadPattern>& tlp_library,
    const std::vector<LoadPattern>& detected_ulps,
    const std::vector<double>& p_sigma) {
  std::vector<LoadPattern> all = tlp_library;
  all.insert(all.end(), detected_ulps.begin(), detected_ulps.end());
  return solve_ls(all, p_sigma);
}

// Mean level after minus mean level before sample t, each side averaged over
// w samples with a g-sample guard gap around t; clamped at the series edges.
inline double measure_step(const std::vector<double>& y, std::int64_t t,
                           std::int64_t w = 200, std::int64_t g = 25) {
  const std::int64_t s = static_cast<std::int64_t>(y.size());
  const std::int64_t lo0 = std::max<std::int64_t>(0, t - g - w);
  const std::int64_t lo1 = std::max<std::int64_t>(0, t - g);
  const std::int64_t hi0 = std::min(s, t + g);
  const std::int64_t hi1 = std::min(s, t + g + w);
  if (lo1 <= lo0 || hi1 <= hi0)
    throw InputError("step measurement at sample " + std::to_string(t) +
                     " falls outside the series");
  double lo_sum = 0.0, hi_sum = 0.0;
  for (std::int64_t i = lo0; i < lo1; ++i) lo_sum += y[static_cast<std::size_t>(i)];
  for (std::int64_t i = hi0; i < hi1; ++i) hi_sum += y[static_cast<std::size_t>(i)];
  return hi_sum / static_cast<double>(hi1 - hi0) -
         lo_sum / static_cast<double>(lo1 - lo0);
}

// Routine-pattern coefficients from the 23 hour-boundary steps of a percent
// series: an L1-flavored IRLS fit over the hourly step deltas, then a plain
// refit on the inlier rows. Robust to a handful of event-contaminated hours.
inline Eigen::VectorXd robust_step_fit(const std::vector<double>& y_pct,
                                       const std::vector<LoadPattern>& tlps,
                                       std::int64_t samples_per_hour,
                                       double floor = 3.0) {
  if (tlps.empty()) throw InputError("empty pattern library");
  const Eigen::Index m = static_cast<Eigen::Index>(tlps.size());
  Eigen::MatrixXd d(23, m);
  Eigen::VectorXd s(23);
  for (int h = 1; h <= 23; ++h) {
    s(h - 1) = measure_step(y_pct, h * samples_per_hour);
    for (Eigen::Index j = 0; j < m; ++j)
      d(h - 1, j) = 100.0 * pattern_hour_delta(tlps[static_cast<std::size_t>(j)],
                                               h, samples_per_hour);
  }
  // The explicit return type forces the solve to evaluate while the SVD
  // object is still alive; a deduced return would hand back an expression
  // referencing the destroyed temporary.
  auto lstsq = [](const Eigen::MatrixXd& a,
                  const Eigen::VectorXd& b) -> Eigen::VectorXd {
    return Eigen::BDCSVD<Eigen::MatrixXd>(
               a, Eigen::ComputeThinU | Eigen::ComputeThinV)
        .solve(b);
  };
  Eigen::VectorXd coef = lstsq(d, s);
  for (int it = 0; it < 50; ++it) {
    const Eigen::VectorXd r = s - d * coef;
    Eigen::VectorXd w(23);
    for (int i = 0; i < 23; ++i)
      w(i) = 1.0 / std::sqrt(std::max(std::abs(r(i)), 0.1));
    const Eigen::MatrixXd dw = w.asDiagonal() * d;
    const Eigen::VectorXd next = lstsq(dw, (s.array() * w.array()).matrix());
    const double delta = (next - coef).cwiseAbs().maxCoeff();
    coef = next;
    if (delta < 1e-9) break;
  }
  const Eigen::VectorXd res = (s - d * coef).cwiseAbs();
  std::vector<double> rv(res.data(), res.data() + res.size());
  const double scale = kMadToSigma * median(rv);
  const double gate = std::max(floor, 4.0 * scale);
  std::vector<int> keep;
  for (int i = 0; i < 23; ++i)
    if (res(i) <= gate) keep.push_back(i);
  if (keep.size() >= 8) {
    Eigen::MatrixXd dk(static_cast<Eigen::Index>(keep.size()), m);
    Eigen::VectorXd sk(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) {
      dk.row(static_cast<Eigen::Index>(i)) = d.row(keep[i]);
      sk(static_cast<Eigen::Index>(i)) = s(keep[i]);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(dk);
    if (qr.rank() == m) coef = lstsq(dk, sk);
  }
  return coef;
}

}  // namespace rmtgrid
