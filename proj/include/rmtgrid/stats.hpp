#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "rmtgrid/errors.hpp"

namespace rmtgrid {

inline double mean(const std::vector<double>& x) {
  if (x.empty()) throw InputError("mean of empty vector");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

// Population variance (divide by n).
inline double variance_pop(const std::vector<double>& x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size());
}

// Median with the average-of-two-middles convention for even lengths.
inline double median(std::vector<double> x) {
  if (x.empty()) throw InputError("median of empty vector");
  const std::size_t n = x.size();
  const std::size_t h = n / 2;
  std::nth_element(x.begin(), x.begin() + h, x.end());
  double hi = x[h];
  if (n % 2 == 1) return hi;
  double lo = *std::max_element(x.begin(), x.begin() + h);
  return 0.5 * (lo + hi);
}

// Median absolute deviation (unscaled).
inline double mad(const std::vector<double>& x) {
  const double m = median(x);
  std::vector<double> d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = std::abs(x[i] - m);
  return median(std::move(d));
}

inline constexpr double kMadToSigma = 1.4826;

// Excess kurtosis m4/m2^2 - 3 over a flat sample.
inline double excess_kurtosis(const double* data, std::size_t n) {
  if (n == 0) throw InputError("kurtosis of empty sample");
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m += data[i];
  m /= static_cast<double>(n);
  double m2 = 0.0, m4 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = data[i] - m;
    const double d2 = d * d;
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  if (m2 <= 0.0) throw NumericError("kurtosis of constant sample");
  return m4 / (m2 * m2) - 3.0;
}

// Boxcar moving average with zero padding outside the array, matching the
// "same"-length discrete convolution with a width-w window of weights 1/w.
// The window is centered; for even w the extra tap is on the left.
inline std::vector<double> boxcar_same(const std::vector<double>& x, int w) {
  if (w < 1) throw InputError("boxcar width must be >= 1");
  const int n = static_cast<int>(x.size());
  std::vector<double> out(x.size(), 0.0);
  const int right = (w - 1) / 2;
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int k = 0; k < w; ++k) {
      const int j = i + right - k;
      if (j >= 0 && j < n) s += x[j];
    }
    out[i] = s / w;
  }
  return out;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Kolmogorov-Smirnov distance between a sample and N(mu, sigma^2), using the
// two-sided staircase supremum.
inline double ks_distance_to_normal(std::vector<double> sample, double mu,
                                    double sigma) {
  if (sample.empty()) throw InputError("KS distance of empty sample");
  if (!(sigma > 0.0)) throw InputError("KS distance needs sigma > 0");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double sup = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = normal_cdf((sample[i] - mu) / sigma);
    sup = std::max(sup, std::abs(f - static_cast<double>(i) / n));
    sup = std::max(sup, std::abs(f - static_cast<double>(i + 1) / n));
  }
  return sup;
}

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

// FNV-1a 64-bit hash.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = kFnvOffset) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string to_hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

}  // namespace rmtgrid
