#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "rmtgrid/errors.hpp"

namespace rmtgrid {

struct QuadRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
// Legendre polynomial from the Chebyshev initial guess. Cached per order
// behind a lock; the returned reference stays valid for the process.
inline const QuadRule& gauss_legendre(int n) {
  if (n < 1) throw InputError("quadrature order must be >= 1");
  static std::map<int, QuadRule> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  QuadRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      // Evaluate P_n(x) and its derivative by the three-term recurrence.
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  auto [pos, _] = cache.emplace(n, std::move(rule));
  return pos->second;
}

// Integrate f over [a, b] with an n-node Gauss-Legendre rule.
template <typename Fn>
double integrate_gl(Fn&& f, double a, double b, int n) {
  const QuadRule& rule = gauss_legendre(n);
  const double mid = 0.5 * (a + b);
  const double hw = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    s += rule.weights[i] * f(mid + hw * rule.nodes[i]);
  return s * hw;
}

}  // namespace rmtgrid
