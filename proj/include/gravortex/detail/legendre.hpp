#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace gravortex::detail {

struct GaussLegendre {
  std::vector<double> nodes;    // descending, in (-1, 1)
  std::vector<double> weights;  // sum to 2
};

/// n-point Gauss-Legendre rule on [-1, 1]; exact for polynomials of degree 2n-1.
inline GaussLegendre gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  GaussLegendre rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node for the weight.
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    if (n == 1) p0 = 1.0;
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = x;
    rule.nodes[n - 1 - i] = -x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

/// Associated Legendre functions normalized so that
/// integral_{-1}^{1} pbar_lm(mu)^2 dmu = 1, without Condon-Shortley phase.
/// Returned as table[m][l - m] for 0 <= m <= l <= lmax.
inline std::vector<std::vector<double>> normalized_legendre(int lmax, double mu) {
  std::vector<std::vector<double>> table(lmax + 1);
  const double s = std::sqrt(std::max(0.0, 1.0 - mu * mu));
  double pmm = std::sqrt(0.5);
  for (int m = 0; m <= lmax; ++m) {
    if (m > 0) pmm *= std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
    auto& row = table[m];
    row.resize(lmax - m + 1);
    row[0] = pmm;
    if (m + 1 <= lmax) row[1] = std::sqrt(2.0 * m + 3.0) * mu * pmm;
    for (int l = m + 2; l <= lmax; ++l) {
      const double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
      const double b = std::sqrt((double(l - 1) * (l - 1) - double(m) * m) /
                                 (4.0 * double(l - 1) * (l - 1) - 1.0));
      row[l - m] = a * (mu * row[l - m - 1] - b * row[l - m - 2]);
    }
  }
  return table;
}

}  // namespace gravortex::detail
