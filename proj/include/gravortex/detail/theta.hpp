#pragma once

#include <cmath>
#include <complex>
#include <numbers>

namespace gravortex::detail {

/// Jacobi theta_1(v | tau = i) for complex v, by its q-series with q = e^{-pi}:
/// theta_1(v) = 2 sum_{n>=0} (-1)^n q^{(n+1/2)^2} sin((2n+1) v).
/// Intended for |Im v| <= pi/2, where ten terms reach machine precision.
inline std::complex<double> theta1_square_lattice(std::complex<double> v) {
  std::complex<double> sum = 0.0;
  for (int n = 0; n < 10; ++n) {
    const double h = n + 0.5;
    const double coeff = std::exp(-std::numbers::pi * h * h);
    const std::complex<double> term = coeff * std::sin(double(2 * n + 1) * v);
    sum += (n % 2 == 0) ? term : -term;
  }
  return 2.0 * sum;
}

/// Green-type function of the flat square torus C/(Z + iZ):
///   G(w) = log|theta_1(pi w | i)| - pi (Im w)^2,
/// doubly periodic, with grad^2 G = 2 pi delta_0 - 2 pi in unit-cell coordinates.
/// `dx`, `dy` should already be reduced to [-1/2, 1/2).
inline double torus_green(double dx, double dy) {
  const std::complex<double> v(std::numbers::pi * dx, std::numbers::pi * dy);
  return std::log(std::abs(theta1_square_lattice(v))) - std::numbers::pi * dy * dy;
}

}  // namespace gravortex::detail
