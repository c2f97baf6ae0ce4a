#pragma once

// Divisors and the pointwise norm |phi|_0^2 of the holomorphic section
// vanishing on them, measured in the background Hermitian metric h_0 whose
// curvature is constant: (1/2) Delta log|phi|_0^2 = N away from the zeros.
//
//  - Sphere: |phi|_0^2 = C |P(z)|^2 / (1 + |z|^2)^N, written as a product of
//    squared half-chordal distances to the zeros (rotation equivariant).
//  - Torus: log|phi|_0^2 = sum_j 2 n_j G(z - p_j) + const with G the
//    theta-function Green function of the square torus; the section is the
//    canonical section of O(D).

#include "detail/theta.hpp"
#include "geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace gravortex {

struct DivisorPoint {
  ChartPoint point;
  int multiplicity = 1;
};

/// Effective divisor D = sum_j n_j p_j with distinct points and N = sum n_j >= 1.
class Divisor {
 public:
  Divisor() = default;
  explicit Divisor(std::vector<DivisorPoint> points) : points_(std::move(points)) {
    if (points_.empty()) throw std::invalid_argument("Divisor: needs at least one point");
    for (const auto& p : points_) {
      if (p.multiplicity < 1)
        throw std::invalid_argument("Divisor: multiplicities must be positive integers");
      if (!p.point.infinity && !(std::isfinite(p.point.x) && std::isfinite(p.point.y)))
        throw std::invalid_argument("Divisor: non-finite chart coordinate");
    }
    for (std::size_t i = 0; i < points_.size(); ++i)
      for (std::size_t j = i + 1; j < points_.size(); ++j)
        if (points_[i].point == points_[j].point)
          throw std::invalid_argument(
              "Divisor: coincident points (merge them into one point with summed multiplicity)");
  }

  const std::vector<DivisorPoint>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }

  int degree() const {
    return std::accumulate(points_.begin(), points_.end(), 0,
                           [](int s, const DivisorPoint& p) { return s + p.multiplicity; });
  }

  std::vector<int> multiplicities() const {
    std::vector<int> m;
    for (const auto& p : points_) m.push_back(p.multiplicity);
    return m;
  }

 private:
  std::vector<DivisorPoint> points_;
};

namespace detail {

inline double raw_log_norm_sq(Model model, const Divisor& divisor, const ChartPoint& at) {
  double s = 0.0;
  if (model == Model::Sphere) {
    const auto u = sphere_unit_vector(at);
    for (const auto& dp : divisor.points()) {
      const auto v = sphere_unit_vector(dp.point);
      const double d2 =
          (u[0] - v[0]) * (u[0] - v[0]) + (u[1] - v[1]) * (u[1] - v[1]) + (u[2] - v[2]) * (u[2] - v[2]);
      s += dp.multiplicity * std::log(0.25 * d2);
    }
  } else {
    for (const auto& dp : divisor.points()) {
      const double dx = wrap_unit(at.x - dp.point.x);
      const double dy = wrap_unit(at.y - dp.point.y);
      s += 2.0 * dp.multiplicity * torus_green(dx, dy);
    }
  }
  return s;
}

inline void validate_on_surface(Model model, const Divisor& divisor) {
  for (const auto& dp : divisor.points()) {
    if (model == Model::Torus) {
      if (dp.point.infinity)
        throw std::invalid_argument("section_norm_sq: the point at infinity is not on the torus");
      if (dp.point.x < 0.0 || dp.point.x >= 1.0 || dp.point.y < 0.0 || dp.point.y >= 1.0)
        throw std::invalid_argument(
            "section_norm_sq: torus divisor point outside the unit cell [0,1)^2");
    }
  }
  const auto& pts = divisor.points();
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      double d;
      if (model == Model::Sphere) {
        const auto u = sphere_unit_vector(pts[i].point);
        const auto v = sphere_unit_vector(pts[j].point);
        d = std::hypot(u[0] - v[0], u[1] - v[1], u[2] - v[2]);
      } else {
        d = std::hypot(wrap_unit(pts[i].point.x - pts[j].point.x),
                       wrap_unit(pts[i].point.y - pts[j].point.y));
      }
      if (d < 1e-12)
        throw std::invalid_argument(
            "section_norm_sq: coincident points (merge them into one point with summed "
            "multiplicity)");
    }
}

}  // namespace detail

/// |phi|_0^2 sampled on a grid, normalized so that its maximum over the nodes is 1.
struct SectionData {
  ScalarField norm_sq;
  /// log|phi|_0^2 with the logarithmic zero factors n_j log sigma_j^2 removed
  /// (sigma_j the model's canonical vanishing function at p_j). For the
  /// closed-form constructions used here it is the constant `normalization`.
  ScalarField log_norm_reg;
  Divisor divisor;
  /// Additive constant in log|phi|_0^2 fixing the overall scale.
  double normalization = 0.0;

  Model model() const { return norm_sq.grid().model(); }
  const SurfaceGrid& grid() const { return norm_sq.grid(); }
  int degree() const { return divisor.degree(); }

  /// log|phi|_0^2 at an arbitrary point (-inf at the zeros).
  double log_norm_sq_at(const ChartPoint& p) const {
    return detail::raw_log_norm_sq(model(), divisor, p) + normalization;
  }

  /// The same section scaled by e^{s}: |phi|_0^2 -> e^{2s} |phi|_0^2.
  SectionData rescaled(double s) const {
    SectionData out = *this;
    out.normalization += 2.0 * s;
    out.norm_sq *= std::exp(2.0 * s);
    out.log_norm_reg += 2.0 * s;
    return out;
  }
};

inline SectionData section_norm_sq(const SurfaceGrid& grid, const Divisor& divisor) {
  detail::validate_on_surface(grid.model(), divisor);
  const auto nodes = grid.nodes();
  std::vector<double> raw(nodes.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    raw[i] = detail::raw_log_norm_sq(grid.model(), divisor, nodes[i]);
    top = std::max(top, raw[i]);
  }
  SectionData sec;
  sec.divisor = divisor;
  sec.normalization = -top;
  sec.norm_sq = ScalarField(grid);
  for (std::size_t i = 0; i < nodes.size(); ++i) sec.norm_sq[i] = std::exp(raw[i] - top);
  sec.log_norm_reg = ScalarField(grid, sec.normalization);
  return sec;
}

/// max |(1/2) Delta log|phi|_0^2 - N| over nodes farther than exclusion_radius
/// (geodesic) from every zero. The Laplacian is taken by fourth-order finite
/// differences of the closed form, independently of the spectral basis.
inline double curvature_identity_residual(const SurfaceGrid& grid, const SectionData& sec,
                                          double exclusion_radius) {
  if (!(exclusion_radius > 0.0))
    throw std::invalid_argument("curvature_identity_residual: exclusion_radius must be positive");
  if (sec.model() != grid.model())
    throw std::invalid_argument("curvature_identity_residual: section lives on another model");
  const double n = sec.degree();
  const double h = 1e-3;
  auto d2 = [h](auto&& f) {
    return (-f(2 * h) + 16 * f(h) - 30 * f(0.0) + 16 * f(-h) - f(-2 * h)) / (12 * h * h);
  };
  auto d1 = [h](auto&& f) { return (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h); };

  double worst = 0.0;
  std::size_t tested = 0;
  const auto nodes = grid.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    bool excluded = false;
    for (const auto& dp : sec.divisor.points())
      if (grid.distance(nodes[i], dp.point) <= exclusion_radius) excluded = true;
    if (excluded) continue;
    ++tested;
    double lap;
    if (grid.model() == Model::Torus) {
      const ChartPoint p = nodes[i];
      auto fx = [&](double s) { return sec.log_norm_sq_at({p.x + s, p.y, false}); };
      auto fy = [&](double s) { return sec.log_norm_sq_at({p.x, p.y + s, false}); };
      lap = -(d2(fx) + d2(fy)) / kTwoPi;
    } else {
      const std::size_t cols = grid.cols();
      const double t = grid.row_coords()[i / cols];
      const double ph = grid.col_coords()[i % cols];
      auto ft = [&](double s) { return sec.log_norm_sq_at(sphere_chart_point(t + s, ph)); };
      auto fp = [&](double s) { return sec.log_norm_sq_at(sphere_chart_point(t, ph + s)); };
      const double st = std::sin(t);
      lap = -2.0 * (d2(ft) + std::cos(t) / st * d1(ft) + d2(fp) / (st * st));
    }
    worst = std::max(worst, std::abs(0.5 * lap - n));
  }
  if (tested == 0)
    throw std::invalid_argument(
        "curvature_identity_residual: exclusion radius leaves no grid node to test");
  return worst;
}

}  // namespace gravortex
