#pragma once

// Discretized model surfaces of total area 2*pi: the round sphere of radius
// 1/sqrt(2) (spherical-harmonic basis on a Gauss-Legendre x equispaced grid)
// and the flat square torus C/(Z + iZ) (bivariate Fourier basis).
//
// The Laplacian follows the Kaehler convention Delta = 2i Lambda dbar d,
// which equals minus the Laplace-Beltrami operator: it is positive
// semidefinite, with eigenvalue 2 l (l + 1) on spherical harmonics of
// degree l and 2 pi (k^2 + m^2) on the torus mode exp(2 pi i (k x + m y)).

#include "detail/fftw.hpp"
#include "detail/legendre.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gravortex {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum class Model { Sphere, Torus };

inline std::string to_string(Model m) { return m == Model::Sphere ? "sphere" : "torus"; }

/// Chart coordinates of a point. Sphere: stereographic coordinate
/// z = x + iy = tan(theta/2) e^{i phi} (z = 0 is the north pole), with the
/// south pole represented by `infinity`. Torus: coordinates in the unit cell
/// [0, 1)^2 of C/(Z + iZ).
struct ChartPoint {
  double x = 0.0;
  double y = 0.0;
  bool infinity = false;

  static ChartPoint at_infinity() { return {0.0, 0.0, true}; }
  friend bool operator==(const ChartPoint&, const ChartPoint&) = default;
};

/// Unit vector in R^3 of a sphere chart point.
inline std::array<double, 3> sphere_unit_vector(const ChartPoint& p) {
  if (p.infinity) return {0.0, 0.0, -1.0};
  const double r2 = p.x * p.x + p.y * p.y;
  const double d = 1.0 + r2;
  return {2.0 * p.x / d, 2.0 * p.y / d, (1.0 - r2) / d};
}

inline ChartPoint sphere_chart_point(double colatitude, double longitude) {
  if (colatitude >= std::numbers::pi) return ChartPoint::at_infinity();
  const double r = std::tan(0.5 * colatitude);
  return {r * std::cos(longitude), r * std::sin(longitude), false};
}

/// Signed representative of a torus displacement in [-1/2, 1/2).
inline double wrap_unit(double d) { return d - std::floor(d + 0.5); }

using Spectrum = std::vector<std::complex<double>>;

namespace detail {

class SpectralBasis {
 public:
  virtual ~SpectralBasis() = default;
  virtual Spectrum analyze(std::span<const double> values) const = 0;
  virtual void synthesize(const Spectrum& coeffs, std::span<double> values) const = 0;
  /// Laplacian eigenvalue attached to each spectrum entry.
  virtual std::span<const double> eigenvalues() const = 0;
};

class TorusBasis final : public SpectralBasis {
 public:
  explicit TorusBasis(int n) : n_(n), fft_(RealFft::two_d(n, n)) {
    const int half = n / 2 + 1;
    eig_.resize(static_cast<std::size_t>(n) * half);
    for (int k = 0; k < n; ++k) {
      const double kk = k <= n / 2 ? k : k - n;
      for (int m = 0; m < half; ++m)
        eig_[static_cast<std::size_t>(k) * half + m] = kTwoPi * (kk * kk + double(m) * m);
    }
  }

  Spectrum analyze(std::span<const double> values) const override {
    Spectrum out(fft_.complex_size());
    fft_.forward(values, out);
    return out;
  }

  void synthesize(const Spectrum& coeffs, std::span<double> values) const override {
    fft_.backward(coeffs, values);
    const double scale = 1.0 / (double(n_) * n_);
    for (double& v : values) v *= scale;
  }

  std::span<const double> eigenvalues() const override { return eig_; }

  int n() const { return n_; }

 private:
  int n_;
  RealFft fft_;
  std::vector<double> eig_;
};

/// Real spherical harmonics up to degree lmax. Spectrum entry m*(lmax+1)+l
/// holds (cos coefficient) + i (sin coefficient) of pbar_lm(mu) e^{i m phi};
/// entries with l < m are unused and stay zero.
class SphereBasis final : public SpectralBasis {
 public:
  SphereBasis(int lmax, std::span<const double> mu, std::span<const double> gl_weights,
              int nlon)
      : lmax_(lmax),
        nlat_(static_cast<int>(mu.size())),
        nlon_(nlon),
        gl_weights_(gl_weights.begin(), gl_weights.end()),
        fft_(RealFft::rows(nlon, static_cast<int>(mu.size()))) {
    tri_ = (lmax + 1) * (lmax + 2) / 2;
    plm_.resize(static_cast<std::size_t>(nlat_) * tri_);
    for (int i = 0; i < nlat_; ++i) {
      const auto table = normalized_legendre(lmax, mu[i]);
      for (int m = 0; m <= lmax; ++m)
        for (int l = m; l <= lmax; ++l) plm_[i * tri_ + tri_index(l, m)] = table[m][l - m];
    }
    eig_.assign(static_cast<std::size_t>(lmax + 1) * (lmax + 1), 0.0);
    for (int m = 0; m <= lmax; ++m)
      for (int l = m; l <= lmax; ++l) eig_[m * (lmax + 1) + l] = 2.0 * l * (l + 1.0);
  }

  Spectrum analyze(std::span<const double> values) const override {
    const int half = nlon_ / 2 + 1;
    std::vector<std::complex<double>> rings(fft_.complex_size());
    fft_.forward(values, rings);
    Spectrum out(static_cast<std::size_t>(lmax_ + 1) * (lmax_ + 1));
    for (int i = 0; i < nlat_; ++i) {
      const double w = gl_weights_[i];
      for (int m = 0; m <= lmax_; ++m) {
        const std::complex<double> y = rings[static_cast<std::size_t>(i) * half + m];
        const std::complex<double> cs = m == 0 ? y / double(nlon_) : std::conj(y) * (2.0 / nlon_);
        const double* p = &plm_[i * tri_ + tri_index(m, m)];
        std::complex<double>* row = &out[m * (lmax_ + 1)];
        for (int l = m; l <= lmax_; ++l) row[l] += w * p[l - m] * cs;
      }
    }
    return out;
  }

  void synthesize(const Spectrum& coeffs, std::span<double> values) const override {
    const int half = nlon_ / 2 + 1;
    std::vector<std::complex<double>> rings(fft_.complex_size());
    for (int i = 0; i < nlat_; ++i) {
      for (int m = 0; m <= lmax_; ++m) {
        const double* p = &plm_[i * tri_ + tri_index(m, m)];
        const std::complex<double>* row = &coeffs[m * (lmax_ + 1)];
        std::complex<double> a = 0.0;
        for (int l = m; l <= lmax_; ++l) a += row[l] * p[l - m];
        rings[static_cast<std::size_t>(i) * half + m] =
            m == 0 ? std::complex<double>(a.real(), 0.0) : std::conj(a) * 0.5;
      }
    }
    fft_.backward(rings, values);
  }

  std::span<const double> eigenvalues() const override { return eig_; }

  int lmax() const { return lmax_; }

 private:
  int tri_index(int l, int m) const { return m * (lmax_ + 1) - m * (m - 1) / 2 + (l - m); }

  int lmax_;
  int nlat_;
  int nlon_;
  int tri_ = 0;
  std::vector<double> gl_weights_;
  std::vector<double> plm_;
  std::vector<double> eig_;
  RealFft fft_;
};

struct GridData {
  Model model{};
  int resolution = 0;
  std::vector<ChartPoint> nodes;
  std::vector<double> weights;
  // Sphere: colatitudes (rows) and longitudes (columns). Torus: the axis
  // coordinates i/n, used for both x (rows) and y (columns).
  std::vector<double> row_coords;
  std::vector<double> col_coords;
  std::unique_ptr<SpectralBasis> basis;
};

}  // namespace detail

/// An immutable discretized surface. Copies share the same underlying data;
/// two grids are the same grid iff they share that data.
class SurfaceGrid {
 public:
  static constexpr int kMinSphereDegree = 4;
  static constexpr int kMinTorusModes = 8;

  SurfaceGrid() = default;

  Model model() const { return data_->model; }
  int resolution() const { return data_->resolution; }
  std::size_t size() const { return data_->nodes.size(); }
  int genus() const { return model() == Model::Sphere ? 0 : 1; }
  int euler_characteristic() const { return 2 - 2 * genus(); }
  double area() const { return kTwoPi; }
  /// Riemannian scalar curvature of the background metric (twice the Gauss curvature).
  double base_scalar_curvature() const { return model() == Model::Sphere ? 4.0 : 0.0; }

  std::span<const ChartPoint> nodes() const { return data_->nodes; }
  std::span<const double> weights() const { return data_->weights; }
  std::span<const double> row_coords() const { return data_->row_coords; }
  std::span<const double> col_coords() const { return data_->col_coords; }
  std::size_t rows() const { return data_->row_coords.size(); }
  std::size_t cols() const { return data_->col_coords.size(); }

  const detail::SpectralBasis& basis() const { return *data_->basis; }

  bool valid() const { return data_ != nullptr; }
  bool same_as(const SurfaceGrid& other) const { return data_ == other.data_; }

  /// Geodesic distance in the area-2*pi metric.
  double distance(const ChartPoint& a, const ChartPoint& b) const {
    if (model() == Model::Sphere) {
      const auto u = sphere_unit_vector(a);
      const auto v = sphere_unit_vector(b);
      const double cross = std::hypot(u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2],
                                      u[0] * v[1] - u[1] * v[0]);
      const double dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
      return std::atan2(cross, dot) / std::numbers::sqrt2;
    }
    return std::sqrt(kTwoPi) * std::hypot(wrap_unit(a.x - b.x), wrap_unit(a.y - b.y));
  }

  /// Largest possible geodesic distance between two points.
  double diameter() const {
    return model() == Model::Sphere ? std::numbers::pi / std::numbers::sqrt2
                                    : std::sqrt(kTwoPi) * std::sqrt(0.5);
  }

  /// FNV-1a hash over model, resolution, node coordinates and weights.
  std::string checksum() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* p, std::size_t n) {
      const auto* b = static_cast<const unsigned char*>(p);
      for (std::size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= 1099511628211ull;
      }
    };
    const int m = static_cast<int>(model());
    mix(&m, sizeof m);
    mix(&data_->resolution, sizeof data_->resolution);
    for (const auto& p : data_->nodes) {
      mix(&p.x, sizeof p.x);
      mix(&p.y, sizeof p.y);
    }
    for (double w : data_->weights) mix(&w, sizeof w);
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
  }

 private:
  friend SurfaceGrid build_grid(Model, int);
  std::shared_ptr<const detail::GridData> data_;
};

/// Builds the constant-curvature model surface of area 2*pi.
/// Sphere: resolution is the maximal harmonic degree L (>= 4), giving
/// (L+1) Gauss-Legendre latitudes x (2L+2) longitudes. Torus: resolution is
/// the number n (>= 8, even) of nodes per axis.
inline SurfaceGrid build_grid(Model model, int resolution) {
  auto data = std::make_shared<detail::GridData>();
  data->model = model;
  data->resolution = resolution;
  if (model == Model::Sphere) {
    if (resolution < SurfaceGrid::kMinSphereDegree)
      throw std::invalid_argument("build_grid: resolution below minimum (sphere requires L_max >= " +
                                  std::to_string(SurfaceGrid::kMinSphereDegree) + ", got " +
                                  std::to_string(resolution) + ")");
    const int nlat = resolution + 1;
    const int nlon = 2 * resolution + 2;
    const auto rule = detail::gauss_legendre(nlat);
    data->row_coords.resize(nlat);
    data->col_coords.resize(nlon);
    for (int i = 0; i < nlat; ++i) data->row_coords[i] = std::acos(rule.nodes[i]);
    for (int j = 0; j < nlon; ++j) data->col_coords[j] = kTwoPi * j / nlon;
    data->nodes.reserve(static_cast<std::size_t>(nlat) * nlon);
    data->weights.reserve(static_cast<std::size_t>(nlat) * nlon);
    // Area element on the radius^2 = 1/2 sphere is (1/2) dmu dphi.
    for (int i = 0; i < nlat; ++i)
      for (int j = 0; j < nlon; ++j) {
        data->nodes.push_back(sphere_chart_point(data->row_coords[i], data->col_coords[j]));
        data->weights.push_back(0.5 * rule.weights[i] * kTwoPi / nlon);
      }
    data->basis = std::make_unique<detail::SphereBasis>(resolution, rule.nodes, rule.weights, nlon);
  } else {
    if (resolution < SurfaceGrid::kMinTorusModes || resolution % 2 != 0)
      throw std::invalid_argument(
          "build_grid: resolution below minimum (torus requires an even n >= " +
          std::to_string(SurfaceGrid::kMinTorusModes) + ", got " + std::to_string(resolution) +
          ")");
    const int n = resolution;
    data->row_coords.resize(n);
    for (int i = 0; i < n; ++i) data->row_coords[i] = double(i) / n;
    data->col_coords = data->row_coords;
    const double w = kTwoPi / (double(n) * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        data->nodes.push_back({data->row_coords[i], data->col_coords[j], false});
        data->weights.push_back(w);
      }
    data->basis = std::make_unique<detail::TorusBasis>(n);
  }
  SurfaceGrid grid;
  grid.data_ = std::move(data);
  return grid;
}

/// Real values sampled at the nodes of a grid.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const SurfaceGrid& grid, double value = 0.0)
      : grid_(grid), values_(grid.size(), value) {}
  ScalarField(const SurfaceGrid& grid, std::vector<double> values)
      : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size())
      throw std::invalid_argument("ScalarField: value count does not match grid size");
  }

  template <class F>
  static ScalarField from_function(const SurfaceGrid& grid, F&& fn) {
    ScalarField out(grid);
    const auto nodes = grid.nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i) out.values_[i] = fn(nodes[i], i);
    return out;
  }

  const SurfaceGrid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  const std::vector<double>& data() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }
  double min() const { return *std::min_element(values_.begin(), values_.end()); }
  double max() const { return *std::max_element(values_.begin(), values_.end()); }
  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  ScalarField& operator+=(const ScalarField& o) {
    check_same(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  ScalarField& operator-=(const ScalarField& o) {
    check_same(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  ScalarField& operator*=(const ScalarField& o) {
    check_same(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] *= o.values_[i];
    return *this;
  }
  ScalarField& operator+=(double s) {
    for (double& v : values_) v += s;
    return *this;
  }
  ScalarField& operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
  }
  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(ScalarField a, const ScalarField& b) { return a *= b; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }
  friend ScalarField operator+(ScalarField a, double s) { return a += s; }

  template <class F>
  ScalarField map(F&& fn) const {
    ScalarField out = *this;
    for (double& v : out.values_) v = fn(v);
    return out;
  }

  void check_same(const ScalarField& o) const {
    if (!grid_.same_as(o.grid_)) throw std::invalid_argument("ScalarField: grid mismatch");
  }

 private:
  SurfaceGrid grid_;
  std::vector<double> values_;
};

namespace detail {

inline void require_on(const SurfaceGrid& grid, const ScalarField& field, const char* op) {
  if (!grid.same_as(field.grid()))
    throw std::invalid_argument(std::string(op) + ": field does not live on the given grid");
}

/// Applies multiplier(lambda) to every spectral coefficient.
template <class F>
ScalarField spectral_multiply(const ScalarField& field, F&& multiplier) {
  const auto& basis = field.grid().basis();
  Spectrum c = basis.analyze(field.values());
  const auto eig = basis.eigenvalues();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= multiplier(eig[i]);
  ScalarField out(field.grid());
  basis.synthesize(c, out.values());
  return out;
}

}  // namespace detail

inline double integrate(const SurfaceGrid& grid, const ScalarField& field) {
  detail::require_on(grid, field, "integrate");
  const auto w = grid.weights();
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * field[i];
  return s;
}

inline double mean(const ScalarField& field) {
  return integrate(field.grid(), field) / field.grid().area();
}

/// Quadrature L2 inner product.
inline double inner(const ScalarField& a, const ScalarField& b) {
  a.check_same(b);
  const auto w = a.grid().weights();
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * a[i] * b[i];
  return s;
}

inline double l2_norm(const ScalarField& a) { return std::sqrt(inner(a, a)); }

inline ScalarField laplacian_apply(const SurfaceGrid& grid, const ScalarField& field) {
  detail::require_on(grid, field, "laplacian_apply");
  return detail::spectral_multiply(field, [](double lambda) { return lambda; });
}

inline ScalarField laplacian_apply(const ScalarField& field) {
  return laplacian_apply(field.grid(), field);
}

/// Mean-zero solution of Delta phi = rhs. rhs must integrate to zero.
inline ScalarField laplacian_invert(const SurfaceGrid& grid, const ScalarField& rhs) {
  detail::require_on(grid, rhs, "laplacian_invert");
  const double total = integrate(grid, rhs);
  const double tol = 1e-10 * grid.area() * std::max(rhs.max_abs(), 1e-300);
  if (std::abs(total) > tol) {
    std::ostringstream os;
    os << "laplacian_invert: rhs has nonzero mean " << total / grid.area();
    throw std::invalid_argument(os.str());
  }
  return detail::spectral_multiply(rhs,
                                   [](double lambda) { return lambda > 0.0 ? 1.0 / lambda : 0.0; });
}

/// (Delta + sigma)^{-1} for sigma > 0.
inline ScalarField shifted_laplacian_invert(const ScalarField& rhs, double sigma) {
  return detail::spectral_multiply(rhs, [sigma](double lambda) { return 1.0 / (lambda + sigma); });
}

/// Orthogonal projection onto the resolved spectral space (identity on the torus).
inline ScalarField project(const ScalarField& field) {
  return detail::spectral_multiply(field, [](double) { return 1.0; });
}

struct ConformalDensity {
  ScalarField density;
  bool positive = false;
};

/// 1 - Delta v, the density of omega_0 + dd^c v against omega_0.
inline ConformalDensity conformal_density(const SurfaceGrid& grid, const ScalarField& v) {
  detail::require_on(grid, v, "conformal_density");
  ScalarField d = laplacian_apply(grid, v);
  d *= -1.0;
  d += 1.0;
  const bool positive = d.min() > 0.0;
  return {std::move(d), positive};
}

/// Spectral interpolation of a field onto another grid of the same model.
inline ScalarField resample(const ScalarField& field, const SurfaceGrid& target) {
  const SurfaceGrid& source = field.grid();
  if (source.model() != target.model())
    throw std::invalid_argument("resample: grids model different surfaces");
  if (source.same_as(target)) return field;
  ScalarField out(target);
  if (source.model() == Model::Sphere) {
    const int l1 = source.resolution();
    const int l2 = target.resolution();
    const Spectrum c1 = source.basis().analyze(field.values());
    Spectrum c2(static_cast<std::size_t>(l2 + 1) * (l2 + 1));
    const int lmin = std::min(l1, l2);
    for (int m = 0; m <= lmin; ++m)
      for (int l = m; l <= lmin; ++l) c2[m * (l2 + 1) + l] = c1[m * (l1 + 1) + l];
    target.basis().synthesize(c2, out.values());
    return out;
  }
  const int n1 = source.resolution();
  const int n2 = target.resolution();
  std::vector<std::complex<double>> a(static_cast<std::size_t>(n1) * n1);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = field[i];
  detail::ComplexFft2d(n1, n1).forward(a);
  std::vector<std::complex<double>> b(static_cast<std::size_t>(n2) * n2);
  // Source Nyquist modes are split evenly between +n1/2 and -n1/2 so that the
  // interpolant is real; modes beyond the target's Nyquist are dropped.
  auto expand = [n1](int k, auto&& emit) {
    const int kk = k <= n1 / 2 ? k : k - n1;
    if (2 * std::abs(kk) == n1) {
      emit(kk, 0.5);
      emit(-kk, 0.5);
    } else {
      emit(kk, 1.0);
    }
  };
  auto wrap = [n2](int kk) { return ((kk % n2) + n2) % n2; };
  for (int k = 0; k < n1; ++k)
    for (int m = 0; m < n1; ++m) {
      const std::complex<double> c = a[static_cast<std::size_t>(k) * n1 + m];
      expand(k, [&](int kk, double wk) {
        if (2 * std::abs(kk) > n2) return;
        expand(m, [&](int mm, double wm) {
          if (2 * std::abs(mm) > n2) return;
          b[static_cast<std::size_t>(wrap(kk)) * n2 + wrap(mm)] += wk * wm * c;
        });
      });
    }
  detail::ComplexFft2d(n2, n2).backward(b);
  const double scale = 1.0 / (double(n1) * n1);
  for (std::size_t i = 0; i < b.size(); ++i) out[i] = b[i].real() * scale;
  return out;
}

}  // namespace gravortex
