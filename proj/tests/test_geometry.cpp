#include "gravortex/geometry.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace gravortex;

namespace {

constexpr double kPi = std::numbers::pi;

// Random field resolved by the grid's spectral basis.
ScalarField random_resolved(const SurfaceGrid& grid, std::mt19937& rng) {
  std::normal_distribution<double> nd;
  ScalarField f(grid);
  for (auto& v : f.values()) v = nd(rng);
  return project(f);
}

// Second-order centred differences of the torus Laplacian, Delta = -(1/2pi) grad^2.
double torus_fd_laplacian(double (*fn)(double, double), double x, double y, double h) {
  const double lap = (fn(x + h, y) + fn(x - h, y) + fn(x, y + h) + fn(x, y - h) - 4 * fn(x, y)) /
                     (h * h);
  return -lap / (2 * kPi);
}

}  // namespace

TEST(BuildGrid, TorusNodeCountAndArea) {
  const auto g = build_grid(Model::Torus, 32);
  EXPECT_EQ(g.size(), 1024u);
  double s = 0;
  for (double w : g.weights()) s += w;
  EXPECT_NEAR(s / (2 * kPi), 1.0, 1e-12);
  EXPECT_EQ(g.base_scalar_curvature(), 0.0);
  EXPECT_EQ(g.genus(), 1);
}

TEST(BuildGrid, SphereCurvatureAndArea) {
  const auto g = build_grid(Model::Sphere, 16);
  EXPECT_EQ(g.base_scalar_curvature(), 4.0);
  EXPECT_EQ(g.size(), 17u * 34u);
  double s = 0;
  for (double w : g.weights()) s += w;
  EXPECT_NEAR(s / (2 * kPi), 1.0, 1e-12);
  EXPECT_EQ(g.genus(), 0);
}

TEST(BuildGrid, RejectsLowResolution) {
  try {
    build_grid(Model::Sphere, 2);
    FAIL() << "expected rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("resolution below minimum"), std::string::npos);
  }
  EXPECT_THROW(build_grid(Model::Torus, 6), std::invalid_argument);
  EXPECT_THROW(build_grid(Model::Torus, 9), std::invalid_argument);
}

TEST(BuildGrid, Deterministic) {
  EXPECT_EQ(build_grid(Model::Sphere, 12).checksum(), build_grid(Model::Sphere, 12).checksum());
  EXPECT_NE(build_grid(Model::Sphere, 12).checksum(), build_grid(Model::Sphere, 13).checksum());
}

TEST(Laplacian, TorusConstantIsHarmonic) {
  const auto g = build_grid(Model::Torus, 32);
  EXPECT_LT(laplacian_apply(g, ScalarField(g, 1.0)).max_abs(), 1e-12);
}

TEST(Laplacian, TorusEigenvalues) {
  const auto g = build_grid(Model::Torus, 32);
  for (auto [k, m] : {std::pair{1, 0}, {0, 3}, {2, 5}, {7, 7}, {16, 0}}) {
    const auto f = ScalarField::from_function(g, [&](const ChartPoint& p, std::size_t) {
      return std::cos(2 * kPi * (k * p.x + m * p.y));
    });
    const double lambda = 2 * kPi * (k * k + m * m);
    const auto lf = laplacian_apply(g, f);
    for (std::size_t i = 0; i < g.size(); ++i) ASSERT_NEAR(lf[i], lambda * f[i], 1e-10 * lambda);
  }
}

TEST(Laplacian, TorusMatchesFiniteDifferences) {
  const auto g = build_grid(Model::Torus, 32);
  auto mode = +[](double x, double y) { return std::cos(2 * kPi * x) * std::sin(4 * kPi * y); };
  const auto f = ScalarField::from_function(g, [&](const ChartPoint& p, std::size_t) {
    return mode(p.x, p.y);
  });
  const auto lf = laplacian_apply(g, f);
  for (std::size_t i = 0; i < g.size(); i += 37) {
    const auto p = g.nodes()[i];
    EXPECT_NEAR(lf[i], torus_fd_laplacian(mode, p.x, p.y, 1e-4), 1e-5);
  }
}

TEST(Laplacian, SphereEigenvalues) {
  const auto g = build_grid(Model::Sphere, 16);
  const auto rows = g.row_coords();
  const auto cols = g.col_coords();
  // Y_{1,0} ~ cos(theta), eigenvalue 4.
  auto at = [&](auto fn) {
    ScalarField f(g);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < cols.size(); ++j) f[i * cols.size() + j] = fn(rows[i], cols[j]);
    return f;
  };
  const auto y10 = at([](double t, double) { return std::cos(t); });
  const auto ly10 = laplacian_apply(g, y10);
  for (std::size_t i = 0; i < g.size(); ++i) ASSERT_NEAR(ly10[i], 4.0 * y10[i], 1e-12);
  // Degree 3, order 2: sin^2 cos cos(2 phi), eigenvalue 2*3*4 = 24.
  const auto y32 =
      at([](double t, double p) { return std::sin(t) * std::sin(t) * std::cos(t) * std::cos(2 * p); });
  const auto ly32 = laplacian_apply(g, y32);
  for (std::size_t i = 0; i < g.size(); ++i) ASSERT_NEAR(ly32[i], 24.0 * y32[i], 1e-10 * 24);
  // Degree 16 order 16 (top of the basis): sin^16 theta sin(16 phi).
  const auto ytop = at([](double t, double p) { return std::pow(std::sin(t), 16) * std::sin(16 * p); });
  const auto lytop = laplacian_apply(g, ytop);
  for (std::size_t i = 0; i < g.size(); ++i) ASSERT_NEAR(lytop[i], 2 * 16 * 17 * ytop[i], 1e-9);
}

TEST(Laplacian, SphereMatchesFiniteDifferences) {
  // Delta = -2 * (Laplace-Beltrami of the unit sphere) in (theta, phi).
  const auto g = build_grid(Model::Sphere, 24);
  auto fn = [](double t, double p) { return std::exp(std::sin(t) * std::cos(p)); };
  const auto rows = g.row_coords();
  const auto cols = g.col_coords();
  ScalarField f(g);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) f[i * cols.size() + j] = fn(rows[i], cols[j]);
  const auto lf = laplacian_apply(g, f);
  const double h = 1e-4;
  for (std::size_t i = 3; i < rows.size() - 3; i += 4)
    for (std::size_t j = 0; j < cols.size(); j += 7) {
      const double t = rows[i], p = cols[j];
      const double ftt = (fn(t + h, p) - 2 * fn(t, p) + fn(t - h, p)) / (h * h);
      const double ft = (fn(t + h, p) - fn(t - h, p)) / (2 * h);
      const double fpp = (fn(t, p + h) - 2 * fn(t, p) + fn(t, p - h)) / (h * h);
      const double lb = ftt + std::cos(t) / std::sin(t) * ft + fpp / (std::sin(t) * std::sin(t));
      EXPECT_NEAR(lf[i * cols.size() + j], -2.0 * lb, 1e-5);
    }
}

TEST(Laplacian, RejectsGridMismatch) {
  const auto a = build_grid(Model::Torus, 16);
  const auto b = build_grid(Model::Torus, 16);
  EXPECT_THROW(laplacian_apply(a, ScalarField(b, 1.0)), std::invalid_argument);
  EXPECT_THROW(integrate(a, ScalarField(b, 1.0)), std::invalid_argument);
}

class LaplacianProperties : public ::testing::TestWithParam<std::pair<Model, int>> {};

TEST_P(LaplacianProperties, SelfAdjointPositiveMeanFree) {
  const auto [model, res] = GetParam();
  const auto g = build_grid(model, res);
  std::mt19937 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const auto f = random_resolved(g, rng);
    const auto h = random_resolved(g, rng);
    const auto lf = laplacian_apply(g, f);
    const auto lh = laplacian_apply(g, h);
    const double nf = l2_norm(f), nh = l2_norm(h);
    EXPECT_LE(std::abs(inner(f, lh) - inner(h, lf)), 1e-10 * nf * nh);
    EXPECT_GE(inner(f, lf), -1e-10 * nf * nf);
    EXPECT_LE(std::abs(integrate(g, lf)), 1e-10 * nf);
    // Inverse consistency on mean-zero fields.
    ScalarField r = h;
    r += -mean(h);
    const auto back = laplacian_apply(g, laplacian_invert(g, r));
    EXPECT_LE((back - r).max_abs(), 1e-10 * r.max_abs());
  }
}

INSTANTIATE_TEST_SUITE_P(Grids, LaplacianProperties,
                         ::testing::Values(std::pair{Model::Torus, 16}, std::pair{Model::Torus, 64},
                                           std::pair{Model::Sphere, 8},
                                           std::pair{Model::Sphere, 32}));

TEST(Laplacian, SpectralConvergence) {
  // Analytic f(x, y) = 1 / (2 - cos 2 pi x cos 2 pi y) on the torus.
  auto exact = [](const ChartPoint& p) {
    const double cx = std::cos(2 * kPi * p.x), sx = std::sin(2 * kPi * p.x);
    const double cy = std::cos(2 * kPi * p.y), sy = std::sin(2 * kPi * p.y);
    const double q = 2 - cx * cy;
    // grad q = 2 pi (sx cy, cx sy), lap q = 8 pi^2 cx cy
    const double gq2 = 4 * kPi * kPi * (sx * sx * cy * cy + cx * cx * sy * sy);
    const double lq = 8 * kPi * kPi * cx * cy;
    const double lap_f = 2 * gq2 / (q * q * q) - lq / (q * q);
    return -lap_f / (2 * kPi);
  };
  double prev = 0;
  for (int n : {8, 16, 32}) {
    const auto g = build_grid(Model::Torus, n);
    const auto f = ScalarField::from_function(g, [](const ChartPoint& p, std::size_t) {
      return 1.0 / (2 - std::cos(2 * kPi * p.x) * std::cos(2 * kPi * p.y));
    });
    const auto lf = laplacian_apply(g, f);
    double err = 0;
    for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(lf[i] - exact(g.nodes()[i])));
    if (prev > 0) EXPECT_LE(err, prev / 10) << "n = " << n;
    prev = err;
  }
}

TEST(LaplacianInvert, ZeroAndEigenmode) {
  const auto g = build_grid(Model::Torus, 32);
  EXPECT_EQ(laplacian_invert(g, ScalarField(g)).max_abs(), 0.0);
  const auto mode = ScalarField::from_function(
      g, [](const ChartPoint& p, std::size_t) { return std::cos(2 * kPi * p.x); });
  const auto inv = laplacian_invert(g, mode);
  for (std::size_t i = 0; i < g.size(); ++i) ASSERT_NEAR(inv[i], mode[i] / (2 * kPi), 1e-14);
}

TEST(LaplacianInvert, RejectsNonzeroMean) {
  const auto g = build_grid(Model::Torus, 32);
  try {
    laplacian_invert(g, ScalarField(g, 1.0));
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("nonzero mean"), std::string::npos);
  }
}

TEST(Integrate, ConstantsModesAndHarmonicNorms) {
  for (auto model : {Model::Torus, Model::Sphere}) {
    const auto g = build_grid(model, 16);
    EXPECT_NEAR(integrate(g, ScalarField(g, 1.0)), 2 * kPi, 1e-12);
  }
  const auto t = build_grid(Model::Torus, 32);
  const auto mode = ScalarField::from_function(
      t, [](const ChartPoint& p, std::size_t) { return std::sin(2 * kPi * (3 * p.x + p.y)); });
  EXPECT_NEAR(integrate(t, mode), 0.0, 1e-12);

  // Normalized Y_00 on the area-2pi sphere is 1/sqrt(2 pi); Y_10 ~ cos theta
  // integrates (cos theta)^2 to 2 pi / 3.
  const auto s = build_grid(Model::Sphere, 16);
  const ScalarField y00(s, 1.0 / std::sqrt(2 * kPi));
  EXPECT_NEAR(integrate(s, y00 * y00), 1.0, 1e-13);
  ScalarField c(s);
  const auto rows = s.row_coords();
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < s.cols(); ++j) c[i * s.cols() + j] = std::cos(rows[i]);
  EXPECT_NEAR(integrate(s, c * c), 2 * kPi / 3, 1e-13);
}

TEST(ConformalDensity, Examples) {
  const auto g = build_grid(Model::Torus, 16);
  auto d0 = conformal_density(g, ScalarField(g));
  EXPECT_TRUE(d0.positive);
  EXPECT_NEAR(d0.density.max_abs(), 1.0, 0.0);
  auto d5 = conformal_density(g, ScalarField(g, 5.0));
  EXPECT_LT((d5.density + (-1.0)).max_abs(), 1e-12);
  const double eps = 0.01;
  const auto mode = ScalarField::from_function(
      g, [](const ChartPoint& p, std::size_t) { return std::cos(2 * kPi * p.y); });
  auto de = conformal_density(g, eps * mode);
  for (std::size_t i = 0; i < g.size(); ++i)
    ASSERT_NEAR(de.density[i], 1 - eps * 2 * kPi * mode[i], 1e-13);
  auto big = conformal_density(g, 1.0 * mode);
  EXPECT_FALSE(big.positive);
}

TEST(Resample, TorusAndSphereInterpolation) {
  const auto c = build_grid(Model::Torus, 16);
  const auto f = build_grid(Model::Torus, 32);
  auto fn = [](const ChartPoint& p, std::size_t) {
    return std::cos(2 * kPi * (3 * p.x - 2 * p.y)) + 0.5 * std::sin(2 * kPi * 5 * p.y);
  };
  const auto up = resample(ScalarField::from_function(c, fn), f);
  EXPECT_LT((up - ScalarField::from_function(f, fn)).max_abs(), 1e-13);
  const auto down = resample(ScalarField::from_function(f, fn), c);
  EXPECT_LT((down - ScalarField::from_function(c, fn)).max_abs(), 1e-13);

  const auto s1 = build_grid(Model::Sphere, 8);
  const auto s2 = build_grid(Model::Sphere, 15);
  auto sf = [](const ChartPoint& p, std::size_t) {
    const auto u = sphere_unit_vector(p);
    return u[0] * u[2] + u[1] * u[1] * u[1];
  };
  const auto sup = resample(ScalarField::from_function(s1, sf), s2);
  EXPECT_LT((sup - ScalarField::from_function(s2, sf)).max_abs(), 1e-13);
}
