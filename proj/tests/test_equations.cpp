#include "gravortex/equations.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace gravortex;

namespace {
constexpr double kPi = std::numbers::pi;

/// A section object whose |phi|_0^2 is replaced by arbitrary synthetic data.
SectionData synthetic(const SurfaceGrid& g, const ScalarField& norm_sq, int n) {
  SectionData sec;
  sec.divisor = Divisor({{{0.5, 0.5}, n}});
  sec.norm_sq = norm_sq;
  sec.log_norm_reg = ScalarField(g);
  return sec;
}

/// Random smooth field: a handful of low eigenmodes with random amplitudes.
ScalarField random_smooth(const SurfaceGrid& g, std::mt19937& rng, double amp) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double a = u(rng), b = u(rng), c = u(rng), d = u(rng), e = u(rng);
  return ScalarField::from_function(g, [&](const ChartPoint& p, std::size_t) {
    if (g.model() == Model::Torus) {
      const double x = 2 * kPi * p.x, y = 2 * kPi * p.y;
      return amp * (a + b * std::cos(x) + c * std::sin(y) + d * std::cos(x + 2 * y) + e * std::sin(2 * x - y));
    }
    const auto n = sphere_unit_vector(p);
    return amp * (a + b * n[0] + c * n[1] * n[2] + d * n[2] + e * (n[0] * n[0] - n[1] * n[1]));
  });
}

ScalarField mean_free(ScalarField f) {
  const double m = mean(f);
  return f + (-m);
}

double rel_error(const FieldPair& fd, const FieldPair& lin) {
  const double num = std::max((fd.first - lin.first).max_abs(), (fd.second - lin.second).max_abs());
  return num / std::max(lin.max_abs(), 1e-300);
}

FieldState perturbed(const FieldState& s, double eps, const ScalarField& df, const ScalarField& dv) {
  FieldState out = s;
  out.f += eps * df;
  out.v += eps * dv;
  return out;
}

FieldPair central_difference(const FieldState& s, const ScalarField& df, const ScalarField& dv,
                             double eps) {
  const auto plus = residual(perturbed(s, eps, df, dv));
  const auto minus = residual(perturbed(s, -eps, df, dv));
  return {(1.0 / (2 * eps)) * (plus.first - minus.first),
          (1.0 / (2 * eps)) * (plus.second - minus.second)};
}
}  // namespace

TEST(VortexResidual, CancellingConstants) {
  const auto g = build_grid(Model::Torus, 16);
  const double tau = 5.0;
  const int n = 2;
  const auto spec = ProblemSpec::vortex(synthetic(g, ScalarField(g, tau - 2 * n), n), tau);
  EXPECT_LE(vortex_residual(FieldState::zero(spec)).max_abs(), 1e-15);
}

TEST(VortexResidual, ManufacturedSolution) {
  for (auto model : {Model::Torus, Model::Sphere}) {
    const auto g = build_grid(model, 16);
    const double tau = 3.0;
    const int n = 1;
    // f* is an eigenfunction, so Delta f* is known in closed form.
    ScalarField fstar, lap;
    if (model == Model::Torus) {
      fstar = ScalarField::from_function(g, [](const ChartPoint& p, std::size_t) {
        return 0.3 * std::cos(2 * kPi * p.x) * std::sin(4 * kPi * p.y);
      });
      lap = 2 * kPi * 5.0 * fstar;
    } else {
      fstar = ScalarField::from_function(g, [](const ChartPoint& p, std::size_t) {
        const auto u = sphere_unit_vector(p);
        return 0.2 * u[0] * u[2];
      });
      lap = 12.0 * fstar;
    }
    ScalarField phi(g);
    for (std::size_t i = 0; i < g.size(); ++i)
      phi[i] = (tau - 2 * n - 2 * lap[i]) * std::exp(-2 * fstar[i]);
    FieldState s = FieldState::zero(ProblemSpec::vortex(synthetic(g, phi, n), tau));
    s.f = fstar;
    EXPECT_LE(vortex_residual(s).max_abs(), 1e-10) << to_string(model);
  }
}

TEST(VortexResidual, IntegralAtZeroMatchesQuadrature) {
  const auto g = build_grid(Model::Torus, 32);
  const auto sec = section_norm_sq(g, Divisor({{{0.5, 0.5}, 1}}));
  const double tau = 2.5;
  const auto r = vortex_residual(FieldState::zero(ProblemSpec::vortex(sec, tau)));
  // Independent sum over the uniform nodes.
  double sum = 0;
  for (std::size_t i = 0; i < g.size(); ++i) sum += sec.norm_sq[i];
  const double expected = 0.5 * sum * 2 * kPi / double(g.size()) - 2 * kPi * (tau / 2 - 1);
  EXPECT_NEAR(integrate(g, r), expected, 1e-12);
}

TEST(GravortexResidual, DecouplesAtZeroCoupling) {
  const auto g = build_grid(Model::Sphere, 12);
  const auto sec = section_norm_sq(g, Divisor({{{0, 0}, 1}}));
  std::mt19937 rng(7);
  FieldState grav = FieldState::zero(ProblemSpec::gravitating(sec, 3.0, 0.0));
  EXPECT_EQ(grav.spec.c, 2.0);
  grav.f = random_smooth(g, rng, 0.5);
  FieldState vort = FieldState::zero(ProblemSpec::vortex(sec, 3.0));
  vort.f = grav.f;
  const auto r = gravortex_residual(grav);
  EXPECT_LE((r.first - vortex_residual(vort)).max_abs(), 1e-15);
  EXPECT_EQ(r.second.max_abs(), 0.0);
}

TEST(GravortexResidual, ConstantFieldArithmetic) {
  const auto g = build_grid(Model::Torus, 8);
  const double k = 1.7, alpha = 0.1, tau = 3.0;
  const auto spec = ProblemSpec::gravitating(synthetic(g, ScalarField(g, k), 1), tau, alpha);
  EXPECT_NEAR(spec.c, -0.6, 1e-15);
  const auto r = gravortex_residual(FieldState::zero(spec));
  const double w = std::exp(-2 * alpha * k);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_NEAR(r.first[i], 0.5 * (k - tau) * w + 1.0, 1e-15);
    EXPECT_NEAR(r.second[i], w - 1.0, 1e-15);
  }
  EXPECT_FALSE(r.overflow);
}

TEST(GravortexResidual, OverflowIsFlagged) {
  const auto g = build_grid(Model::Torus, 8);
  const auto sec = section_norm_sq(g, Divisor({{{0.5, 0.5}, 1}}));
  FieldState s = FieldState::zero(ProblemSpec::gravitating(sec, 3.0, 0.1));
  s.v = ScalarField(g, -400.0);  // e^{-2cv} with c = -0.6 underflows past the limit
  s.f = ScalarField(g, 400.0);
  const auto r = gravortex_residual(s);
  EXPECT_TRUE(r.overflow);
  EXPECT_TRUE(r.first.all_finite());
  EXPECT_TRUE(r.second.all_finite());
}

TEST(EbResidual, ConstantFieldArithmetic) {
  const auto g = build_grid(Model::Sphere, 8);
  const double k = 0.8, tau = 8.0, f0 = -0.3;
  auto spec = ProblemSpec::einstein_bogomolnyi(synthetic(g, ScalarField(g, k), 2), tau);
  EXPECT_EQ(spec.alpha, 1.0 / 16);
  FieldState s = FieldState::zero(spec);
  s.f = ScalarField(g, f0);
  // With the volume-fixing gauge and constant data, e^{2u} = 1.
  const double p = std::exp(2 * f0) * k;
  const auto r = eb_residual(s);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(r[i], 0.5 * (p - tau) + 2.0, 1e-13);
  // Fixed gauge constant: e^{2u} = exp(2(2 alpha tau f - alpha P + c')).
  s.spec.fix_volume = false;
  s.spec.c_prime = 0.4;
  const double e = std::exp(2 * (2 * spec.alpha * tau * f0 - spec.alpha * p + 0.4));
  const auto r2 = eb_residual(s);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(r2[i], 0.5 * e * (p - tau) + 2.0, 1e-13);
}

TEST(EbResidual, ManufacturedSolution) {
  const auto g = build_grid(Model::Sphere, 16);
  const double tau = 8.0, cp = 0.1;
  const int n = 2;
  const double alpha = 1.0 / (tau * n);
  const auto fstar = ScalarField::from_function(g, [](const ChartPoint& p, std::size_t) {
    const auto u = sphere_unit_vector(p);
    return -0.5 + 0.2 * u[2] + 0.1 * u[0] * u[1];
  });
  const auto lap = laplacian_apply(g, fstar);
  // Solve (1/2) e^{2(2 alpha tau f + c')} e^{-2 alpha P} (P - tau) = -(N + Delta f) for P.
  ScalarField phi(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double target = -(n + lap[i]) * 2 * std::exp(-2 * (2 * alpha * tau * fstar[i] + cp));
    double lo = -50, hi = tau + 0.5 / alpha;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (std::exp(-2 * alpha * mid) * (mid - tau) < target ? lo : hi) = mid;
    }
    phi[i] = 0.5 * (lo + hi) * std::exp(-2 * fstar[i]);
  }
  auto spec = ProblemSpec::einstein_bogomolnyi(synthetic(g, phi, n), tau);
  spec.fix_volume = false;
  spec.c_prime = cp;
  FieldState s = FieldState::zero(spec);
  s.f = fstar;
  EXPECT_LE(eb_residual(s).max_abs(), 1e-10);
}

TEST(ProblemSpec, Rejections) {
  const auto t = build_grid(Model::Torus, 8);
  const auto sec = section_norm_sq(t, Divisor({{{0.5, 0.5}, 1}}));
  EXPECT_THROW(ProblemSpec::einstein_bogomolnyi(sec, 4.0), std::invalid_argument);
  EXPECT_THROW(ProblemSpec::vortex(sec, 0.0), std::invalid_argument);
  auto spec = ProblemSpec::gravitating(sec, 3.0, 0.1);
  spec.c += 1e-9;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  const FieldState s = FieldState::zero(ProblemSpec::vortex(sec, 3.0));
  EXPECT_THROW(gravortex_residual(s), std::invalid_argument);
  EXPECT_THROW(eb_residual(s), std::invalid_argument);
  const auto other = build_grid(Model::Torus, 8);
  EXPECT_THROW(linearize_apply(s, ScalarField(other), ScalarField(other)), std::invalid_argument);
  EXPECT_THROW(linearize_apply(s, ScalarField(t), ScalarField(t, 1.0)), std::invalid_argument);
}

TEST(Linearization, ZeroDirection) {
  const auto g = build_grid(Model::Torus, 8);
  const auto sec = section_norm_sq(g, Divisor({{{0.5, 0.5}, 1}}));
  const auto s = FieldState::zero(ProblemSpec::gravitating(sec, 3.0, 0.1));
  const auto l = linearize_apply(s, ScalarField(g), ScalarField(g));
  EXPECT_EQ(l.max_abs(), 0.0);
}

TEST(Linearization, VortexClosedForm) {
  const auto g = build_grid(Model::Torus, 16);
  const auto sec = section_norm_sq(g, Divisor({{{0.25, 0.5}, 1}}));
  std::mt19937 rng(3);
  FieldState s = FieldState::zero(ProblemSpec::vortex(sec, 2.5));
  s.f = random_smooth(g, rng, 0.5);
  const auto df = random_smooth(g, rng, 1.0);
  const auto l = linearize_apply(s, df, ScalarField(g));
  ScalarField expected = laplacian_apply(g, df);
  for (std::size_t i = 0; i < g.size(); ++i) expected[i] += std::exp(2 * s.f[i]) * sec.norm_sq[i] * df[i];
  EXPECT_LE((l.first - expected).max_abs(), 1e-12 * expected.max_abs());
  const FieldPair fd = central_difference(s, df, ScalarField(g), 1e-4);
  EXPECT_LE(rel_error(fd, l), 1e-6);
}

struct GradientCase {
  const char* name;
  Model model;
  EquationKind kind;
  bool fix_volume = true;
};

class GradientCheck : public ::testing::TestWithParam<GradientCase> {};

TEST_P(GradientCheck, MatchesCentralDifferences) {
  const auto& pc = GetParam();
  const auto g = build_grid(pc.model, pc.model == Model::Torus ? 16 : 12);
  const Divisor d = pc.model == Model::Torus
                        ? Divisor({{{0.25, 0.5}, 1}})
                        : Divisor({{{0, 0}, 1}, {ChartPoint::at_infinity(), 1}});
  const auto sec = section_norm_sq(g, d);
  const double tau = 8.0;
  ProblemSpec spec;
  switch (pc.kind) {
    case EquationKind::Vortex: spec = ProblemSpec::vortex(sec, tau); break;
    case EquationKind::Gravitating: spec = ProblemSpec::gravitating(sec, tau, 0.03); break;
    case EquationKind::EinsteinBogomolnyi: spec = ProblemSpec::einstein_bogomolnyi(sec, tau); break;
  }
  spec.fix_volume = pc.fix_volume;
  spec.c_prime = 0.2;
  std::mt19937 rng(1234);
  for (int trial = 0; trial < 20; ++trial) {
    FieldState s = FieldState::zero(spec);
    s.f = random_smooth(g, rng, 0.8) + 0.5;
    ScalarField df = random_smooth(g, rng, 1.0), dv(g);
    if (pc.kind == EquationKind::Gravitating) {
      s.v = mean_free(random_smooth(g, rng, 0.05));
      dv = random_smooth(g, rng, 1.0);
    }
    const auto lin = linearize_apply(s, df, dv);
    const auto fd = central_difference(s, df, dv, 1e-4);
    EXPECT_LE(rel_error(fd, lin), 1e-5) << pc.name << " trial " << trial;
  }
}

INSTANTIATE_TEST_SUITE_P(
    AllKinds, GradientCheck,
    ::testing::Values(GradientCase{"VortexTorus", Model::Torus, EquationKind::Vortex},
                      GradientCase{"VortexSphere", Model::Sphere, EquationKind::Vortex},
                      GradientCase{"GravitatingTorus", Model::Torus, EquationKind::Gravitating},
                      GradientCase{"GravitatingSphere", Model::Sphere, EquationKind::Gravitating},
                      GradientCase{"EbVolumeFixed", Model::Sphere, EquationKind::EinsteinBogomolnyi},
                      GradientCase{"EbFixedGauge", Model::Sphere, EquationKind::EinsteinBogomolnyi,
                                   false}),
    [](const auto& info) { return std::string(info.param.name); });

TEST(Linearization, ForwardDifferenceSlopeIsOne) {
  const auto g = build_grid(Model::Torus, 16);
  const auto sec = section_norm_sq(g, Divisor({{{0.25, 0.5}, 1}}));
  std::mt19937 rng(11);
  FieldState s = FieldState::zero(ProblemSpec::gravitating(sec, 3.0, 0.05));
  s.f = random_smooth(g, rng, 0.5);
  s.v = mean_free(random_smooth(g, rng, 0.1));
  const auto df = random_smooth(g, rng, 1.0), dv = random_smooth(g, rng, 1.0);
  const auto base = gravortex_residual(s);
  const auto lin = linearize_apply(s, df, dv);
  std::vector<double> logs, errs;
  for (double eps : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
    const auto r = gravortex_residual(perturbed(s, eps, df, dv));
    const FieldPair fd{(1 / eps) * (r.first - base.first), (1 / eps) * (r.second - base.second)};
    logs.push_back(std::log10(eps));
    errs.push_back(std::log10(rel_error(fd, lin)));
  }
  // Least-squares slope of log error against log eps.
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < logs.size(); ++i) mx += logs[i] / logs.size(), my += errs[i] / logs.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    sxy += (logs[i] - mx) * (errs[i] - my);
    sxx += (logs[i] - mx) * (logs[i] - mx);
  }
  EXPECT_NEAR(sxy / sxx, 1.0, 0.1);
}

TEST(Monotonicity, VortexOperatorIsMonotone) {
  const auto g = build_grid(Model::Torus, 16);
  const auto sec = section_norm_sq(g, Divisor({{{0.25, 0.5}, 1}}));
  std::mt19937 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    FieldState a = FieldState::zero(ProblemSpec::vortex(sec, 2.5)), b = a;
    b.f = random_smooth(g, rng, 1.0);
    a.f = b.f + random_smooth(g, rng, 0.5).map([](double x) { return std::abs(x); });
    const double pairing = inner(a.f - b.f, vortex_residual(a) - vortex_residual(b));
    EXPECT_GE(pairing, 0.0);
  }
}

TEST(ScalarCurvature, BaseMetrics) {
  const auto s = build_grid(Model::Sphere, 8);
  const auto k = scalar_curvature(s, ScalarField(s));
  EXPECT_NEAR(k.min(), 4.0, 1e-14);
  EXPECT_NEAR(k.max(), 4.0, 1e-14);
  const auto t = build_grid(Model::Torus, 8);
  EXPECT_EQ(scalar_curvature(t, ScalarField(t)).max_abs(), 0.0);
}

TEST(ScalarCurvature, LinearizedConformalChange) {
  const auto t = build_grid(Model::Torus, 16);
  const auto mode = ScalarField::from_function(
      t, [](const ChartPoint& p, std::size_t) { return std::cos(2 * kPi * (p.x + p.y)); });
  const double lambda = 2 * kPi * 2;
  for (double eps : {1e-3, 1e-4}) {
    const auto s = scalar_curvature(t, eps * mode);
    EXPECT_LE((s - (2 * eps * lambda) * mode).max_abs(), 5 * 2 * lambda * eps * eps);
  }
}

TEST(ScalarCurvature, RoundSphereRescaled) {
  // A constant u scales the metric by e^{2u} and the curvature by e^{-2u}.
  const auto s = build_grid(Model::Sphere, 8);
  EXPECT_NEAR(scalar_curvature(s, ScalarField(s, 0.3)).max(), 4.0 * std::exp(-0.6), 1e-13);
}

TEST(DirectResidual, NonSolutionIsNonzeroAndStableUnderRefinement) {
  double previous = -1;
  for (int n : {16, 32}) {
    const auto g = build_grid(Model::Torus, n);
    const auto sec = section_norm_sq(g, Divisor({{{0.5, 0.5}, 1}}));
    FieldState s = FieldState::zero(ProblemSpec::gravitating(sec, 2.5, 0.05));
    s.f = ScalarField::from_function(g, [](const ChartPoint& p, std::size_t) {
      return 0.2 * std::cos(2 * kPi * p.x);
    });
    s.v = ScalarField::from_function(g, [](const ChartPoint& p, std::size_t) {
      return 0.01 * std::sin(2 * kPi * p.y);
    });
    const auto r = direct_gve_residual(s);
    // The residual at the node (0, 0) is smooth in the data.
    const double at_origin = r.second[0];
    EXPECT_GT(r.max_abs(), 1e-2);
    if (previous >= 0) EXPECT_NEAR(at_origin, previous, 1e-8);
    previous = at_origin;
  }
}

TEST(DirectResidual, RejectsVortexAndNonpositiveDensity) {
  const auto g = build_grid(Model::Torus, 16);
  const auto sec = section_norm_sq(g, Divisor({{{0.5, 0.5}, 1}}));
  EXPECT_THROW(direct_gve_residual(FieldState::zero(ProblemSpec::vortex(sec, 2.5))),
               std::invalid_argument);
  FieldState s = FieldState::zero(ProblemSpec::gravitating(sec, 2.5, 0.05));
  s.v = ScalarField::from_function(g, [](const ChartPoint& p, std::size_t) {
    return std::cos(2 * kPi * p.x);
  });
  EXPECT_THROW(direct_gve_residual(s), std::invalid_argument);
}

TEST(DirectResidual, AgreesWithReducedSystemAtVanishingCoupling) {
  // At alpha = 0 and v = 0 the first direct residual is the vortex residual
  // divided by 1, and the second is S_0/2 - chi = 0.
  const auto g = build_grid(Model::Sphere, 12);
  const auto sec = section_norm_sq(g, Divisor({{{0.3, 0.1}, 1}}));
  std::mt19937 rng(2);
  FieldState s = FieldState::zero(ProblemSpec::gravitating(sec, 3.0, 0.0));
  s.f = random_smooth(g, rng, 0.4);
  const auto direct = direct_gve_residual(s);
  EXPECT_LE((direct.first - gravortex_residual(s).first).max_abs(), 1e-12);
  EXPECT_LE(direct.second.max_abs(), 1e-13);
}

TEST(IdentityReport, NegativeControlIsFinite) {
  const auto g = build_grid(Model::Torus, 16);
  const auto sec = section_norm_sq(g, Divisor({{{0.5, 0.5}, 1}}));
  const auto r = identity_report(FieldState::zero(ProblemSpec::gravitating(sec, 2.5, 0.05)));
  EXPECT_TRUE(std::isfinite(r.degree_identity));
  EXPECT_GT(std::abs(r.degree_identity), 1e-3);
  EXPECT_GT(std::abs(r.volume_identity), 1e-3);
  EXPECT_EQ(r.min_density, 1.0);
  // Gauss-Bonnet holds for any conformal factor.
  EXPECT_LE(std::abs(r.gauss_bonnet), 1e-10);
}

TEST(IdentityReport, VortexDegreeIdentityAtZero) {
  const auto g = build_grid(Model::Torus, 32);
  const auto sec = section_norm_sq(g, Divisor({{{0.5, 0.5}, 1}}));
  const auto r = identity_report(FieldState::zero(ProblemSpec::vortex(sec, 2.5)));
  EXPECT_NEAR(r.degree_identity, integrate(g, sec.norm_sq) - kPi, 1e-12);
  EXPECT_NEAR(r.volume_identity, 0.0, 1e-12);
}
