#pragma once

// Residuals and linearizations of the reduced gravitating vortex systems on a
// surface of area 2 pi, written in terms of the unknowns
//   h = e^{2f} h_0,   omega = omega_0 + dd^c v,
// together with geometric diagnostics evaluated on the original system.
//
// Notation used below: P = e^{2f} |phi|_0^2 (the pointwise norm |phi|_h^2).

#include "bundle.hpp"
#include "geometry.hpp"
#include "stability.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace gravortex {

enum class EquationKind { Vortex, Gravitating, EinsteinBogomolnyi };

inline std::string to_string(EquationKind k) {
  switch (k) {
    case EquationKind::Vortex: return "vortex";
    case EquationKind::Gravitating: return "gravitating";
    case EquationKind::EinsteinBogomolnyi: return "eb";
  }
  return "?";
}

/// Exponents are clamped to this magnitude; any clamping flags the evaluation.
inline constexpr double kExponentLimit = 700.0;

struct ProblemSpec {
  SurfaceGrid grid;
  SectionData section;
  double tau = 0.0;
  double alpha = 0.0;
  /// Topological constant c (Gravitating; zero for Einstein-Bogomol'nyi).
  double c = 0.0;
  /// Einstein-Bogomol'nyi gauge constant. When `fix_volume` is set (the
  /// default) it is recomputed from f so that the solved metric has area
  /// 2 pi, and this field is ignored.
  double c_prime = 0.0;
  bool fix_volume = true;
  EquationKind kind = EquationKind::Vortex;

  int degree() const { return section.degree(); }

  static ProblemSpec vortex(const SectionData& sec, double tau) {
    ProblemSpec s;
    s.grid = sec.grid();
    s.section = sec;
    s.tau = tau;
    s.kind = EquationKind::Vortex;
    s.validate();
    return s;
  }

  /// c is derived from chi of the grid's surface.
  static ProblemSpec gravitating(const SectionData& sec, double tau, double alpha) {
    ProblemSpec s;
    s.grid = sec.grid();
    s.section = sec;
    s.tau = tau;
    s.alpha = alpha;
    s.c = topological_constant(s.grid.euler_characteristic(), alpha, tau, sec.degree(), kTwoPi);
    s.kind = EquationKind::Gravitating;
    s.validate();
    return s;
  }

  /// alpha is forced to 1/(tau N), so that c = 0.
  static ProblemSpec einstein_bogomolnyi(const SectionData& sec, double tau) {
    ProblemSpec s;
    s.grid = sec.grid();
    s.section = sec;
    s.tau = tau;
    s.alpha = eb_coupling(tau, sec.degree());
    s.c = 0.0;
    s.kind = EquationKind::EinsteinBogomolnyi;
    s.validate();
    return s;
  }

  void validate() const {
    if (!grid.valid()) throw std::invalid_argument("ProblemSpec: invalid grid");
    if (!section.norm_sq.grid().same_as(grid))
      throw std::invalid_argument("ProblemSpec: section sampled on a different grid");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("ProblemSpec: tau must be positive");
    if (!std::isfinite(alpha)) throw std::invalid_argument("ProblemSpec: alpha must be finite");
    if (kind == EquationKind::Gravitating) {
      const double expected =
          topological_constant(grid.euler_characteristic(), alpha, tau, degree(), kTwoPi);
      if (std::abs(c - expected) > 1e-12)
        throw std::invalid_argument("ProblemSpec: c inconsistent with chi, alpha, tau, N");
    }
    if (kind == EquationKind::EinsteinBogomolnyi) {
      if (grid.model() != Model::Sphere)
        throw std::invalid_argument("ProblemSpec: Einstein-Bogomol'nyi equations need the sphere");
      const double cc = topological_constant(2, alpha, tau, degree(), kTwoPi);
      if (std::abs(cc) > 1e-12 || std::abs(c) > 1e-12)
        throw std::invalid_argument("ProblemSpec: Einstein-Bogomol'nyi equations need c = 0");
    }
  }
};

struct FieldState {
  ScalarField f;
  ScalarField v;  // zero unless kind == Gravitating
  ProblemSpec spec;

  static FieldState zero(const ProblemSpec& spec) {
    return {ScalarField(spec.grid), ScalarField(spec.grid), spec};
  }
};

/// A residual, or the action of a linearization: one component for Vortex and
/// Einstein-Bogomol'nyi (second is identically zero), two for Gravitating.
struct FieldPair {
  ScalarField first;
  ScalarField second;
  bool overflow = false;

  double max_abs() const { return std::max(first.max_abs(), second.max_abs()); }
};

namespace detail {

inline double clamped_exp(double x, bool& overflow) {
  if (x > kExponentLimit) {
    overflow = true;
    x = kExponentLimit;
  } else if (x < -kExponentLimit) {
    overflow = true;
    x = -kExponentLimit;
  }
  return std::exp(x);
}

inline void require_kind(const FieldState& s, EquationKind k, const char* op) {
  if (s.spec.kind != k)
    throw std::invalid_argument(std::string(op) + ": state is of kind " + to_string(s.spec.kind) +
                                ", expected " + to_string(k));
  detail::require_on(s.spec.grid, s.f, op);
  detail::require_on(s.spec.grid, s.v, op);
}

/// P = e^{2f} |phi|_0^2. Only the e^{2f} factor can overflow.
inline ScalarField section_density(const FieldState& s, bool& overflow) {
  ScalarField p(s.spec.grid);
  const auto& phi = s.spec.section.norm_sq;
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = clamped_exp(2.0 * s.f[i], overflow) * phi[i];
  return p;
}

/// W = exp(4 alpha tau f - 2 alpha P - 2 c v).
inline ScalarField gravitating_weight(const FieldState& s, const ScalarField& p, bool& overflow) {
  const auto& sp = s.spec;
  ScalarField w(sp.grid);
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = clamped_exp(4.0 * sp.alpha * sp.tau * s.f[i] - 2.0 * sp.alpha * p[i] - 2.0 * sp.c * s.v[i],
                       overflow);
  return w;
}

struct EbGauge {
  ScalarField u;        // conformal factor exponent, e^{2u} = density
  ScalarField density;  // e^{2u}
  double c_prime = 0.0;
};

/// u = 2 alpha tau f - alpha P + c'. With fix_volume, c' makes the integral
/// of e^{2u} equal to 2 pi; the exponential is shifted by its maximum first.
inline EbGauge eb_gauge(const FieldState& s, const ScalarField& p, bool& overflow) {
  const auto& sp = s.spec;
  EbGauge g;
  g.u = ScalarField(sp.grid);
  for (std::size_t i = 0; i < p.size(); ++i) g.u[i] = 2.0 * sp.alpha * sp.tau * s.f[i] - sp.alpha * p[i];
  if (sp.fix_volume) {
    const double top = 2.0 * g.u.max();
    ScalarField shifted = g.u.map([top](double x) { return std::exp(2.0 * x - top); });
    g.c_prime = -0.5 * (top + std::log(integrate(sp.grid, shifted) / kTwoPi));
  } else {
    g.c_prime = sp.c_prime;
  }
  g.u += g.c_prime;
  g.density = ScalarField(sp.grid);
  for (std::size_t i = 0; i < p.size(); ++i) g.density[i] = clamped_exp(2.0 * g.u[i], overflow);
  return g;
}

}  // namespace detail

/// R(f) = Delta f + (P - tau)/2 + N.
inline ScalarField vortex_residual(const FieldState& s) {
  detail::require_kind(s, EquationKind::Vortex, "vortex_residual");
  bool overflow = false;
  const auto p = detail::section_density(s, overflow);
  ScalarField r = laplacian_apply(s.spec.grid, s.f);
  const double n = s.spec.degree();
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += 0.5 * (p[i] - s.spec.tau) + n;
  return r;
}

/// (R1, R2) = (Delta f + (P - tau) W / 2 + N, Delta v + W - 1).
inline FieldPair gravortex_residual(const FieldState& s) {
  detail::require_kind(s, EquationKind::Gravitating, "gravortex_residual");
  FieldPair out;
  const auto p = detail::section_density(s, out.overflow);
  const auto w = detail::gravitating_weight(s, p, out.overflow);
  const double n = s.spec.degree();
  out.first = laplacian_apply(s.spec.grid, s.f);
  out.second = laplacian_apply(s.spec.grid, s.v);
  for (std::size_t i = 0; i < p.size(); ++i) {
    out.first[i] += 0.5 * (p[i] - s.spec.tau) * w[i] + n;
    out.second[i] += w[i] - 1.0;
  }
  return out;
}

/// R(f) = Delta f + e^{2u} (P - tau)/2 + N with u from the gauge convention.
inline FieldPair eb_residual_checked(const FieldState& s) {
  detail::require_kind(s, EquationKind::EinsteinBogomolnyi, "eb_residual");
  FieldPair out;
  const auto p = detail::section_density(s, out.overflow);
  const auto g = detail::eb_gauge(s, p, out.overflow);
  const double n = s.spec.degree();
  out.first = laplacian_apply(s.spec.grid, s.f);
  for (std::size_t i = 0; i < p.size(); ++i) out.first[i] += 0.5 * g.density[i] * (p[i] - s.spec.tau) + n;
  out.second = ScalarField(s.spec.grid);
  return out;
}

inline ScalarField eb_residual(const FieldState& s) { return eb_residual_checked(s).first; }

/// Residual of any kind, with the overflow flag.
inline FieldPair residual(const FieldState& s) {
  switch (s.spec.kind) {
    case EquationKind::Vortex: {
      bool overflow = false;
      detail::section_density(s, overflow);
      return {vortex_residual(s), ScalarField(s.spec.grid), overflow};
    }
    case EquationKind::Gravitating: return gravortex_residual(s);
    case EquationKind::EinsteinBogomolnyi: return eb_residual_checked(s);
  }
  throw std::logic_error("residual: unknown kind");
}

/// Frechet derivative of the residual at `s` applied to (df, dv).
inline FieldPair linearize_apply(const FieldState& s, const ScalarField& df, const ScalarField& dv) {
  const auto& sp = s.spec;
  detail::require_on(sp.grid, s.f, "linearize_apply");
  detail::require_on(sp.grid, df, "linearize_apply");
  detail::require_on(sp.grid, dv, "linearize_apply");
  FieldPair out;
  const auto p = detail::section_density(s, out.overflow);
  out.first = laplacian_apply(sp.grid, df);

  switch (sp.kind) {
    case EquationKind::Vortex:
    case EquationKind::EinsteinBogomolnyi: {
      if (dv.max_abs() != 0.0)
        throw std::invalid_argument("linearize_apply: dv must vanish for kind " + to_string(sp.kind));
      out.second = ScalarField(sp.grid);
      if (sp.kind == EquationKind::Vortex) {
        for (std::size_t i = 0; i < p.size(); ++i) out.first[i] += p[i] * df[i];
        break;
      }
      // dR = Delta df + E P df + E (P - tau)(g - <g>_E), g = 2 alpha (tau - P) df,
      // where <g>_E is the E-weighted mean coming from the volume constraint.
      const auto gauge = detail::eb_gauge(s, p, out.overflow);
      const auto& e = gauge.density;
      ScalarField g(sp.grid);
      for (std::size_t i = 0; i < p.size(); ++i) g[i] = 2.0 * sp.alpha * (sp.tau - p[i]) * df[i];
      const double avg = sp.fix_volume ? integrate(sp.grid, e * g) / kTwoPi : 0.0;
      for (std::size_t i = 0; i < p.size(); ++i)
        out.first[i] += e[i] * p[i] * df[i] + e[i] * (p[i] - sp.tau) * (g[i] - avg);
      break;
    }
    case EquationKind::Gravitating: {
      detail::require_on(sp.grid, s.v, "linearize_apply");
      const auto w = detail::gravitating_weight(s, p, out.overflow);
      out.second = laplacian_apply(sp.grid, dv);
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double dw = w[i] * (4.0 * sp.alpha * (sp.tau - p[i]) * df[i] - 2.0 * sp.c * dv[i]);
        out.first[i] += p[i] * w[i] * df[i] + 0.5 * (p[i] - sp.tau) * dw;
        out.second[i] += dw;
      }
      break;
    }
  }
  return out;
}

/// Scalar curvature of e^{2u} omega_0: S = e^{-2u}(S_0 + 2 Delta u), with
/// S_0 = 4 on the round sphere of area 2 pi and 0 on the flat torus.
inline ScalarField scalar_curvature(const SurfaceGrid& grid, const ScalarField& u) {
  ScalarField s = laplacian_apply(grid, u);
  const double s0 = grid.base_scalar_curvature();
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::exp(-2.0 * u[i]) * (s0 + 2.0 * s[i]);
  return s;
}

/// The conformal exponent u of the solved metric omega = e^{2u} omega_0.
/// Gravitating: e^{2u} = 1 - Delta v (throws unless positive). EB: the gauge.
/// Vortex: u = 0.
inline ScalarField metric_exponent(const FieldState& s) {
  const auto& sp = s.spec;
  switch (sp.kind) {
    case EquationKind::Vortex: return ScalarField(sp.grid);
    case EquationKind::Gravitating: {
      const auto d = conformal_density(sp.grid, s.v);
      if (!d.positive) throw std::invalid_argument("metric_exponent: density 1 - Delta v is not positive");
      return d.density.map([](double x) { return 0.5 * std::log(x); });
    }
    case EquationKind::EinsteinBogomolnyi: {
      bool overflow = false;
      const auto p = detail::section_density(s, overflow);
      return detail::eb_gauge(s, p, overflow).u;
    }
  }
  throw std::logic_error("metric_exponent: unknown kind");
}

/// Residuals of the original system, evaluated with omega = e^{2u} omega_0:
///   e^{-2u}(N + Delta f) + (P - tau)/2,
///   S_omega / 2 + alpha (Delta_omega + tau)(P - tau) - c,
/// with Delta_omega = e^{-2u} Delta. The curvature term uses the Gauss
/// curvature S_omega / 2, the normalization under which c is topological.
inline FieldPair direct_gve_residual(const FieldState& s) {
  const auto& sp = s.spec;
  if (sp.kind == EquationKind::Vortex)
    throw std::invalid_argument("direct_gve_residual: needs a Gravitating or Einstein-Bogomol'nyi state");
  const auto u = metric_exponent(s);
  FieldPair out;
  const auto p = detail::section_density(s, out.overflow);
  const auto lap_f = laplacian_apply(sp.grid, s.f);
  const auto lap_p = laplacian_apply(sp.grid, p);
  const auto curv = scalar_curvature(sp.grid, u);
  const double n = sp.degree();
  out.first = ScalarField(sp.grid);
  out.second = ScalarField(sp.grid);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double inv = std::exp(-2.0 * u[i]);
    out.first[i] = inv * (n + lap_f[i]) + 0.5 * (p[i] - sp.tau);
    out.second[i] =
        0.5 * curv[i] + sp.alpha * (inv * lap_p[i] + sp.tau * (p[i] - sp.tau)) - sp.c;
  }
  return out;
}

struct IdentityReport {
  double degree_identity = 0.0;
  double volume_identity = 0.0;
  double gauss_bonnet = 0.0;
  double min_density = 1.0;
};

/// Integrated identities of the reduced system. W is the conformal weight
/// of the kind (1 for Vortex, the exponential weight for Gravitating, e^{2u}
/// for Einstein-Bogomol'nyi); Gauss-Bonnet is evaluated for e^{2u} = W.
inline IdentityReport identity_report(const FieldState& s) {
  const auto& sp = s.spec;
  detail::require_on(sp.grid, s.f, "identity_report");
  const double n = sp.degree();
  bool overflow = false;
  const auto p = detail::section_density(s, overflow);
  ScalarField w(sp.grid, 1.0);
  IdentityReport r;
  switch (sp.kind) {
    case EquationKind::Vortex: break;
    case EquationKind::Gravitating:
      w = detail::gravitating_weight(s, p, overflow);
      r.min_density = conformal_density(sp.grid, s.v).density.min();
      break;
    case EquationKind::EinsteinBogomolnyi:
      w = detail::eb_gauge(s, p, overflow).density;
      r.min_density = w.min();
      break;
  }
  r.degree_identity = integrate(sp.grid, p * w) - (kTwoPi * sp.tau - 4.0 * std::numbers::pi * n);
  r.volume_identity = integrate(sp.grid, w) - kTwoPi;
  const auto u = w.map([](double x) { return 0.5 * std::log(x); });
  r.gauss_bonnet = integrate(sp.grid, scalar_curvature(sp.grid, u) * w) -
                   4.0 * std::numbers::pi * sp.grid.euler_characteristic();
  return r;
}

}  // namespace gravortex
