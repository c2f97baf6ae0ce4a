#pragma once

// Damped Newton iteration for the vortex, gravitating vortex and
// Einstein-Bogomol'nyi systems, and a continuation driver in alpha.
//
// Each Newton step solves the linearized system with GMRES, right
// preconditioned by the exact spectral inverse of (Delta + 1) on each
// component. On the sphere the unknowns are band-limited and residuals are
// measured after projection onto the spectral space (a Galerkin method);
// on the torus the projection is the identity.

#include "detail/krylov.hpp"
#include "equations.hpp"
#include "stability.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gravortex {

enum class Damping { None, Backtracking };

struct SolverConfig {
  double newton_tol = 1e-10;  // infinity norm of the residual
  int max_newton_iters = 50;
  Damping damping = Damping::Backtracking;
  double linear_tol = 1e-12;  // relative, inner GMRES
  double divergence_norm = 1e6;

  void validate() const {
    if (!(newton_tol > 0.0)) throw std::invalid_argument("SolverConfig: newton_tol must be positive");
    if (!(linear_tol > 0.0)) throw std::invalid_argument("SolverConfig: linear_tol must be positive");
    if (!(divergence_norm > 0.0))
      throw std::invalid_argument("SolverConfig: divergence_norm must be positive");
    if (max_newton_iters < 1) throw std::invalid_argument("SolverConfig: max_newton_iters must be >= 1");
  }
};

struct ContinuationSchedule {
  std::vector<double> alpha_targets;
  int max_step_halvings = 10;

  /// 0, alpha/steps, ..., alpha.
  static ContinuationSchedule uniform(double alpha, int steps) {
    if (steps < 1) throw std::invalid_argument("ContinuationSchedule: steps must be >= 1");
    ContinuationSchedule s;
    for (int k = 0; k <= steps; ++k) s.alpha_targets.push_back(alpha * k / steps);
    if (alpha == 0.0) s.alpha_targets.resize(1);
    return s;
  }

  void validate() const {
    if (alpha_targets.empty() || alpha_targets.front() != 0.0)
      throw std::invalid_argument("ContinuationSchedule: the first target must be 0");
    for (std::size_t i = 1; i < alpha_targets.size(); ++i)
      if (!(alpha_targets[i] > alpha_targets[i - 1]))
        throw std::invalid_argument("ContinuationSchedule: targets must be strictly increasing");
    if (max_step_halvings < 0)
      throw std::invalid_argument("ContinuationSchedule: max_step_halvings must be >= 0");
  }
};

enum class FailureReason { MaxIters, Divergence, Overflow, StepFloor };

inline std::string to_string(FailureReason r) {
  switch (r) {
    case FailureReason::MaxIters: return "MaxIters";
    case FailureReason::Divergence: return "Divergence";
    case FailureReason::Overflow: return "Overflow";
    case FailureReason::StepFloor: return "StepFloor";
  }
  return "?";
}

struct SolveReport {
  bool converged = false;
  int iterations = 0;
  double final_residual = 0.0;
  IdentityReport identity_report;
  double alpha_reached = 0.0;
  std::optional<FailureReason> failure_reason;
  /// Whether N < tau/2 holds. When it fails no solution exists and the
  /// report is never marked converged.
  bool bradlow_satisfied = true;
  /// Residual norm before each Newton step and after the last one.
  std::vector<double> residual_history;
};

struct StepReport {
  double residual_before = 0.0;
  double residual_after = 0.0;
  double step_length = 0.0;
  int linear_iterations = 0;
  double linear_residual = 0.0;
  bool overflow = false;
  /// The inner solve stalled well above its tolerance.
  bool stagnated = false;
};

namespace detail {

inline bool two_components(const FieldState& s) { return s.spec.kind == EquationKind::Gravitating; }

/// Residual projected onto the discrete space (identity on the torus).
inline FieldPair projected_residual(const FieldState& s) {
  FieldPair r = residual(s);
  if (s.spec.grid.model() == Model::Sphere) {
    r.first = project(r.first);
    if (two_components(s)) r.second = project(r.second);
  }
  return r;
}

inline Vec stack(const FieldPair& p, bool two) {
  Vec out(p.first.data());
  if (two) out.insert(out.end(), p.second.data().begin(), p.second.data().end());
  return out;
}

inline std::pair<ScalarField, ScalarField> unstack(const SurfaceGrid& g, const Vec& x, bool two) {
  const std::size_t n = g.size();
  ScalarField a(g, std::vector<double>(x.begin(), x.begin() + n));
  ScalarField b = two ? ScalarField(g, std::vector<double>(x.begin() + n, x.end())) : ScalarField(g);
  return {std::move(a), std::move(b)};
}

inline double merit(const FieldPair& r) {
  return 0.5 * (inner(r.first, r.first) + inner(r.second, r.second));
}

/// Integral of P W: the total |phi|_h^2 with respect to the solved metric.
/// It equals 2 pi tau - 4 pi N at every solution; a value near zero means
/// the iterate has collapsed towards h = 0.
inline double section_mass(const FieldState& s) {
  const auto r = identity_report(s);
  return r.degree_identity + kTwoPi * s.spec.tau - 4.0 * std::numbers::pi * s.spec.degree();
}

}  // namespace detail

/// One damped Newton step. An overflowing state is flagged and not updated.
inline std::pair<FieldState, StepReport> newton_step(const FieldState& state, const SolverConfig& config) {
  config.validate();
  const auto& grid = state.spec.grid;
  const bool two = detail::two_components(state);
  StepReport rep;
  const FieldPair r0 = detail::projected_residual(state);
  rep.residual_before = r0.max_abs();
  rep.overflow = r0.overflow;
  if (r0.overflow) {
    rep.residual_after = rep.residual_before;
    return {state, rep};
  }
  if (rep.residual_before == 0.0) return {state, rep};

  const auto weights = grid.weights();
  const std::size_t n = grid.size();
  auto dot = [&](const detail::Vec& a, const detail::Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += weights[i % n] * a[i] * b[i];
    return s;
  };
  auto precondition = [&](const detail::Vec& y) {
    auto [a, b] = detail::unstack(grid, y, two);
    a = shifted_laplacian_invert(a, 1.0);
    if (two) b = shifted_laplacian_invert(b, 1.0);
    return std::pair{std::move(a), std::move(b)};
  };
  const bool sphere = grid.model() == Model::Sphere;
  auto apply = [&](const detail::Vec& y, detail::Vec& out) {
    const auto [df, dv] = precondition(y);
    FieldPair l = linearize_apply(state, df, dv);
    if (sphere) {
      l.first = project(l.first);
      if (two) l.second = project(l.second);
    }
    out = detail::stack(l, two);
  };

  detail::Vec rhs = detail::stack(r0, two);
  for (double& x : rhs) x = -x;
  detail::Vec y;
  const auto lin = detail::gmres(apply, dot, rhs, y, config.linear_tol, 60, 600);
  rep.linear_iterations = lin.iterations;
  rep.linear_residual = lin.relative_residual;
  rep.stagnated = lin.relative_residual > 1e-6;
  const auto [df, dv] = precondition(y);

  auto trial = [&](double t) {
    FieldState s = state;
    s.f += t * df;
    if (two) {
      s.v += t * dv;
      if (s.spec.c == 0.0) s.v += -mean(s.v);
    }
    return s;
  };

  const double m0 = detail::merit(r0);
  double t = 1.0;
  FieldState next = trial(t);
  FieldPair r1 = detail::projected_residual(next);
  if (config.damping == Damping::Backtracking) {
    // Armijo condition on the merit 1/2 ||R||^2, whose directional derivative
    // along an exact Newton step is -2 m0.
    const double armijo = 1e-4;
    while (t > 1.0 / 1024 && (r1.overflow || !(detail::merit(r1) <= (1.0 - 2.0 * armijo * t) * m0))) {
      t *= 0.5;
      next = trial(t);
      r1 = detail::projected_residual(next);
    }
  }
  rep.step_length = t;
  rep.residual_after = r1.max_abs();
  rep.overflow = r1.overflow;
  return {std::move(next), rep};
}

/// Runs Newton iterations from `state` until convergence or failure.
inline SolveReport newton_solve(FieldState& state, const SolverConfig& config) {
  config.validate();
  SolveReport rep;
  rep.alpha_reached = state.spec.alpha;
  rep.bradlow_satisfied = bradlow_check(state.spec.degree(), state.spec.tau, kTwoPi);
  FieldPair r = detail::projected_residual(state);
  rep.final_residual = r.max_abs();
  rep.residual_history.push_back(rep.final_residual);
  while (true) {
    if (r.overflow) {
      rep.failure_reason = FailureReason::Overflow;
      break;
    }
    if (!std::isfinite(rep.final_residual) ||
        std::max(state.f.max_abs(), state.v.max_abs()) > config.divergence_norm) {
      rep.failure_reason = FailureReason::Divergence;
      break;
    }
    if (rep.final_residual <= config.newton_tol) {
      rep.converged = true;
      break;
    }
    if (rep.iterations >= config.max_newton_iters) {
      rep.failure_reason = FailureReason::MaxIters;
      break;
    }
    auto [next, step] = newton_step(state, config);
    ++rep.iterations;
    state = std::move(next);
    r = detail::projected_residual(state);
    rep.final_residual = r.max_abs();
    rep.residual_history.push_back(rep.final_residual);
  }
  rep.identity_report = identity_report(state);
  // A residual below tolerance with vanishing section mass means h has
  // collapsed, which happens exactly at the Bradlow boundary.
  const double mass_scale = kTwoPi * state.spec.tau;
  if (rep.converged && detail::section_mass(state) <= 1e-8 * mass_scale) {
    rep.converged = false;
    rep.failure_reason = FailureReason::Divergence;
  }
  if (rep.converged && !rep.bradlow_satisfied) {
    rep.converged = false;
    rep.failure_reason = FailureReason::Divergence;
  }
  if (rep.converged && state.spec.kind == EquationKind::Gravitating &&
      !(rep.identity_report.min_density > 0.0)) {
    rep.converged = false;
    rep.failure_reason = FailureReason::Divergence;
  }
  return rep;
}

/// f_0 = (1/2) log(tau/2) - (1/2) log max |phi|_0^2.
inline ScalarField default_initial_guess(const SectionData& section, double tau) {
  return ScalarField(section.grid(), 0.5 * std::log(tau / 2.0) - 0.5 * std::log(section.norm_sq.max()));
}

namespace detail {
inline void check_section(const SurfaceGrid& grid, const SectionData& section) {
  if (!section.grid().same_as(grid))
    throw std::invalid_argument("solver: section sampled on a different grid");
}
inline ScalarField initial_or_default(const SurfaceGrid& grid, const SectionData& section, double tau,
                                      const std::optional<ScalarField>& initial) {
  if (!initial) return default_initial_guess(section, tau);
  require_on(grid, *initial, "solver initial guess");
  return *initial;
}
}  // namespace detail

inline std::pair<FieldState, SolveReport> solve_vortex(const SurfaceGrid& grid, const SectionData& section,
                                                       double tau, const SolverConfig& config = {},
                                                       const std::optional<ScalarField>& initial = {}) {
  config.validate();
  detail::check_section(grid, section);
  FieldState s = FieldState::zero(ProblemSpec::vortex(section, tau));
  s.f = detail::initial_or_default(grid, section, tau, initial);
  auto rep = newton_solve(s, config);
  rep.alpha_reached = 0.0;
  return {std::move(s), rep};
}

inline std::pair<FieldState, SolveReport> solve_eb(const SurfaceGrid& grid, const SectionData& section,
                                                   double tau, const SolverConfig& config = {},
                                                   const std::optional<ScalarField>& initial = {}) {
  config.validate();
  if (grid.model() != Model::Sphere)
    throw std::invalid_argument("solve_eb: the Einstein-Bogomol'nyi equations need the sphere");
  detail::check_section(grid, section);
  FieldState s = FieldState::zero(ProblemSpec::einstein_bogomolnyi(section, tau));
  s.f = detail::initial_or_default(grid, section, tau, initial);
  auto rep = newton_solve(s, config);
  return {std::move(s), rep};
}

/// Newton-corrects an existing Gravitating state to coupling `alpha`.
inline SolveReport correct_to_alpha(FieldState& state, double alpha, const SolverConfig& config) {
  FieldState trial = state;
  trial.spec = ProblemSpec::gravitating(state.spec.section, state.spec.tau, alpha);
  auto rep = newton_solve(trial, config);
  if (rep.converged) state = std::move(trial);
  return rep;
}

/// Continues a converged Gravitating state from its current alpha up to
/// `target`, first in one step and then halving a failed step up to
/// `max_step_halvings` times. On failure the state keeps the last converged
/// alpha, which is reported as alpha_reached together with StepFloor.
inline SolveReport continue_to_alpha(FieldState& state, double target, int max_step_halvings,
                                     const SolverConfig& config) {
  if (state.spec.kind != EquationKind::Gravitating)
    throw std::invalid_argument("continue_to_alpha: needs a Gravitating state");
  if (max_step_halvings < 0) throw std::invalid_argument("continue_to_alpha: max_step_halvings must be >= 0");
  double current = state.spec.alpha;
  if (target < current) throw std::invalid_argument("continue_to_alpha: target below current alpha");
  SolveReport rep;
  rep.converged = true;
  rep.alpha_reached = current;
  rep.identity_report = identity_report(state);
  int total_iters = 0;
  while (current < target) {
    double step = target - current;
    SolveReport attempt;
    int halvings = 0;
    while (true) {
      const double next = halvings == 0 ? target : current + step;
      attempt = correct_to_alpha(state, next, config);
      total_iters += attempt.iterations;
      if (attempt.converged) {
        current = next;
        break;
      }
      if (halvings == max_step_halvings) break;
      ++halvings;
      step *= 0.5;
    }
    rep = attempt;
    if (!attempt.converged) {
      rep.failure_reason = FailureReason::StepFloor;
      rep.identity_report = identity_report(state);
      break;
    }
  }
  rep.iterations = total_iters;
  rep.alpha_reached = current;
  return rep;
}

/// Continuation from the decoupled alpha = 0 state along `schedule`.
inline std::pair<FieldState, SolveReport> solve_gravitating(const SurfaceGrid& grid,
                                                            const SectionData& section, double tau,
                                                            double alpha,
                                                            const ContinuationSchedule& schedule,
                                                            const SolverConfig& config = {}) {
  config.validate();
  schedule.validate();
  detail::check_section(grid, section);
  if (std::abs(schedule.alpha_targets.back() - alpha) > 1e-15 * std::max(1.0, std::abs(alpha)))
    throw std::invalid_argument("solve_gravitating: schedule must end at alpha");

  auto [vortex, vrep] = solve_vortex(grid, section, tau, config);
  FieldState state = FieldState::zero(ProblemSpec::gravitating(section, tau, 0.0));
  state.f = vortex.f;
  SolveReport rep = vrep;
  rep.identity_report = identity_report(state);
  rep.alpha_reached = 0.0;
  if (!vrep.converged) return {std::move(state), rep};

  int total_iters = vrep.iterations;
  for (std::size_t k = 1; k < schedule.alpha_targets.size(); ++k) {
    rep = continue_to_alpha(state, schedule.alpha_targets[k], schedule.max_step_halvings, config);
    total_iters += rep.iterations;
    if (!rep.converged) break;
  }
  rep.iterations = total_iters;
  return {std::move(state), rep};
}

}  // namespace gravortex
