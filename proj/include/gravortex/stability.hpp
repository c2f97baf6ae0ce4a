#pragma once

// Exact algebraic oracles: GIT classification of divisors on P^1, the
// Bradlow bound, the topological constant c, the critical coupling alpha_*,
// the Einstein-Bogomol'nyi coupling, theorem-backed existence verdicts, and
// sigma-slope arithmetic for holomorphic triples.
//
// Everything that decides a boundary case is done in exact rational
// arithmetic; double overloads exist for the numerical solvers.

#include <boost/rational.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gravortex {

using Rational = boost::rational<std::int64_t>;

// Comparisons go through Rational operands: mixed rational/int comparisons
// recurse forever in C++20 with the reversed-operator rules.
inline const Rational kZero{0};

inline double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

/// Parses "p/q", an integer, or a finite decimal ("0.0625", "-1.5e-2") exactly.
inline Rational parse_rational(const std::string& text) {
  auto fail = [&] { throw std::invalid_argument("not a rational number: '" + text + "'"); };
  if (text.empty()) fail();
  if (auto slash = text.find('/'); slash != std::string::npos) {
    try {
      std::size_t a = 0, b = 0;
      const auto p = std::stoll(text.substr(0, slash), &a);
      const auto q = std::stoll(text.substr(slash + 1), &b);
      if (a != slash || b != text.size() - slash - 1 || q == 0) fail();
      return Rational(p, q);
    } catch (const std::logic_error&) {
      fail();
    }
  }
  std::size_t i = 0;
  bool negative = false;
  if (text[i] == '+' || text[i] == '-') negative = text[i++] == '-';
  std::int64_t num = 0, den = 1;
  bool digits = false, dot = false;
  for (; i < text.size(); ++i) {
    const char ch = text[i];
    if (ch >= '0' && ch <= '9') {
      digits = true;
      if (num > (INT64_MAX - 9) / 10) fail();
      num = num * 10 + (ch - '0');
      if (dot) {
        if (den > INT64_MAX / 10) fail();
        den *= 10;
      }
    } else if (ch == '.' && !dot) {
      dot = true;
    } else if (ch == 'e' || ch == 'E') {
      break;
    } else {
      fail();
    }
  }
  if (!digits) fail();
  Rational r(negative ? -num : num, den);
  if (i < text.size()) {
    int e = 0;
    try {
      std::size_t used = 0;
      e = std::stoi(text.substr(i + 1), &used);
      if (used != text.size() - i - 1) fail();
    } catch (const std::logic_error&) {
      fail();
    }
    if (std::abs(e) > 18) fail();
    for (int k = 0; k < std::abs(e); ++k) r = e > 0 ? r * Rational(10) : r / Rational(10);
  }
  return r;
}

inline std::string to_string(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

// ---------------------------------------------------------------------------
// Divisors on P^1

enum class DivisorVerdict { Stable, StrictlyPolystable, Unstable };

inline std::string to_string(DivisorVerdict v) {
  switch (v) {
    case DivisorVerdict::Stable: return "Stable";
    case DivisorVerdict::StrictlyPolystable: return "StrictlyPolystable";
    case DivisorVerdict::Unstable: return "Unstable";
  }
  return "?";
}

struct DivisorClass {
  DivisorVerdict verdict{};
  /// Unstable: the index of the point with 2 n_j > N. Strictly polystable:
  /// the two points of multiplicity N/2. Empty for stable divisors.
  std::vector<std::size_t> witness;
};

/// GIT classification for the SL(2,C)-action, from the multiplicities alone.
inline DivisorClass classify_divisor(const std::vector<int>& multiplicities) {
  if (multiplicities.empty()) throw std::invalid_argument("classify_divisor: empty divisor");
  long long n = 0;
  for (int m : multiplicities) {
    if (m < 1) throw std::invalid_argument("classify_divisor: multiplicities must be positive");
    n += m;
  }
  for (std::size_t j = 0; j < multiplicities.size(); ++j)
    if (2LL * multiplicities[j] > n) return {DivisorVerdict::Unstable, {j}};
  std::vector<std::size_t> half;
  for (std::size_t j = 0; j < multiplicities.size(); ++j)
    if (2LL * multiplicities[j] == n) half.push_back(j);
  if (half.empty()) return {DivisorVerdict::Stable, {}};
  // Some n_j = N/2: the remaining N/2 is either a single point (polystable)
  // or spread over several points, which are then all < N/2 but the divisor
  // is only semistable. Only the first case is polystable.
  if (multiplicities.size() == 2) return {DivisorVerdict::StrictlyPolystable, half};
  return {DivisorVerdict::Unstable, half};
}

inline bool is_polystable(DivisorVerdict v) { return v != DivisorVerdict::Unstable; }

// ---------------------------------------------------------------------------
// Numerical invariants

/// Bradlow's inequality N < tau Vol / (4 pi).
inline bool bradlow_check(int n, double tau, double vol) {
  if (!(tau > 0.0) || !(vol > 0.0)) throw std::invalid_argument("bradlow_check: tau, vol must be positive");
  // At the normalized area 2 pi the bound is tau / 2, compared exactly.
  if (vol == 2.0 * std::numbers::pi) return 2.0 * n < tau;
  return n < tau * vol / (4.0 * std::numbers::pi);
}

/// Bradlow's inequality at area 2 pi, in exact arithmetic: 2N < tau.
inline bool bradlow_check(int n, const Rational& tau) {
  if (tau <= kZero) throw std::invalid_argument("bradlow_check: tau must be positive");
  return Rational(2 * n) < tau;
}

/// c = 2 pi (chi - 2 alpha tau N) / Vol.
inline double topological_constant(int chi, double alpha, double tau, int n, double vol) {
  if (!(vol > 0.0)) throw std::invalid_argument("topological_constant: vol must be positive");
  const double core = chi - 2.0 * alpha * tau * n;
  if (vol == 2.0 * std::numbers::pi) return core;
  return 2.0 * std::numbers::pi * core / vol;
}

/// c at area 2 pi, exactly: chi - 2 alpha tau N.
inline Rational topological_constant(int chi, const Rational& alpha, const Rational& tau, int n) {
  return Rational(chi) - Rational(2) * alpha * tau * Rational(n);
}

/// The coupling making c vanish on the sphere: alpha = 1 / (tau N).
inline double eb_coupling(double tau, int n) {
  if (!(tau > 0.0) || n < 1) throw std::invalid_argument("eb_coupling: needs tau > 0 and N >= 1");
  return 1.0 / (tau * n);
}

inline Rational eb_coupling(const Rational& tau, int n) {
  if (tau <= kZero || n < 1) throw std::invalid_argument("eb_coupling: needs tau > 0 and N >= 1");
  return Rational(1) / (tau * Rational(n));
}

/// alpha_* = (2g - 2) / (2 tau (tau/2 - N)) for genus >= 2 and 0 < N < tau/2.
inline Rational alpha_star(int genus, const Rational& tau, int n) {
  if (genus < 2) throw std::invalid_argument("alpha_star: requires genus >= 2");
  if (n <= 0) throw std::invalid_argument("alpha_star: requires 0 < N");
  if (!(Rational(n) < tau / Rational(2)))
    throw std::invalid_argument("alpha_star: requires N < tau/2 (got N = " + std::to_string(n) +
                                ", tau/2 = " + to_string(tau / Rational(2)) + ")");
  return Rational(2 * genus - 2) / (Rational(2) * tau * (tau / Rational(2) - Rational(n)));
}

inline double alpha_star(int genus, double tau, int n) {
  if (genus < 2) throw std::invalid_argument("alpha_star: requires genus >= 2");
  if (!(n > 0 && 2.0 * n < tau))
    throw std::invalid_argument("alpha_star: requires 0 < N < tau/2");
  return (2.0 * genus - 2.0) / (2.0 * tau * (tau / 2.0 - n));
}

// ---------------------------------------------------------------------------
// Existence oracle

enum class Existence { Exists, ExistsUnique, NotExists, Unknown };

inline std::string to_string(Existence e) {
  switch (e) {
    case Existence::Exists: return "Exists";
    case Existence::ExistsUnique: return "ExistsUnique";
    case Existence::NotExists: return "NotExists";
    case Existence::Unknown: return "Unknown";
  }
  return "?";
}

/// Names of the results a verdict rests on.
namespace tags {
/// Vortex existence and uniqueness iff Bradlow's inequality holds (fixed metric).
inline constexpr const char* kBradlowVortex = "bradlow-vortex-existence";
/// Yang's existence for polystable divisors combined with its converse.
inline constexpr const char* kEinsteinBogomolnyi = "einstein-bogomolnyi-polystable-correspondence";
/// Solutions with alpha > 0 on P^1 force Bradlow and polystability.
inline constexpr const char* kPolystableNecessary = "polystability-necessary";
/// No Einstein-Bogomol'nyi solution for N strings superimposed at one point.
inline constexpr const char* kSuperimposedStrings = "superimposed-strings-nonexistence";
/// Existence for c > 0 and stable divisors (Garcia-Fernandez-Pingali-Yao).
inline constexpr const char* kPositiveConstantExistence = "gpy-positive-c-existence";
/// Existence and uniqueness for genus >= 2 and alpha in [0, alpha_*].
inline constexpr const char* kHigherGenusCriticalCoupling = "higher-genus-critical-coupling";
}  // namespace tags

struct ExistenceVerdict {
  Existence verdict = Existence::Unknown;
  std::string theorem_tag;  // empty iff Unknown
};

inline ExistenceVerdict existence_oracle(int genus, const std::vector<int>& multiplicities,
                                         const Rational& tau, const Rational& alpha) {
  if (genus < 0) throw std::invalid_argument("existence_oracle: genus must be >= 0");
  if (tau <= kZero) throw std::invalid_argument("existence_oracle: tau must be positive");
  const auto cls = classify_divisor(multiplicities);
  int n = 0;
  for (int m : multiplicities) n += m;
  const bool bradlow = bradlow_check(n, tau);

  if (alpha == kZero) {
    return bradlow ? ExistenceVerdict{Existence::ExistsUnique, tags::kBradlowVortex}
                   : ExistenceVerdict{Existence::NotExists, tags::kBradlowVortex};
  }
  if (genus == 0 && alpha > kZero) {
    const Rational c = topological_constant(2, alpha, tau, n);
    if (c == kZero && multiplicities.size() == 1)
      return {Existence::NotExists, tags::kSuperimposedStrings};
    if (!bradlow || cls.verdict == DivisorVerdict::Unstable)
      return {Existence::NotExists, tags::kPolystableNecessary};
    if (c == kZero) return {Existence::Exists, tags::kEinsteinBogomolnyi};
    if (c > kZero && cls.verdict == DivisorVerdict::Stable)
      return {Existence::Exists, tags::kPositiveConstantExistence};
    return {};
  }
  // Any solution solves the vortex equation for its own metric, of area 2 pi.
  if (!bradlow) return {Existence::NotExists, tags::kBradlowVortex};
  if (genus >= 2 && alpha > kZero && alpha <= alpha_star(genus, tau, n))
    return {Existence::ExistsUnique, tags::kHigherGenusCriticalCoupling};
  return {};
}

// ---------------------------------------------------------------------------
// Holomorphic triples

struct TripleInvariants {
  int n1 = 1;
  int n2 = 1;
  std::int64_t d1 = 0;
  std::int64_t d2 = 0;

  Rational mu1() const { return Rational(d1, n1); }
  Rational mu2() const { return Rational(d2, n2); }
};

inline void validate_triple(const TripleInvariants& t) {
  if (t.n1 < 1 || t.n2 < 1) throw std::invalid_argument("triple ranks must be >= 1");
}

struct SigmaSlope {
  Rational degree;
  Rational slope;
};

/// deg_sigma = d1 + d2 + sigma n2, mu_sigma = deg_sigma / (n1 + n2).
/// Ranks may be zero here (subtriples), but not both.
inline SigmaSlope sigma_slope(const TripleInvariants& t, const Rational& sigma) {
  if (t.n1 < 0 || t.n2 < 0 || t.n1 + t.n2 == 0)
    throw std::invalid_argument("sigma_slope: ranks must be nonnegative and not both zero");
  const Rational deg = Rational(t.d1 + t.d2) + sigma * Rational(t.n2);
  return {deg, deg / Rational(t.n1 + t.n2)};
}

struct SigmaRange {
  Rational sigma_m;
  std::optional<Rational> sigma_max;  // empty: unbounded (n1 == n2)

  /// The necessary condition 0 <= sigma_m <= sigma (<= sigma_M) for a
  /// nonempty moduli space.
  bool admits(const Rational& sigma) const {
    if (sigma_m < kZero || sigma < sigma_m) return false;
    return !sigma_max || sigma <= *sigma_max;
  }
};

inline SigmaRange sigma_range(const TripleInvariants& t) {
  validate_triple(t);
  const Rational diff = t.mu1() - t.mu2();
  SigmaRange r{diff, std::nullopt};
  if (t.n1 != t.n2)
    r.sigma_max = (Rational(1) + Rational(t.n1 + t.n2, std::abs(t.n1 - t.n2))) * diff;
  return r;
}

/// Whether a proper-subtriple candidate with invariants `sub` violates
/// sigma-stability (strict = true: mu_sigma(sub) >= mu_sigma(T)) or
/// sigma-semistability (strict = false: mu_sigma(sub) > mu_sigma(T)). Only
/// slope arithmetic is checked; whether such a subtriple exists is not.
inline bool destabilizes(const TripleInvariants& t, const TripleInvariants& sub,
                         const Rational& sigma, bool strict) {
  validate_triple(t);
  if (sub.n1 < 0 || sub.n2 < 0 || sub.n1 > t.n1 || sub.n2 > t.n2)
    throw std::invalid_argument("destabilizes: subtriple ranks must satisfy 0 <= n_i' <= n_i");
  if (sub.n1 + sub.n2 == 0)
    throw std::invalid_argument("destabilizes: subtriple is zero (not proper)");
  if (sub.n1 == t.n1 && sub.n2 == t.n2)
    throw std::invalid_argument("destabilizes: subtriple has full rank (not proper)");
  const Rational mu_sub = sigma_slope(sub, sigma).slope;
  const Rational mu = sigma_slope(t, sigma).slope;
  return strict ? mu_sub >= mu : mu_sub > mu;
}

}  // namespace gravortex
