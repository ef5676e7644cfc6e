#pragma once

// Problem instances for u_t - Δu + |Du|^m = f(x), u(., 0) = u0: exponent,
// dimension, source term, initial data, truncation radius, and the two-sided
// growth envelope that controls f at infinity.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vhj/errors.hpp"
#include "vhj/expression.hpp"

namespace vhj {

using Point = std::array<double, 2>;

inline double norm(const Point &p) { return std::hypot(p[0], p[1]); }

/// Integer exponents are common in every experiment; avoid std::pow for them.
inline double int_or_real_pow(double base, double e) {
  if (e == 2.0) return base * base;
  if (e == 3.0) return base * base * base;
  if (e == 4.0) {
    const double b2 = base * base;
    return b2 * b2;
  }
  return std::pow(base, e);
}

/// Radial function sum_j c_j r^{k_j}, with exponents 0 or >= 2 so that the
/// profile is C^2 at the origin.
struct RadialSeries {
  std::vector<double> coeffs;
  std::vector<double> exponents;

  static RadialSeries power(double c, double k) { return {{c}, {k}}; }

  double value(double r) const {
    double s = 0.0;
    for (std::size_t j = 0; j < coeffs.size(); ++j)
      s += exponents[j] == 0.0 ? coeffs[j] : coeffs[j] * int_or_real_pow(r, exponents[j]);
    return s;
  }
  /// d/dr.
  double d1(double r) const {
    double s = 0.0;
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
      const double k = exponents[j];
      if (k == 0.0) continue;
      s += coeffs[j] * k * (k == 1.0 ? 1.0 : std::pow(r, k - 1.0));
    }
    return s;
  }
  /// d²/dr².
  double d2(double r) const {
    double s = 0.0;
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
      const double k = exponents[j];
      if (k == 0.0 || k == 1.0) continue;
      s += coeffs[j] * k * (k - 1.0) * (k == 2.0 ? 1.0 : std::pow(r, k - 2.0));
    }
    return s;
  }
  /// Laplacian of x -> value(|x|) in dimension n, i.e. sum c k (k+n-2) r^{k-2}.
  double laplacian(double r, int n) const {
    double s = 0.0;
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
      const double k = exponents[j];
      if (k == 0.0) continue;
      s += coeffs[j] * k * (k + n - 2.0) * (k == 2.0 ? 1.0 : std::pow(r, k - 2.0));
    }
    return s;
  }
  /// d/dr of laplacian(r, n).
  double laplacian_d1(double r, int n) const {
    double s = 0.0;
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
      const double k = exponents[j];
      if (k == 0.0 || k == 2.0) continue;
      s += coeffs[j] * k * (k + n - 2.0) * (k - 2.0) * (k == 3.0 ? 1.0 : std::pow(r, k - 3.0));
    }
    return s;
  }
  double max_exponent() const {
    double k = 0.0;
    for (double e : exponents) k = std::max(k, e);
    return k;
  }
  double leading_coeff() const {
    double k = -1.0, c = 0.0;
    for (std::size_t j = 0; j < coeffs.size(); ++j)
      if (exponents[j] > k) {
        k = exponents[j];
        c = coeffs[j];
      }
    return c;
  }
  /// Derivatives of the laplacian exist at the origin only for k = 2 or k >= 3.
  bool smooth_gradient_of_laplacian() const {
    for (double k : exponents)
      if (k > 2.0 && k < 3.0) return false;
    return true;
  }
};

enum class SourceFamily { RadialPower, Manufactured, Expression };

inline const char *to_string(SourceFamily f) {
  switch (f) {
  case SourceFamily::RadialPower: return "radial-power";
  case SourceFamily::Manufactured: return "manufactured";
  case SourceFamily::Expression: return "expression";
  }
  return "?";
}

/// Source term f, bounded from below, with an optional closed-form gradient.
class SourceTerm {
public:
  /// f(x) = a (|x|^2 + eps^2)^{alpha/2} + b.
  static SourceTerm radial_power(double a, double alpha, double b, double eps = 0.0) {
    if (!(alpha >= 0.0) || !std::isfinite(a) || !std::isfinite(b) || !(eps >= 0.0))
      throw RejectionError("radial-power source: need alpha >= 0, eps >= 0 and finite a, b");
    if (a < 0.0 && alpha > 0.0)
      throw RejectionError("radial-power source: a < 0 makes f unbounded from below");
    SourceTerm s;
    s.family_ = SourceFamily::RadialPower;
    s.params_ = {{"a", a}, {"alpha", alpha}, {"b", b}, {"eps", eps}};
    s.radial_ = [=](double r) {
      const double rho = eps == 0.0 ? r : std::hypot(r, eps);
      return a * (alpha == 0.0 ? 1.0 : int_or_real_pow(rho, alpha)) + b;
    };
    s.value_ = [rad = s.radial_](const Point &x) { return rad(norm(x)); };
    s.gradient_ = [=](const Point &x) -> Point {
      const double r2 = x[0] * x[0] + x[1] * x[1] + eps * eps;
      if (alpha == 0.0 || a == 0.0 || r2 == 0.0) return {0.0, 0.0};
      const double c = a * alpha * std::pow(r2, 0.5 * alpha - 1.0);
      return {c * x[0], c * x[1]};
    };
    s.analytic_lower_ = b + (alpha == 0.0 ? a : a * std::pow(eps, alpha));
    s.description_ = "radial-power";
    return s;
  }

  static SourceTerm constant(double c) { return radial_power(0.0, 0.0, c); }

  /// f = lambda_ms - Δφ_ms + |Dφ_ms|^m for the radial target φ_ms, so that
  /// (lambda_ms, φ_ms) solves the ergodic problem exactly.
  static SourceTerm manufactured(const RadialSeries &phi, double lambda, double m, int dim) {
    if (phi.coeffs.size() != phi.exponents.size() || phi.coeffs.empty())
      throw RejectionError("manufactured source: empty or mismatched target series");
    for (double k : phi.exponents)
      if (!(k == 0.0 || k >= 2.0))
        throw RejectionError("manufactured source: target exponents must be 0 or >= 2 (C^2 at 0)");
    if (phi.max_exponent() < 2.0 || !(phi.leading_coeff() > 0.0))
      throw RejectionError(
          "manufactured source: target is not coercive, |Dphi|^m cannot dominate the Laplacian");
    if (!(m > 2.0)) throw RejectionError("manufactured source: need m > 2");
    SourceTerm s;
    s.family_ = SourceFamily::Manufactured;
    s.params_ = {{"lambda", lambda}, {"m", m}, {"dim", double(dim)}};
    s.phi_ = phi;
    s.lambda_ = lambda;
    s.radial_ = [=](double r) {
      return lambda - phi.laplacian(r, dim) + int_or_real_pow(std::abs(phi.d1(r)), m);
    };
    s.value_ = [rad = s.radial_](const Point &x) { return rad(norm(x)); };
    if (phi.smooth_gradient_of_laplacian()) {
      s.gradient_ = [=](const Point &x) -> Point {
        const double r = norm(x);
        if (r == 0.0) return {0.0, 0.0};
        const double p = phi.d1(r);
        const double dfr = -phi.laplacian_d1(r, dim) +
                           m * std::pow(std::abs(p), m - 2.0) * p * phi.d2(r);
        return {dfr * x[0] / r, dfr * x[1] / r};
      };
    }
    s.description_ = "manufactured";
    return s;
  }

  /// User closed form; the gradient comes from forward-mode differentiation.
  static SourceTerm expression(const Expression &e, std::optional<double> lower = std::nullopt) {
    if (e.empty()) throw ConfigurationError("expression source: empty expression");
    SourceTerm s;
    s.family_ = SourceFamily::Expression;
    s.value_ = [e](const Point &x) { return e(x[0], x[1]); };
    s.gradient_ = [e](const Point &x) -> Point {
      const Dual d = e.eval_dual(x[0], x[1]);
      return {d.d[0], d.d[1]};
    };
    s.analytic_lower_ = lower;
    s.description_ = e.text();
    return s;
  }

  double operator()(const Point &x) const { return value_(x); }
  double operator()(double x) const { return value_({x, 0.0}); }

  bool has_gradient() const { return static_cast<bool>(gradient_); }
  std::optional<Point> gradient(const Point &x) const {
    if (!gradient_) return std::nullopt;
    return gradient_(x);
  }

  bool is_radial() const { return static_cast<bool>(radial_); }
  /// Radial profile f(r); only for radial families.
  double radial(double r) const {
    if (!radial_) throw ConfigurationError("source term is not radial");
    return radial_(r);
  }

  /// Greatest known constant below inf f: analytic when the family provides
  /// one, otherwise the minimum over a dense sample of [-radius, radius]^dim.
  double lower_bound(double radius, int dim) const {
    if (analytic_lower_) return *analytic_lower_;
    double lo = std::numeric_limits<double>::infinity();
    const int n = dim == 1 ? 4001 : 201;
    for (int j = 0; j < (dim == 1 ? 1 : n); ++j)
      for (int i = 0; i < n; ++i) {
        const double x = -radius + 2.0 * radius * i / (n - 1);
        const double y = dim == 1 ? 0.0 : -radius + 2.0 * radius * j / (n - 1);
        const double v = value_({x, y});
        if (!std::isfinite(v))
          throw ConfigurationError("source term is not finite at (" + std::to_string(x) + ", " +
                                   std::to_string(y) + ")");
        lo = std::min(lo, v);
      }
    return lo;
  }
  std::optional<double> analytic_lower_bound() const { return analytic_lower_; }

  /// f + c; the ergodic constant shifts by c.
  SourceTerm shifted(double c) const {
    SourceTerm s = *this;
    auto v = value_;
    s.value_ = [v, c](const Point &x) { return v(x) + c; };
    if (radial_) {
      auto rad = radial_;
      s.radial_ = [rad, c](double r) { return rad(r) + c; };
    }
    if (analytic_lower_) s.analytic_lower_ = *analytic_lower_ + c;
    if (lambda_) s.lambda_ = *lambda_ + c;
    s.params_["shift"] = (params_.count("shift") ? params_.at("shift") : 0.0) + c;
    return s;
  }

  SourceFamily family() const { return family_; }
  const std::map<std::string, double> &parameters() const { return params_; }
  const std::string &description() const { return description_; }
  /// Target profile and constant of a manufactured source.
  const std::optional<RadialSeries> &manufactured_phi() const { return phi_; }
  std::optional<double> manufactured_lambda() const { return lambda_; }

private:
  SourceFamily family_ = SourceFamily::Expression;
  std::map<std::string, double> params_;
  std::function<double(const Point &)> value_;
  std::function<Point(const Point &)> gradient_;
  std::function<double(double)> radial_;
  std::optional<double> analytic_lower_;
  std::optional<RadialSeries> phi_;
  std::optional<double> lambda_;
  std::string description_;
};

enum class InitialFamily { Zero, Polynomial, Exponential, ShiftedErgodic, Expression };

inline const char *to_string(InitialFamily f) {
  switch (f) {
  case InitialFamily::Zero: return "zero";
  case InitialFamily::Polynomial: return "polynomial";
  case InitialFamily::Exponential: return "exponential";
  case InitialFamily::ShiftedErgodic: return "shifted-ergodic";
  case InitialFamily::Expression: return "expression";
  }
  return "?";
}

/// Initial datum u0, bounded from below.
class InitialData {
public:
  static InitialData zero() {
    InitialData d;
    d.family_ = InitialFamily::Zero;
    d.value_ = [](const Point &) { return 0.0; };
    d.lower_ = 0.0;
    return d;
  }
  static InitialData constant(double c) {
    InitialData d = polynomial(RadialSeries{{c}, {0.0}});
    return d;
  }
  /// sum_j c_j |x|^{k_j}.
  static InitialData polynomial(const RadialSeries &p) {
    InitialData d;
    d.family_ = InitialFamily::Polynomial;
    d.value_ = [p](const Point &x) { return p.value(norm(x)); };
    bool nonneg = true;
    double c0 = 0.0;
    for (std::size_t j = 0; j < p.coeffs.size(); ++j) {
      if (p.exponents[j] == 0.0) c0 += p.coeffs[j];
      else if (p.coeffs[j] < 0.0) nonneg = false;
    }
    if (nonneg) d.lower_ = c0;
    return d;
  }
  /// a exp(b |x|) + c.
  static InitialData exponential(double a, double b, double c = 0.0) {
    InitialData d;
    d.family_ = InitialFamily::Exponential;
    d.value_ = [=](const Point &x) { return a * std::exp(b * norm(x)) + c; };
    if (a >= 0.0 && b >= 0.0) d.lower_ = a + c;
    return d;
  }
  /// φ + shift for a closed-form radial φ.
  static InitialData shifted_ergodic(const RadialSeries &phi, double shift) {
    InitialData d;
    d.family_ = InitialFamily::ShiftedErgodic;
    d.value_ = [phi, shift](const Point &x) { return phi.value(norm(x)) + shift; };
    return d;
  }
  static InitialData expression(const Expression &e) {
    if (e.empty()) throw ConfigurationError("expression initial data: empty expression");
    InitialData d;
    d.family_ = InitialFamily::Expression;
    d.value_ = [e](const Point &x) { return e(x[0], x[1]); };
    return d;
  }

  double operator()(const Point &x) const { return value_(x); }
  double operator()(double x) const { return value_({x, 0.0}); }
  InitialFamily family() const { return family_; }

  /// u0 + c.
  InitialData shifted(double c) const {
    InitialData d = *this;
    auto v = value_;
    d.value_ = [v, c](const Point &x) { return v(x) + c; };
    if (lower_) d.lower_ = *lower_ + c;
    return d;
  }

  double lower_bound(double radius, int dim) const {
    if (lower_) return *lower_;
    double lo = std::numeric_limits<double>::infinity();
    const int n = dim == 1 ? 4001 : 201;
    for (int j = 0; j < (dim == 1 ? 1 : n); ++j)
      for (int i = 0; i < n; ++i) {
        const double x = -radius + 2.0 * radius * i / (n - 1);
        const double y = dim == 1 ? 0.0 : -radius + 2.0 * radius * j / (n - 1);
        lo = std::min(lo, value_({x, y}));
      }
    if (!std::isfinite(lo)) throw ConfigurationError("initial data is not finite on the domain");
    return lo;
  }

private:
  InitialFamily family_ = InitialFamily::Zero;
  std::function<double(const Point &)> value_;
  std::optional<double> lower_;
};

/// Increasing radial envelope φ with φ0^{-1} r^α <= φ(r) and
/// f0^{-1} φ(|x|) - f0 <= f(x) <= f0 (φ(|x|) + 1).
struct GrowthEnvelope {
  double alpha = 1.0;
  double phi0 = 1.0;
  double f0 = 1.0;
  std::function<double(double)> envelope;
  std::string description;

  /// φ(r) = c r^k.
  static GrowthEnvelope power(double alpha, double phi0, double f0, double c, double k) {
    GrowthEnvelope g{alpha, phi0, f0, [c, k](double r) { return c * std::pow(r, k); },
                     "power"};
    g.check();
    return g;
  }
  /// φ(r) = r^alpha.
  static GrowthEnvelope monomial(double alpha, double phi0, double f0) {
    return power(alpha, phi0, f0, 1.0, alpha);
  }
  static GrowthEnvelope expression(double alpha, double phi0, double f0, const Expression &e) {
    GrowthEnvelope g{alpha, phi0, f0, [e](double r) { return e(r, 0.0); }, e.text()};
    g.check();
    return g;
  }

  void check() const {
    if (!(alpha > 0.0) || !(phi0 > 0.0) || !(f0 > 0.0))
      throw RejectionError("growth envelope: alpha, phi0 and f0 must be positive");
  }
};

/// Full instance of the Cauchy problem truncated to the ball of radius R.
struct ProblemSpec {
  double m = 3.0;
  int dim = 1;
  SourceTerm source = SourceTerm::constant(0.0);
  InitialData initial = InitialData::zero();
  double radius = 1.0;
  std::optional<GrowthEnvelope> envelope;

  void validate() const {
    if (!(m > 2.0)) throw ConfigurationError("problem: exponent m must satisfy m > 2");
    if (dim != 1 && dim != 2) throw ConfigurationError("problem: dim must be 1 or 2");
    if (!(radius > 0.0)) throw ConfigurationError("problem: radius must be positive");
  }

  /// (f + c1, u0 + c2): the solution becomes u + c1 t + c2.
  ProblemSpec shifted(double c1, double c2) const {
    ProblemSpec p = *this;
    p.source = source.shifted(c1);
    p.initial = initial.shifted(c2);
    return p;
  }
};

/// Outcome of a sampled two-sided growth check.
struct ValidationReport {
  bool pass = true;
  /// Largest signed violation over all sampled inequalities (<= slack when passing).
  double max_violation = -std::numeric_limits<double>::infinity();
  Point witness{0.0, 0.0};
  /// Which inequality produced max_violation.
  std::string inequality;
  std::size_t samples = 0;
};

/// Sampled check of the growth hypothesis on B_radius. `per_decade` radii are
/// taken per decade on [1e-4 radius, radius] plus the origin; in 2D each
/// radius is probed along 16 directions.
inline ValidationReport validate_h1(const SourceTerm &source, const GrowthEnvelope &env,
                                    double radius, std::size_t per_decade = 10000, int dim = 1) {
  if (per_decade < 100) throw RejectionError("validate_h1: need at least 100 samples");
  if (!(radius > 0.0)) throw RejectionError("validate_h1: radius must be positive");
  env.check();
  constexpr double slack = 1e-12;
  constexpr double decades = 4.0;
  const std::size_t count = static_cast<std::size_t>(per_decade * decades) + 1;
  std::vector<double> radii{0.0};
  radii.reserve(count + 1);
  for (std::size_t k = 0; k < count; ++k)
    radii.push_back(radius * std::pow(10.0, -decades + decades * double(k) / double(count - 1)));

  ValidationReport rep;
  auto record = [&](double v, const Point &x, const char *which) {
    if (v > rep.max_violation) {
      rep.max_violation = v;
      rep.witness = x;
      rep.inequality = which;
    }
  };
  const int dirs = dim == 1 ? 2 : 16;
  double prev_env = -std::numeric_limits<double>::infinity();
  for (double r : radii) {
    const double e = env.envelope(r);
    if (!std::isfinite(e)) throw EnvelopeError("growth envelope is not finite at r = " + std::to_string(r));
    if (e < prev_env - 1e-12 * std::max(1.0, std::abs(prev_env)))
      throw EnvelopeError("growth envelope is not increasing near r = " + std::to_string(r));
    prev_env = e;
    record(std::pow(r, env.alpha) / env.phi0 - e, {r, 0.0}, "envelope-floor");
    for (int d = 0; d < dirs; ++d) {
      const double th = 2.0 * 3.14159265358979323846 * d / dirs;
      const Point x = dim == 1 ? Point{d == 0 ? r : -r, 0.0} : Point{r * std::cos(th), r * std::sin(th)};
      const double fx = source(x);
      if (!std::isfinite(fx))
        throw ConfigurationError("validate_h1: source not finite at |x| = " + std::to_string(r));
      record(e / env.f0 - env.f0 - fx, x, "lower");
      record(fx - env.f0 * (e + 1.0), x, "upper");
      ++rep.samples;
    }
  }
  rep.pass = rep.max_violation <= slack;
  return rep;
}

/// Source whose ergodic pair is (lambda_ms, φ_ms) by construction.
inline SourceTerm manufacture_source(const RadialSeries &target_phi, double lambda_ms, double m,
                                     int dim) {
  return SourceTerm::manufactured(target_phi, lambda_ms, m, dim);
}

} // namespace vhj
