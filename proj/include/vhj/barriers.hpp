#pragma once

// Barrier profiles χ (blows up at b) and ξ (saturates at M), the parameter
// inequality each must satisfy, and the sub/supersolutions assembled from an
// ergodic pair:
//   V   = φ + χ(φ - (t + t0)) + ψ(t)
//   U   = t + t0 + ξ(φ - (t + t0)) - ψ(t)
//   V_R = φ + ĉ + χ(φ + ĉ - (t + R)) + I_R(t) + 1/R
//   U_R = t + R + ξ(φ + ĉ - (t + R)) - I_R(t) - 1/R
// with ψ(t) = (1-β) ∫_0^t ((τ+t0)^α̂ + 1)^{-β̂} dτ, I_R(t) = ∫_R^{t+R} (τ^α̂ + 1)^{-β̂} dτ
// and β̂ = β / (1 - β).

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "vhj/ergodic.hpp"
#include "vhj/errors.hpp"
#include "vhj/grid.hpp"
#include "vhj/model.hpp"
#include "vhj/ode.hpp"

namespace vhj {

/// Outcome of a sampled inequality or sign check.
struct InequalityReport {
  bool pass = true;
  /// Worst signed violation; <= 0 (or below the stated tolerance) when passing.
  double max_violation = -std::numeric_limits<double>::infinity();
  std::size_t violations = 0;
  std::size_t samples = 0;
  /// Location of the worst sample: s, or (x, y, t) for residual checks.
  std::array<double, 3> witness{0.0, 0.0, 0.0};
  /// Smallest RHS/LHS ratio seen (barrier inequalities), or the tolerance used.
  double tightest_ratio = std::numeric_limits<double>::infinity();
  /// Residual checks only: the reported tolerance and the worst signed residual.
  double tolerance = 0.0;
  double worst_residual = 0.0;
  std::string name;
};

namespace detail {

/// Adaptive Simpson quadrature.
template <class F> double simpson(F &&f, double a, double b, double tol, int depth = 50) {
  auto rec = [&](auto &&self, double a0, double b0, double fa, double fm, double fb, double whole, double eps,
                 int d) -> double {
    const double m = 0.5 * (a0 + b0);
    const double lm = 0.5 * (a0 + m), rm = 0.5 * (m + b0);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a0) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b0 - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double diff = left + right - whole;
    if (d <= 0 || std::abs(diff) <= 15.0 * eps) return left + right + diff / 15.0;
    return self(self, a0, m, fa, flm, fm, left, 0.5 * eps, d - 1) +
           self(self, m, b0, fm, frm, fb, right, 0.5 * eps, d - 1);
  };
  if (b <= a) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return rec(rec, a, b, fa, fm, fb, whole, tol, depth);
}

/// (1+g)^m - (1+g) without cancellation for small g.
inline double power_gap(double g, double m) { return (1.0 + g) * std::expm1((m - 1.0) * std::log1p(g)); }

} // namespace detail

/// Tabulated χ with χ'' = C (χ')^β1 (1 + χ')^β2, χ(0) = χ'(0) = 0 on its
/// nontrivial branch; χ ≡ 0 for s <= 0 and χ = +inf past the table end.
struct ChiBarrier {
  double C = 1.0, beta1 = 0.5, beta2 = 1.5;
  double cap = 1e8;
  double b = 0.0;
  /// Stopping abscissae at the extrapolation caps, for inspection.
  std::vector<std::pair<double, double>> cap_abscissae;
  std::vector<double> s;
  std::vector<std::array<double, 2>> y;  // (χ, χ')
  std::vector<std::array<double, 2>> dy; // (χ', χ'')

  double rhs(double g) const { return C * std::pow(g, beta1) * std::pow(1.0 + g, beta2); }
  double end() const { return s.back(); }

  double value(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= end()) return std::numeric_limits<double>::infinity();
    if (x < s.front()) return y.front()[0] * std::pow(x / s.front(), 1.0 / (1.0 - beta1) + 1.0);
    return hermite<2>(s, y, dy, 0, x);
  }
  double d1(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= end()) return std::numeric_limits<double>::infinity();
    if (x < s.front()) return y.front()[1] * std::pow(x / s.front(), 1.0 / (1.0 - beta1));
    return hermite<2>(s, y, dy, 1, x);
  }
  double d2(double x) const {
    const double g = d1(x);
    return x <= 0.0 ? 0.0 : rhs(g);
  }
};

/// Tabulated ξ with ξ'' = -C (1 - ξ')^η1 (ξ')^η2, ξ(0) = 0, ξ'(0) = 1 on its
/// nontrivial branch; ξ(s) = s for s <= 0. The table also carries 1 - ξ',
/// which underflows to nothing in ξ' itself for small s.
struct XiBarrier {
  double C = 1.0, eta1 = 0.5, eta2 = 1.0;
  double s_max = 10.0;
  double M = 0.0;
  std::vector<double> s;
  std::vector<std::array<double, 3>> y;  // (ξ, ξ', 1 - ξ')
  std::vector<std::array<double, 3>> dy; // (ξ', ξ'', -ξ'')

  double rhs_h(double h) const { return C * std::pow(h, eta1) * std::pow(std::max(1.0 - h, 0.0), eta2); }
  double rhs(double d) const { return -C * std::pow(std::max(1.0 - d, 0.0), eta1) * std::pow(d, eta2); }

  double value(double x) const {
    if (x <= 0.0) return x;
    if (x < s.front())
      return x - (s.front() - y.front()[0]) * std::pow(x / s.front(), 1.0 / (1.0 - eta1) + 1.0);
    if (x <= s.back()) return hermite<3>(s, y, dy, 0, x);
    // Past the table: monotone saturation towards M matching value and slope.
    const double gap = M - y.back()[0];
    const double slope = y.back()[1];
    if (gap <= 0.0 || slope <= 0.0) return y.back()[0];
    return M - gap * std::exp(-(x - s.back()) * slope / gap);
  }
  double d1(double x) const {
    if (x <= 0.0) return 1.0;
    if (x < s.front()) return 1.0 - gap(x);
    if (x <= s.back()) return hermite<3>(s, y, dy, 1, x);
    const double g = M - y.back()[0];
    const double slope = y.back()[1];
    if (g <= 0.0 || slope <= 0.0) return 0.0;
    return slope * std::exp(-(x - s.back()) * slope / g);
  }
  /// 1 - ξ'(x), accurate when ξ' is close to 1.
  double gap(double x) const {
    if (x <= 0.0) return 0.0;
    if (x < s.front()) return y.front()[2] * std::pow(x / s.front(), 1.0 / (1.0 - eta1));
    if (x <= s.back()) return hermite<3>(s, y, dy, 2, x);
    return 1.0 - d1(x);
  }
  double d2(double x) const { return x <= 0.0 ? 0.0 : -rhs_h(gap(x)); }
};

/// Smallest abscissa >= 1e-8 where ((1 - e) C s)^{1/(1-e)} >= 1e-250.
inline double seed_abscissa(double C, double e) {
  const double floor_s = std::pow(1e-250, 1.0 - e) / ((1.0 - e) * C);
  return std::max(1e-8, floor_s);
}

/// Integrates χ to χ' = cap and extrapolates the blow-up abscissa b from the
/// stopping points at cap/1e4, cap/1e2 and cap.
inline ChiBarrier integrate_chi(double C, double beta1, double beta2, double cap = 1e8) {
  if (!(C > 0.0)) throw RejectionError("chi: C must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw RejectionError("chi: beta1 must lie in (0, 1)");
  if (!(beta2 > 1.0 && beta2 < 2.0)) throw RejectionError("chi: beta2 must lie in (1, 2)");
  if (!(beta1 + beta2 > 1.0)) throw RejectionError("chi: need beta1 + beta2 > 1");
  if (!(cap > 1e4)) throw RejectionError("chi: cap must exceed 1e4");
  ChiBarrier chi;
  chi.C = C;
  chi.beta1 = beta1;
  chi.beta2 = beta2;
  chi.cap = cap;

  // Seed from g ≈ ((1 - β1) C s)^{1/(1-β1)}, χ = ∫ g, at s0 = 1e-8 or later
  // if the seed would underflow (β1 near 1).
  const double q = 1.0 / (1.0 - beta1);
  const double s0 = seed_abscissa(C, beta1);
  const double g0 = std::pow((1.0 - beta1) * C * s0, q);
  const double chi0 = g0 * s0 / (q + 1.0);

  OdeOptions o;
  o.rtol = 1e-12;
  o.atol = 1e-300;
  o.initial_step = s0 * 1e-2;
  o.max_step = 1e-2;
  auto f1 = [&](double, const std::array<double, 2> &y) -> std::array<double, 2> {
    return {y[1], chi.rhs(y[1])};
  };
  auto phase1 = integrate_dp45<2>(f1, s0, {chi0, g0}, 1e6, o,
                                  [](double, const std::array<double, 2> &y) { return y[1] >= 1.0; });
  if (!phase1.stopped) throw IntegrationError("chi: slope never reached 1");
  chi.s = phase1.t;
  chi.y = phase1.y;
  chi.dy = phase1.dy;

  // Past g = 1 use w = ln g as the independent variable: state (s, χ).
  const double w0 = std::log(chi.y.back()[1]);
  auto f2 = [&](double w, const std::array<double, 2> &) -> std::array<double, 2> {
    const double g = std::exp(w);
    const double ds = g / chi.rhs(g);
    return {ds, g * ds};
  };
  OdeOptions o2;
  o2.rtol = 1e-12;
  o2.atol = 1e-14;
  o2.initial_step = 1e-4;
  o2.max_step = 0.01;
  const std::array<double, 3> caps{cap * 1e-4, cap * 1e-2, cap};
  std::array<double, 2> state{chi.s.back(), chi.y.back()[0]};
  double w = w0;
  for (double c : caps) {
    const double w1 = std::log(c);
    if (w1 <= w) continue;
    auto seg = integrate_dp45<2>(f2, w, state, w1, o2);
    for (std::size_t k = 1; k < seg.t.size(); ++k) {
      const double g = std::exp(seg.t[k]);
      chi.s.push_back(seg.y[k][0]);
      chi.y.push_back({seg.y[k][1], g});
      chi.dy.push_back({g, chi.rhs(g)});
    }
    state = seg.y.back();
    w = w1;
    chi.cap_abscissae.emplace_back(c, state[0]);
  }
  // Near the wall χ' ~ (p C (b - s))^{-1/p}, so b - s(cap) ∝ cap^{-p}.
  const double p = beta1 + beta2 - 1.0;
  const auto &ca = chi.cap_abscissae;
  const double ratio = std::pow(ca[2].first / ca[1].first, p);
  chi.b = ca[2].second + (ca[2].second - ca[1].second) / (ratio - 1.0);
  return chi;
}

/// Integrates ξ on [0, s_max]; M = ξ(s_max) + ∫_0^{ξ'(s_max)} y^{1-η2} / (C (1-y)^η1) dy.
/// s_max <= 0 selects the end automatically: ξ' <= 1e-8 or s = 1e4.
inline XiBarrier integrate_xi(double C, double eta1, double eta2, double s_max = 0.0) {
  if (!(C > 0.0)) throw RejectionError("xi: C must be positive");
  if (!(eta1 > 0.0 && eta1 < 1.0)) throw RejectionError("xi: eta1 must lie in (0, 1)");
  if (!(eta2 > 0.0 && eta2 < 2.0)) throw RejectionError("xi: eta2 must lie in (0, 2)");
  if (!(eta1 + eta2 > 1.0)) throw RejectionError("xi: need eta1 + eta2 > 1");
  const bool automatic = !(s_max > 0.0);
  const double limit = automatic ? 1e4 : s_max;
  XiBarrier xi;
  xi.C = C;
  xi.eta1 = eta1;
  xi.eta2 = eta2;

  const double q = 1.0 / (1.0 - eta1);
  const double s0 = seed_abscissa(C, eta1);
  const double h0 = std::pow((1.0 - eta1) * C * s0, q);
  const double xi0 = s0 - h0 * s0 / (q + 1.0);

  // Phase 1: h = 1 - ξ' while h < 1/2 (keeps relative accuracy in h).
  OdeOptions o;
  o.rtol = 1e-12;
  o.atol = 1e-300;
  o.initial_step = s0 * 1e-2;
  o.max_step = 1e-2;
  auto f1 = [&](double, const std::array<double, 2> &y) -> std::array<double, 2> {
    return {1.0 - y[1], xi.rhs_h(y[1])};
  };
  auto phase1 = integrate_dp45<2>(f1, s0, {xi0, h0}, limit, o,
                                  [](double, const std::array<double, 2> &y) { return y[1] >= 0.5; });
  for (std::size_t k = 0; k < phase1.t.size(); ++k) {
    const double h = phase1.y[k][1];
    const double dh = xi.rhs_h(h);
    xi.s.push_back(phase1.t[k]);
    xi.y.push_back({phase1.y[k][0], 1.0 - h, h});
    xi.dy.push_back({1.0 - h, -dh, dh});
  }
  // Phase 2: ξ' directly (keeps relative accuracy as ξ' -> 0).
  if (xi.s.back() < limit) {
    OdeOptions o2;
    o2.rtol = 1e-12;
    o2.atol = 1e-300;
    o2.initial_step = 1e-4;
    o2.max_step = 1e-2;
    auto f2 = [&](double, const std::array<double, 2> &y) -> std::array<double, 2> {
      return {y[1], xi.rhs(y[1])};
    };
    auto stop = [&](double s, const std::array<double, 2> &y) {
      return automatic && s >= 10.0 && y[1] <= 1e-8;
    };
    auto phase2 = integrate_dp45<2>(f2, xi.s.back(), {xi.y.back()[0], xi.y.back()[1]}, limit, o2, stop);
    for (std::size_t k = 1; k < phase2.t.size(); ++k) {
      const double d = phase2.y[k][1];
      const double dd = xi.rhs(d);
      xi.s.push_back(phase2.t[k]);
      xi.y.push_back({phase2.y[k][0], d, 1.0 - d});
      xi.dy.push_back({d, dd, -dd});
    }
  }
  xi.s_max = xi.s.back();
  // Tail with y = Y u^{1/(2-η2)}, which removes the endpoint singularity at 0.
  const double Y = xi.y.back()[1];
  const double e = 1.0 / (2.0 - eta2);
  const double tail =
      std::pow(Y, 2.0 - eta2) * e / C *
      detail::simpson([&](double u) { return std::pow(1.0 - Y * std::pow(u, e), -eta1); }, 0.0, 1.0, 1e-14);
  xi.M = xi.y.back()[0] + tail;
  return xi;
}

/// Left side of the χ inequality as a function of g = χ'.
inline double chi_inequality_lhs(const ChiBarrier &chi, double g, double m) {
  const double ratio = chi.rhs(g) / std::pow(detail::power_gap(g, m), 2.0 / m);
  return (m - 2.0) / m * std::pow(ratio, m / (m - 2.0));
}

/// Left side of the ξ inequality as a function of h = 1 - ξ'.
inline double xi_inequality_lhs(const XiBarrier &xi, double h, double m) {
  const double d = 1.0 - h;
  const double gap = -d * std::expm1((m - 1.0) * std::log1p(-h));
  const double ratio = xi.rhs_h(h) / std::pow(gap, 2.0 / m);
  return (m - 2.0) / m * std::pow(ratio, m / (m - 2.0));
}

namespace detail {

inline void record_inequality(InequalityReport &rep, double lhs, double rhs, double s) {
  ++rep.samples;
  const double v = lhs - rhs;
  if (v > 1e-10 * std::max(1.0, rhs)) ++rep.violations;
  if (v > rep.max_violation) {
    rep.max_violation = v;
    rep.witness = {s, 0.0, 0.0};
  }
  if (lhs > 0.0) rep.tightest_ratio = std::min(rep.tightest_ratio, rhs / lhs);
}

/// Log-spaced abscissae on [lo, hi) refined towards both ends.
inline std::vector<double> two_sided_log_samples(double lo, double hi, std::size_t n, bool towards_wall) {
  std::vector<double> out;
  out.reserve(n);
  const std::size_t half = towards_wall ? n / 2 : n;
  const double mid = towards_wall ? 0.5 * (lo + hi) : hi;
  for (std::size_t k = 0; k < half; ++k)
    out.push_back(lo * std::pow(mid / lo, double(k) / double(std::max<std::size_t>(half - 1, 1))));
  if (towards_wall) {
    const double gap_hi = hi - mid, gap_lo = std::max((hi - lo) * 1e-12, 1e-15);
    for (std::size_t k = 0; k < n - half; ++k)
      out.push_back(hi - gap_hi * std::pow(gap_lo / gap_hi, double(k + 1) / double(n - half)));
  }
  return out;
}

} // namespace detail

/// (m-2)/m (χ'' / [(1+χ')^m - (1+χ')]^{2/m})^{m/(m-2)} <= (χ')^β over log-spaced s
/// covering s -> 0, the middle, and the approach to the table end.
inline InequalityReport verify_barrier_inequality(const ChiBarrier &chi, double m, double beta,
                                                  std::size_t samples = 20000) {
  if (!(m > 2.0)) throw RejectionError("barrier inequality: need m > 2");
  if (!(beta > 0.0 && beta < 1.0)) throw RejectionError("barrier inequality: beta must lie in (0, 1)");
  InequalityReport rep;
  rep.name = "chi";
  for (double s : detail::two_sided_log_samples(chi.s.front(), chi.end(), samples, true)) {
    const double g = chi.d1(s);
    if (!(g > 0.0) || !std::isfinite(g)) continue;
    detail::record_inequality(rep, chi_inequality_lhs(chi, g, m), std::pow(g, beta), s);
  }
  rep.pass = rep.violations == 0;
  return rep;
}

/// (m-2)/m (-ξ'' / [ξ' - (ξ')^m]^{2/m})^{m/(m-2)} <= (1 - ξ')^β over log-spaced s.
inline InequalityReport verify_barrier_inequality(const XiBarrier &xi, double m, double beta,
                                                  std::size_t samples = 20000) {
  if (!(m > 2.0)) throw RejectionError("barrier inequality: need m > 2");
  if (!(beta > 0.0 && beta < 1.0)) throw RejectionError("barrier inequality: beta must lie in (0, 1)");
  InequalityReport rep;
  rep.name = "xi";
  for (double s : detail::two_sided_log_samples(xi.s.front(), xi.s.back(), samples, false)) {
    const double h = xi.gap(s);
    if (!(h > 0.0 && h < 1.0)) continue;
    detail::record_inequality(rep, xi_inequality_lhs(xi, h, m), std::pow(h, beta), s);
  }
  rep.pass = rep.violations == 0;
  return rep;
}

enum class AssemblyKind { Super, Sub, SuperShifted, SubShifted };

inline const char *to_string(AssemblyKind k) {
  switch (k) {
  case AssemblyKind::Super: return "super";
  case AssemblyKind::Sub: return "sub";
  case AssemblyKind::SuperShifted: return "super-shifted";
  case AssemblyKind::SubShifted: return "sub-shifted";
  }
  return "?";
}

inline bool is_super(AssemblyKind k) { return k == AssemblyKind::Super || k == AssemblyKind::SuperShifted; }
inline bool is_shifted(AssemblyKind k) {
  return k == AssemblyKind::SuperShifted || k == AssemblyKind::SubShifted;
}

struct AssemblyParams {
  /// t0 for the plain kinds, R for the shifted ones.
  double shift = 1.0;
  double beta = 0.7;
  double alpha_hat = 1.0;
  double c_hat = 0.0;
};

/// Sub- or supersolution assembled from an ergodic pair and a barrier profile.
class BarrierAssembly {
public:
  BarrierAssembly(AssemblyKind kind, const ErgodicPair &pair, std::optional<ChiBarrier> chi,
                  std::optional<XiBarrier> xi, const AssemblyParams &p)
      : kind_(kind), pair_(pair), chi_(std::move(chi)), xi_(std::move(xi)), p_(p) {
    if (!(p.beta > 0.0 && p.beta < 1.0)) throw RejectionError("assembly: beta must lie in (0, 1)");
    if (!(p.alpha_hat > 0.0)) throw RejectionError("assembly: alpha_hat must be positive");
    if (!(p.shift > 0.0)) throw RejectionError("assembly: t0 (or R) must be positive");
    beta_hat_ = p.beta / (1.0 - p.beta);
    if (!(p.alpha_hat * beta_hat_ > 1.0))
      throw RejectionError("assembly: alpha_hat * beta/(1-beta) must exceed 1 for a finite sigma");
    if (is_super(kind) && !chi_) throw ConfigurationError("assembly: super kinds need a chi profile");
    if (!is_super(kind) && !xi_) throw ConfigurationError("assembly: sub kinds need a xi profile");
    sigma_ = (1.0 - p.beta) * tail_integral(p.shift);
  }

  AssemblyKind kind() const { return kind_; }
  const AssemblyParams &params() const { return p_; }
  double beta_hat() const { return beta_hat_; }
  double sigma() const { return sigma_; }
  double lambda() const { return pair_.lambda; }
  const ErgodicPair &pair() const { return pair_; }
  const std::optional<ChiBarrier> &chi() const { return chi_; }
  const std::optional<XiBarrier> &xi() const { return xi_; }

  /// ∫_a^{a+t} ((τ)^α̂ + 1)^{-β̂} dτ; closed form for α̂ = 1.
  double window_integral(double a, double t) const {
    if (t <= 0.0) return 0.0;
    const double bh = beta_hat_;
    if (p_.alpha_hat == 1.0) {
      if (bh == 1.0) return std::log((a + t + 1.0) / (a + 1.0));
      return (std::pow(a + 1.0, 1.0 - bh) - std::pow(a + t + 1.0, 1.0 - bh)) / (bh - 1.0);
    }
    return detail::simpson([&](double tau) { return rate_at(tau); }, a, a + t, 1e-14);
  }

  /// ψ(t), or I_R(t) for the shifted kinds (which carry no (1-β) factor).
  double psi(double t) const {
    const double w = window_integral(p_.shift, t);
    return is_shifted(kind_) ? w : (1.0 - p_.beta) * w;
  }
  double psi_rate(double t) const {
    const double r = rate_at(t + p_.shift);
    return is_shifted(kind_) ? r : (1.0 - p_.beta) * r;
  }

  /// Argument of χ or ξ for φ(x) = phi_x at time t.
  double argument(double phi_x, double t) const {
    return phi_x + (is_shifted(kind_) ? p_.c_hat : 0.0) - (t + p_.shift);
  }

  /// Q membership: the χ argument stays below the wall (sub kinds: everywhere).
  bool in_q(double phi_x, double t) const {
    if (!is_super(kind_)) return true;
    return argument(phi_x, t) < chi_->end();
  }

  /// Barrier value; +inf outside Q for the super kinds.
  double value(double phi_x, double t) const {
    const double s = argument(phi_x, t);
    const double c = is_shifted(kind_) ? p_.c_hat : 0.0;
    const double tail = is_shifted(kind_) ? 1.0 / p_.shift : 0.0;
    if (is_super(kind_)) {
      const double chi = chi_->value(s);
      if (!std::isfinite(chi)) return std::numeric_limits<double>::infinity();
      return phi_x + c + chi + psi(t) + tail;
    }
    return t + p_.shift + xi_->value(s) - psi(t) - tail;
  }

  double at_node(std::size_t k, double t) const { return value(pair_.phi.values[k], t); }

  /// Smallest t0 (or R) placing every point with φ <= phi_max inside Q at t = 0.
  double minimal_shift(double phi_max) const {
    return phi_max + (is_shifted(kind_) ? p_.c_hat : 0.0) - (chi_ ? chi_->end() : 0.0);
  }

private:
  double rate_at(double tau) const { return std::pow(std::pow(tau, p_.alpha_hat) + 1.0, -beta_hat_); }

  /// ∫_a^∞ (τ^α̂ + 1)^{-β̂} dτ by quadrature up to X plus a two-term tail expansion.
  double tail_integral(double a) const {
    const double ab = p_.alpha_hat * beta_hat_;
    const double X = std::max(1e6, 1e6 * a);
    const double head = window_integral(a, X - a);
    const double tail = std::pow(X, 1.0 - ab) / (ab - 1.0) -
                        beta_hat_ * std::pow(X, 1.0 - ab - p_.alpha_hat) / (ab + p_.alpha_hat - 1.0);
    return head + tail;
  }

  AssemblyKind kind_;
  ErgodicPair pair_;
  std::optional<ChiBarrier> chi_;
  std::optional<XiBarrier> xi_;
  AssemblyParams p_;
  double beta_hat_ = 1.0;
  double sigma_ = 0.0;
};

/// Assembles a barrier; `compact_phi_max` is max φ over the compact set that
/// must lie in Q at t = 0 (checked for the super kinds).
inline BarrierAssembly assemble(AssemblyKind kind, const ErgodicPair &pair, const std::optional<ChiBarrier> &chi,
                                const std::optional<XiBarrier> &xi, const AssemblyParams &p,
                                std::optional<double> compact_phi_max = std::nullopt) {
  BarrierAssembly a(kind, pair, chi, xi, p);
  if (compact_phi_max && is_super(kind) && !a.in_q(*compact_phi_max, 0.0))
    throw ConfigurationError("assembly: t0 too small, the compact set leaves Q at t = 0; minimal t0 = " +
                             std::to_string(a.minimal_shift(*compact_phi_max)));
  return a;
}

/// Discrete residual w_t - Δw + |Dw|^m - f + λ of an assembly at grid nodes and
/// the given times: centered differences in x, forward difference in t. Each
/// admissible node carries the error estimate
///   ε = |R_h - R_2h| / 3 + |R_dt - R_2dt| + |centered ergodic residual|
/// and ε_resid = max ε is reported. Super kinds must satisfy R >= -ε_resid,
/// sub kinds R <= ε_resid. Stencil points (x ± 2h, t + 2dt) must lie in Q.
inline InequalityReport residual_check(const BarrierAssembly &as, const ProblemSpec &problem,
                                       const std::vector<double> &times, double dt) {
  const GridField &phi = as.pair().phi;
  const Grid &g = phi.grid;
  const int n = g.nodes_per_axis();
  const double h = g.spacing();
  const double m = problem.m;
  const double lambda = as.lambda();
  const bool super = is_super(as.kind());
  if (!(dt > 0.0)) throw ConfigurationError("residual_check: dt must be positive");

  struct Sample {
    double r = 0.0, eps = 0.0;
    std::array<double, 3> at{};
  };
  std::vector<Sample> pts;
  for (double t : times) {
    std::vector<std::array<double, 3>> w(g.size());
    for (std::size_t k = 0; k < g.size(); ++k)
      for (int l = 0; l < 3; ++l) w[k][std::size_t(l)] = as.at_node(k, t + l * dt);
    for (std::size_t k = 0; k < g.size(); ++k) {
      const auto [i, j] = g.indices(k);
      if (i < 2 || i > n - 3) continue;
      if (g.dim() == 2 && (j < 2 || j > n - 3)) continue;
      // All stencil points finite (inside Q).
      bool inside = true;
      auto check = [&](std::size_t q) {
        for (int l = 0; l < 3; ++l) inside = inside && std::isfinite(w[q][std::size_t(l)]);
      };
      for (int o = -2; o <= 2; ++o) {
        check(std::size_t(long(k) + o));
        if (g.dim() == 2) check(std::size_t(long(k) + long(o) * n));
      }
      if (!inside) continue;
      const Point x = g.point(k);
      const double fx = problem.source(x);
      auto space = [&](int step, int tl, const std::vector<double> *field) {
        // Δ and centered gradient with spacing step*h on time level tl (or a field).
        auto val = [&](long off) {
          const std::size_t q = std::size_t(long(k) + off);
          return field ? (*field)[q] : w[q][std::size_t(tl)];
        };
        const double hh = step * h;
        double lap = (val(-step) - 2.0 * val(0) + val(step)) / (hh * hh);
        double gx = (val(step) - val(-step)) / (2.0 * hh);
        double gy = 0.0;
        if (g.dim() == 2) {
          lap += (val(-long(step) * n) - 2.0 * val(0) + val(long(step) * n)) / (hh * hh);
          gy = (val(long(step) * n) - val(-long(step) * n)) / (2.0 * hh);
        }
        const double grad = std::hypot(gx, gy);
        return -lap + std::pow(grad, m);
      };
      const double wt1 = (w[k][1] - w[k][0]) / dt;
      const double wt2 = (w[k][2] - w[k][0]) / (2.0 * dt);
      const double sp1 = space(1, 0, nullptr);
      const double sp2 = space(2, 0, nullptr);
      const double r = wt1 + sp1 - fx + lambda;
      const double r_2h = wt1 + sp2 - fx + lambda;
      const double r_2dt = wt2 + sp1 - fx + lambda;
      const double erg = lambda + space(1, 0, &phi.values) - fx;
      Sample s;
      s.r = r;
      s.eps = std::abs(r - r_2h) / 3.0 + std::abs(r - r_2dt) + std::abs(erg);
      s.at = {x[0], x[1], t};
      pts.push_back(s);
    }
  }
  if (pts.empty()) throw ConfigurationError("residual_check: no admissible nodes inside Q");
  InequalityReport rep;
  rep.name = std::string("residual-") + to_string(as.kind());
  rep.samples = pts.size();
  double eps = 0.0;
  for (const auto &s : pts) eps = std::max(eps, s.eps);
  rep.tolerance = eps;
  rep.worst_residual = super ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  for (const auto &s : pts) {
    const double v = super ? -s.r - eps : s.r - eps;
    if (v > 0.0) ++rep.violations;
    if (v > rep.max_violation) {
      rep.max_violation = v;
      rep.witness = s.at;
    }
    rep.worst_residual = super ? std::min(rep.worst_residual, s.r) : std::max(rep.worst_residual, s.r);
  }
  rep.tightest_ratio = eps;
  rep.pass = rep.violations == 0;
  return rep;
}

/// Columnar table (s, value, derivative).
template <class Barrier> void write_table(std::ostream &os, const Barrier &b) {
  os << "s,value,derivative\n";
  std::ostringstream line;
  line << std::setprecision(17);
  for (std::size_t k = 0; k < b.s.size(); ++k) {
    line.str("");
    line << b.s[k] << ',' << b.y[k][0] << ',' << b.y[k][1] << '\n';
    os << line.str();
  }
}

} // namespace vhj
