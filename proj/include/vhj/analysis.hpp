#pragma once

// Diagnostics on run artifacts: long-time convergence of u - λt, the growth
// estimates on the ergodic potential, the algebraic inequalities behind the
// comparison argument, discrete order preservation and the barrier sandwich.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vhj/barriers.hpp"
#include "vhj/ergodic.hpp"
#include "vhj/errors.hpp"
#include "vhj/grid.hpp"
#include "vhj/model.hpp"
#include "vhj/scheme.hpp"

namespace vhj {

/// Axis-aligned compact set [lo, hi] (the y range is ignored in 1D).
struct Box {
  Point lo{-1.0, -1.0};
  Point hi{1.0, 1.0};
  static Box interval(double a, double b) { return {{a, a}, {b, b}}; }
  bool contains(const Point &x, int dim) const {
    const double e = 1e-12;
    if (x[0] < lo[0] - e || x[0] > hi[0] + e) return false;
    return dim == 1 || (x[1] >= lo[1] - e && x[1] <= hi[1] + e);
  }
};

inline std::vector<std::size_t> nodes_in(const Grid &g, const Box &K) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (K.contains(g.point(k), g.dim())) out.push_back(k);
  return out;
}

struct ConvergenceOptions {
  /// Terminal spread threshold.
  double tol = 0.02;
  /// Ceiling for sup_t |ĉ(t)| + spread(t).
  double ceiling = 1e6;
  /// Additive margin in the slope verdict.
  double margin = 0.1;
  /// Fraction of the run (at the end) over which spread must not increase.
  double tail_fraction = 0.25;
  /// Rounding slack for the monotonicity of the spread.
  double slack = 1e-12;
};

struct ConvergenceReport {
  std::vector<double> times;
  /// ĉ(t) = mean over K of u - λt - φ.
  std::vector<double> c_hat;
  /// max - min over K of u - λt - φ.
  std::vector<double> spread;
  /// u(x_ref, t) / t (NaN at t = 0).
  std::vector<double> slope;
  /// Running lower envelope of ĉ.
  std::vector<double> c_hat_lower;
  bool bounded = false;
  bool converged = false;
  bool spread_monotone_tail = false;
  bool slope_ok = false;
  double spread_final = 0.0;
  double slope_gap = 0.0;
  double slope_bound = 0.0;
  bool pass() const { return bounded && converged && slope_ok; }
};

inline ConvergenceReport convergence_metric(const Trajectory &tr, const ErgodicPair &pair, const Box &K,
                                            const ConvergenceOptions &opt = {}) {
  if (!(tr.grid == pair.phi.grid)) throw ConfigurationError("convergence: trajectory and pair grids differ");
  const auto nodes = nodes_in(tr.grid, K);
  if (nodes.empty()) throw ConfigurationError("convergence: no grid nodes inside K");
  for (std::size_t k : nodes)
    if (tr.grid.is_boundary(k)) throw ConfigurationError("convergence: K must lie strictly inside the grid");
  ConvergenceReport rep;
  const double lam = pair.lambda;
  double running_low = std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (const Snapshot &s : tr.snapshots) {
    double sum = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t k : nodes) {
      const double w = s.field.values[k] - lam * s.time - pair.phi.values[k];
      sum += w;
      lo = std::min(lo, w);
      hi = std::max(hi, w);
    }
    const double c = sum / double(nodes.size());
    rep.times.push_back(s.time);
    rep.c_hat.push_back(c);
    rep.spread.push_back(hi - lo);
    running_low = std::min(running_low, c);
    rep.c_hat_lower.push_back(running_low);
    rep.slope.push_back(s.time > 0.0 ? s.field.values[pair.x_ref] / s.time
                                     : std::numeric_limits<double>::quiet_NaN());
    worst = std::max(worst, std::abs(c) + (hi - lo));
  }
  rep.bounded = std::isfinite(worst) && worst < opt.ceiling;
  rep.spread_final = rep.spread.back();
  const double T = rep.times.back();
  const double t_tail = T - opt.tail_fraction * (T - rep.times.front());
  rep.spread_monotone_tail = true;
  for (std::size_t k = 1; k < rep.times.size(); ++k)
    if (rep.times[k - 1] >= t_tail - 1e-12 && rep.spread[k] > rep.spread[k - 1] + opt.slack)
      rep.spread_monotone_tail = false;
  rep.converged = rep.spread_final < opt.tol && rep.spread_monotone_tail;
  if (T > 0.0) {
    rep.slope_gap = std::abs(tr.final_field().values[pair.x_ref] / T - lam);
    rep.slope_bound = (std::abs(pair.phi.values[pair.x_ref]) + std::abs(rep.c_hat.back()) + opt.margin) / T;
    rep.slope_ok = rep.slope_gap <= rep.slope_bound;
  }
  return rep;
}

/// Empirical estimate across radii.
struct EstimateReport {
  std::vector<double> radii;
  std::vector<double> values;
  /// Largest measured value (empirical constant).
  double constant = 0.0;
  /// max / min over the sweep (or the growth check outcome).
  double spread_ratio = 0.0;
  double gamma = 0.0;
  bool pass = false;
  bool skipped = false;
  std::string notice;
};

inline double holder_exponent(double m) { return (m - 2.0) / (m - 1.0); }

/// ρ(R) = max_{|x|<=R} |φ(x) - φ(0)| / (R M_R^{1/m}), M_R = sup_{B_R} |f - λ|.
inline EstimateReport holder_rescale_check(const ErgodicPair &pair, const ProblemSpec &problem,
                                           const std::vector<double> &radii, double factor = 3.0) {
  EstimateReport rep;
  rep.radii = radii;
  rep.gamma = holder_exponent(problem.m);
  const Grid &g = pair.phi.grid;
  const std::size_t c = g.center();
  const double phi0 = pair.phi.values[c];
  for (double R : radii) {
    if (R > g.radius() + 1e-12) throw ConfigurationError("holder: radius exceeds the grid");
    double osc = 0.0, MR = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const Point x = g.point(k);
      if (norm(x) > R + 1e-12) continue;
      osc = std::max(osc, std::abs(pair.phi.values[k] - phi0));
      MR = std::max(MR, std::abs(problem.source(x) - pair.lambda));
    }
    rep.values.push_back(MR > 0.0 ? osc / (R * std::pow(MR, 1.0 / problem.m)) : 0.0);
  }
  const auto [lo, hi] = std::minmax_element(rep.values.begin(), rep.values.end());
  rep.constant = *hi;
  rep.spread_ratio = *lo > 0.0 ? *hi / *lo : (*hi == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
  rep.pass = rep.spread_ratio <= factor;
  return rep;
}

/// s(R) = min over the shell R - h <= |x| <= R of φ(x)/|x|; passes when s is
/// strictly increasing across the radii.
inline EstimateReport superlinearity_check(const ErgodicPair &pair, const std::vector<double> &radii) {
  if (radii.size() < 3) throw ConfigurationError("superlinearity: need at least 3 radii");
  EstimateReport rep;
  rep.radii = radii;
  const Grid &g = pair.phi.grid;
  const double h = g.spacing();
  for (double R : radii) {
    double s = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double r = norm(g.point(k));
      if (r < R - h - 1e-12 || r > R + 1e-12 || r == 0.0) continue;
      s = std::min(s, pair.phi.values[k] / r);
    }
    if (!std::isfinite(s)) throw ConfigurationError("superlinearity: empty shell at R = " + std::to_string(R));
    rep.values.push_back(s);
  }
  rep.pass = true;
  for (std::size_t k = 1; k < rep.values.size(); ++k)
    if (!(rep.values[k] > rep.values[k - 1] + 1e-12)) rep.pass = false;
  rep.constant = rep.values.back();
  rep.spread_ratio = rep.values.back() - rep.values.front();
  return rep;
}

/// Left: sup_{B_R'} |Dφ| (centered differences). Right: 1 + sup_{B_{R'+1}} |f|^{1/m}
/// + sup_{B_{R'+1}} |Df|^{1/(2m-1)}. Returns the ratio for each R' and passes
/// when max/min <= factor.
inline EstimateReport gradient_bound_check(const ErgodicPair &pair, const ProblemSpec &problem,
                                           const std::vector<double> &inner_radii, double factor = 2.0) {
  EstimateReport rep;
  rep.radii = inner_radii;
  if (!problem.source.has_gradient()) {
    rep.skipped = true;
    rep.pass = true;
    rep.notice = "source gradient unavailable; gradient bound check skipped";
    return rep;
  }
  const Grid &g = pair.phi.grid;
  const int n = g.nodes_per_axis();
  const double h = g.spacing();
  const double m = problem.m;
  for (double Ri : inner_radii) {
    if (Ri + 1.0 > g.radius() + 1e-12) throw ConfigurationError("gradient bound: R_inner + 1 exceeds the grid");
    double left = 0.0, fs = 0.0, dfs = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const Point x = g.point(k);
      const double r = norm(x);
      if (r <= Ri + 1e-12 && !g.is_boundary(k)) {
        const auto [i, j] = g.indices(k);
        (void)i;
        const double gx = (pair.phi.values[k + 1] - pair.phi.values[k - 1]) / (2.0 * h);
        const double gy =
            g.dim() == 2 ? (pair.phi.values[k + std::size_t(n)] - pair.phi.values[k - std::size_t(n)]) / (2.0 * h) : 0.0;
        (void)j;
        left = std::max(left, std::hypot(gx, gy));
      }
      if (r <= Ri + 1.0 + 1e-12) {
        fs = std::max(fs, std::abs(problem.source(x)));
        const Point df = *problem.source.gradient(x);
        dfs = std::max(dfs, norm(df));
      }
    }
    const double right = 1.0 + std::pow(fs, 1.0 / m) + std::pow(dfs, 1.0 / (2.0 * m - 1.0));
    rep.values.push_back(left / right);
  }
  const auto [lo, hi] = std::minmax_element(rep.values.begin(), rep.values.end());
  rep.constant = *hi;
  rep.spread_ratio = *lo > 0.0 ? *hi / *lo : (*hi == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
  rep.pass = rep.spread_ratio <= factor;
  return rep;
}

/// Pieces of N(r, p) = r (f + |p/r|^2 - |p/r|^m) for r in (-1, 0).
struct TransformPartials {
  static double N(double r, double p, double f, double m) {
    return r * f + p * p / r + std::pow(std::abs(p), m) * std::pow(std::abs(r), 1.0 - m);
  }
  /// p-dependent part of N.
  static double Np(double r, double p, double m) {
    return p * p / r + std::pow(std::abs(p), m) * std::pow(std::abs(r), 1.0 - m);
  }
  /// ∂N/∂r = f - |q|^2 + (m-1)|q|^m.
  static double dr(double q, double f, double m) {
    const double a = std::abs(q);
    return f - a * a + (m - 1.0) * std::pow(a, m);
  }
  /// ∂N/∂p = (2 - m|q|^{m-2}) q.
  static double dp(double q, double m) { return (2.0 - m * std::pow(std::abs(q), m - 2.0)) * q; }
};

struct TransformReport {
  InequalityReport lower_bound;  // ∂N/∂r >= 1 + C|q|^m
  InequalityReport domination;   // (1 + 2m/C) ∂N/∂r >= |∂N/∂p|
  InequalityReport young;        // |q|^2 <= (2/m)|q|^m + m/(m-2)
  InequalityReport magnitude;    // |∂N/∂p| <= 2|q| + m|q|^{m-1}
  double max_fd_error_r = 0.0;   // relative
  double max_fd_error_p = 0.0;
  std::size_t samples = 0;
  bool fd_pass = false;
  bool pass() const {
    return lower_bound.pass && domination.pass && young.pass && magnitude.pass && fd_pass;
  }
};

/// Samples r in (-1, 0), |q| log-uniform on [1e-6, 1e6] with random sign, and
/// f >= 1 + m/(m-2); checks the comparison-argument inequalities to 1e-10
/// relative and the closed-form partials against central differences.
inline TransformReport transform_suite(double m, double C, std::size_t samples, std::uint64_t seed = 1,
                                       double fd_tol = 1e-6) {
  if (!(m > 2.0)) throw RejectionError("transform: need m > 2");
  if (!(C > 0.0 && C < m - 1.0 - 2.0 / m)) throw RejectionError("transform: need 0 < C < m - 1 - 2/m");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double floor = 1.0 + m / (m - 2.0);
  TransformReport rep;
  rep.lower_bound.name = "dNdr-lower";
  rep.domination.name = "domination";
  rep.young.name = "young";
  rep.magnitude.name = "dNdp-magnitude";
  auto rel = [](InequalityReport &ir, double lhs, double rhs, double q) {
    // lhs <= rhs expected
    ++ir.samples;
    const double v = (lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1.0});
    if (v > 1e-10) ++ir.violations;
    if (v > ir.max_violation) {
      ir.max_violation = v;
      ir.witness = {q, 0.0, 0.0};
    }
  };
  for (std::size_t k = 0; k < samples; ++k) {
    const double r = -(1e-3 + (1.0 - 2e-3) * unit(rng));
    const double aq = std::pow(10.0, -6.0 + 12.0 * unit(rng));
    const double q = unit(rng) < 0.5 ? -aq : aq;
    const double f = floor * std::pow(10.0, 3.0 * unit(rng)) * (k % 7 == 0 ? 0.0 : 1.0) + (k % 7 == 0 ? floor : 0.0);
    const double p = q * r;
    const double Nr = TransformPartials::dr(q, f, m);
    const double Np = TransformPartials::dp(q, m);
    rel(rep.lower_bound, 1.0 + C * std::pow(aq, m), Nr, q);
    rel(rep.domination, std::abs(Np), (1.0 + 2.0 * m / C) * Nr, q);
    rel(rep.young, aq * aq, 2.0 / m * std::pow(aq, m) + m / (m - 2.0), q);
    rel(rep.magnitude, std::abs(Np), 2.0 * aq + m * std::pow(aq, m - 1.0), q);

    const double dr_step = 1e-5 * std::abs(r);
    const double fd_r = (TransformPartials::N(r + dr_step, p, f, m) - TransformPartials::N(r - dr_step, p, f, m)) /
                        (2.0 * dr_step);
    const double scale_r = std::max({std::abs(fd_r), std::abs(Nr), f + aq * aq + (m - 1.0) * std::pow(aq, m)});
    rep.max_fd_error_r = std::max(rep.max_fd_error_r, std::abs(fd_r - Nr) / scale_r);
    const double dp_step = 1e-5 * std::abs(p);
    const double fd_p =
        (TransformPartials::Np(r, p + dp_step, m) - TransformPartials::Np(r, p - dp_step, m)) / (2.0 * dp_step);
    const double scale_p = std::max({std::abs(fd_p), std::abs(Np), 2.0 * aq + m * std::pow(aq, m - 1.0)});
    rep.max_fd_error_p = std::max(rep.max_fd_error_p, std::abs(fd_p - Np) / scale_p);
  }
  for (InequalityReport *ir : {&rep.lower_bound, &rep.domination, &rep.young, &rep.magnitude})
    ir->pass = ir->violations == 0;
  rep.samples = samples;
  rep.fd_pass = rep.max_fd_error_r <= fd_tol && rep.max_fd_error_p <= fd_tol;
  return rep;
}

/// Runs both initial data with a shared step sequence and reports
/// max over nodes and snapshots of u_low - u_high.
inline InequalityReport ordering_check(const ProblemSpec &problem, const InitialData &low, const InitialData &high,
                                       const Grid &grid, const SchemeConfig &config) {
  const GridField a = GridField::sample(grid, [&](const Point &x) { return low(x); });
  const GridField b = GridField::sample(grid, [&](const Point &x) { return high(x); });
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (a.values[k] > b.values[k]) {
      const Point x = grid.point(k);
      throw RejectionError("ordering: initial data not ordered at node " + std::to_string(k) + " (x = " +
                           std::to_string(x[0]) + ", " + std::to_string(x[1]) + ")");
    }
  const auto runs = solve_lockstep({problem, problem}, {a, b}, config);
  InequalityReport rep;
  rep.name = "ordering";
  for (std::size_t s = 0; s < runs[0].snapshots.size(); ++s) {
    const auto &u = runs[0].snapshots[s].field.values;
    const auto &v = runs[1].snapshots[s].field.values;
    for (std::size_t k = 0; k < u.size(); ++k) {
      ++rep.samples;
      const double d = u[k] - v[k];
      if (d > rep.max_violation) {
        rep.max_violation = d;
        const Point x = grid.point(k);
        rep.witness = {x[0], x[1], runs[0].snapshots[s].time};
      }
    }
  }
  rep.tolerance = 1e-10;
  rep.violations = rep.max_violation > rep.tolerance ? 1 : 0;
  rep.pass = rep.max_violation <= rep.tolerance;
  return rep;
}

struct SandwichReport {
  /// Calibration constants: V + C above u0 on Q0, U - M below u0.
  double C = 0.0;
  double M = 0.0;
  /// Worst signed violations of u - λt <= V + C and U - M <= u - λt.
  double upper_violation = -std::numeric_limits<double>::infinity();
  double lower_violation = -std::numeric_limits<double>::infinity();
  std::size_t checked = 0;
  double tolerance = 1e-8;
  bool pass = false;
};

/// U - M <= u - λt <= V + C on the nodes of K at every snapshot, with C and M
/// calibrated at t = 0 (C over the grid nodes inside Q0).
inline SandwichReport sandwich_check(const Trajectory &tr, const BarrierAssembly &super,
                                     const BarrierAssembly &sub, const Box &K, double tol = 1e-8) {
  const Grid &g = tr.grid;
  if (!(super.pair().phi.grid == g) || !(sub.pair().phi.grid == g))
    throw ConfigurationError("sandwich: barrier and trajectory grids differ");
  const auto &u0 = tr.snapshots.front().field.values;
  if (tr.snapshots.front().time != 0.0) throw ConfigurationError("sandwich: trajectory must record t = 0");
  SandwichReport rep;
  rep.tolerance = tol;
  rep.C = -std::numeric_limits<double>::infinity();
  double M = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double v = super.at_node(k, 0.0);
    if (std::isfinite(v)) rep.C = std::max(rep.C, u0[k] - v);
    M = std::max(M, sub.at_node(k, 0.0) - u0[k]);
  }
  rep.M = M;
  const double lam = super.lambda();
  for (const Snapshot &s : tr.snapshots)
    for (std::size_t k : nodes_in(g, K)) {
      const double w = s.field.values[k] - lam * s.time;
      const double V = super.at_node(k, s.time);
      const double U = sub.at_node(k, s.time);
      rep.upper_violation = std::max(rep.upper_violation, w - (V + rep.C));
      rep.lower_violation = std::max(rep.lower_violation, (U - rep.M) - w);
      ++rep.checked;
    }
  rep.pass = rep.checked > 0 && rep.upper_violation <= tol && rep.lower_violation <= tol;
  return rep;
}

} // namespace vhj
