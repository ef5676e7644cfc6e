#pragma once

// The ergodic pair (λ, φ) with λ - Δφ + |Dφ|^m = f, by three independent
// routes: long-time slope of the parabolic solution, semismooth Newton on the
// stationary discrete system, and radial shooting in λ.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "vhj/errors.hpp"
#include "vhj/grid.hpp"
#include "vhj/model.hpp"
#include "vhj/ode.hpp"
#include "vhj/scheme.hpp"

namespace vhj {

struct ErgodicPair {
  double lambda = 0.0;
  GridField phi;
  std::size_t x_ref = 0;
  /// Sup-norm of the discrete residual at the returned pair.
  double residual = 0.0;
  std::string route;
  std::size_t iterations = 0;
};

/// λ - Δ_h φ + H_G(φ) - f at every node, with the scheme's boundary treatment.
inline GridField ergodic_residual(const ProblemSpec &problem, const GridField &phi, double lambda,
                                  BoundaryLaplacian policy = BoundaryLaplacian::Drop) {
  const GridField lap = laplacian(phi, policy);
  const GridField ham = godunov_hamiltonian(phi, problem.m);
  GridField out(phi.grid);
  for (std::size_t k = 0; k < phi.size(); ++k)
    out.values[k] = lambda - lap.values[k] + ham.values[k] - problem.source(phi.grid.point(k));
  return out;
}

inline double sup_norm(const std::vector<double> &v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

/// Long-time route: λ is the settled slope of u(x_ref, .), φ = u(T) - u(x_ref, T).
inline ErgodicPair solve_longtime(const ProblemSpec &problem, const Grid &grid, SchemeConfig config,
                                  double tol = 1e-6) {
  if (config.snapshot_times.size() < 3) {
    const SchemeConfig u = SchemeConfig::uniform(config.max_time, 40, config.mode);
    config.snapshot_times = u.snapshot_times;
  }
  const Trajectory tr = solve_state_constraint(problem, grid, config);
  const auto &series = tr.slope_series;
  if (series.size() < 2)
    throw NonConvergenceError("longtime: need at least two slope estimates", series);
  const double last = series.back().second;
  const double prev = series[series.size() - 2].second;
  if (!(std::abs(last - prev) < tol))
    throw NonConvergenceError("longtime: slope not settled by T = " + std::to_string(config.max_time) +
                                  " (last change " + std::to_string(std::abs(last - prev)) + ")",
                              series);
  ErgodicPair pair;
  pair.lambda = last;
  pair.x_ref = tr.reference_node;
  pair.phi = tr.final_field();
  const double shift = pair.phi.values[pair.x_ref];
  for (double &v : pair.phi.values) v -= shift;
  pair.phi.values[pair.x_ref] = 0.0;
  pair.residual = sup_norm(ergodic_residual(problem, pair.phi, pair.lambda, config.boundary).values);
  pair.route = "longtime";
  pair.iterations = tr.steps;
  return pair;
}

/// Eikonal profile φ0(x) = ∫_0^|x| (f - min f)^{1/m} along the ray through x.
inline GridField eikonal_guess(const ProblemSpec &problem, const Grid &grid) {
  const double fmin = problem.source.lower_bound(grid.radius(), grid.dim());
  return GridField::sample(grid, [&](const Point &x) {
    const double r = norm(x);
    if (r == 0.0) return 0.0;
    const int n = std::max(8, int(std::ceil(r / grid.spacing())) * 2);
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const double t = (i + 0.5) / n;
      const double fv = problem.source({t * x[0], t * x[1]}) - fmin;
      s += std::pow(std::max(fv, 0.0), 1.0 / problem.m);
    }
    return s * r / n;
  });
}

struct NewtonOptions {
  double tol = 1e-10;
  std::size_t max_iterations = 200;
  std::size_t max_halvings = 40;
  BoundaryLaplacian boundary = BoundaryLaplacian::Drop;
  std::optional<Point> reference;
};

namespace detail {

inline ErgodicPair newton_from(const ProblemSpec &problem, const Grid &grid, std::vector<double> phi,
                               double lambda, const NewtonOptions &opt) {
  const std::size_t n = grid.size();
  const std::size_t ref = grid.index_of(opt.reference.value_or(Point{0.0, 0.0}));
  const int na = grid.nodes_per_axis();
  const double h = grid.spacing();
  const double inv_h = 1.0 / h, inv_h2 = inv_h * inv_h;
  const double m = problem.m;
  const bool one_sided = opt.boundary == BoundaryLaplacian::OneSided;
  const std::vector<double> f =
      GridField::sample(grid, [&](const Point &x) { return problem.source(x); }).values;

  const double shift = phi[ref];
  for (double &v : phi) v -= shift;

  auto residual = [&](const std::vector<double> &p, double lam, std::vector<double> &out) {
    const GridField pf(grid, p);
    const GridField lap = laplacian(pf, opt.boundary);
    const GridField ham = godunov_hamiltonian(pf, m);
    out.resize(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = lam - lap.values[k] + ham.values[k] - f[k];
    return sup_norm(out);
  };

  std::vector<double> F;
  double norm_f = residual(phi, lambda, F);
  std::vector<std::pair<double, double>> history{{0.0, norm_f}};
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  bool analyzed = false;

  for (std::size_t it = 0; it < opt.max_iterations; ++it) {
    if (norm_f < opt.tol) {
      ErgodicPair pair;
      pair.lambda = lambda;
      pair.phi = GridField(grid, phi);
      pair.x_ref = ref;
      pair.residual = norm_f;
      pair.route = "newton";
      pair.iterations = it;
      return pair;
    }
    trip.clear();
    auto add = [&](std::size_t row, std::size_t col, double v) {
      if (col == ref) return; // φ(x_ref) is fixed; its column holds λ
      trip.emplace_back(int(row), int(col), v);
    };
    for (std::size_t k = 0; k < n; ++k) {
      trip.emplace_back(int(k), int(ref), 1.0);
      const auto [i, j] = grid.indices(k);
      // -Δ_h
      auto lap_axis = [&](std::size_t stride, int idx) {
        if (idx > 0 && idx < na - 1) {
          add(k, k - stride, -inv_h2);
          add(k, k, 2.0 * inv_h2);
          add(k, k + stride, -inv_h2);
        } else if (one_sided) {
          const long s = idx == 0 ? long(stride) : -long(stride);
          auto at = [&](int off) { return std::size_t(long(k) + off * s); };
          if (na >= 4) {
            add(k, at(0), -2.0 * inv_h2);
            add(k, at(1), 5.0 * inv_h2);
            add(k, at(2), -4.0 * inv_h2);
            add(k, at(3), 1.0 * inv_h2);
          } else {
            add(k, at(0), -inv_h2);
            add(k, at(1), 2.0 * inv_h2);
            add(k, at(2), -inv_h2);
          }
        }
      };
      if (one_sided || !grid.is_boundary(k)) {
        lap_axis(1, i);
        if (grid.dim() == 2) lap_axis(std::size_t(na), j);
      }
      // H_G along the active branch
      const auto g = upwind_gradient(grid, phi, k);
      const double s2 = g.gx * g.gx + g.gy * g.gy;
      if (s2 == 0.0) continue;
      const double dHds = grid.dim() == 1 ? m * int_or_real_pow(g.gx, m - 1.0)
                                          : m * std::pow(s2, 0.5 * m - 1.0);
      auto ham_axis = [&](double ga, int branch, std::size_t stride) {
        if (branch == 0 || ga == 0.0) return;
        const double c = (grid.dim() == 1 ? dHds : dHds * ga) * inv_h;
        add(k, k, c);
        add(k, branch < 0 ? k - stride : k + stride, -c);
      };
      ham_axis(g.gx, g.bx, 1);
      if (grid.dim() == 2) ham_axis(g.gy, g.by, std::size_t(na));
    }
    Eigen::SparseMatrix<double> J{Eigen::Index(n), Eigen::Index(n)};
    J.setFromTriplets(trip.begin(), trip.end());
    J.makeCompressed();
    if (!analyzed) {
      lu.analyzePattern(J);
      analyzed = true;
    }
    lu.factorize(J);
    if (lu.info() != Eigen::Success) {
      lu.analyzePattern(J);
      lu.factorize(J);
      if (lu.info() != Eigen::Success)
        throw NonConvergenceError("newton: singular Jacobian at iteration " + std::to_string(it) +
                                      "; try the long-time route as initializer",
                                  history);
    }
    Eigen::VectorXd rhs{Eigen::Index(n)};
    for (std::size_t k = 0; k < n; ++k) rhs[int(k)] = -F[k];
    const Eigen::VectorXd delta = lu.solve(rhs);

    double alpha = 1.0;
    bool accepted = false;
    std::vector<double> trial(n), Ft;
    for (std::size_t half = 0; half <= opt.max_halvings; ++half, alpha *= 0.5) {
      for (std::size_t k = 0; k < n; ++k) trial[k] = k == ref ? 0.0 : phi[k] + alpha * delta[int(k)];
      const double lam_t = lambda + alpha * delta[int(ref)];
      const double nt = residual(trial, lam_t, Ft);
      if (std::isfinite(nt) && nt <= (1.0 - 1e-4 * alpha) * norm_f) {
        phi.swap(trial);
        lambda = lam_t;
        F.swap(Ft);
        norm_f = nt;
        accepted = true;
        break;
      }
    }
    history.emplace_back(double(it + 1), norm_f);
    if (!accepted) {
      // Stagnation at the rounding level of the assembled terms counts as converged.
      double phi_max = 0.0, f_max = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        phi_max = std::max(phi_max, std::abs(phi[k]));
        f_max = std::max(f_max, std::abs(f[k]));
      }
      const double g_max = max_upwind_slope(GridField(grid, phi));
      const double floor =
          8.0 * std::numeric_limits<double>::epsilon() *
          (std::abs(lambda) + 4.0 * grid.dim() * phi_max * inv_h2 + 2.0 * f_max +
           2.0 * m * std::pow(g_max, m - 1.0) * phi_max * inv_h);
      if (norm_f < std::max(opt.tol, floor)) {
        ErgodicPair pair{lambda, GridField(grid, phi), ref, norm_f, "newton", it + 1};
        return pair;
      }
      throw NonConvergenceError("newton: no residual decrease after " +
                                    std::to_string(opt.max_halvings) +
                                    " halvings; try the long-time route as initializer",
                                history);
    }
  }
  throw NonConvergenceError("newton: iteration budget exhausted; try the long-time route as initializer",
                            history);
}

} // namespace detail

/// Damped semismooth Newton on {λ - Δ_h φ + H_G(φ) - f = 0 at all nodes,
/// φ(x_ref) = 0}. The unknown φ(x_ref) is eliminated and its column carries λ.
/// Without an initial pair the iteration starts from φ = 0, λ = min f; the
/// Jacobian is singular there when boundary rows see no slope, in which case
/// it restarts from the eikonal profile.
inline ErgodicPair solve_newton(const ProblemSpec &problem, const Grid &grid,
                                const std::optional<ErgodicPair> &init = std::nullopt,
                                const NewtonOptions &opt = {}) {
  problem.validate();
  if (init) {
    if (!(init->phi.grid == grid)) throw ConfigurationError("newton: initial pair lives on another grid");
    return detail::newton_from(problem, grid, init->phi.values, init->lambda, opt);
  }
  const double lambda0 = problem.source.lower_bound(grid.radius(), grid.dim());
  try {
    return detail::newton_from(problem, grid, std::vector<double>(grid.size(), 0.0), lambda0, opt);
  } catch (const NonConvergenceError &first) {
    try {
      ErgodicPair p = detail::newton_from(problem, grid, eikonal_guess(problem, grid).values, lambda0, opt);
      p.route = "newton-eikonal";
      return p;
    } catch (const NonConvergenceError &) {
      throw first;
    }
  }
}

/// Radial profile returned by the shooting oracle.
struct RadialPair {
  double lambda = 0.0;
  std::vector<double> r;
  std::vector<double> phi;
  std::vector<double> dphi;
  /// Radius up to which the returned trajectory tracks the separatrix: beyond
  /// it the low-side trial has peeled off towards the stable branch.
  double valid_radius = 0.0;
  std::size_t bisections = 0;

  double operator()(double rr) const {
    if (r.empty()) return 0.0;
    if (rr <= r.front()) return phi.front();
    if (rr >= r.back()) return phi.back();
    auto it = std::upper_bound(r.begin(), r.end(), rr);
    const std::size_t k = std::size_t(it - r.begin()) - 1;
    const double h = r[k + 1] - r[k];
    const double s = (rr - r[k]) / h;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * phi[k] + (s3 - 2 * s2 + s) * h * dphi[k] + (-2 * s3 + 3 * s2) * phi[k + 1] +
           (s3 - s2) * h * dphi[k + 1];
  }
};

struct RadialOracleOptions {
  double tol = 1e-10;
  /// Initial λ bracket; expanded geometrically when it does not straddle λ*.
  std::optional<std::pair<double, double>> bracket;
  double blowup_cap = 1e6;
  int max_expansions = 60;
};

/// Shooting in λ for λ - φ'' - ((N-1)/r) φ' + |φ'|^m = f(r), started at r = ε
/// on the regular branch through φ(0) = φ'(0) = 0.
/// A trial λ is high when φ' escapes above the unstable branch (f - λ)^{1/m}
/// and low when it falls towards the stable branch.
inline RadialPair radial_oracle(const ProblemSpec &problem, int dim, double r_max,
                                const RadialOracleOptions &opt = {}) {
  if (!problem.source.is_radial()) throw ConfigurationError("radial oracle: source is not radial");
  if (!(r_max > 0.0)) throw ConfigurationError("radial oracle: r_max must be positive");
  const double m = problem.m;
  const double eps = 1e-6 * r_max;
  const double n1 = dim - 1.0;
  auto f = [&](double r) { return problem.source.radial(r); };

  struct Trial {
    bool high = false;
    OdeSolution<2> sol;
  };
  auto shoot = [&](double lam, bool keep) {
    auto rhs = [&](double r, const std::array<double, 2> &y) -> std::array<double, 2> {
      const double p = y[1];
      return {p, lam + int_or_real_pow(std::abs(p), m) - f(r) - n1 * p / r};
    };
    int verdict = 0;
    auto stop = [&](double r, const std::array<double, 2> &y) {
      const double p = y[1];
      const double F = f(r) - lam;
      const double branch = F > 0.0 ? std::pow(F, 1.0 / m) : 0.0;
      if (p > opt.blowup_cap) {
        verdict = 1;
        return true;
      }
      if (p < 0.0 && F > 0.0 && p < -0.5 * branch) {
        verdict = -1;
        return true;
      }
      if (p < -opt.blowup_cap) {
        verdict = -1;
        return true;
      }
      return false;
    };
    OdeOptions o;
    o.initial_step = eps;
    o.max_step = r_max / 200.0;
    Trial t;
    try {
      // Leading Taylor term of the regular solution, p ~ (λ - f(0)) r / N.
      const double p0 = (lam - f(0.0)) * eps / dim;
      t.sol = integrate_dp45<2>(rhs, eps, {0.5 * p0 * eps, p0}, r_max, o, stop);
    } catch (const IntegrationError &) {
      verdict = 1; // step underflow only happens on the blow-up side
    }
    if (verdict == 0) {
      const double p = t.sol.y.back()[1];
      const double F = f(r_max) - lam;
      const double branch = F > 0.0 ? std::pow(F, 1.0 / m) : 0.0;
      verdict = p > branch ? 1 : -1;
    }
    t.high = verdict > 0;
    if (!keep) t.sol = {};
    return t;
  };

  const double fmin = problem.source.lower_bound(r_max, 1);
  double lo = opt.bracket ? opt.bracket->first : fmin - 1.0;
  double hi = opt.bracket ? opt.bracket->second : f(0.0) + 1.0;
  double step = std::max(1.0, hi - lo);
  int expansions = 0;
  while (shoot(lo, false).high) {
    if (++expansions > opt.max_expansions) throw IntegrationError("radial oracle: no low bracket found");
    lo -= step;
    step *= 2.0;
  }
  step = std::max(1.0, hi - lo);
  while (!shoot(hi, false).high) {
    if (++expansions > opt.max_expansions) throw IntegrationError("radial oracle: no high bracket found");
    hi += step;
    step *= 2.0;
  }
  RadialPair out;
  while (hi - lo > opt.tol * std::max(1.0, std::abs(lo))) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (shoot(mid, false).high ? hi : lo) = mid;
    ++out.bisections;
  }
  out.lambda = 0.5 * (lo + hi);
  const Trial low = shoot(lo, true);
  const Trial high = shoot(hi, true);
  out.r = low.sol.t;
  for (std::size_t k = 0; k < low.sol.t.size(); ++k) {
    out.phi.push_back(low.sol.y[k][0]);
    out.dphi.push_back(low.sol.y[k][1]);
  }
  // Valid while the two bracketing trials still agree.
  out.valid_radius = out.r.back();
  for (std::size_t k = 0; k < low.sol.t.size(); ++k) {
    const double r = low.sol.t[k];
    const double ph = hermite<2>(high.sol.t, high.sol.y, high.sol.dy, 1, std::min(r, high.sol.t.back()));
    if (r > high.sol.t.back() || std::abs(ph - low.sol.y[k][1]) > 1e-3 * std::max(1.0, std::abs(ph))) {
      out.valid_radius = r;
      break;
    }
  }
  return out;
}

} // namespace vhj
