#pragma once

// Time stepping for the state-constraint problem on the truncated ball, and
// the nested-ball approximation of the whole-space problem.
//
// Interior nodes: u' = u + dt (Δ_h u - H_G(u) + f). Boundary nodes drop the
// outward neighbour from the upwind gradient and follow the boundary
// Laplacian policy, which realises the state-constraint inequality.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vhj/errors.hpp"
#include "vhj/grid.hpp"
#include "vhj/model.hpp"

namespace vhj {

enum class StepMode { Explicit, Imex };
enum class DtPolicy { Fixed, Adaptive };

inline const char *to_string(StepMode m) { return m == StepMode::Explicit ? "explicit" : "imex"; }

struct SchemeConfig {
  StepMode mode = StepMode::Explicit;
  DtPolicy dt_policy = DtPolicy::Adaptive;
  /// Step for the fixed policy.
  double dt = 0.0;
  /// Fraction of the stability bound used by the adaptive policy. The explicit
  /// scheme is monotone for safety <= 1/2.
  double safety = 0.45;
  double max_time = 1.0;
  /// Increasing times in [0, max_time]; max_time is always recorded.
  std::vector<double> snapshot_times;
  BoundaryLaplacian boundary = BoundaryLaplacian::Drop;
  /// Node used for slope extraction; the origin by default.
  std::optional<Point> reference;

  /// `count` equally spaced snapshots on (0, T] plus t = 0.
  static SchemeConfig uniform(double T, int count, StepMode mode = StepMode::Explicit) {
    SchemeConfig c;
    c.mode = mode;
    c.max_time = T;
    c.safety = mode == StepMode::Explicit ? 0.45 : 0.9;
    c.snapshot_times.push_back(0.0);
    for (int k = 1; k <= count; ++k) c.snapshot_times.push_back(T * k / count);
    return c;
  }

  void validate() const {
    if (!(max_time > 0.0)) throw ConfigurationError("scheme: max_time must be positive");
    if (!(safety > 0.0) || safety > 1.0) throw ConfigurationError("scheme: safety must lie in (0, 1]");
    if (dt_policy == DtPolicy::Fixed && !(dt > 0.0))
      throw ConfigurationError("scheme: fixed dt policy needs dt > 0");
    for (std::size_t k = 0; k < snapshot_times.size(); ++k) {
      const double t = snapshot_times[k];
      if (t < 0.0 || t > max_time) throw ConfigurationError("scheme: snapshot time outside [0, T]");
      if (k > 0 && !(t > snapshot_times[k - 1]))
        throw ConfigurationError("scheme: snapshot times must be strictly increasing");
    }
  }

  /// Snapshot times with max_time appended when missing.
  std::vector<double> schedule() const {
    std::vector<double> s = snapshot_times;
    if (s.empty() || s.back() < max_time) s.push_back(max_time);
    return s;
  }
};

struct Snapshot {
  double time = 0.0;
  GridField field;
};

struct Trajectory {
  Grid grid;
  double m = 3.0;
  std::vector<Snapshot> snapshots;
  /// (t_k, (u(x_ref, t_k) - u(x_ref, t_{k-1})) / (t_k - t_{k-1})).
  std::vector<std::pair<double, double>> slope_series;
  std::size_t reference_node = 0;
  std::size_t steps = 0;

  const GridField &final_field() const { return snapshots.back().field; }
  double final_time() const { return snapshots.back().time; }
};

namespace detail {

inline bool integral_exponent(double m) { return m == 3.0 || m == 4.0; }

/// Pointwise monotone update operator for one grid and one problem.
class Stepper {
public:
  Stepper(const Grid &grid, const ProblemSpec &problem, StepMode mode, BoundaryLaplacian policy)
      : grid_(grid), m_(problem.m), mode_(mode), policy_(policy),
        f_(GridField::sample(grid, [&](const Point &x) { return problem.source(x); }).values),
        h_(grid.size()), rhs_(grid.size()) {
    for (std::size_t k = 0; k < f_.size(); ++k)
      if (!std::isfinite(f_[k]))
        throw ConfigurationError("scheme: source term is not finite at a grid node");
  }

  const Grid &grid() const { return grid_; }

  /// Evaluates H_G(u) into the scratch buffer and returns the largest slope.
  double hamiltonian(std::span<const double> u) {
    const std::size_t n = u.size();
    double L = 0.0;
    if (grid_.dim() == 1) {
      const double inv_h = 1.0 / grid_.spacing();
      for (std::size_t k = 0; k < n; ++k) {
        const double back = k > 0 ? (u[k] - u[k - 1]) * inv_h : 0.0;
        const double fwd = k + 1 < n ? (u[k] - u[k + 1]) * inv_h : 0.0;
        const double g = std::max(std::max(back, fwd), 0.0);
        L = std::max(L, g);
        h_[k] = pow_m(g);
      }
    } else {
      for (std::size_t k = 0; k < n; ++k) {
        const auto g = upwind_gradient(grid_, u, k);
        const double s2 = g.gx * g.gx + g.gy * g.gy;
        L = std::max(L, std::sqrt(s2));
        h_[k] = std::pow(s2, 0.5 * m_);
      }
    }
    return L;
  }

  /// Stability bound for the current slopes.
  double stable_dt(double L, double safety) const {
    const double h = grid_.spacing();
    const double sd = std::sqrt(double(grid_.dim()));
    const double hyper = h / (m_ * sd * std::pow(L + 1e-6, m_ - 1.0));
    if (mode_ == StepMode::Imex) return safety * hyper;
    return safety * std::min(h * h / (2.0 * grid_.dim()), hyper);
  }

  /// Advances u in place by dt; hamiltonian(u) must have been called on u.
  void advance(std::vector<double> &u, double dt) {
    if (mode_ == StepMode::Explicit) explicit_update(u, dt);
    else imex_update(u, dt);
  }

private:
  double pow_m(double g) const { return int_or_real_pow(g, m_); }

  void explicit_update(std::vector<double> &u, double dt) {
    const std::size_t n = u.size();
    const double inv_h2 = 1.0 / (grid_.spacing() * grid_.spacing());
    const bool one_sided = policy_ == BoundaryLaplacian::OneSided;
    if (grid_.dim() == 1) {
      rhs_[0] = u[0] + dt * ((one_sided ? boundary_lap(u, 0) : 0.0) - h_[0] + f_[0]);
      for (std::size_t k = 1; k + 1 < n; ++k)
        rhs_[k] = u[k] + dt * ((u[k - 1] - 2.0 * u[k] + u[k + 1]) * inv_h2 - h_[k] + f_[k]);
      rhs_[n - 1] =
          u[n - 1] + dt * ((one_sided ? boundary_lap(u, n - 1) : 0.0) - h_[n - 1] + f_[n - 1]);
    } else {
      const GridField lap = laplacian(GridField(grid_, u), policy_);
      for (std::size_t k = 0; k < n; ++k) rhs_[k] = u[k] + dt * (lap.values[k] - h_[k] + f_[k]);
    }
    u.swap(rhs_);
  }

  double boundary_lap(std::span<const double> u, std::size_t k) const {
    const double inv_h2 = 1.0 / (grid_.spacing() * grid_.spacing());
    return detail::second_difference(u, k, 1, int(k), grid_.nodes_per_axis(), inv_h2, true);
  }

  // Backward Euler diffusion, explicit Hamiltonian and source; per-axis
  // tridiagonal solves (sequential splitting in 2D).
  void imex_update(std::vector<double> &u, double dt) {
    const std::size_t total = u.size();
    const int n = grid_.nodes_per_axis();
    const double r = dt / (grid_.spacing() * grid_.spacing());
    for (std::size_t k = 0; k < total; ++k) rhs_[k] = u[k] + dt * (f_[k] - h_[k]);
    if (policy_ == BoundaryLaplacian::OneSided) {
      const GridField lap = laplacian(GridField(grid_, u), policy_);
      for (std::size_t k = 0; k < total; ++k)
        if (grid_.is_boundary(k)) rhs_[k] += dt * lap.values[k];
    }
    if (grid_.dim() == 1) {
      solve_line(rhs_, 0, 1, n, r);
    } else {
      for (int j = 1; j < n - 1; ++j) solve_line(rhs_, grid_.flat(0, j), 1, n, r);
      for (int i = 1; i < n - 1; ++i) solve_line(rhs_, grid_.flat(i, 0), std::size_t(n), n, r);
    }
    u.swap(rhs_);
  }

  /// Solves (I - r D2) v = b in place on one line; end rows are identity.
  void solve_line(std::vector<double> &b, std::size_t start, std::size_t stride, int n, double r) {
    cprime_.resize(std::size_t(n));
    auto at = [&](int i) -> double & { return b[start + std::size_t(i) * stride]; };
    // Row 0 is identity: c'_0 = 0, d'_0 = b_0.
    cprime_[0] = 0.0;
    const double diag = 1.0 + 2.0 * r;
    for (int i = 1; i < n - 1; ++i) {
      const double denom = diag + r * cprime_[i - 1];
      cprime_[i] = -r / denom;
      at(i) = (at(i) + r * at(i - 1)) / denom;
    }
    // Row n-1 identity; back substitution.
    for (int i = n - 2; i >= 1; --i) at(i) -= cprime_[i] * at(i + 1);
  }

  Grid grid_;
  double m_;
  StepMode mode_;
  BoundaryLaplacian policy_;
  std::vector<double> f_;
  std::vector<double> h_;
  std::vector<double> rhs_;
  std::vector<double> cprime_;
};

inline void check_finite(const std::vector<double> &u, double t) {
  for (std::size_t k = 0; k < u.size(); ++k)
    if (!std::isfinite(u[k]))
      throw BlowUpError("scheme: non-finite value at node " + std::to_string(k) + ", t = " +
                            std::to_string(t),
                        k, t);
}

} // namespace detail

/// One step of the scheme from u with step dt.
inline GridField step(const GridField &u, double dt, const ProblemSpec &problem,
                      const SchemeConfig &config) {
  problem.validate();
  detail::Stepper stepper(u.grid, problem, config.mode, config.boundary);
  std::vector<double> v = u.values;
  stepper.hamiltonian(v);
  stepper.advance(v, dt);
  detail::check_finite(v, dt);
  return GridField(u.grid, std::move(v));
}

/// Solves several problems on several grids with one shared step sequence:
/// the step is the minimum of the individual stability bounds. Sharing the
/// steps keeps discrete comparison exact between the runs.
inline std::vector<Trajectory> solve_lockstep(const std::vector<ProblemSpec> &problems,
                                              const std::vector<GridField> &initial,
                                              const SchemeConfig &config) {
  config.validate();
  if (problems.size() != initial.size() || problems.empty())
    throw ConfigurationError("scheme: problems and initial fields must pair up");
  std::vector<detail::Stepper> lanes;
  std::vector<std::vector<double>> u;
  std::vector<Trajectory> out(problems.size());
  for (std::size_t l = 0; l < problems.size(); ++l) {
    problems[l].validate();
    const Grid &g = initial[l].grid;
    if (g.dim() != problems[l].dim) throw ConfigurationError("scheme: grid and problem dimension differ");
    if (!initial[l].all_finite()) throw ConfigurationError("scheme: initial data not finite on the grid");
    lanes.emplace_back(g, problems[l], config.mode, config.boundary);
    u.push_back(initial[l].values);
    out[l].grid = g;
    out[l].m = problems[l].m;
    out[l].reference_node = g.index_of(config.reference.value_or(Point{0.0, 0.0}));
  }

  const std::vector<double> schedule = config.schedule();
  double t = 0.0;
  std::size_t next = 0;
  auto record = [&](double time) {
    for (std::size_t l = 0; l < lanes.size(); ++l) {
      Trajectory &tr = out[l];
      if (!tr.snapshots.empty()) {
        const Snapshot &prev = tr.snapshots.back();
        const std::size_t r = tr.reference_node;
        tr.slope_series.emplace_back(time, (u[l][r] - prev.field.values[r]) / (time - prev.time));
      }
      tr.snapshots.push_back({time, GridField(tr.grid, u[l])});
    }
  };
  if (schedule.front() == 0.0) {
    record(0.0);
    ++next;
  }

  if (config.dt_policy == DtPolicy::Fixed) {
    for (std::size_t l = 0; l < lanes.size(); ++l) {
      const double L = lanes[l].hamiltonian(u[l]);
      const double bound = lanes[l].stable_dt(L, config.safety);
      if (config.dt > bound)
        throw ConfigurationError("scheme: fixed dt = " + std::to_string(config.dt) +
                                 " violates the stability bound " + std::to_string(bound));
    }
  }

  std::size_t steps = 0;
  while (next < schedule.size()) {
    double dt = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < lanes.size(); ++l) {
      const double L = lanes[l].hamiltonian(u[l]);
      dt = std::min(dt, config.dt_policy == DtPolicy::Fixed ? config.dt
                                                            : lanes[l].stable_dt(L, config.safety));
    }
    const double target = schedule[next];
    bool hit = false;
    if (dt >= (target - t) * (1.0 - 1e-12)) {
      dt = target - t;
      hit = true;
    }
    for (std::size_t l = 0; l < lanes.size(); ++l) {
      lanes[l].advance(u[l], dt);
      detail::check_finite(u[l], t + dt);
    }
    ++steps;
    t = hit ? target : t + dt;
    if (hit) {
      record(t);
      ++next;
    }
  }
  for (auto &tr : out) tr.steps = steps;
  return out;
}

/// Solution of the state-constraint problem on `grid` from the problem's u0.
inline Trajectory solve_state_constraint(const ProblemSpec &problem, const Grid &grid,
                                         const SchemeConfig &config) {
  const GridField u0 = GridField::sample(grid, [&](const Point &x) { return problem.initial(x); });
  return std::move(solve_lockstep({problem}, {u0}, config).front());
}

/// Same, from an explicit initial field.
inline Trajectory solve_state_constraint(const ProblemSpec &problem, const GridField &u0,
                                         const SchemeConfig &config) {
  return std::move(solve_lockstep({problem}, {u0}, config).front());
}

/// Grid over [-radius, radius]^dim with spacing h.
inline Grid make_grid(const ProblemSpec &problem, double h) { return Grid(problem.dim, problem.radius, h); }

struct NestedReport {
  std::vector<double> radii;
  std::vector<Trajectory> trajectories;
  /// max over shared nodes and snapshot times of u^{R'} - u^{R}, per consecutive pair.
  std::vector<double> monotonicity_violation;
  /// sup |u^{R_last} - u^{R_prev}| over the central quarter of the smaller ball.
  double inner_gap = 0.0;
  double max_violation() const {
    double v = -std::numeric_limits<double>::infinity();
    for (double x : monotonicity_violation) v = std::max(v, x);
    return v;
  }
};

/// Flat index in `big` of node k of `small`, for grids sharing nodes.
inline std::size_t embed_index(const Grid &small, const Grid &big, std::size_t k) {
  const int off = int(std::lround((big.radius() - small.radius()) / small.spacing()));
  const auto [i, j] = small.indices(k);
  return small.dim() == 1 ? big.flat(i + off) : big.flat(i + off, j + off);
}

/// Solves on each ball and measures the ordering u^{R'} <= u^{R} for R' > R.
inline NestedReport nested_limit(const ProblemSpec &problem, const std::vector<double> &radii, double h,
                                 const SchemeConfig &config) {
  if (radii.empty()) throw ConfigurationError("nested_limit: no radii");
  std::vector<Grid> grids;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (k > 0 && radii[k] < radii[k - 1])
      throw ConfigurationError("nested_limit: radii must be nondecreasing");
    const double cells = radii[k] / h;
    if (std::abs(cells - std::round(cells)) > 1e-9 * std::max(1.0, cells))
      throw ConfigurationError("nested_limit: grids do not share nodes (R/h must be an integer)");
    grids.emplace_back(problem.dim, radii[k], h);
  }
  std::vector<ProblemSpec> problems;
  std::vector<GridField> u0;
  for (const Grid &g : grids) {
    ProblemSpec p = problem;
    p.radius = g.radius();
    problems.push_back(p);
    u0.push_back(GridField::sample(g, [&](const Point &x) { return problem.initial(x); }));
  }
  NestedReport rep;
  rep.radii = radii;
  rep.trajectories = solve_lockstep(problems, u0, config);

  auto compare = [&](const Trajectory &small, const Trajectory &big, bool inner_only, bool absolute) {
    double worst = -std::numeric_limits<double>::infinity();
    const double quarter = small.grid.radius() / 4.0;
    for (std::size_t s = 0; s < small.snapshots.size(); ++s) {
      const auto &a = small.snapshots[s].field.values;
      const auto &b = big.snapshots[s].field.values;
      for (std::size_t k = 0; k < a.size(); ++k) {
        const Point x = small.grid.point(k);
        if (inner_only && (std::abs(x[0]) > quarter + 1e-12 || std::abs(x[1]) > quarter + 1e-12))
          continue;
        const double d = b[embed_index(small.grid, big.grid, k)] - a[k];
        worst = std::max(worst, absolute ? std::abs(d) : d);
      }
    }
    return worst;
  };
  for (std::size_t k = 1; k < radii.size(); ++k)
    rep.monotonicity_violation.push_back(compare(rep.trajectories[k - 1], rep.trajectories[k], false, false));
  if (radii.size() >= 2)
    rep.inner_gap = compare(rep.trajectories[radii.size() - 2], rep.trajectories.back(), true, true);
  return rep;
}

} // namespace vhj
