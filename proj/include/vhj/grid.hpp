#pragma once

// Uniform tensor grids on [-R, R]^dim, fields on them, and the monotone
// finite-difference operators of the scheme.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "vhj/errors.hpp"
#include "vhj/model.hpp"

namespace vhj {

class Grid {
public:
  Grid() = default;

  Grid(int dim, double radius, double h) : dim_(dim), radius_(radius), h_(h) {
    if (dim != 1 && dim != 2) throw ConfigurationError("grid: dim must be 1 or 2");
    if (!(h > 0.0) || !(radius > 0.0)) throw ConfigurationError("grid: need h > 0 and R > 0");
    const double cells = 2.0 * radius / h;
    const double rounded = std::round(cells);
    if (std::abs(cells - rounded) > 1e-9 * std::max(1.0, cells))
      throw ConfigurationError("grid: 2R/h must be an integer (R = " + std::to_string(radius) +
                               ", h = " + std::to_string(h) + ")");
    n_ = static_cast<int>(rounded) + 1;
    if (n_ < 3) throw ConfigurationError("grid: need at least 3 nodes per axis");
  }

  int dim() const { return dim_; }
  double radius() const { return radius_; }
  double spacing() const { return h_; }
  /// Nodes per axis.
  int nodes_per_axis() const { return n_; }
  std::size_t size() const { return dim_ == 1 ? std::size_t(n_) : std::size_t(n_) * n_; }

  double coord(int i) const { return -radius_ + i * h_; }
  /// Axis indices of a flat index (x index first).
  std::array<int, 2> indices(std::size_t k) const {
    return dim_ == 1 ? std::array<int, 2>{int(k), 0} : std::array<int, 2>{int(k % n_), int(k / n_)};
  }
  std::size_t flat(int i, int j = 0) const { return std::size_t(j) * n_ + i; }
  Point point(std::size_t k) const {
    const auto [i, j] = indices(k);
    return {coord(i), dim_ == 1 ? 0.0 : coord(j)};
  }
  bool is_boundary(std::size_t k) const {
    const auto [i, j] = indices(k);
    if (i == 0 || i == n_ - 1) return true;
    return dim_ == 2 && (j == 0 || j == n_ - 1);
  }
  /// Index of the node closest to the origin.
  std::size_t center() const { return dim_ == 1 ? flat(n_ / 2) : flat(n_ / 2, n_ / 2); }

  /// Flat index of the node at x, which must lie on the lattice.
  std::size_t index_of(const Point &x) const {
    auto axis = [&](double c) {
      const double t = (c + radius_) / h_;
      const double r = std::round(t);
      if (std::abs(t - r) > 1e-7 || r < 0 || r > n_ - 1)
        throw ConfigurationError("grid: point is not a grid node");
      return int(r);
    };
    return dim_ == 1 ? flat(axis(x[0])) : flat(axis(x[0]), axis(x[1]));
  }

  friend bool operator==(const Grid &a, const Grid &b) {
    return a.dim_ == b.dim_ && a.n_ == b.n_ && std::abs(a.h_ - b.h_) <= 1e-12 * a.h_ &&
           std::abs(a.radius_ - b.radius_) <= 1e-12 * a.radius_;
  }

private:
  int dim_ = 1;
  double radius_ = 1.0;
  double h_ = 1.0;
  int n_ = 3;
};

/// One value per node of a grid.
struct GridField {
  Grid grid;
  std::vector<double> values;

  GridField() = default;
  explicit GridField(const Grid &g, double fill = 0.0) : grid(g), values(g.size(), fill) {}
  GridField(const Grid &g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size()) throw ConfigurationError("field: value count mismatch");
  }

  template <class F> static GridField sample(const Grid &g, F &&f) {
    GridField out(g);
    for (std::size_t k = 0; k < g.size(); ++k) out.values[k] = f(g.point(k));
    return out;
  }

  std::size_t size() const { return values.size(); }
  double &operator[](std::size_t k) { return values[k]; }
  double operator[](std::size_t k) const { return values[k]; }
  bool all_finite() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
  }
};

enum class BoundaryLaplacian { Drop, OneSided };

inline const char *to_string(BoundaryLaplacian p) {
  return p == BoundaryLaplacian::Drop ? "drop" : "one-sided";
}

namespace detail {

/// Second difference along one axis at axis index `i` of a line with stride.
inline double second_difference(std::span<const double> u, std::size_t k, std::size_t stride, int i,
                                int n, double inv_h2, bool one_sided) {
  if (i > 0 && i < n - 1) return (u[k - stride] - 2.0 * u[k] + u[k + stride]) * inv_h2;
  if (!one_sided) return 0.0;
  const long s = i == 0 ? long(stride) : -long(stride);
  const auto at = [&](int off) { return u[std::size_t(long(k) + off * s)]; };
  if (n >= 4) return (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) * inv_h2;
  return (at(0) - 2.0 * at(1) + at(2)) * inv_h2;
}

} // namespace detail

/// Centered discrete Laplacian; boundary nodes follow `policy`: zero for
/// Drop, per-axis one-sided second-order second differences for OneSided.
inline GridField laplacian(const GridField &field, BoundaryLaplacian policy = BoundaryLaplacian::Drop) {
  const Grid &g = field.grid;
  const int n = g.nodes_per_axis();
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  GridField out(g);
  std::span<const double> u(field.values);
  const bool one_sided = policy == BoundaryLaplacian::OneSided;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!one_sided && g.is_boundary(k)) continue;
    const auto [i, j] = g.indices(k);
    double s = detail::second_difference(u, k, 1, i, n, inv_h2, one_sided);
    if (g.dim() == 2) s += detail::second_difference(u, k, std::size_t(n), j, n, inv_h2, one_sided);
    out.values[k] = s;
  }
  return out;
}

/// Godunov numerical Hamiltonian for |p|^m along one axis:
/// max(max(minus, 0), max(-plus, 0))^m.
inline double godunov_gradient_power(double minus, double plus, double m) {
  const double g = std::max(std::max(minus, 0.0), std::max(-plus, 0.0));
  return int_or_real_pow(g, m);
}

/// Upwind gradient magnitude per axis at node k; a missing neighbour (boundary)
/// contributes nothing, so boundary nodes only see inward differences.
struct UpwindGradient {
  double gx = 0.0, gy = 0.0;
  /// Which branch is active per axis: -1 backward, +1 forward, 0 none (kink).
  int bx = 0, by = 0;
  double magnitude() const { return gy == 0.0 ? gx : std::hypot(gx, gy); }
};

inline void upwind_axis(std::span<const double> u, std::size_t k, std::size_t stride, int i, int n,
                        double inv_h, double &g, int &branch) {
  const double back = i > 0 ? std::max((u[k] - u[k - stride]) * inv_h, 0.0) : 0.0;
  const double fwd = i < n - 1 ? std::max((u[k] - u[k + stride]) * inv_h, 0.0) : 0.0;
  if (back >= fwd) {
    g = back;
    branch = back > 0.0 ? -1 : 0;
  } else {
    g = fwd;
    branch = 1;
  }
}

inline UpwindGradient upwind_gradient(const Grid &grid, std::span<const double> u, std::size_t k) {
  UpwindGradient out;
  const int n = grid.nodes_per_axis();
  const double inv_h = 1.0 / grid.spacing();
  const auto [i, j] = grid.indices(k);
  upwind_axis(u, k, 1, i, n, inv_h, out.gx, out.bx);
  if (grid.dim() == 2) upwind_axis(u, k, std::size_t(n), j, n, inv_h, out.gy, out.by);
  return out;
}

/// Discrete Hamiltonian H_G(u) = |Godunov gradient|^m at every node.
inline GridField godunov_hamiltonian(const GridField &field, double m) {
  GridField out(field.grid);
  std::span<const double> u(field.values);
  for (std::size_t k = 0; k < field.size(); ++k) {
    const auto g = upwind_gradient(field.grid, u, k);
    out.values[k] = field.grid.dim() == 1 ? int_or_real_pow(g.gx, m)
                                          : std::pow(g.gx * g.gx + g.gy * g.gy, 0.5 * m);
  }
  return out;
}

/// Largest Godunov gradient magnitude over the grid.
inline double max_upwind_slope(const GridField &field) {
  double L = 0.0;
  std::span<const double> u(field.values);
  for (std::size_t k = 0; k < field.size(); ++k)
    L = std::max(L, upwind_gradient(field.grid, u, k).magnitude());
  return L;
}

/// Columnar text: header row, then one row per node with coordinates then value.
inline void write_columns(std::ostream &os, const GridField &field, const std::string &name = "value") {
  os << (field.grid.dim() == 1 ? "x," : "x,y,") << name << '\n';
  std::ostringstream line;
  line << std::setprecision(17);
  for (std::size_t k = 0; k < field.size(); ++k) {
    const Point p = field.grid.point(k);
    line.str("");
    line << p[0] << ',';
    if (field.grid.dim() == 2) line << p[1] << ',';
    line << field.values[k] << '\n';
    os << line.str();
  }
}

} // namespace vhj
