#pragma once

// Adaptive Dormand-Prince 5(4) integrator with a stop predicate, used by the
// barrier profiles and the radial shooting oracle.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "vhj/errors.hpp"

namespace vhj {

struct OdeOptions {
  double rtol = 1e-11;
  double atol = 1e-13;
  double initial_step = 1e-6;
  double min_step = 1e-15;
  double max_step = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 2000000;
};

template <std::size_t N> struct OdeSolution {
  std::vector<double> t;
  std::vector<std::array<double, N>> y;
  /// Right-hand side at each accepted point, for Hermite interpolation.
  std::vector<std::array<double, N>> dy;
  bool stopped = false;
  std::size_t rejected = 0;
};

/// Integrates y' = f(t, y) from t0 towards t1 (t1 > t0). Every accepted point
/// is stored. `stop(t, y)` is called after each accepted step; returning true
/// ends the integration early.
template <std::size_t N, class F, class Stop>
OdeSolution<N> integrate_dp45(F &&f, double t0, std::array<double, N> y0, double t1,
                              const OdeOptions &opt, Stop &&stop) {
  using State = std::array<double, N>;
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  OdeSolution<N> sol;
  State y = y0;
  State k1 = f(t0, y);
  double t = t0;
  sol.t.push_back(t);
  sol.y.push_back(y);
  sol.dy.push_back(k1);
  if (stop(t, y)) {
    sol.stopped = true;
    return sol;
  }
  double h = std::min(opt.initial_step, t1 - t0);
  auto comb = [&](std::initializer_list<std::pair<double, const State *>> terms) {
    State out = y;
    for (auto [c, k] : terms)
      for (std::size_t i = 0; i < N; ++i) out[i] += h * c * (*k)[i];
    return out;
  };

  for (std::size_t step = 0; step < opt.max_steps; ++step) {
    if (t >= t1) return sol;
    h = std::min({h, t1 - t, opt.max_step});
    const State k2 = f(t + c2 * h, comb({{a21, &k1}}));
    const State k3 = f(t + c3 * h, comb({{a31, &k1}, {a32, &k2}}));
    const State k4 = f(t + c4 * h, comb({{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    const State k5 = f(t + c5 * h, comb({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    const State k6 = f(t + h, comb({{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    const State yn = comb({{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    const State k7 = f(t + h, yn);
    double err = 0.0;
    bool finite = true;
    for (std::size_t i = 0; i < N; ++i) {
      const double ei =
          h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(yn[i]));
      err = std::max(err, std::abs(ei) / sc);
      finite = finite && std::isfinite(yn[i]) && std::isfinite(k7[i]);
    }
    if (!finite) err = std::numeric_limits<double>::infinity();
    if (err <= 1.0) {
      t = (t1 - (t + h) <= 1e-15 * std::abs(t1)) ? t1 : t + h;
      y = yn;
      k1 = k7;
      sol.t.push_back(t);
      sol.y.push_back(y);
      sol.dy.push_back(k1);
      if (stop(t, y)) {
        sol.stopped = true;
        return sol;
      }
      const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      h *= fac;
    } else {
      ++sol.rejected;
      h *= std::isfinite(err) ? std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.5) : 0.1;
    }
    if (h < opt.min_step)
      throw IntegrationError("ode: step size underflow at t = " + std::to_string(t));
  }
  throw IntegrationError("ode: step budget exhausted at t = " + std::to_string(t));
}

template <std::size_t N, class F>
OdeSolution<N> integrate_dp45(F &&f, double t0, std::array<double, N> y0, double t1,
                              const OdeOptions &opt = {}) {
  return integrate_dp45<N>(std::forward<F>(f), t0, y0, t1, opt,
                           [](double, const std::array<double, N> &) { return false; });
}

/// Cubic Hermite interpolation of component i on a sorted sample.
template <std::size_t N>
double hermite(const std::vector<double> &t, const std::vector<std::array<double, N>> &y,
               const std::vector<std::array<double, N>> &dy, std::size_t i, double x) {
  if (t.size() < 2) return y.front()[i];
  auto it = std::upper_bound(t.begin(), t.end(), x);
  std::size_t k = it == t.begin() ? 0 : std::size_t(it - t.begin()) - 1;
  k = std::min(k, t.size() - 2);
  const double h = t[k + 1] - t[k];
  const double s = (x - t[k]) / h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * y[k][i] + (s3 - 2 * s2 + s) * h * dy[k][i] +
         (-2 * s3 + 3 * s2) * y[k + 1][i] + (s3 - s2) * h * dy[k + 1][i];
}

} // namespace vhj
