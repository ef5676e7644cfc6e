// Acceptance run: one pass/fail line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "vhj/vhj.hpp"

using namespace vhj;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Line {
  bool pass = true;
  std::ostringstream detail;
  void check(bool ok, const std::string &what) {
    pass = pass && ok;
    detail << (ok ? "" : "!") << what << "; ";
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

ProblemSpec cubic(double R, int dim = 1) {
  ProblemSpec p;
  p.m = 3;
  p.dim = dim;
  p.radius = R;
  p.source = SourceTerm::radial_power(8, 3, 0);
  return p;
}

double sup_on(const Grid &g, double a, const std::function<double(std::size_t, double)> &err) {
  double e = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double x = g.point(k)[0];
    if (std::abs(x) <= a + 1e-12) e = std::max(e, std::abs(err(k, x)));
  }
  return e;
}

double phi_max(const ErgodicPair &p) {
  double v = 0.0;
  for (double x : p.phi.values) v = std::max(v, x);
  return v;
}

ErgodicPair exact_quadratic(const Grid &g, double lambda) {
  ErgodicPair p;
  p.lambda = lambda;
  p.phi = GridField::sample(g, [](const Point &x) { return x[0] * x[0] + x[1] * x[1]; });
  p.x_ref = g.center();
  return p;
}

void criterion1(Line &l) {
  const auto t0 = std::chrono::steady_clock::now();
  const ProblemSpec p = cubic(6);
  const Grid g(1, 6.0, 0.01);
  const ErgodicPair nw = solve_newton(p, g);
  const ErgodicPair lt = solve_longtime(p, g, SchemeConfig::uniform(6.0, 24));
  const double rt = seconds_since(t0);
  l.check(std::abs(nw.lambda - 2.0) <= 1e-2, "newton lambda-2=" + fmt(nw.lambda - 2.0));
  l.check(std::abs(lt.lambda - 2.0) <= 1e-2, "longtime lambda-2=" + fmt(lt.lambda - 2.0));
  for (const ErgodicPair *e : {&nw, &lt}) {
    const double err = sup_on(g, 3.0, [&](std::size_t k, double x) { return e->phi[k] - x * x; });
    l.check(err <= 5e-2, e->route + " sup|phi-x^2|=" + fmt(err));
  }
  l.check(std::abs(nw.lambda - lt.lambda) <= 1e-2, "routes differ by " + fmt(std::abs(nw.lambda - lt.lambda)));
  l.check(rt < 60.0, "runtime " + fmt(rt) + "s");
}

void criterion2(Line &l) {
  ProblemSpec p = cubic(6);
  p.initial = InitialData::shifted_ergodic(RadialSeries::power(1, 2), 0.0);
  const Grid g(1, 6.0, 0.01);
  const auto tr = solve_state_constraint(p, g, SchemeConfig::uniform(5.0, 20));
  double worst = 0.0, at = 0.0;
  for (const auto &s : tr.snapshots) {
    const double e = sup_on(g, 3.0, [&](std::size_t k, double x) { return s.field[k] - 2.0 * s.time - x * x; });
    if (e > worst) worst = e, at = s.time;
  }
  l.check(worst <= 5e-2, "sup|u-2t-x^2|=" + fmt(worst) + " at t=" + fmt(at));
}

void criterion3(Line &l) {
  const auto chi = integrate_chi(1.0, 0.5, 1.5);
  double e = 0.0;
  for (double s = 0.0; s <= 1.9 + 1e-12; s += 1e-3)
    e = std::max(e, std::abs(chi.value(s) - (-s + std::log((2 + s) / (2 - s)))));
  l.check(e <= 1e-6, "chi err " + fmt(e));
  l.check(std::abs(chi.b - 2.0) <= 1e-3, "b=" + fmt(chi.b));
  const auto xi = integrate_xi(1.0, 0.5, 1.0);
  e = 0.0;
  for (double s = 0.0; s <= 10.0 + 1e-12; s += 1e-3) e = std::max(e, std::abs(xi.value(s) - 2.0 * std::tanh(s / 2)));
  l.check(e <= 1e-6, "xi err " + fmt(e));
  l.check(std::abs(xi.M - 2.0) <= 1e-3, "M=" + fmt(xi.M));
}

void criterion4(Line &l) {
  for (auto [b1, beta] : {std::pair{0.9, 0.7}, std::pair{0.99, 0.97}}) {
    const auto r = verify_barrier_inequality(integrate_chi(1.0, b1, 1.05), 3.0, beta, 20000);
    l.check(r.pass && r.samples >= 10000, "chi(" + fmt(b1) + "," + fmt(beta) + ") violations " +
                                              std::to_string(r.violations) + "/" + std::to_string(r.samples));
    const auto x = verify_barrier_inequality(integrate_xi(1.0, b1, 1.0), 3.0, beta, 20000);
    l.check(x.pass && x.samples >= 10000, "xi(" + fmt(b1) + "," + fmt(beta) + ") violations " +
                                              std::to_string(x.violations) + "/" + std::to_string(x.samples));
  }
  const auto bad = verify_barrier_inequality(integrate_chi(1.0, 0.5, 1.5), 3.0, 0.999, 20000);
  l.check(!bad.pass && bad.violations > 0, "designed-to-fail violations " + std::to_string(bad.violations));
}

void criterion5(Line &l) {
  const ProblemSpec p = cubic(6);
  const auto chi = integrate_chi(1.0, 0.9, 1.05);
  const auto xi = integrate_xi(1.0, 0.9, 1.0);
  std::vector<double> eps_super, eps_sub;
  for (double h : {0.02, 0.01}) {
    const ErgodicPair pair = exact_quadratic(Grid(1, 6.0, h), 2.0);
    AssemblyParams ap;
    ap.beta = 0.7;
    ap.shift = 36.0 - chi.b + 0.5;
    const auto sup = assemble(AssemblyKind::Super, pair, chi, std::nullopt, ap, 36.0);
    const auto sub = assemble(AssemblyKind::Sub, pair, std::nullopt, xi, ap);
    const std::vector<double> times{0.0, 0.5, 1.0, 2.0, 4.0};
    const auto rs = residual_check(sup, p, times, h);
    const auto rb = residual_check(sub, p, times, h);
    l.check(rs.pass, "h=" + fmt(h) + " super min R=" + fmt(rs.worst_residual) + " eps=" + fmt(rs.tolerance));
    l.check(rb.pass, "h=" + fmt(h) + " sub max R=" + fmt(rb.worst_residual) + " eps=" + fmt(rb.tolerance));
    eps_super.push_back(rs.tolerance);
    eps_sub.push_back(rb.tolerance);
  }
  l.check(eps_super[1] < eps_super[0] && eps_sub[1] < eps_sub[0], "eps shrinks with h");
}

void criterion6(Line &l) {
  SchemeConfig s = SchemeConfig::uniform(2.0, 8);
  s.boundary = BoundaryLaplacian::OneSided;
  ProblemSpec a = cubic(8);
  a.initial = InitialData::polynomial(RadialSeries::power(1, 2));
  ProblemSpec b;
  b.m = 2.5;
  b.radius = 8;
  b.source = manufacture_source(RadialSeries::power(1, 2), 2.0, 2.5, 1);
  int idx = 0;
  for (const ProblemSpec *p : {&a, &b}) {
    const auto rep = nested_limit(*p, {4.0, 6.0, 8.0}, 0.05, s);
    const std::string tag = "problem " + std::to_string(++idx);
    l.check(rep.max_violation() <= 1e-8, tag + " violation " + fmt(rep.max_violation()));
    l.check(rep.inner_gap <= 1e-3, tag + " inner gap " + fmt(rep.inner_gap));
  }
}

void criterion7(Line &l) {
  struct Fixture {
    std::string name;
    ProblemSpec p;
    InitialData low, high;
    Grid g;
    SchemeConfig s;
  };
  std::vector<Fixture> fx;
  ProblemSpec p1 = cubic(3);
  fx.push_back({"cubic 0<=x^2", p1, InitialData::zero(), InitialData::polynomial(RadialSeries::power(1, 2)),
                Grid(1, 3.0, 0.02), SchemeConfig::uniform(1.0, 20)});
  ProblemSpec p2 = cubic(2, 2);
  fx.push_back({"2d r^2<=r^2+1+cos(x)", p2, InitialData::polynomial(RadialSeries::power(1, 2)),
                InitialData::expression(Expression::parse("x^2 + y^2 + 1 + cos(x)")), Grid(2, 2.0, 0.1),
                SchemeConfig::uniform(0.5, 10)});
  ProblemSpec p3;
  p3.m = 2.5;
  p3.radius = 3;
  p3.source = SourceTerm::expression(Expression::parse("x^2 + 1"));
  fx.push_back({"imex m=2.5 |x|<=exp(|x|)", p3, InitialData::expression(Expression::parse("abs(x)")),
                InitialData::exponential(1.0, 1.0), Grid(1, 3.0, 0.02), SchemeConfig::uniform(1.0, 20, StepMode::Imex)});
  for (const auto &f : fx) {
    const auto r = ordering_check(f.p, f.low, f.high, f.g, f.s);
    l.check(r.pass, f.name + " max(u_low-u_high)=" + fmt(r.max_violation));
  }
}

void criterion8(Line &l) {
  const ProblemSpec base = cubic(6);
  const Grid g(1, 6.0, 0.01);
  const ErgodicPair pair = solve_newton(base, g);
  const auto chi = integrate_chi(1.0, 0.9, 1.05);
  const auto xi = integrate_xi(1.0, 0.9, 1.0);
  AssemblyParams ap;
  ap.beta = 0.7;
  ap.shift = std::max(phi_max(pair) - chi.b + 0.5, 1.0);
  const auto sup = assemble(AssemblyKind::Super, pair, chi, std::nullopt, ap, phi_max(pair));
  const auto sub = assemble(AssemblyKind::Sub, pair, std::nullopt, xi, ap);
  for (int run = 0; run < 2; ++run) {
    ProblemSpec p = base;
    p.initial = run == 0 ? InitialData::zero() : InitialData::polynomial(RadialSeries::power(1, 4));
    const std::string tag = run == 0 ? "u0=0" : "u0=x^4";
    const auto t0 = std::chrono::steady_clock::now();
    const auto tr = solve_state_constraint(p, g, SchemeConfig::uniform(10.0, 40));
    const auto cr = convergence_metric(tr, pair, Box::interval(-2, 2));
    const auto sw = sandwich_check(tr, sup, sub, Box::interval(-2, 2));
    const double rt = seconds_since(t0);
    l.check(cr.spread_final < 0.02, tag + " spread " + fmt(cr.spread_final));
    l.check(cr.spread_monotone_tail, tag + " spread nonincreasing on [7.5,10]");
    l.check(cr.slope_ok, tag + " slope gap " + fmt(cr.slope_gap) + " <= " + fmt(cr.slope_bound));
    l.check(sw.pass, tag + " sandwich upper " + fmt(sw.upper_violation) + " lower " + fmt(sw.lower_violation));
    l.check(rt < 300.0, tag + " runtime " + fmt(rt) + "s");
  }
}

void criterion9(Line &l) {
  for (double m : {2.5, 3.0, 4.0}) {
    const auto r = transform_suite(m, 0.9 * (m - 1 - 2 / m), 100000, 2024);
    const std::size_t v =
        r.lower_bound.violations + r.domination.violations + r.young.violations + r.magnitude.violations;
    l.check(r.pass() && r.samples >= 100000, "m=" + fmt(m) + " violations " + std::to_string(v) + " fd " +
                                                 fmt(std::max(r.max_fd_error_r, r.max_fd_error_p)));
  }
}

void criterion10(Line &l) {
  ProblemSpec a = cubic(6);
  ProblemSpec b;
  b.m = 2.5;
  b.radius = 6;
  b.source = manufacture_source(RadialSeries::power(1, 2), 2.0, 2.5, 1);
  int idx = 0;
  for (const ProblemSpec *p : {&a, &b}) {
    const std::string tag = "pair " + std::to_string(++idx);
    const ErgodicPair pair = solve_newton(*p, Grid(1, 6.0, 0.01));
    const auto h = holder_rescale_check(pair, *p, {2, 4, 6});
    l.check(h.pass, tag + " holder max/min " + fmt(h.spread_ratio));
    const auto s = superlinearity_check(pair, {1, 2, 3, 4, 5});
    l.check(s.pass, tag + " superlinear");
    const auto gb = gradient_bound_check(pair, *p, {2, 3, 4});
    l.check(gb.pass && !gb.skipped, tag + " gradient max/min " + fmt(gb.spread_ratio));
  }
  ErgodicPair lin = exact_quadratic(Grid(1, 6.0, 0.01), 0.0);
  for (std::size_t k = 0; k < lin.phi.size(); ++k) lin.phi[k] = std::abs(lin.phi.grid.point(k)[0]);
  l.check(!superlinearity_check(lin, {1, 2, 3, 4, 5}).pass, "linear profile rejected");
}

} // namespace

int main() {
  const std::vector<std::pair<int, void (*)(Line &)>> criteria{
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},  {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}, {10, criterion10}};
  int failed = 0;
  for (const auto &[n, fn] : criteria) {
    Line l;
    try {
      fn(l);
    } catch (const std::exception &e) {
      l.check(false, std::string("error: ") + e.what());
    }
    failed += l.pass ? 0 : 1;
    std::printf("criterion %2d: %s  %s\n", n, l.pass ? "PASS" : "FAIL", l.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
