#pragma once

// Subcommand pipelines behind the command-line tool. Each pipeline reads a
// Config, writes an OutputBundle and returns its verdict set; the exit status
// is 0 when every verdict passes, 2 otherwise, 1 on operational errors.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "vhj/analysis.hpp"
#include "vhj/barriers.hpp"
#include "vhj/config.hpp"
#include "vhj/ergodic.hpp"
#include "vhj/io.hpp"
#include "vhj/scheme.hpp"

namespace vhj {

struct RunResult {
  ojson summary = ojson::object();
  ojson verdicts = ojson::object();
  bool pass() const {
    for (const auto &[k, v] : verdicts.items())
      if (!v.get<bool>()) return false;
    return true;
  }
};

inline int exit_code(const RunResult &r) { return r.pass() ? 0 : 2; }

namespace detail {

class Stopwatch {
public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - t_).count();
    t_ = now;
    return s;
  }

private:
  std::chrono::steady_clock::time_point t_ = std::chrono::steady_clock::now();
};

inline ojson report_json(const InequalityReport &r) {
  ojson j;
  j["pass"] = r.pass;
  j["violations"] = r.violations;
  j["samples"] = r.samples;
  j["max_violation"] = std::isfinite(r.max_violation) ? ojson(r.max_violation) : ojson(nullptr);
  j["witness"] = r.witness;
  if (r.tolerance != 0.0) j["tolerance"] = r.tolerance;
  if (r.worst_residual != 0.0) j["worst_residual"] = r.worst_residual;
  return j;
}

inline ojson estimate_json(const EstimateReport &r) {
  ojson j;
  j["radii"] = r.radii;
  j["values"] = r.values;
  j["spread_ratio"] = r.spread_ratio;
  j["pass"] = r.pass;
  if (r.skipped) j["notice"] = r.notice;
  return j;
}

inline NewtonOptions newton_options(const Config &c) {
  NewtonOptions o;
  o.tol = c.real("ergodic.tol", o.tol);
  const std::string b = c.str("scheme.boundary", "drop");
  o.boundary = b == "one-sided" ? BoundaryLaplacian::OneSided : BoundaryLaplacian::Drop;
  return o;
}

inline ErgodicPair discrete_pair(const ProblemSpec &p, const Grid &g, const Config &c) {
  return solve_newton(p, g, std::nullopt, newton_options(c));
}

inline std::string field_csv(const GridField &f, const std::string &name) {
  std::ostringstream os;
  write_columns(os, f, name);
  return os.str();
}

inline std::string trajectory_csv(const Trajectory &tr) {
  std::vector<double> t, slope;
  for (const auto &[a, b] : tr.slope_series) {
    t.push_back(a);
    slope.push_back(b);
  }
  return csv({"t", "slope"}, {t, slope});
}

inline ChiBarrier chi_from(const Config &c) {
  const auto v = c.reals("barrier.chi");
  if (v.size() != 3) throw ConfigurationError(c.where("barrier.chi") + ": barrier.chi expects C, beta1, beta2");
  return integrate_chi(v[0], v[1], v[2]);
}

inline XiBarrier xi_from(const Config &c) {
  const auto v = c.reals("barrier.xi");
  if (v.size() != 3) throw ConfigurationError(c.where("barrier.xi") + ": barrier.xi expects C, eta1, eta2");
  return integrate_xi(v[0], v[1], v[2]);
}

inline double max_phi(const ErgodicPair &pair) {
  double v = -std::numeric_limits<double>::infinity();
  for (double x : pair.phi.values) v = std::max(v, x);
  return v;
}

/// Super and sub assemblies with t0 from barrier.t0, or max(max φ - b + 0.5, 1).
inline std::pair<BarrierAssembly, BarrierAssembly> assemblies(const Config &c, const ErgodicPair &pair,
                                                              const ChiBarrier &chi, const XiBarrier &xi) {
  AssemblyParams ap;
  ap.beta = c.real("barrier.beta", ap.beta);
  ap.alpha_hat = c.real("barrier.alpha_hat", ap.alpha_hat);
  ap.shift = c.real("barrier.t0", std::max(max_phi(pair) - chi.b + 0.5, 1.0));
  const std::optional<double> phi_k = c.has("barrier.t0") ? std::nullopt : std::optional<double>(max_phi(pair));
  BarrierAssembly sup = assemble(AssemblyKind::Super, pair, chi, std::nullopt, ap, phi_k);
  AssemblyParams as = ap;
  as.beta = c.real("barrier.beta_sub", ap.beta);
  BarrierAssembly sub = assemble(AssemblyKind::Sub, pair, std::nullopt, xi, as);
  return {sup, sub};
}

inline Box box_from(const Config &c, double fallback) {
  const auto k = c.reals("experiment.K", {-fallback, fallback});
  if (k.size() != 2) throw ConfigurationError(c.where("experiment.K") + ": experiment.K expects lo, hi");
  return Box{{k[0], k[0]}, {k[1], k[1]}};
}

} // namespace detail

inline RunResult run_evolve(const Config &c, OutputBundle &out, std::uint64_t) {
  detail::Stopwatch sw;
  const ProblemSpec p = problem_from(c);
  const Grid g = make_grid(p, spacing_from(c));
  const SchemeConfig s = scheme_from(c);
  RunResult r;
  const Trajectory tr = solve_state_constraint(p, g, s);
  out.timing("evolve", sw.lap());
  out.write("final_field.csv", detail::field_csv(tr.final_field(), "u"));
  out.write("slope_series.csv", detail::trajectory_csv(tr));
  std::vector<double> times, centre;
  for (const auto &snap : tr.snapshots) {
    times.push_back(snap.time);
    centre.push_back(snap.field.values[tr.reference_node]);
  }
  out.write("reference_series.csv", csv({"t", "u_ref"}, {times, centre}));
  r.summary["steps"] = tr.steps;
  r.summary["final_time"] = tr.final_time();
  r.summary["slope_final"] = tr.slope_series.empty() ? 0.0 : tr.slope_series.back().second;
  r.verdicts["finite"] = true;
  return r;
}

inline RunResult run_ergodic(const Config &c, OutputBundle &out, std::uint64_t) {
  detail::Stopwatch sw;
  const ProblemSpec p = problem_from(c);
  const Grid g = make_grid(p, spacing_from(c));
  RunResult r;
  const ErgodicPair nw = detail::discrete_pair(p, g, c);
  out.timing("newton", sw.lap());
  SchemeConfig s = scheme_from(c);
  const ErgodicPair lt = solve_longtime(p, g, s, c.real("ergodic.longtime_tol", 1e-6));
  out.timing("longtime", sw.lap());
  out.write("phi_newton.csv", detail::field_csv(nw.phi, "phi"));
  out.write("phi_longtime.csv", detail::field_csv(lt.phi, "phi"));
  double phi_gap = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) phi_gap = std::max(phi_gap, std::abs(nw.phi[k] - lt.phi[k]));
  r.summary["lambda"] = nw.lambda;
  r.summary["lambda_newton"] = nw.lambda;
  r.summary["lambda_longtime"] = lt.lambda;
  r.summary["newton_route"] = nw.route;
  r.summary["newton_iterations"] = nw.iterations;
  r.summary["newton_residual"] = nw.residual;
  r.summary["phi_gap"] = phi_gap;
  const double agree = c.real("ergodic.agree_tol", 1e-2);
  r.verdicts["routes-agree"] = std::abs(nw.lambda - lt.lambda) <= agree;
  if (c.boolean("ergodic.radial_oracle", p.source.is_radial())) {
    try {
      const RadialPair ro = radial_oracle(p, p.dim, p.radius);
      r.summary["lambda_radial"] = ro.lambda;
      r.summary["radial_valid_radius"] = ro.valid_radius;
    } catch (const Error &e) {
      r.summary["radial_oracle_notice"] = e.what();
    }
    out.timing("radial", sw.lap());
  }
  if (c.has("ergodic.lambda_expected")) {
    const double tol = c.real("ergodic.lambda_tol", 1e-2);
    r.verdicts["lambda-expected"] = std::abs(nw.lambda - c.real("ergodic.lambda_expected")) <= tol;
  }
  return r;
}

inline RunResult run_barriers(const Config &c, OutputBundle &out, std::uint64_t) {
  detail::Stopwatch sw;
  const ProblemSpec p = problem_from(c);
  RunResult r;
  const ChiBarrier chi = detail::chi_from(c);
  const XiBarrier xi = detail::xi_from(c);
  out.timing("integrate", sw.lap());
  {
    std::ostringstream a, b;
    write_table(a, chi);
    write_table(b, xi);
    out.write("chi.csv", a.str());
    out.write("xi.csv", b.str());
  }
  const std::size_t n = std::size_t(c.integer("barrier.samples", 20000));
  const double beta = c.real("barrier.beta", 0.7);
  const auto ci = verify_barrier_inequality(chi, p.m, beta, n);
  const auto xr = verify_barrier_inequality(xi, p.m, c.real("barrier.beta_sub", beta), n);
  r.summary["b"] = chi.b;
  r.summary["M"] = xi.M;
  r.summary["barrier_inequality_chi"] = detail::report_json(ci);
  r.summary["barrier_inequality_xi"] = detail::report_json(xr);
  r.verdicts["barrier-inequality-chi"] = ci.pass;
  r.verdicts["barrier-inequality-xi"] = xr.pass;
  out.timing("inequalities", sw.lap());
  if (c.boolean("barrier.residual", true) && ci.pass && xr.pass) {
    const Grid g = make_grid(p, spacing_from(c));
    const ErgodicPair pair = detail::discrete_pair(p, g, c);
    auto [sup, sub] = detail::assemblies(c, pair, chi, xi);
    const auto times = c.reals("barrier.times", {0.0, 0.5, 1.0, 2.0, 4.0});
    const double dt = c.real("barrier.dt", g.spacing());
    const auto rs = residual_check(sup, p, times, dt);
    const auto rb = residual_check(sub, p, times, dt);
    r.summary["lambda"] = pair.lambda;
    r.summary["t0"] = sup.params().shift;
    r.summary["sigma"] = sup.sigma();
    r.summary["residual_super"] = detail::report_json(rs);
    r.summary["residual_sub"] = detail::report_json(rb);
    r.verdicts["residual-super"] = rs.pass;
    r.verdicts["residual-sub"] = rb.pass;
    out.timing("residual", sw.lap());
  }
  return r;
}

inline RunResult run_converge(const Config &c, OutputBundle &out, std::uint64_t) {
  detail::Stopwatch sw;
  const ProblemSpec p = problem_from(c);
  const Grid g = make_grid(p, spacing_from(c));
  RunResult r;
  const ErgodicPair pair = detail::discrete_pair(p, g, c);
  out.timing("ergodic", sw.lap());
  const Trajectory tr = solve_state_constraint(p, g, scheme_from(c));
  out.timing("evolve", sw.lap());
  const Box K = detail::box_from(c, 2.0);
  ConvergenceOptions co;
  co.tol = c.real("experiment.spread_tol", co.tol);
  co.margin = c.real("experiment.margin", co.margin);
  const ConvergenceReport cr = convergence_metric(tr, pair, K, co);
  out.write("convergence.csv", csv({"t", "c_hat", "spread", "slope"}, {cr.times, cr.c_hat, cr.spread, cr.slope}));
  out.write("phi.csv", detail::field_csv(pair.phi, "phi"));
  out.write("final_field.csv", detail::field_csv(tr.final_field(), "u"));
  r.summary["lambda"] = pair.lambda;
  r.summary["c_hat"] = cr.c_hat.back();
  r.summary["spread_final"] = cr.spread_final;
  r.summary["slope_gap"] = cr.slope_gap;
  r.summary["slope_bound"] = cr.slope_bound;
  r.verdicts["bounded"] = cr.bounded;
  r.verdicts["converged"] = cr.converged;
  r.verdicts["slope"] = cr.slope_ok;
  if (c.has("barrier.chi") && c.has("barrier.xi")) {
    const ChiBarrier chi = detail::chi_from(c);
    const XiBarrier xi = detail::xi_from(c);
    auto [sup, sub] = detail::assemblies(c, pair, chi, xi);
    const SandwichReport sr = sandwich_check(tr, sup, sub, K);
    r.summary["b"] = chi.b;
    r.summary["M"] = xi.M;
    r.summary["sigma"] = sup.sigma();
    r.summary["sandwich"] = {{"C", sr.C},
                             {"M", sr.M},
                             {"upper_violation", sr.upper_violation},
                             {"lower_violation", sr.lower_violation},
                             {"checked", sr.checked}};
    r.verdicts["sandwich"] = sr.pass;
    out.timing("sandwich", sw.lap());
  }
  return r;
}

inline RunResult run_verify(const Config &c, OutputBundle &out, std::uint64_t seed) {
  detail::Stopwatch sw;
  const ProblemSpec p = problem_from(c);
  RunResult r;
  std::vector<std::string> suites = c.has("verify.suites")
                                        ? c.strings("verify.suites")
                                        : std::vector<std::string>{"h1", "transform", "barrier", "ordering", "nested",
                                                                   "holder", "superlinearity", "gradient"};
  auto wants = [&](const std::string &s) { return std::find(suites.begin(), suites.end(), s) != suites.end(); };
  std::optional<ErgodicPair> pair;
  auto need_pair = [&]() -> const ErgodicPair & {
    if (!pair) pair = detail::discrete_pair(p, make_grid(p, spacing_from(c)), c);
    return *pair;
  };

  if (wants("h1") && p.envelope) {
    const auto v = validate_h1(p.source, *p.envelope, p.radius, std::size_t(c.integer("verify.h1_per_decade", 10000)),
                               p.dim);
    r.summary["h1"] = {{"pass", v.pass}, {"max_violation", v.max_violation}, {"inequality", v.inequality}};
    r.verdicts["h1"] = v.pass;
    out.timing("h1", sw.lap());
  }
  if (wants("transform")) {
    const double C = c.real("verify.transform_C", 0.9 * (p.m - 1.0 - 2.0 / p.m));
    const auto t = transform_suite(p.m, C, std::size_t(c.integer("verify.transform_samples", 100000)), seed);
    r.summary["transform"] = {{"lower_bound", detail::report_json(t.lower_bound)},
                              {"domination", detail::report_json(t.domination)},
                              {"young", detail::report_json(t.young)},
                              {"magnitude", detail::report_json(t.magnitude)},
                              {"fd_error_r", t.max_fd_error_r},
                              {"fd_error_p", t.max_fd_error_p}};
    r.verdicts["transform"] = t.pass();
    out.timing("transform", sw.lap());
  }
  if (wants("barrier") && c.has("barrier.chi")) {
    const ChiBarrier chi = detail::chi_from(c);
    const auto ci = verify_barrier_inequality(chi, p.m, c.real("barrier.beta", 0.7),
                                              std::size_t(c.integer("barrier.samples", 20000)));
    r.summary["barrier_inequality_chi"] = detail::report_json(ci);
    r.summary["b"] = chi.b;
    r.verdicts["barrier-inequality-chi"] = ci.pass;
  }
  if (wants("barrier") && c.has("barrier.xi")) {
    const XiBarrier xi = detail::xi_from(c);
    const auto xr = verify_barrier_inequality(xi, p.m, c.real("barrier.beta_sub", c.real("barrier.beta", 0.7)),
                                              std::size_t(c.integer("barrier.samples", 20000)));
    r.summary["barrier_inequality_xi"] = detail::report_json(xr);
    r.summary["M"] = xi.M;
    r.verdicts["barrier-inequality-xi"] = xr.pass;
    out.timing("barrier", sw.lap());
  }
  if (wants("ordering") && c.has("scheme.T")) {
    const Grid g = make_grid(p, spacing_from(c));
    const InitialData high = c.has("ordering.high_expr")
                                 ? InitialData::expression(Expression::parse(c.str("ordering.high_expr")))
                                 : p.initial.shifted(c.real("ordering.shift", 1.0));
    const auto o = ordering_check(p, p.initial, high, g, scheme_from(c));
    r.summary["ordering"] = detail::report_json(o);
    r.verdicts["ordering"] = o.pass;
    out.timing("ordering", sw.lap());
  }
  if (wants("nested") && c.has("verify.nested_radii") && c.has("scheme.T")) {
    const auto radii = c.reals("verify.nested_radii");
    const auto nr = nested_limit(p, radii, spacing_from(c), scheme_from(c));
    r.summary["nested"] = {{"radii", radii},
                           {"monotonicity_violation", nr.monotonicity_violation},
                           {"inner_gap", nr.inner_gap}};
    r.verdicts["nested"] = nr.max_violation() <= c.real("verify.nested_tol", 1e-8) &&
                           nr.inner_gap <= c.real("verify.inner_gap_tol", 1e-3);
    out.timing("nested", sw.lap());
  }
  if (wants("holder") && c.has("verify.holder_radii")) {
    const auto e = holder_rescale_check(need_pair(), p, c.reals("verify.holder_radii"),
                                        c.real("verify.holder_factor", 3.0));
    r.summary["holder"] = detail::estimate_json(e);
    r.summary["holder"]["gamma"] = e.gamma;
    r.verdicts["holder"] = e.pass;
  }
  if (wants("superlinearity") && c.has("verify.superlinearity_radii")) {
    const auto e = superlinearity_check(need_pair(), c.reals("verify.superlinearity_radii"));
    r.summary["superlinearity"] = detail::estimate_json(e);
    r.verdicts["superlinearity"] = e.pass;
  }
  if (wants("gradient") && c.has("verify.gradient_radii")) {
    const auto e = gradient_bound_check(need_pair(), p, c.reals("verify.gradient_radii"),
                                        c.real("verify.gradient_factor", 2.0));
    r.summary["gradient"] = detail::estimate_json(e);
    r.verdicts["gradient"] = e.pass;
  }
  if (pair) r.summary["lambda"] = pair->lambda;
  out.timing("estimates", sw.lap());
  return r;
}

using Pipeline = std::function<RunResult(const Config &, OutputBundle &, std::uint64_t)>;

inline Pipeline pipeline(const std::string &sub) {
  if (sub == "evolve") return run_evolve;
  if (sub == "ergodic") return run_ergodic;
  if (sub == "barriers") return run_barriers;
  if (sub == "converge") return run_converge;
  if (sub == "verify") return run_verify;
  throw ConfigurationError("unknown subcommand '" + sub + "'");
}

inline ojson config_echo(const Config &c) {
  ojson j = ojson::object();
  for (const auto &[k, v] : c.items()) j[k] = v;
  return j;
}

/// Runs one pipeline into `dir` and writes summary.json plus the manifest.
/// Operational errors propagate.
inline RunResult run_into(const std::string &sub, const Config &c, const std::filesystem::path &dir,
                          std::uint64_t seed) {
  OutputBundle out(dir);
  RunResult r = pipeline(sub)(c, out, seed);
  ojson s;
  s["subcommand"] = sub;
  s["seed"] = seed;
  s["pass"] = r.pass();
  s["verdicts"] = r.verdicts;
  s["results"] = r.summary;
  out.write_json("summary.json", s);
  out.finish(config_echo(c), sub);
  r.summary = s;
  return r;
}

/// Maps `sweep.command` over `sweep.key` = each of `sweep.values`, one output
/// subdirectory per value, on `jobs` worker threads.
inline int run_sweep(const Config &c, const std::filesystem::path &dir, std::uint64_t seed, unsigned jobs) {
  const std::string sub = c.str("sweep.command");
  if (sub == "sweep") throw ConfigurationError(c.where("sweep.command") + ": sweep cannot nest");
  pipeline(sub);
  const std::string key = c.str("sweep.key");
  const auto values = c.strings("sweep.values");
  std::vector<int> codes(values.size(), 1);
  std::vector<std::string> errors(values.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next++) < values.size();) {
      Config ck = c;
      ck.set(key, values[k]);
      char name[32];
      std::snprintf(name, sizeof name, "run_%03zu", k);
      try {
        codes[k] = exit_code(run_into(sub, ck, dir / name, seed));
      } catch (const std::exception &e) {
        codes[k] = 1;
        errors[k] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned n = std::max(1u, std::min<unsigned>(jobs, unsigned(values.size())));
  for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto &t : pool) t.join();

  OutputBundle out(dir);
  ojson s;
  s["subcommand"] = "sweep";
  s["command"] = sub;
  s["key"] = key;
  ojson runs = ojson::array();
  int worst = 0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "run_%03zu", k);
    ojson e{{"value", values[k]}, {"dir", name}, {"exit", codes[k]}};
    if (!errors[k].empty()) e["error"] = errors[k];
    runs.push_back(e);
    if (codes[k] == 1) worst = 1;
    else if (codes[k] == 2 && worst == 0) worst = 2;
  }
  s["runs"] = runs;
  s["pass"] = worst == 0;
  out.write_json("summary.json", s);
  out.finish(config_echo(c), "sweep");
  return worst;
}

} // namespace vhj
