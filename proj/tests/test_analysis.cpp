#include <gtest/gtest.h>

#include "vhj/analysis.hpp"

using namespace vhj;

namespace {

ErgodicPair profile_pair(double R, double h, double lambda, double (*phi)(double)) {
  ErgodicPair p;
  p.lambda = lambda;
  p.phi = GridField::sample(Grid(1, R, h), [&](const Point &x) { return phi(x[0]); });
  p.x_ref = p.phi.grid.center();
  return p;
}

ProblemSpec cubic(double R) {
  ProblemSpec p;
  p.m = 3;
  p.radius = R;
  p.source = SourceTerm::radial_power(8, 3, 0);
  return p;
}

Trajectory synthetic(const ErgodicPair &pair, double c, double (*decay)(double, double)) {
  Trajectory tr;
  tr.grid = pair.phi.grid;
  for (int k = 0; k <= 40; ++k) {
    const double t = 0.25 * k;
    GridField u(tr.grid);
    for (std::size_t n = 0; n < u.size(); ++n)
      u[n] = pair.lambda * t + pair.phi[n] + c + decay(tr.grid.point(n)[0], t);
    tr.snapshots.push_back({t, u});
  }
  tr.reference_node = pair.x_ref;
  return tr;
}

} // namespace

TEST(Analysis, ConvergenceOnSyntheticDecay) {
  const auto pair = profile_pair(3, 0.1, 2.0, [](double x) { return x * x; });
  const auto tr = synthetic(pair, 0.5, [](double x, double t) { return x * std::exp(-t); });
  const auto rep = convergence_metric(tr, pair, Box::interval(-1, 1));
  EXPECT_TRUE(rep.pass());
  EXPECT_NEAR(rep.c_hat.back(), 0.5, 1e-9);
  EXPECT_LT(rep.spread_final, 1e-3);
}

TEST(Analysis, ConvergenceDetectsGrowingSpread) {
  const auto pair = profile_pair(3, 0.1, 2.0, [](double x) { return x * x; });
  const auto tr = synthetic(pair, 0.0, [](double x, double t) { return 0.01 * x * t; });
  const auto rep = convergence_metric(tr, pair, Box::interval(-1, 1));
  EXPECT_FALSE(rep.converged);
  EXPECT_FALSE(rep.spread_monotone_tail);
}

TEST(Analysis, ConvergenceRejectsMismatchedGrids) {
  const auto pair = profile_pair(3, 0.1, 2.0, [](double x) { return x * x; });
  const auto other = profile_pair(3, 0.05, 2.0, [](double x) { return x * x; });
  const auto tr = synthetic(other, 0.0, [](double, double) { return 0.0; });
  EXPECT_THROW(convergence_metric(tr, pair, Box::interval(-1, 1)), ConfigurationError);
}

TEST(Analysis, HolderRatioStableOnExactPair) {
  const auto pair = profile_pair(6, 0.01, 2.0, [](double x) { return x * x; });
  const auto rep = holder_rescale_check(pair, cubic(6), {2, 4, 6});
  EXPECT_TRUE(rep.pass);
  EXPECT_DOUBLE_EQ(rep.gamma, 0.5);
  EXPECT_LE(rep.spread_ratio, 3.0);
}

TEST(Analysis, SuperlinearityVerdicts) {
  const auto quad = profile_pair(6, 0.01, 2.0, [](double x) { return x * x; });
  const auto lin = profile_pair(6, 0.01, 2.0, [](double x) { return std::abs(x); });
  EXPECT_TRUE(superlinearity_check(quad, {1, 2, 3, 4, 5}).pass);
  EXPECT_FALSE(superlinearity_check(lin, {1, 2, 3, 4, 5}).pass);
}

TEST(Analysis, GradientBoundExample) {
  const auto pair = profile_pair(6, 0.01, 2.0, [](double x) { return x * x; });
  const auto rep = gradient_bound_check(pair, cubic(6), {3.0});
  ASSERT_EQ(rep.values.size(), 1u);
  EXPECT_NEAR(rep.values[0], 6.0 / (1.0 + 8.0 + std::pow(384.0, 0.2)), 1e-6);
}

TEST(Analysis, GradientBoundSkippedWithoutSourceGradient) {
  ProblemSpec p = cubic(6);
  p.source = manufacture_source(RadialSeries::power(1, 2.5), 0.0, 3.0, 1);
  const auto pair = profile_pair(6, 0.05, 0.0, [](double x) { return std::pow(std::abs(x), 2.5); });
  const auto rep = gradient_bound_check(pair, p, {2, 3, 4});
  EXPECT_TRUE(rep.skipped);
  EXPECT_FALSE(rep.notice.empty());
}

TEST(Analysis, TransformSuite) {
  for (double m : {2.5, 3.0, 4.0}) {
    const auto rep = transform_suite(m, 0.9 * (m - 1 - 2 / m), 20000, 42);
    EXPECT_TRUE(rep.pass()) << m;
    EXPECT_LE(rep.max_fd_error_r, 1e-6);
    EXPECT_LE(rep.max_fd_error_p, 1e-6);
  }
}

TEST(Analysis, TransformPartialsClosedForm) {
  // ∂N/∂p = (2 - m|q|^{m-2}) q, checked at one point by hand: m = 3, q = 2.
  EXPECT_DOUBLE_EQ(TransformPartials::dp(2.0, 3.0), (2.0 - 6.0) * 2.0);
  EXPECT_DOUBLE_EQ(TransformPartials::dr(2.0, 5.0, 3.0), 5.0 - 4.0 + 16.0);
}

TEST(Analysis, TransformSuiteDeterministicAndChecked) {
  const auto a = transform_suite(3.0, 1.0, 5000, 9), b = transform_suite(3.0, 1.0, 5000, 9);
  EXPECT_EQ(a.max_fd_error_r, b.max_fd_error_r);
  EXPECT_EQ(a.lower_bound.max_violation, b.lower_bound.max_violation);
  EXPECT_THROW(transform_suite(3.0, 1.5, 10), RejectionError);
  EXPECT_THROW(transform_suite(2.0, 0.1, 10), RejectionError);
}

TEST(Analysis, OrderingCheck) {
  ProblemSpec p = cubic(2);
  const Grid g(1, 2.0, 0.05);
  const auto low = InitialData::zero();
  const auto high = InitialData::polynomial(RadialSeries::power(1, 2));
  const auto rep = ordering_check(p, low, high, g, SchemeConfig::uniform(0.5, 5));
  EXPECT_TRUE(rep.pass);
  EXPECT_LE(rep.max_violation, 1e-10);
  try {
    ordering_check(p, high, low, g, SchemeConfig::uniform(0.5, 5));
    FAIL();
  } catch (const RejectionError &e) {
    EXPECT_NE(std::string(e.what()).find("x = "), std::string::npos);
  }
}

TEST(Analysis, SandwichOnSmallProblem) {
  ProblemSpec p = cubic(3);
  const Grid g(1, 3.0, 0.05);
  const auto pair = solve_newton(p, g);
  const auto tr = solve_state_constraint(p, g, SchemeConfig::uniform(3.0, 12));
  const auto chi = integrate_chi(1.0, 0.9, 1.05);
  const auto xi = integrate_xi(1.0, 0.9, 1.0);
  AssemblyParams ap;
  double phimax = 0.0;
  for (double v : pair.phi.values) phimax = std::max(phimax, v);
  ap.shift = std::max(phimax - chi.b + 0.5, 1.0);
  const auto sup = assemble(AssemblyKind::Super, pair, chi, std::nullopt, ap, phimax);
  const auto sub = assemble(AssemblyKind::Sub, pair, std::nullopt, xi, ap);
  const auto rep = sandwich_check(tr, sup, sub, Box::interval(-1, 1));
  EXPECT_TRUE(rep.pass);
  EXPECT_GT(rep.checked, 0u);
}
