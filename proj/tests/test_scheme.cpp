#include <gtest/gtest.h>

#include <random>

#include "vhj/scheme.hpp"

using namespace vhj;

namespace {

ProblemSpec cubic(double R, int dim = 1) {
  ProblemSpec p;
  p.m = 3;
  p.dim = dim;
  p.radius = R;
  p.source = SourceTerm::radial_power(8, 3, 0);
  return p;
}

} // namespace

TEST(Scheme, ConstantStateWithZeroSource) {
  ProblemSpec p = cubic(1);
  p.source = SourceTerm::constant(0.0);
  const Grid g(1, 1.0, 0.1);
  const GridField u(g, 3.0);
  const auto v = step(u, 1e-3, p, SchemeConfig{});
  for (double x : v.values) EXPECT_DOUBLE_EQ(x, 3.0);
}

TEST(Scheme, ConstantSourceGivesLinearGrowth) {
  ProblemSpec p = cubic(1, 2);
  p.source = SourceTerm::constant(1.25);
  const Grid g(2, 1.0, 0.25);
  for (auto mode : {StepMode::Explicit, StepMode::Imex}) {
    const auto tr = solve_state_constraint(p, g, SchemeConfig::uniform(2.0, 4, mode));
    for (double x : tr.final_field().values) EXPECT_NEAR(x, 2.5, 1e-12);
  }
}

TEST(Scheme, SnapshotsHitRequestedTimes) {
  const auto tr = solve_state_constraint(cubic(2), Grid(1, 2.0, 0.05), SchemeConfig::uniform(0.3, 3));
  ASSERT_EQ(tr.snapshots.size(), 4u);
  EXPECT_EQ(tr.snapshots[0].time, 0.0);
  EXPECT_DOUBLE_EQ(tr.snapshots[1].time, 0.1);
  EXPECT_DOUBLE_EQ(tr.final_time(), 0.3);
  EXPECT_EQ(tr.slope_series.size(), 3u);
}

TEST(Scheme, FixedStepAboveStabilityBoundRejected) {
  SchemeConfig s = SchemeConfig::uniform(0.1, 1);
  s.dt_policy = DtPolicy::Fixed;
  s.dt = 0.01;
  EXPECT_THROW(solve_state_constraint(cubic(2), Grid(1, 2.0, 0.05), s), ConfigurationError);
  s.dt = 1e-4;
  EXPECT_NO_THROW(solve_state_constraint(cubic(2), Grid(1, 2.0, 0.05), s));
}

TEST(Scheme, NonFiniteValuesReported) {
  ProblemSpec p = cubic(1);
  const Grid g(1, 1.0, 0.1);
  GridField u(g, 0.0);
  u[3] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(step(u, 1e-4, p, SchemeConfig{}), BlowUpError);
}

TEST(Scheme, ConfigValidation) {
  SchemeConfig s = SchemeConfig::uniform(1.0, 2);
  s.snapshot_times = {0.0, 0.5, 0.4};
  EXPECT_THROW(s.validate(), ConfigurationError);
  s = SchemeConfig::uniform(1.0, 2);
  s.safety = 1.5;
  EXPECT_THROW(s.validate(), ConfigurationError);
}

TEST(Scheme, ImexAgreesWithExplicit) {
  ProblemSpec p = cubic(2);
  p.initial = InitialData::polynomial(RadialSeries::power(1, 2));
  const Grid g(1, 2.0, 0.02);
  const auto a = solve_state_constraint(p, g, SchemeConfig::uniform(0.5, 1, StepMode::Explicit));
  const auto b = solve_state_constraint(p, g, SchemeConfig::uniform(0.5, 1, StepMode::Imex));
  double d = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) d = std::max(d, std::abs(a.final_field()[k] - b.final_field()[k]));
  EXPECT_LT(d, 2e-2);
}

// Random ordered data stay ordered under a shared step sequence.
TEST(Scheme, OrderPreservingProperty) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0, 1);
  for (int trial = 0; trial < 5; ++trial) {
    for (int dim : {1, 2}) {
      const Grid g(dim, 1.0, dim == 1 ? 0.05 : 0.125);
      GridField lo(g), hi(g);
      for (std::size_t k = 0; k < g.size(); ++k) {
        lo[k] = 2.0 * U(rng);
        hi[k] = lo[k] + U(rng) * (k % 3 == 0 ? 0.0 : 1.0);
      }
      ProblemSpec p = cubic(1, dim);
      const auto runs = solve_lockstep({p, p}, {lo, hi}, SchemeConfig::uniform(0.2, 4));
      for (std::size_t s = 0; s < runs[0].snapshots.size(); ++s)
        for (std::size_t k = 0; k < g.size(); ++k)
          EXPECT_LE(runs[0].snapshots[s].field[k], runs[1].snapshots[s].field[k] + 1e-12);
    }
  }
}

TEST(Scheme, NestedBallsMonotoneWithOneSidedLaplacian) {
  ProblemSpec p = cubic(8);
  p.initial = InitialData::polynomial(RadialSeries::power(1, 2));
  SchemeConfig s = SchemeConfig::uniform(2.0, 8);
  s.boundary = BoundaryLaplacian::OneSided;
  const auto rep = nested_limit(p, {4.0, 6.0, 8.0}, 0.05, s);
  EXPECT_LE(rep.max_violation(), 1e-8);
  EXPECT_LE(rep.inner_gap, 1e-6);
}

TEST(Scheme, NestedRejectsIncompatibleGrids) {
  EXPECT_THROW(nested_limit(cubic(4), {2.0, 3.03}, 0.05, SchemeConfig::uniform(0.1, 1)), ConfigurationError);
  EXPECT_THROW(nested_limit(cubic(4), {3.0, 2.0}, 0.05, SchemeConfig::uniform(0.1, 1)), ConfigurationError);
}

TEST(Scheme, EmbedIndexMatchesCoordinates) {
  const Grid a(2, 1.0, 0.25), b(2, 2.0, 0.25);
  for (std::size_t k = 0; k < a.size(); ++k) {
    const Point x = a.point(k), y = b.point(embed_index(a, b, k));
    EXPECT_NEAR(x[0], y[0], 1e-12);
    EXPECT_NEAR(x[1], y[1], 1e-12);
  }
}
