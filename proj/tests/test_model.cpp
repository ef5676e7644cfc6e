#include <gtest/gtest.h>

#include <cmath>

#include "vhj/model.hpp"
#include "vhj/scheme.hpp"

using namespace vhj;

TEST(Model, H1CubicSourcePasses) {
  const auto rep = validate_h1(SourceTerm::radial_power(8, 3, 0), GrowthEnvelope::monomial(3, 1, 8), 6.0, 1000);
  EXPECT_TRUE(rep.pass);
  EXPECT_LE(rep.max_violation, 1e-12);
}

TEST(Model, H1BoundedSourceFails) {
  const auto f = SourceTerm::expression(Expression::parse("sin(x)"));
  const auto rep = validate_h1(f, GrowthEnvelope::monomial(1, 1, 1), 100.0, 1000);
  EXPECT_FALSE(rep.pass);
  EXPECT_EQ(rep.inequality, "lower");
  EXPECT_GT(std::abs(rep.witness[0]), 2.0);
}

TEST(Model, H1QuadraticPasses) {
  const auto f = SourceTerm::expression(Expression::parse("x^2"));
  EXPECT_TRUE(validate_h1(f, GrowthEnvelope::monomial(2, 1, 1), 6.0, 1000).pass);
}

TEST(Model, H1MonotoneInF0) {
  const auto f = SourceTerm::radial_power(8, 3, 0);
  for (double f0 : {2.0, 4.0, 7.9, 8.0, 9.0, 20.0}) {
    const bool base = validate_h1(f, GrowthEnvelope::monomial(3, 1, f0), 6.0, 200).pass;
    const bool larger = validate_h1(f, GrowthEnvelope::monomial(3, 1, f0 * 1.5), 6.0, 200).pass;
    if (base) EXPECT_TRUE(larger) << f0;
  }
}

TEST(Model, H1Preconditions) {
  const auto f = SourceTerm::radial_power(8, 3, 0);
  EXPECT_THROW(validate_h1(f, GrowthEnvelope::monomial(3, 1, 8), 6.0, 50), RejectionError);
  const auto env = GrowthEnvelope::expression(1, 1, 1, Expression::parse("2 - r"));
  EXPECT_THROW(validate_h1(f, env, 6.0, 200), EnvelopeError);
}

TEST(Model, ManufacturedExamples) {
  const auto a = manufacture_source(RadialSeries::power(1, 2), 2.0, 3.0, 1);
  const auto b = manufacture_source(RadialSeries::power(1, 4), 0.0, 3.0, 1);
  const auto c = manufacture_source(RadialSeries::power(1, 2), 0.0, 3.0, 1);
  for (double x : {-2.5, -1.0, -0.3, 0.0, 0.7, 1.9}) {
    const double ax = std::abs(x);
    EXPECT_NEAR(a(x), 8 * ax * ax * ax, 1e-9 * (1 + ax * ax * ax));
    EXPECT_NEAR(b(x), 64 * std::pow(ax, 9) - 12 * x * x, 1e-9 * (1 + std::pow(ax, 9)));
    EXPECT_NEAR(c(x), 8 * ax * ax * ax - 2, 1e-9 * (1 + ax * ax * ax));
  }
}

TEST(Model, ManufacturedTwoDimensional) {
  // φ = r², λ = 4, m = 4, N = 2: f = 4 - 4 + (2r)^4.
  const auto f = manufacture_source(RadialSeries::power(1, 2), 4.0, 4.0, 2);
  EXPECT_NEAR(f(Point{1.0, 1.0}), 16.0 * 4.0, 1e-9);
}

// Residual of the second-order centered ergodic operator at the manufactured
// pair decays like h².
TEST(Model, ManufacturedResidualSecondOrder) {
  const double m = 3.0;
  const auto f = manufacture_source(RadialSeries::power(1, 4), 0.0, m, 1);
  auto residual = [&](double h) {
    double worst = 0.0;
    for (double x = -2.0; x <= 2.0 + 1e-12; x += 0.25) {
      auto phi = [](double y) { return y * y * y * y; };
      const double lap = (phi(x - h) - 2 * phi(x) + phi(x + h)) / (h * h);
      const double grad = (phi(x + h) - phi(x - h)) / (2 * h);
      worst = std::max(worst, std::abs(0.0 - lap + std::pow(std::abs(grad), m) - f(x)));
    }
    return worst;
  };
  const double r1 = residual(1e-2), r2 = residual(5e-3);
  EXPECT_NEAR(r1 / r2, 4.0, 0.2);
}

TEST(Model, RejectsSubquadraticExponent) {
  ProblemSpec p;
  p.m = 2.0;
  EXPECT_THROW(p.validate(), ConfigurationError);
  p.m = 3.0;
  p.dim = 3;
  EXPECT_THROW(p.validate(), ConfigurationError);
}

TEST(Model, ExpressionGradientMatchesDifferences) {
  const auto f = SourceTerm::expression(Expression::parse("x^4 + 3*x*y + exp(y)"));
  ASSERT_TRUE(f.has_gradient());
  const Point x{0.7, -0.4};
  const Point g = *f.gradient(x);
  const double d = 1e-6;
  EXPECT_NEAR(g[0], (f(Point{x[0] + d, x[1]}) - f(Point{x[0] - d, x[1]})) / (2 * d), 1e-6);
  EXPECT_NEAR(g[1], (f(Point{x[0], x[1] + d}) - f(Point{x[0], x[1] - d})) / (2 * d), 1e-6);
}

TEST(Model, LowerBounds) {
  EXPECT_DOUBLE_EQ(*SourceTerm::radial_power(8, 3, -1).analytic_lower_bound(), -1.0);
  const auto f = SourceTerm::expression(Expression::parse("x^2 - 3"));
  EXPECT_NEAR(f.lower_bound(2.0, 1), -3.0, 1e-9);
}

// Shifting f by c1 and u0 by c2 shifts the discrete solution by c1 t + c2.
TEST(Model, ShiftInvariance) {
  ProblemSpec p;
  p.m = 3;
  p.radius = 2;
  p.source = SourceTerm::radial_power(8, 3, 0);
  p.initial = InitialData::polynomial(RadialSeries::power(1, 4));
  const Grid g(1, 2.0, 0.05);
  SchemeConfig s = SchemeConfig::uniform(0.5, 5);
  const ProblemSpec q = p.shifted(1.5, -0.75);
  const auto a = solve_state_constraint(p, g, s);
  const auto b = solve_state_constraint(q, g, s);
  for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
    const double t = a.snapshots[k].time;
    for (std::size_t n = 0; n < g.size(); ++n)
      EXPECT_NEAR(b.snapshots[k].field[n], a.snapshots[k].field[n] + 1.5 * t - 0.75, 1e-9);
  }
}
