#include <gtest/gtest.h>

#include <random>

#include "vhj/grid.hpp"

using namespace vhj;

TEST(Grid, Layout) {
  const Grid g(2, 1.0, 0.25);
  EXPECT_EQ(g.nodes_per_axis(), 9);
  EXPECT_EQ(g.size(), 81u);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point x = g.point(k);
    const bool edge = std::abs(std::abs(x[0]) - 1.0) < 1e-12 || std::abs(std::abs(x[1]) - 1.0) < 1e-12;
    EXPECT_EQ(g.is_boundary(k), edge);
  }
  EXPECT_THROW(Grid(1, 1.0, 0.3), ConfigurationError);
  EXPECT_THROW(Grid(1, 1.0, 2.0), ConfigurationError);
}

TEST(Grid, LaplacianExactOnQuadratics) {
  const Grid g(1, 3.0, 0.1);
  const auto q = GridField::sample(g, [](const Point &x) { return x[0] * x[0]; });
  const auto c = GridField::sample(g, [](const Point &) { return 4.2; });
  const auto lq = laplacian(q), lc = laplacian(c);
  for (std::size_t k = 1; k + 1 < g.size(); ++k) {
    EXPECT_NEAR(lq[k], 2.0, 1e-9);
    EXPECT_EQ(lc[k], 0.0);
  }
}

TEST(Grid, LaplacianCubicAtOne) {
  const Grid g(1, 3.0, 0.1);
  const auto u = GridField::sample(g, [](const Point &x) { return x[0] * x[0] * x[0]; });
  EXPECT_NEAR(laplacian(u)[g.index_of(Point{1.0, 0.0})], 6.0, 1e-9);
}

TEST(Grid, BoundaryPolicies) {
  const Grid g(1, 1.0, 0.1);
  const auto u = GridField::sample(g, [](const Point &x) { return x[0] * x[0] * x[0]; });
  EXPECT_EQ(laplacian(u, BoundaryLaplacian::Drop)[0], 0.0);
  // The four-point formula is exact on cubics: u'' = 6x at x = ±1.
  EXPECT_NEAR(laplacian(u, BoundaryLaplacian::OneSided)[0], -6.0, 1e-8);
  EXPECT_NEAR(laplacian(u, BoundaryLaplacian::OneSided)[g.size() - 1], 6.0, 1e-8);
}

TEST(Grid, LaplacianLinearAndAnnihilatesAffine) {
  const Grid g(2, 1.0, 0.1);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1, 1);
  GridField a(g), b(g);
  for (auto &v : a.values) v = U(rng);
  for (auto &v : b.values) v = U(rng);
  GridField s(g);
  for (std::size_t k = 0; k < g.size(); ++k) s[k] = 2.0 * a[k] - 3.0 * b[k];
  const auto la = laplacian(a), lb = laplacian(b), ls = laplacian(s);
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(ls[k], 2.0 * la[k] - 3.0 * lb[k], 1e-9);
  const auto aff = GridField::sample(g, [](const Point &x) { return 1.0 + 2.0 * x[0] - 0.5 * x[1]; });
  for (auto policy : {BoundaryLaplacian::Drop, BoundaryLaplacian::OneSided}) {
    const auto l = laplacian(aff, policy);
    for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(l[k], 0.0, 1e-9);
  }
}

TEST(Grid, GodunovExamples) {
  EXPECT_DOUBLE_EQ(godunov_gradient_power(1, 1, 3), 1.0);
  EXPECT_DOUBLE_EQ(godunov_gradient_power(-1, 1, 3), 0.0);
  EXPECT_DOUBLE_EQ(godunov_gradient_power(0, -2, 3), 8.0);
  for (double p : {-2.0, -0.5, 0.0, 0.3, 1.7})
    EXPECT_NEAR(godunov_gradient_power(p, p, 3.5), std::pow(std::abs(p), 3.5), 1e-12);
}

TEST(Grid, GodunovMonotone) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-3, 3), D(0, 1);
  for (int k = 0; k < 20000; ++k) {
    const double a = U(rng), b = U(rng), m = 2.0 + 3.0 * D(rng), d = D(rng);
    EXPECT_LE(godunov_gradient_power(a, b + d, m), godunov_gradient_power(a, b, m));
    EXPECT_GE(godunov_gradient_power(a + d, b, m), godunov_gradient_power(a, b, m));
    EXPECT_GE(godunov_gradient_power(a, b, m), 0.0);
  }
}

// Discrete Hamiltonian converges at first order on a smooth function.
TEST(Grid, HamiltonianConsistency) {
  auto err = [](double h) {
    const Grid g(1, 1.0, h);
    const auto u = GridField::sample(g, [](const Point &x) { return std::sin(2.0 * x[0]); });
    const auto H = godunov_hamiltonian(u, 3.0);
    double e = 0.0;
    for (std::size_t k = 1; k + 1 < g.size(); ++k)
      e = std::max(e, std::abs(H[k] - std::pow(std::abs(2.0 * std::cos(2.0 * g.point(k)[0])), 3.0)));
    return e;
  };
  const double r = err(0.01) / err(0.005);
  EXPECT_GT(r, 1.7);
  EXPECT_LT(r, 2.3);
}

TEST(Grid, BoundaryUsesInwardDifferences) {
  const Grid g(1, 1.0, 0.5);
  // Values rise towards the left edge; the edge node has no outward neighbour.
  GridField u(g, std::vector<double>{0.0, 1.0, 2.0, 3.0, 4.0});
  const auto ug = upwind_gradient(g, u.values, 0);
  EXPECT_EQ(ug.gx, 0.0);
  const auto ur = upwind_gradient(g, u.values, 4);
  EXPECT_DOUBLE_EQ(ur.gx, 2.0);
}
