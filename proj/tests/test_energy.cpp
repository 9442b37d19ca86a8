#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "fblab/energy.hpp"

using namespace fblab;
using std::numbers::pi;

TEST(Energy, ZeroFieldHasZeroEnergy) {
  auto g = build_grid(rectangle({0.0, 0.0}, {1.0, 1.0}), 17);
  EXPECT_EQ(energy(ScalarField::constant(g, 0.0), SourceTerm::constant(-3.0, 2)).total, 0.0);
}

TEST(Energy, LinearFieldWithoutSource) {
  auto g = build_grid(interval(0.0, 1.0), 33);
  const auto u = ScalarField::from_function(g, [](const Point& p) { return p[0]; });
  EXPECT_NEAR(energy(u, SourceTerm::constant(0.0, 1)).total, 0.5, 1e-14);
}

TEST(Energy, SineProfileConvergesAtSecondOrder) {
  // 1/2 int (pi cos pi x)^2 = pi^2 / 4 and int sin pi x = 2 / pi.
  double prev_d = 0.0, prev_s = 0.0;
  for (int res : {33, 65, 129}) {
    auto g = build_grid(interval(0.0, 1.0), res);
    const auto u = ScalarField::from_function(g, [](const Point& p) { return std::sin(pi * p[0]); });
    const auto e = energy(u, SourceTerm::constant(1.0, 1));
    const double h = g->spacing();
    const double ed = std::abs(e.dirichlet - pi * pi / 4.0);
    const double es = std::abs(e.source - 2.0 / pi);
    EXPECT_LT(ed, 3.0 * h * h);  // leading term pi^4 h^2 / 48
    EXPECT_LT(es, 2.0 * h * h);
    if (prev_d > 0.0) {
      EXPECT_NEAR(prev_d / ed, 4.0, 0.2);
      EXPECT_NEAR(prev_s / es, 4.0, 0.2);
    }
    prev_d = ed;
    prev_s = es;
    EXPECT_DOUBLE_EQ(e.total, e.dirichlet - e.source);
  }
}

TEST(EnergySubgradient, VanishesAtAStrictlyPositiveSolution) {
  // x(1 - x) solves the discrete problem exactly since the stencil is exact on quadratics.
  auto g = build_grid(interval(0.0, 1.0), 33);
  const auto u = ScalarField::from_function(g, [](const Point& p) { return p[0] * (1.0 - p[0]); });
  const auto s = energy_subgradient(u, SourceTerm::constant(2.0, 1), BoundaryData::constant(0.0));
  for (std::size_t node = 0; node < g->size(); ++node) EXPECT_NEAR(s[node], 0.0, 1e-10);
}

TEST(EnergySubgradient, IndicatorRemovesTheSourceOnTheZeroSet) {
  auto g = build_grid(interval(0.0, 1.0), 17);
  const auto s = energy_subgradient(ScalarField::constant(g, 0.0), SourceTerm::constant(-1.0, 1),
                                    BoundaryData::constant(0.0));
  for (std::size_t node = 0; node < g->size(); ++node) EXPECT_EQ(s[node], 0.0);
}

TEST(EnergySubgradient, HatFunctionConcentratesAtTheApex) {
  auto g = build_grid(interval(0.0, 1.0), 17);
  const double h = g->spacing();
  const auto hat = ScalarField::from_function(g, [](const Point& p) { return 0.5 - std::abs(p[0] - 0.5); });
  const auto s = energy_subgradient(hat, SourceTerm::constant(0.0, 1), BoundaryData::constant(0.0));
  const std::size_t apex = g->nearest_node({0.5, 0.0});
  for (std::size_t node = 0; node < g->size(); ++node)
    EXPECT_NEAR(s[node], node == apex ? 2.0 / h : 0.0, 1e-9) << "node " << node;
}

TEST(EnergySubgradient, RejectsBoundaryMismatch) {
  auto g = build_grid(interval(0.0, 1.0), 9);
  EXPECT_THROW(energy_subgradient(ScalarField::constant(g, 1.0), SourceTerm::constant(0.0, 1),
                                  BoundaryData::constant(0.0)),
               ContractError);
}

TEST(FiberCriticalT, ZeroPairingGivesZero) {
  auto g = build_grid(interval(0.0, 1.0), 17);
  const auto u = ScalarField::from_function(g, [](const Point& p) { return std::sin(pi * p[0]); });
  EXPECT_EQ(fiber_critical_t(u, SourceTerm::constant(0.0, 1)), 0.0);
}

TEST(FiberCriticalT, SeminormTwoAndPairingOne) {
  // u = x on [0, 2]: int |u'|^2 = 2; f = 1/2 gives int f u = 1.
  auto g = build_grid(interval(0.0, 2.0), 33);
  const auto u = ScalarField::from_function(g, [](const Point& p) { return p[0]; });
  EXPECT_NEAR(2.0 * dirichlet_energy(u), 2.0, 1e-14);
  EXPECT_NEAR(fiber_critical_t(u, SourceTerm::constant(0.5, 1)), 0.5, 1e-14);
}

TEST(FiberCriticalT, MinimizesTheScan) {
  auto g = build_grid(rectangle({0.0, 0.0}, {1.0, 1.0}), 17);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(0.1, 1.0);
  std::vector<double> v(g->size());
  for (double& x : v) x = dist(rng);
  const ScalarField u(g, v);
  const auto f = SourceTerm::constant(1.0, 2);
  const double ts = fiber_critical_t(u, f);
  const double e_star = energy(scale_field(u, ts), f).total;
  for (int k = 0; k <= 20; ++k) {
    const double t = 2.0 * ts * k / 20.0;
    EXPECT_LE(e_star, energy(scale_field(u, t), f).total + 1e-14);
  }
}

TEST(FiberCriticalT, ConstantFieldIsDegenerate) {
  auto g = build_grid(interval(0.0, 1.0), 9);
  EXPECT_THROW(fiber_critical_t(ScalarField::constant(g, 1.0), SourceTerm::constant(1.0, 1)), DegenerateInputError);
}
