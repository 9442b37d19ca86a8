#include <cmath>
#include <limits>
#include <string>

#include <gtest/gtest.h>

#include "fblab/source.hpp"

using namespace fblab;

TEST(Evaluate, ConstantAndSingular) {
  EXPECT_DOUBLE_EQ(evaluate(SourceTerm::constant(1.0, 1), {0.3, 0.0}), 1.0);
  const auto f = SourceTerm::radial_singular(1.0, {0.0, 0.0}, 0.5, 1, 1.0, 1e6);
  EXPECT_DOUBLE_EQ(evaluate(f, {0.25, 0.0}), 2.0);
  EXPECT_DOUBLE_EQ(evaluate(f, {0.0, 0.0}), 1e6);
}

TEST(Evaluate, NegativeAmplitudeCapsTheMagnitude) {
  const auto f = SourceTerm::radial_singular(-3.0, {0.0, 0.0}, 0.5, 1, 1.0, 10.0);
  EXPECT_DOUBLE_EQ(evaluate(f, {0.0, 0.0}), -10.0);
  EXPECT_DOUBLE_EQ(evaluate(f, {0.01, 0.0}), -10.0);
  EXPECT_DOUBLE_EQ(evaluate(f, {0.25, 0.0}), -6.0);
}

TEST(Evaluate, SingularSourceNeverExceedsItsCap) {
  auto g = build_grid(rectangle({-1.0, -1.0}, {1.0, 1.0}), 65);
  const auto f = SourceTerm::radial_singular(2.0, {0.1, -0.2}, 1.2, 2, 1.5).bound_to(*g);
  const double cap = 2.0 * std::pow(g->spacing(), -1.2);
  for (double v : f.sample(*g)) EXPECT_LE(std::abs(v), cap * (1.0 + 1e-15));
  EXPECT_NEAR(f.sup_abs(*g), cap, 1e-12 * cap);
}

TEST(Evaluate, UnboundSingularSourceRefusesToEvaluate) {
  const auto f = SourceTerm::radial_singular(1.0, {0.0, 0.0}, 0.5, 1, 1.0);
  EXPECT_THROW(evaluate(f, {0.5, 0.0}), ContractError);
}

TEST(Evaluate, PiecewiseRegionsOverrideTheFallback) {
  const auto f = SourceTerm::piecewise(-1.0, {SourceRegion{{0.6, -1.0}, {1.0, 1.0}, 1.0}}, 2);
  EXPECT_DOUBLE_EQ(evaluate(f, {0.0, 0.0}), -1.0);
  EXPECT_DOUBLE_EQ(evaluate(f, {0.8, 0.5}), 1.0);
}

TEST(LqNorm, Constants) {
  auto g1 = build_grid(interval(0.0, 1.0), 17);
  for (double q : {1.0, 2.0, 3.5, kInfinity}) EXPECT_NEAR(lq_norm(SourceTerm::constant(1.0, 1), *g1, q), 1.0, 1e-14);
  auto g2 = build_grid(rectangle({0.0, 0.0}, {1.0, 1.0}), 17);
  EXPECT_NEAR(lq_norm(SourceTerm::constant(2.0, 2), *g2, 2.0), 2.0, 1e-14);
}

TEST(LqNorm, SingularL1NormMatchesAntiderivative) {
  // int_{-1}^{1} |x|^(-1/2) dx = 4.
  for (int res : {513, 1025}) {
    auto g = build_grid(interval(-1.0, 1.0), res);
    const auto f = SourceTerm::radial_singular(1.0, {0.0, 0.0}, 0.5, 1, 1.0).bound_to(*g);
    EXPECT_NEAR(lq_norm(f, *g, 1.0), 4.0, 0.05 * 4.0) << "resolution " << res;
  }
}

TEST(SourceTerm, SingularSourceMustLieInLq) {
  EXPECT_THROW(SourceTerm::radial_singular(1.0, {0.0, 0.0}, 0.5, 1, 2.0), ConfigurationError);
  EXPECT_NO_THROW(SourceTerm::radial_singular(1.0, {0.0, 0.0}, 0.5, 1, 1.9));
  EXPECT_THROW(SourceTerm::radial_singular(1.0, {0.0, 0.0}, 1.0, 2, 2.0), ConfigurationError);
  EXPECT_THROW(SourceTerm::constant(1.0, 1, 0.0), ConfigurationError);
}

TEST(SourceTerm, LowerBoundIsCheckedAnalytically) {
  EXPECT_NO_THROW(SourceTerm::constant(-2.0, 1).with_lower_bound(2.0));
  EXPECT_THROW(SourceTerm::constant(1.0, 1).with_lower_bound(2.0), ConfigurationError);
  const auto pw = SourceTerm::piecewise(-1.0, {SourceRegion{{0.6, -1.0}, {1.0, 1.0}, 1.0}}, 2);
  EXPECT_NO_THROW(pw.with_lower_bound(1.0));
  EXPECT_THROW(pw.with_lower_bound(1.5), ConfigurationError);
  EXPECT_THROW(SourceTerm::mollified_point_mass({0.0, 0.0}, 0.2, 1).with_lower_bound(0.1), ConfigurationError);
}

TEST(SourceTerm, MollifiedPointMassCarriesItsMass) {
  auto g = build_grid(rectangle({-1.0, -1.0}, {1.0, 1.0}), 257);
  const auto f = SourceTerm::mollified_point_mass({0.1, 0.0}, 0.3, 2, 2.5);
  EXPECT_TRUE(f.experimental());
  EXPECT_NEAR(lq_norm(f, *g, 1.0), 2.5, 1e-3);
  auto g1 = build_grid(interval(-1.0, 1.0), 513);
  EXPECT_NEAR(lq_norm(SourceTerm::mollified_point_mass({0.0, 0.0}, 0.25, 1), *g1, 1.0), 1.0, 1e-4);
}

TEST(SourceTerm, ScaledMultipliesValues) {
  const auto f = SourceTerm::piecewise(-1.0, {SourceRegion{{0.5, 0.0}, {1.0, 0.0}, 3.0}}, 1).scaled(-2.0);
  EXPECT_DOUBLE_EQ(f({0.0, 0.0}), 2.0);
  EXPECT_DOUBLE_EQ(f({0.75, 0.0}), -6.0);
}

TEST(PredictedGrowthExponent, Table) {
  EXPECT_EQ(predicted_growth_exponent(kInfinity, 2), 2.0);
  EXPECT_EQ(predicted_growth_exponent(kInfinity, 1), 2.0);
  EXPECT_DOUBLE_EQ(predicted_growth_exponent(1.0, 1), 1.0);
  EXPECT_DOUBLE_EQ(predicted_growth_exponent(2.0, 2), 1.0);
  EXPECT_DOUBLE_EQ(predicted_growth_exponent(4.0 / 3.0, 2), 0.5);
  EXPECT_DOUBLE_EQ(predicted_growth_exponent(2.0, 1), 1.5);
  EXPECT_DOUBLE_EQ(predicted_growth_exponent(SourceTerm::constant(1.0, 2, 4.0)), 1.5);
}

TEST(PredictedGrowthExponent, RegimeTrichotomyHasDistinctMessages) {
  std::string at_half, below_half;
  try {
    predicted_growth_exponent(1.0, 2);
  } catch (const RegimeError& e) {
    at_half = e.what();
  }
  try {
    predicted_growth_exponent(0.7, 2);
  } catch (const RegimeError& e) {
    below_half = e.what();
  }
  EXPECT_NE(at_half.find("inconclusive"), std::string::npos);
  EXPECT_NE(below_half.find("q < N/2"), std::string::npos);
  EXPECT_NE(at_half, below_half);
  EXPECT_THROW(predicted_growth_exponent(0.5, 1), RegimeError);
}

TEST(PredictedHolderExponent, Table) {
  const auto a = predicted_holder_exponent(4.0 / 3.0, 2);
  ASSERT_TRUE(a.alpha.has_value());
  EXPECT_NEAR(*a.alpha, 0.5, 1e-14);
  const auto b = predicted_holder_exponent(2.0, 2);
  EXPECT_TRUE(b.any_below_one());
  EXPECT_EQ(b.tag(), "any-below-one");
  const auto c = predicted_holder_exponent(kInfinity, 3);
  EXPECT_EQ(*c.alpha, 1.0);
  EXPECT_EQ(c.tag(), "C^{1,1}");
  EXPECT_TRUE(predicted_holder_exponent(1.0, 1).any_below_one());
  EXPECT_THROW(predicted_holder_exponent(0.9, 2), RegimeError);
  EXPECT_THROW(predicted_holder_exponent(3.0, 2), RegimeError);
}
