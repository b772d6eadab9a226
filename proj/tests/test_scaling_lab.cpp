#include <gtest/gtest.h>

#include <cmath>

#include "bitree/scaling_lab.hpp"
#include "bitree/suites.hpp"
#include "oracles.hpp"

using namespace bitree;

namespace {

PotentialBundle<double> atom_aa() {
  BiFn<double> mu(BiShape(1, 1));
  mu[{{1, 0}, {1, 0}}] = 1.0;
  return build_potential(mu);
}

LadderReport synthetic(double power) {
  LadderReport r;
  for (int k = 1; k <= 12; ++k) {
    LadderRow row;
    row.delta = std::ldexp(1.0, -k);
    row.energy_delta = 3.0 * std::pow(row.delta, power);
    r.rows.push_back(row);
  }
  return r;
}

}  // namespace

TEST(Measures, SingleNode) {
  const auto mu = generate_measure(MeasureKind::single_node, BiShape(3, 3), 1);
  const auto b = build_potential(mu);
  EXPECT_DOUBLE_EQ(b.mass, 1.0);
  EXPECT_DOUBLE_EQ(b.energy, oracle::energy(mu));
}

TEST(Measures, SeededAndNonNegative) {
  for (MeasureKind k : kAllMeasureKinds) {
    const auto a = generate_measure(k, BiShape(4, 3), 77);
    EXPECT_EQ(a, generate_measure(k, BiShape(4, 3), 77)) << to_string(k);
    EXPECT_TRUE(is_nonnegative(a));
    EXPECT_GT(sum(a), 0.0);
    EXPECT_EQ(parse_measure_kind(to_string(k)), k);
  }
  EXPECT_THROW((void)parse_measure_kind("gaussian"), invalid_input);
  const auto u = generate_measure(MeasureKind::uniform_leaves, BiShape(3, 2), 1);
  EXPECT_DOUBLE_EQ(sum(u), 1.0);
}

TEST(TwoScale, DepthOneExample) {
  const auto c = check_two_scale(atom_aa(), 0.5, 3.0);
  EXPECT_TRUE(c.pass);
  EXPECT_EQ(c.lhs, 0.0);
  EXPECT_DOUBLE_EQ(c.rhs, 46.0);  // 72 (0.5 / 9) * 4 + 30
  EXPECT_THROW((void)check_two_scale(atom_aa(), 1.0, 3.0), hypothesis_error);
}

TEST(Surrogate, LadderIndex) {
  const auto s = surrogate_bound(1e-7, 1.0, 1.0);
  EXPECT_EQ(s.k, 2);
  EXPECT_DOUBLE_EQ(s.delta_k, std::pow(144.0, -3.0));
  EXPECT_NEAR(s.ladder_bound, 1.0, 1e-12);
  EXPECT_NEAR(s.bound, 1.0, 1e-12);
  EXPECT_THROW((void)surrogate_bound(0.6, 1.0, 1.0), hypothesis_error);
  EXPECT_THROW((void)surrogate_bound(0.1, 0.0, 1.0), invalid_input);
}

TEST(Surrogate, RungsShrinkQuadratically) {
  const auto r = surrogate_rungs(1.0, 36.0, 1e-30);
  ASSERT_GE(r.size(), 4u);
  for (std::size_t k = 0; k < r.size(); ++k) {
    EXPECT_NEAR(std::log(r[k]), -0.5 * k * (k + 1) * std::log(144.0), 1e-9);
  }
}

TEST(PowerBound, HypothesesAndExample) {
  const auto b = atom_aa();  // |mu| = 1 <= energy = 4
  const auto c = check_power_bound(b, 2.0, 0.5);
  EXPECT_TRUE(c.pass);
  EXPECT_DOUBLE_EQ(c.lhs, 3.0);
  EXPECT_DOUBLE_EQ(c.rhs, 36.0 * std::sqrt(2.0) * 2.0);
  EXPECT_THROW((void)check_power_bound(b, 1.0, 1.0), hypothesis_error);
  EXPECT_THROW((void)check_power_bound(b, 1.0, 0.5, 5.0), invalid_input);
}

TEST(SubpowerBound, MinimalConstant) {
  const auto b = atom_aa();
  const auto c = check_subpower_bound(b, 0.5, 10.0);
  EXPECT_EQ(c.lhs, 0.0);
  EXPECT_TRUE(c.pass);
  EXPECT_THROW((void)check_subpower_bound(b, 1.5, 1.0), hypothesis_error);
}

TEST(FitExponent, RecoversPowers) {
  EXPECT_NEAR(fit_exponent(synthetic(1.0)), 1.0, 1e-12);
  EXPECT_NEAR(fit_exponent(synthetic(2.0 / 3.0)), 2.0 / 3.0, 1e-12);
  LadderReport tiny;
  tiny.rows.resize(2);
  EXPECT_THROW((void)fit_exponent(tiny), invalid_input);
}

TEST(Ladder, RowsAndBounds) {
  const auto mu = generate_measure(MeasureKind::diagonal, BiShape(5, 5), 3);
  const auto b = build_potential(mu);
  const auto r = build_ladder(b, "diag", default_relative_ladder(), {0.1, 0.25, 0.5}, ScalingConstants{});
  ASSERT_FALSE(r.rows.empty());
  double prev = 0.0;
  for (const auto& row : r.rows) {
    EXPECT_GE(row.energy_delta, prev);
    EXPECT_NEAR(row.energy_delta, truncated_energy(b, row.delta), 0.0);
    prev = row.energy_delta;
    EXPECT_TRUE(row.pass_surrogate);
    for (bool p : row.pass_tau) EXPECT_TRUE(p);
  }
  EXPECT_FALSE(ladder_csv(r).empty());
}

TEST(ScalingSuite, SmallConfigPasses) {
  ScalingSuiteConfig cfg;
  cfg.depth1 = cfg.depth2 = 3;
  cfg.replicates = 1;
  cfg.include_coarse = false;
  const auto res = run_scaling_suite(cfg);
  EXPECT_TRUE(res.pass) << res.report.dump(2);
}
