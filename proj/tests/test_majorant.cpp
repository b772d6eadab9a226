#include <gtest/gtest.h>

#include <cmath>

#include "bitree/majorant.hpp"
#include "bitree/suites.hpp"
#include "oracles.hpp"

using namespace bitree;

namespace {

// phi straight from its definition, built on the interval oracle.
BiFn<double> phi_oracle(const BiFn<double>& mu, double delta, double lambda) {
  const auto n = oracle::bi_sum(mu, false);
  const auto v = oracle::potential(mu);
  BiFn<double> m(mu.shape());
  for (std::size_t k = 0; k < m.size(); ++k) m.at_slot(k) = v.at_slot(k) <= delta ? n.at_slot(k) : 0.0;
  const auto i1m = oracle::coord_up_sum(m, 1), i2m = oracle::coord_up_sum(m, 2);
  const auto i1n = oracle::coord_up_sum(n, 1), i2n = oracle::coord_up_sum(n, 2);
  BiFn<double> phi(mu.shape());
  for (std::size_t k = 0; k < phi.size(); ++k) {
    const double x = v.at_slot(k);
    if (x > delta && x <= 3.0 * lambda) {
      phi.at_slot(k) = (i1m.at_slot(k) * i2n.at_slot(k) + i2m.at_slot(k) * i1n.at_slot(k)) / lambda;
    }
  }
  return phi;
}

}  // namespace

TEST(Majorant, ZeroMeasureIsVacuous) {
  const auto c = build_majorant({BiFn<double>(BiShape(3, 3)), 1.0, 6.0});
  EXPECT_EQ(max_value(c.phi), 0.0);
  EXPECT_TRUE(c.claim1_pass && c.claim1_strong_pass && c.local_pass && c.claim2_pass && c.claim3_pass);
  EXPECT_EQ(c.claim3_ratio, 0.0);
}

TEST(Majorant, LargeDeltaGivesZeroPhi) {
  const auto mu = to_double(bi_violation_example());
  const double vmax = max_value(build_potential(mu).potential);
  const auto c = build_majorant({mu, vmax, 6.0 * vmax});
  EXPECT_EQ(max_value(c.phi), 0.0);
  EXPECT_EQ(c.majorization.domain40_size, 0u);
  EXPECT_TRUE(c.claim1_pass && c.claim2_pass && c.claim3_pass);
}

TEST(Majorant, HypothesisEnforced) {
  BiFn<double> mu(BiShape(1, 1), 1.0);
  EXPECT_THROW((void)build_majorant({mu, 1.0, 5.0}), hypothesis_error);
  EXPECT_THROW((void)build_majorant({mu, 0.0, 5.0}), invalid_input);
  EXPECT_NO_THROW((void)build_majorant({mu, 1.0, 6.0}));
}

TEST(Majorant, PhiMatchesDefinition) {
  MajorantSuiteConfig cfg;
  cfg.max_depth = 3;
  int nonzero = 0;
  for (std::size_t i = 0; i < 40; ++i) {
    const auto t = majorant_trial(cfg, i);
    const auto c = build_majorant(t.input);
    const auto expect = phi_oracle(t.input.mu, t.input.delta, t.input.lambda);
    for (std::size_t k = 0; k < expect.size(); ++k) {
      ASSERT_NEAR(c.phi.at_slot(k), expect.at_slot(k), 1e-12 * (1.0 + expect.at_slot(k)));
    }
    nonzero += max_value(c.phi) > 0.0;
    EXPECT_TRUE(c.claim1_pass && c.claim1_strong_pass && c.local_pass && c.claim2_pass && c.claim3_pass)
        << "trial " << i;
    EXPECT_LE(c.claim3_ratio, kEnergyConstantA0);
  }
  EXPECT_GT(nonzero, 5);  // the sweep is not vacuous
}

TEST(Majorant, MismatchedBundlesRejected) {
  BiFn<double> mu(BiShape(2, 2), 1.0);
  auto c = build_majorant({mu, 1.0, 6.0});
  BiFn<double> other(BiShape(2, 2), 2.0);
  const auto b = build_potential(other);
  EXPECT_THROW((void)verify_majorization(c, b, build_truncated(b, 1.0)), invalid_input);
  const auto b0 = build_potential(mu);
  EXPECT_THROW((void)verify_energy(c, build_truncated(b0, 2.0)), invalid_input);
}

// V_delta <= delta H_{l1+1} H_{l2+1}.
TEST(Majorant, HarmonicBound) {
  EXPECT_DOUBLE_EQ(harmonic(3), 11.0 / 6.0);
  MajorantSuiteConfig cfg;
  for (std::size_t i = 0; i < 60; ++i) {
    const auto t = majorant_trial(cfg, i);
    const auto b = build_potential(t.input.mu);
    EXPECT_LE(harmonic_ratio(build_truncated(b, t.input.delta)), 1.0 + 1e-12);
  }
}

TEST(Superadditive, RootOnlyEquality) {
  TreeFn<double> g(TreeShape(1)), h(TreeShape(1));
  g[NodeRef::root()] = 1.0;
  h[NodeRef::root()] = 2.5;
  const auto r = verify_superadditive_bound(g, h, 2.5);
  EXPECT_EQ(r.status(), "ok");
  EXPECT_DOUBLE_EQ(r.conclusion.lhs, 2.5);
  EXPECT_DOUBLE_EQ(r.conclusion.rhs, 2.5);
}

TEST(Superadditive, ZeroAndPreconditions) {
  TreeFn<std::int64_t> g(TreeShape(2)), h(TreeShape(2), 3);
  EXPECT_EQ(verify_superadditive_bound(g, h, 1.0).status(), "ok");
  g[{1, 0}] = 1;  // child heavier than root
  EXPECT_EQ(verify_superadditive_bound(g, h, 100.0).status(), "precondition_failed:superadditive");
  g[NodeRef::root()] = 2;
  EXPECT_EQ(verify_superadditive_bound(g, h, 1.0).status(), "precondition_failed:potential_bound");
  TreeFn<std::int64_t> neg(TreeShape(2), -1);
  EXPECT_THROW((void)verify_superadditive_bound(neg, h, 1.0), invalid_input);
}

TEST(Superadditive, RandomGeneratorPasses) {
  Rng rng(61);
  for (int rep = 0; rep < 200; ++rep) {
    const TreeShape s(static_cast<int>(rng.between(0, 6)));
    const auto g = random_superadditive(s, rng);
    ASSERT_TRUE(is_superadditive(g));
    TreeFn<std::int64_t> h(s);
    for (auto& v : h.values()) v = rng.between(0, 5);
    // lambda = max of Ih on supp g meets the hypothesis
    const auto ih = up_sum_tree(h);
    std::int64_t lambda = 0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (g.at_slot(k) != 0) lambda = std::max(lambda, ih.at_slot(k));
    }
    ASSERT_EQ(verify_superadditive_bound(g, h, static_cast<double>(lambda)).status(), "ok");
  }
}

TEST(KernelEnergy, IdentityKernel) {
  KernelMatrix id(2, 2, {1, 0, 0, 1});
  const std::vector<double> f{3, 1}, g{2, 0};
  const auto r = verify_kernel_energy_bound(id, f, g);
  // sum f^2 g = 18; sup_{supp g} g = 2 times |f|^2 = 10 -> 20
  EXPECT_DOUBLE_EQ(r.basic.lhs, 18.0);
  EXPECT_DOUBLE_EQ(r.basic.rhs, 20.0);
  EXPECT_TRUE(r.basic.pass && r.strong.pass);
}

TEST(KernelEnergy, AllOnesKernel) {
  KernelMatrix ones(2, 2, {1, 1, 1, 1});
  const std::vector<double> f{1, 0}, g{1, 1};
  const auto r = verify_kernel_energy_bound(ones, f, g);
  EXPECT_DOUBLE_EQ(r.basic.lhs, 2.0);
  EXPECT_DOUBLE_EQ(r.basic.rhs, 4.0);
  EXPECT_DOUBLE_EQ(r.strong.rhs, 2.0);
  EXPECT_TRUE(r.basic.pass && r.strong.pass);
}

TEST(KernelEnergy, RejectsBadInput) {
  KernelMatrix k(2, 2, {1, -1, 0, 1});
  const std::vector<double> f{1, 1}, g{1, 1};
  EXPECT_THROW((void)verify_kernel_energy_bound(k, f, g), invalid_input);
  KernelMatrix ok(2, 3, {1, 1, 1, 1, 1, 1});
  EXPECT_THROW((void)verify_kernel_energy_bound(ok, f, g), invalid_input);
}
