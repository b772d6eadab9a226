#include <gtest/gtest.h>

#include <cmath>

#include "bitree/potentials.hpp"
#include "bitree/random.hpp"
#include "bitree/suites.hpp"
#include "oracles.hpp"

using namespace bitree;

namespace {

const NodeRef kA{1, 0};
const NodeRef kB{1, 1};

BiFn<std::int64_t> atom_aa() {
  BiFn<std::int64_t> mu(BiShape(1, 1));
  mu[{kA, kA}] = 1;
  return mu;
}

BiFn<std::int64_t> random_measure(BiShape s, Rng& rng, double density) {
  BiFn<std::int64_t> mu(s);
  for (auto& v : mu.values()) v = rng.coin(density) ? rng.between(1, 8) : 0;
  return mu;
}

}  // namespace

TEST(Potential, DepthOneAtom) {
  const auto b = build_potential(atom_aa());
  EXPECT_EQ(b.potential[BiNodeRef({kA, kA})], 4);
  EXPECT_EQ(b.potential[BiNodeRef({kA, kB})], 2);
  EXPECT_EQ(b.potential[BiNodeRef({kB, kB})], 1);
  EXPECT_EQ(b.energy, 4);
  EXPECT_EQ(b.mass, 1);
  EXPECT_EQ(b.potential, oracle::potential(atom_aa()));
}

TEST(Potential, ZeroAndRootMeasures) {
  const auto z = build_potential(BiFn<std::int64_t>(BiShape(2, 2)));
  EXPECT_EQ(max_value(z.potential), 0);
  EXPECT_EQ(z.energy, 0);
  BiFn<std::int64_t> root(BiShape(2, 1));
  root[BiNodeRef::root()] = 1;
  const auto r = build_potential(root);
  for (auto v : r.potential.values()) EXPECT_EQ(v, 1);
  EXPECT_EQ(r.energy, 1);
}

TEST(Potential, RejectsNegativeMass) {
  BiFn<double> mu(BiShape(1, 1));
  mu[BiNodeRef::root()] = -1.0;
  EXPECT_THROW((void)build_potential(mu), invalid_input);
}

TEST(Potential, EnergyRoutesAgreeWithOracle) {
  Rng rng(7);
  for (int rep = 0; rep < 30; ++rep) {
    BiShape s(static_cast<int>(rng.between(0, 3)), static_cast<int>(rng.between(0, 3)));
    const auto mu = random_measure(s, rng, 0.3);
    const auto b = build_potential(mu);
    EXPECT_EQ(b.potential, oracle::potential(mu));
    EXPECT_EQ(b.energy, oracle::energy(mu));
    EXPECT_EQ(energy_by_integral(b), b.energy);
  }
}

TEST(LevelSet, DepthOneThresholdTwo) {
  const auto b = build_potential(atom_aa());
  const auto e = build_level_set(b, 2.0);
  EXPECT_EQ(e.count(), 8u);
  EXPECT_FALSE(e.contains({kA, kA}));
  EXPECT_TRUE(is_up_set(e.indicator));
  EXPECT_EQ(build_level_set(b, 4.0).count(), 9u);
}

TEST(LevelSet, TiesAreInside) {
  const auto b = build_potential(atom_aa());
  // V(a, b) = 2 exactly: membership is non-strict
  EXPECT_TRUE(build_level_set(b, 2.0).contains({kA, kB}));
  EXPECT_FALSE(build_level_set(b, std::nextafter(2.0, 0.0)).contains({kA, kB}));
}

TEST(Truncated, DepthOneDeltaTwo) {
  const auto b = build_potential(atom_aa());
  const auto t = build_truncated(b, 2.0);
  EXPECT_EQ(t.truncated_potential[BiNodeRef({kA, kA})], 3);
  EXPECT_EQ(t.truncated_energy, 3);
  EXPECT_EQ(truncated_energy_by_integral(b, t), 3);
}

TEST(Truncated, ExtremeDeltas) {
  Rng rng(41);
  const auto mu = random_measure(BiShape(3, 3), rng, 0.2);
  const auto b = build_potential(mu);
  const auto big = build_truncated(b, static_cast<double>(max_value(b.potential)));
  EXPECT_EQ(big.truncated_potential, b.potential);
  EXPECT_EQ(big.truncated_energy, b.energy);
  EXPECT_EQ(truncated_energy(b, 0.5), 0);  // integer masses: V >= 1 on the support chain
}

// Hand-rolled truncation: zero II*mu outside {V <= delta}, re-sum with the oracle.
TEST(Truncated, MatchesOracleAndMonotone) {
  Rng rng(43);
  for (int rep = 0; rep < 20; ++rep) {
    const auto mu = random_measure(BiShape(3, 2), rng, 0.3);
    const auto b = build_potential(mu);
    std::int64_t prev = 0;
    for (double delta : {1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 1000.0}) {
      auto masked = oracle::bi_sum(mu, false);
      const auto v = oracle::potential(mu);
      std::int64_t e = 0;
      for (std::size_t k = 0; k < masked.size(); ++k) {
        if (!(static_cast<double>(v.at_slot(k)) <= delta)) masked.at_slot(k) = 0;
        e += masked.at_slot(k) * masked.at_slot(k);
      }
      const auto t = build_truncated(b, delta);
      EXPECT_EQ(t.truncated_potential, oracle::bi_sum(masked, true));
      EXPECT_EQ(t.truncated_energy, e);
      EXPECT_LE(t.truncated_energy, b.energy);
      EXPECT_GE(t.truncated_energy, prev);
      EXPECT_TRUE(is_up_set(t.level_set.indicator));
      prev = t.truncated_energy;
    }
  }
}

// 1_E II h <= II(1_E h) for an up-set E and h >= 0.
TEST(Truncated, UpSetSubadditivity) {
  Rng rng(47);
  for (int rep = 0; rep < 20; ++rep) {
    const auto mu = random_measure(BiShape(3, 3), rng, 0.3);
    const auto b = build_potential(mu);
    const auto e = build_level_set(b, 6.0).indicator;
    BiFn<std::int64_t> h(mu.shape());
    for (auto& v : h.values()) v = rng.between(0, 4);
    const auto lhs = multiply(e, up_sum_bi(h));
    const auto rhs = up_sum_bi(multiply(e, h));
    for (std::size_t k = 0; k < lhs.size(); ++k) ASSERT_LE(lhs.at_slot(k), rhs.at_slot(k));
  }
}

TEST(TreePotential, LeafOfDepthTwo) {
  TreeFn<std::int64_t> mu(TreeShape(2));
  mu[{2, 0}] = 1;
  EXPECT_EQ(tree_potential(mu)[NodeRef({2, 0})], 3);
  const auto vd = tree_truncated(mu, 2.0);
  EXPECT_EQ(vd[NodeRef({2, 0})], 2);
  EXPECT_LE(max_value(vd), 2);
  const auto c = check_one_param_bound(mu, 2.0);
  EXPECT_TRUE(c.pass);
  EXPECT_EQ(c.lhs, 2.0);
  EXPECT_EQ(c.rhs, 2.0);
}

TEST(TreePotential, MaxPrinciple) {
  TreeFn<std::int64_t> h(TreeShape(3));
  h[NodeRef::root()] = 1;
  const auto c = check_tree_max_principle(h);
  EXPECT_TRUE(c.pass);
  EXPECT_EQ(c.lhs, 1.0);
  EXPECT_TRUE(check_one_param_bound(TreeFn<std::int64_t>(TreeShape(2)), 1.0).pass);
}

TEST(TreePotential, RandomBounds) {
  Rng rng(53);
  for (int rep = 0; rep < 200; ++rep) {
    TreeFn<std::int64_t> mu(TreeShape(static_cast<int>(rng.between(0, 5))));
    for (auto& v : mu.values()) v = rng.coin(0.4) ? rng.between(1, 6) : 0;
    const double delta = static_cast<double>(rng.between(1, 40));
    ASSERT_TRUE(check_tree_truncated_bound(mu, delta).pass);
    ASSERT_TRUE(check_one_param_bound(mu, delta).pass);
    ASSERT_TRUE(check_tree_max_principle(down_sum_tree(mu)).pass);
    ASSERT_TRUE(check_tree_potential_max_principle(mu).pass);
  }
}

TEST(BiViolation, TrivialCasesHaveNone) {
  BiFn<std::int64_t> h(BiShape(2, 2));
  h[BiNodeRef::root()] = 1;
  EXPECT_TRUE(find_bi_violation(h).pass);
  // single chain in the second coordinate: behaves like one tree
  Rng rng(59);
  BiFn<std::int64_t> chain(BiShape(3, 3));
  for (int l = 0; l <= 3; ++l) {
    for (std::uint64_t i = 0; i < (1u << l); ++i) chain[{{l, i}, {2, 1}}] = rng.between(0, 5);
  }
  EXPECT_TRUE(find_bi_violation(chain).pass);
}

TEST(BiViolation, FrozenWitness) {
  const auto mu = bi_violation_example();
  const auto c = find_bi_violation(down_sum_bi(mu));
  EXPECT_FALSE(c.pass);
  EXPECT_EQ(c.lhs, 60.0);
  EXPECT_EQ(c.rhs, 59.0);
  ASSERT_TRUE(c.witness.has_value());
  EXPECT_EQ(*c.witness, BiNodeRef({{2, 3}, {2, 0}}));
  // independent check of the witness value
  EXPECT_EQ(oracle::potential(mu)[BiNodeRef({{2, 3}, {2, 0}})], 60);
}
