#include <gtest/gtest.h>

#include <cmath>

#include "bitree/counterexample.hpp"
#include "bitree/suites.hpp"
#include "oracles.hpp"

using namespace bitree;

namespace {

DeepRect rect(int l1, std::uint64_t i1, int l2, std::uint64_t i2) {
  return {{l1, BigIndex(i1)}, {l2, BigIndex(i2)}};
}

}  // namespace

TEST(Construction, SmallestInstance) {
  const auto m = build_counterexample({2, 1.0});
  ASSERT_EQ(m.components.size(), 2u);
  EXPECT_EQ(m.components[0].box, rect(2, 0, 2, 0));      // [0,1/4]^2
  EXPECT_EQ(m.components[1].box, rect(4, 0, 1, 0));      // [0,1/16] x [0,1/2]
  EXPECT_EQ(m.components[0].quadrant, rect(3, 1, 3, 1));  // [1/8,1/4]^2
  EXPECT_EQ(m.components[1].quadrant, rect(5, 1, 2, 1));  // [1/32,1/16] x [1/4,1/2]
  const auto& q1 = m.components[0].quadrant;
  const auto& q2 = m.components[1].quadrant;
  EXPECT_FALSE(overlap_exponent(q1.first, q2.first) && overlap_exponent(q1.second, q2.second));
}

TEST(Construction, TotalMass) {
  for (int M = 2; M <= 10; ++M) {
    const auto m = build_counterexample({M, 0.75});
    EXPECT_DOUBLE_EQ(m.total_mass(), M * 0.75 / std::ldexp(1.0, M));
  }
  EXPECT_THROW((void)build_counterexample({1, 1.0}), invalid_input);
  EXPECT_THROW((void)build_counterexample({3, 0.0}), invalid_input);
  EXPECT_THROW((void)build_counterexample_scaled(5), invalid_input);
}

TEST(Construction, Endpoints) {
  for (int M = 2; M <= 8; ++M) {
    const CoarseParams p{M, 1.0};
    const auto m = build_counterexample(p);
    for (int j = 1; j <= M; ++j) {
      const auto& c = m.components[static_cast<std::size_t>(j - 1)];
      EXPECT_EQ(c.box.first.level, 1 << j);
      EXPECT_EQ(c.box.second.level, static_cast<int>(p.N() >> j));
      EXPECT_TRUE(contains(c.box, c.quadrant));
      EXPECT_EQ(c.quadrant.first.level, c.box.first.level + 1);
    }
  }
}

TEST(RectangleMeasure, Examples) {
  const auto m = build_counterexample({2, 1.0});
  EXPECT_DOUBLE_EQ(measure_of_rectangle(m, rect(0, 0, 0, 0)), 0.5);
  EXPECT_DOUBLE_EQ(measure_of_rectangle(m, rect(3, 1, 3, 1)), 0.25);
  EXPECT_DOUBLE_EQ(measure_of_rectangle(m, rect(1, 1, 0, 0)), 0.0);  // [1/2,1] x [0,1]
  EXPECT_DOUBLE_EQ(measure_of_rectangle(m, rect(3, 0, 0, 0)), 0.25);  // holds Q_2^{++} only
  EXPECT_DOUBLE_EQ(measure_of_rectangle(m, rect(4, 2, 4, 2)), 0.25 / 4.0);
}

TEST(SparsePotential, TopEqualsMass) {
  for (int M : {2, 6, 12}) {
    const auto m = build_counterexample({M, 1.0});
    EXPECT_DOUBLE_EQ(sparse_potential_at(m, rect(0, 0, 0, 0)), m.total_mass());
  }
}

// Every node of the smallest instance against the interval oracle on the
// rasterized measure.
TEST(SparsePotential, DenseOracleM2) {
  const auto m = build_counterexample_scaled(2);
  const auto dense = rasterize(m);
  ASSERT_EQ(dense.size(), 63u * 63u);
  EXPECT_EQ(sum(dense), m.total_mass());
  const auto v = oracle::potential(dense);
  std::size_t mismatches = 0;
  for (auto n : oracle::bi_nodes(dense.shape())) {
    mismatches += sparse_potential_at(m, DeepRect::from(n)) != v[n];
  }
  EXPECT_EQ(mismatches, 0u);
  // double path agrees after undoing the integer scale
  const auto md = build_counterexample({2, 1.0});
  const BiNodeRef spot{{5, 3}, {4, 5}};
  EXPECT_DOUBLE_EQ(sparse_potential_at(md, DeepRect::from(spot)),
                   static_cast<double>(v[spot]) / integer_scale(2));
}

TEST(SparsePotential, FactoredAgrees) {
  const auto m = build_counterexample({7, 1.0});
  Rng rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    const int l1 = static_cast<int>(rng.between(0, m.params.leaf_level()));
    const int l2 = static_cast<int>(rng.between(0, m.params.leaf_level()));
    const DeepRect w{{l1, BigIndex(rng.below(std::uint64_t{1} << std::min(l1, 60)))},
                     {l2, BigIndex(rng.below(std::uint64_t{1} << std::min(l2, 60)))}};
    const double a = sparse_potential_at(m, w);
    EXPECT_NEAR(factored_potential_at(m, w), a, 1e-12 * (1.0 + a));
  }
}

TEST(Family, MembershipAndUpSet) {
  const CoarseParams p{3, 1.0};
  const auto fam = build_rect_family(p);
  const auto m = build_counterexample(p);
  EXPECT_TRUE(fam.contains(rect(0, 0, 0, 0)));
  EXPECT_TRUE(fam.contains(m.components[0].box));
  EXPECT_FALSE(fam.contains(m.components[0].quadrant));
  Rng rng(9);
  const int top = p.leaf_level();
  for (int rep = 0; rep < 1000; ++rep) {
    const int l1 = static_cast<int>(rng.between(0, top)), l2 = static_cast<int>(rng.between(0, top));
    const DeepRect r{{l1, BigIndex(rng.below(std::uint64_t{1} << l1))},
                     {l2, BigIndex(rng.below(std::uint64_t{1} << l2))}};
    const int c1 = static_cast<int>(rng.between(0, l1)), c2 = static_cast<int>(rng.between(0, l2));
    const DeepRect parent{r.first.ancestor_at(c1), r.second.ancestor_at(c2)};
    if (fam.contains(r)) {
      ASSERT_TRUE(fam.contains(parent));
    }
  }
}

TEST(Flatness, SeriesBehindTheConstant) {
  double s = 0.0;
  for (int k = 1; k <= 80; ++k) s += k * (k + 1.0) * std::ldexp(1.0, -k);
  EXPECT_NEAR(s, 8.0, 1e-12);
  EXPECT_GT(kFlatnessConstant, 8.0);
}

TEST(Flatness, M5AndDeltaScaling) {
  const auto r1 = verify_flatness(build_counterexample({5, 1.0}), 8, 3);
  EXPECT_TRUE(r1.pass);
  EXPECT_LE(r1.max_value, 9.0);
  const auto r2 = verify_flatness(build_counterexample({5, 2.0}), 8, 3);
  EXPECT_DOUBLE_EQ(r2.max_value, 2.0 * r1.max_value);
  EXPECT_DOUBLE_EQ(r2.bound, 18.0);
  EXPECT_THROW((void)verify_flatness(build_counterexample({5, 1.0}), 0), invalid_input);
}

TEST(Blowup, IntermediateBoundAndGrowth) {
  double prev = 0.0;
  for (int M = 5; M <= 10; ++M) {
    const auto r = verify_blowup(build_counterexample({M, 1.0}));
    EXPECT_TRUE(r.pass) << M;
    EXPECT_GE(r.v_omega0, (M - 4) / 8.0);
    EXPECT_FALSE(r.ninth_form_asserted);
    if (M > 5) {
      EXPECT_GE(r.v_omega0 - prev, 1.0 / 9.0);
    }
    prev = r.v_omega0;
  }
}

// omega0 potential equals the overlap count times delta / N.
TEST(Counting, IdentitiesAndOverlap) {
  for (int M = 2; M <= 10; ++M) {
    const CoarseParams p{M, 1.0};
    const auto r = check_counting(p);
    EXPECT_TRUE(r.containing_pass) << M;
    EXPECT_TRUE(r.exclusive_pass) << M;
    const double v = sparse_potential_at(build_counterexample(p), omega0(p));
    EXPECT_DOUBLE_EQ(v, static_cast<double>(r.overlap_count) / static_cast<double>(p.N()));
  }
  // hand count, M = 2: Q_1 = [0,1/4]^2 is inside [0,2^-l1] x [0,2^-l2] for l1, l2 <= 2
  EXPECT_EQ(check_counting({2, 1.0}).containing[0], 9);
}

TEST(DenseCrosscheck, M2NoViolation) {
  const auto d = dense_crosscheck(2);
  EXPECT_EQ(d.nodes, 3969u);
  EXPECT_EQ(d.mismatches, 0u);
  EXPECT_FALSE(d.violation);
}
