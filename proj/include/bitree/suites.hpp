#pragma once

// Seeded certification suites. Each returns a JSON report plus an overall
// pass flag; the CLI and the acceptance runner are thin wrappers over these.
// Reports never contain timings, so equal configs give equal bytes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "capacity.hpp"
#include "certificate.hpp"
#include "counterexample.hpp"
#include "grid_fn.hpp"
#include "hardy_ops.hpp"
#include "majorant.hpp"
#include "parallel.hpp"
#include "potentials.hpp"
#include "random.hpp"
#include "scaling_lab.hpp"
#include "tree_core.hpp"

namespace bitree {

struct SuiteResult {
  std::string name;
  bool pass = true;
  json report = json::object();
  std::string csv;  ///< optional tabular view
};

// --- operator exactness -------------------------------------------------------------

struct OperatorSuiteConfig {
  std::size_t max_exhaustive_nodes = 9;  ///< enumerate {0,1,2}^nodes up to this size
  int basis_max_depth = 2;               ///< indicator basis on all shapes up to this depth
  int random_cases = 1000;
  int random_max_depth = 6;
  std::size_t random_max_bi_nodes = 1024;  ///< keeps the quadratic oracle cheap
  std::uint64_t seed = 1;
};

/// Number of operators (out of 2) disagreeing with the oracle.
template <Scalar T>
[[nodiscard]] int tree_operator_mismatches(const TreeFn<T>& f) {
  int bad = 0;
  const auto eq = [](const TreeFn<T>& a, const TreeFn<T>& b) {
    return std::equal(a.values().begin(), a.values().end(), b.values().begin());
  };
  bad += !eq(up_sum_tree(f), brute_force_up_sum_tree(f));
  bad += !eq(down_sum_tree(f), brute_force_down_sum_tree(f));
  return bad;
}

/// Number of operators (out of 6) disagreeing with the oracle.
template <Scalar T>
[[nodiscard]] int bi_operator_mismatches(const BiFn<T>& f) {
  int bad = 0;
  const auto eq = [](const BiFn<T>& a, const BiFn<T>& b) {
    return std::equal(a.values().begin(), a.values().end(), b.values().begin());
  };
  bad += !eq(up_sum_1(f), brute_force_sum_1(f, true));
  bad += !eq(down_sum_1(f), brute_force_sum_1(f, false));
  bad += !eq(up_sum_2(f), brute_force_sum_2(f, true));
  bad += !eq(down_sum_2(f), brute_force_sum_2(f, false));
  bad += !eq(up_sum_bi(f), brute_force_up_sum_bi(f));
  bad += !eq(down_sum_bi(f), brute_force_down_sum_bi(f));
  return bad;
}

namespace detail {

/// Visits every assignment of {0,1,2} to the slots of `f`.
template <class Fn, class F>
void for_each_ternary(Fn& f, F&& visit) {
  const std::size_t n = f.size();
  for (std::size_t s = 0; s < n; ++s) f.at_slot(s) = 0;
  while (true) {
    visit(f);
    std::size_t s = 0;
    while (s < n && f.at_slot(s) == 2) f.at_slot(s++) = 0;
    if (s == n) return;
    ++f.at_slot(s);
  }
}

}  // namespace detail

[[nodiscard]] inline SuiteResult run_operator_suite(const OperatorSuiteConfig& cfg) {
  if (cfg.basis_max_depth < 0 || cfg.basis_max_depth > 3) {
    throw invalid_input("operator suite: basis depth must lie in [0, 3]");
  }
  if (cfg.random_max_depth < 0 || cfg.random_max_depth > 10) {
    throw invalid_input("operator suite: random depth must lie in [0, 10]");
  }
  SuiteResult r;
  r.name = "operators";
  std::int64_t exhaustive = 0, exhaustive_bad = 0;
  json shapes = json::array();

  for (int d = 0; TreeShape(d).size() <= cfg.max_exhaustive_nodes && d <= kMaxDenseDepth; ++d) {
    TreeFn<std::int64_t> f{TreeShape(d)};
    detail::for_each_ternary(f, [&](const TreeFn<std::int64_t>& g) {
      ++exhaustive;
      exhaustive_bad += tree_operator_mismatches(g) != 0;
    });
    shapes.push_back({{"tree", d}});
  }
  for (int d1 = 0; d1 <= 3; ++d1) {
    for (int d2 = 0; d2 <= 3; ++d2) {
      const BiShape shape(d1, d2);
      if (shape.size() > cfg.max_exhaustive_nodes) continue;
      BiFn<std::int64_t> f(shape);
      detail::for_each_ternary(f, [&](const BiFn<std::int64_t>& g) {
        ++exhaustive;
        exhaustive_bad += bi_operator_mismatches(g) != 0;
      });
      shapes.push_back({{"bi", {d1, d2}}});
    }
  }

  // Both sides are linear, so agreement on a basis is agreement everywhere.
  std::int64_t basis = 0, basis_bad = 0;
  for (int d = 0; d <= cfg.basis_max_depth; ++d) {
    TreeFn<std::int64_t> f{TreeShape(d)};
    for (std::size_t s = 0; s < f.size(); ++s) {
      f.at_slot(s) = 2;
      ++basis;
      basis_bad += tree_operator_mismatches(f) != 0;
      f.at_slot(s) = 0;
    }
  }
  for (int d1 = 0; d1 <= cfg.basis_max_depth; ++d1) {
    for (int d2 = 0; d2 <= cfg.basis_max_depth; ++d2) {
      BiFn<std::int64_t> f(BiShape(d1, d2));
      for (std::size_t s = 0; s < f.size(); ++s) {
        f.at_slot(s) = 2;
        ++basis;
        basis_bad += bi_operator_mismatches(f) != 0;
        f.at_slot(s) = 0;
      }
    }
  }

  struct Case {
    int bad_int = 0;
    int bad_double = 0;
  };
  const auto cases = parallel_map(static_cast<std::size_t>(std::max(0, cfg.random_cases)), [&](std::size_t i) {
    Rng rng = Rng::for_trial(cfg.seed, i);
    Case c;
    const double density = 0.1 + 0.8 * rng.unit();
    if (i % 2 == 0) {
      TreeFn<std::int64_t> f{TreeShape(static_cast<int>(rng.between(0, cfg.random_max_depth)))};
      for (auto& v : f.values()) v = rng.coin(density) ? rng.between(1, 9) : 0;
      c.bad_int = tree_operator_mismatches(f);
      c.bad_double = tree_operator_mismatches(to_double(f));
    } else {
      BiShape shape;
      do {
        shape = BiShape(static_cast<int>(rng.between(0, cfg.random_max_depth)),
                        static_cast<int>(rng.between(0, cfg.random_max_depth)));
      } while (shape.size() > cfg.random_max_bi_nodes);
      BiFn<std::int64_t> f(shape);
      for (auto& v : f.values()) v = rng.coin(density) ? rng.between(1, 9) : 0;
      c.bad_int = bi_operator_mismatches(f);
      c.bad_double = bi_operator_mismatches(to_double(f));
    }
    return c;
  });
  std::int64_t random_bad_int = 0, random_bad_double = 0;
  for (const Case& c : cases) {
    random_bad_int += c.bad_int != 0;
    random_bad_double += c.bad_double != 0;
  }

  r.pass = exhaustive_bad == 0 && basis_bad == 0 && random_bad_int == 0 && random_bad_double == 0;
  r.report = {{"exhaustive_functions", exhaustive},
              {"exhaustive_mismatches", exhaustive_bad},
              {"exhaustive_shapes", shapes},
              {"basis_functions", basis},
              {"basis_mismatches", basis_bad},
              {"basis_max_depth", cfg.basis_max_depth},
              {"random_cases", cfg.random_cases},
              {"random_mismatches_int", random_bad_int},
              {"random_mismatches_double", random_bad_double},
              {"pass", r.pass}};
  return r;
}

// --- energy identities ----------------------------------------------------------

struct IdentitySuiteConfig {
  int cases = 200;
  int max_depth = 5;
  std::uint64_t seed = 1;
};

/// sum (II* mu)^2 == integral V dmu and the truncated analogue, exactly in
/// integer arithmetic; every E_s is an up-set.
[[nodiscard]] inline SuiteResult run_identity_suite(const IdentitySuiteConfig& cfg) {
  struct Case {
    bool energy = true, truncated = true, up_set = true;
  };
  const auto cases = parallel_map(static_cast<std::size_t>(std::max(0, cfg.cases)), [&](std::size_t i) {
    Rng rng = Rng::for_trial(cfg.seed, i);
    const BiShape shape(static_cast<int>(rng.between(0, cfg.max_depth)),
                        static_cast<int>(rng.between(0, cfg.max_depth)));
    BiFn<std::int64_t> mu(shape);
    for (auto& v : mu.values()) v = rng.coin(0.2) ? rng.between(1, 5) : 0;
    const auto b = build_potential(mu);
    const auto vmax = max_value(b.potential);
    const double delta = static_cast<double>(rng.between(1, std::max<std::int64_t>(1, vmax)));
    const auto t = build_truncated(b, delta);
    Case c;
    c.energy = b.energy == energy_by_integral(b);
    c.truncated = t.truncated_energy == truncated_energy_by_integral(b, t) &&
                  t.truncated_energy == truncated_energy(b, delta);
    c.up_set = is_up_set(t.level_set.indicator);
    return c;
  });
  SuiteResult r;
  r.name = "identities";
  std::int64_t bad_energy = 0, bad_truncated = 0, bad_up = 0;
  for (const Case& c : cases) {
    bad_energy += !c.energy;
    bad_truncated += !c.truncated;
    bad_up += !c.up_set;
  }
  r.pass = bad_energy == 0 && bad_truncated == 0 && bad_up == 0;
  r.report = {{"cases", cfg.cases},
              {"energy_route_failures", bad_energy},
              {"truncated_route_failures", bad_truncated},
              {"level_set_not_up_set", bad_up},
              {"pass", r.pass}};
  return r;
}

// --- simple-tree maximum principle ---------------------------------------------------

struct TreeSuiteConfig {
  int cases = 1000;
  int max_depth = 8;
  std::uint64_t seed = 1;
};

[[nodiscard]] inline SuiteResult run_tree_suite(const TreeSuiteConfig& cfg) {
  struct Case {
    bool max_eq = true, max_eq_h = true, one_param = true, truncated = true, normalized = true,
         potential_form = true, comparison = true;
    json failure;
  };
  const auto cases = parallel_map(static_cast<std::size_t>(std::max(0, cfg.cases)), [&](std::size_t i) {
    Rng rng = Rng::for_trial(cfg.seed, i);
    const TreeShape shape(static_cast<int>(rng.between(1, cfg.max_depth)));
    TreeFn<std::int64_t> mu(shape), h(shape);
    const double density = 0.05 + 0.45 * rng.unit();
    for (auto& v : mu.values()) v = rng.coin(density) ? rng.between(1, 8) : 0;
    for (auto& v : h.values()) v = rng.coin(density) ? rng.between(1, 8) : 0;
    if (sum(mu) == 0) mu[NodeRef{shape.depth, rng.below(shape.leaf_count())}] = 1;
    const TreeFn<std::int64_t> v = tree_potential(mu);
    const double delta = static_cast<double>(rng.between(1, 2 * max_value(v))) / 2.0;

    Case c;
    std::vector<Certificate> certs = {check_tree_max_principle(down_sum_tree(mu)),
                                      check_tree_max_principle(h),
                                      check_one_param_bound(mu, delta),
                                      check_tree_truncated_bound(mu, delta),
                                      check_tree_potential_max_principle(mu)};
    c.max_eq = certs[0].pass;
    c.max_eq_h = certs[1].pass;
    c.one_param = certs[2].pass;
    c.truncated = certs[3].pass;
    c.potential_form = certs[4].pass;

    // Normalized form: V <= 1 on supp mu implies V <= 1 everywhere.
    double on_support = 0.0;
    for (std::size_t s = 0; s < mu.size(); ++s) {
      if (mu.at_slot(s) != 0) on_support = std::max(on_support, static_cast<double>(v.at_slot(s)));
    }
    TreeFn<double> scaled = to_double(mu);
    for (auto& x : scaled.values()) x /= on_support;
    c.normalized = leq_within(max_value(tree_potential(scaled)), 1.0, kCertSlack);

    // Truncated energy against delta times the full energy (|mu| <= energy for integer masses).
    const TreeFn<std::int64_t> istar = down_sum_tree(mu);
    const auto energy = inner(istar, istar);
    c.comparison = static_cast<double>(inner(tree_truncated(mu, delta), mu)) <= delta * static_cast<double>(energy);

    for (const auto& cert : certs) {
      if (!cert.pass && c.failure.is_null()) c.failure = to_json(cert);
    }
    if (!c.failure.is_null()) c.failure["case"] = i;
    return c;
  });
  SuiteResult r;
  r.name = "tree_max_principle";
  std::int64_t f_eq = 0, f_eq_h = 0, f_one = 0, f_trunc = 0, f_norm = 0, f_pot = 0, f_cmp = 0;
  json first_failure;
  for (const Case& c : cases) {
    f_eq += !c.max_eq;
    f_eq_h += !c.max_eq_h;
    f_one += !c.one_param;
    f_trunc += !c.truncated;
    f_norm += !c.normalized;
    f_pot += !c.potential_form;
    f_cmp += !c.comparison;
    if (first_failure.is_null() && !c.failure.is_null()) first_failure = c.failure;
  }
  r.pass = f_eq + f_eq_h + f_one + f_trunc + f_norm + f_pot + f_cmp == 0;
  r.report = {{"cases", cfg.cases},
              {"max_principle_failures", f_eq + f_eq_h},
              {"one_param_failures", f_one},
              {"truncated_bound_failures", f_trunc},
              {"potential_form_failures", f_pot},
              {"normalized_failures", f_norm},
              {"energy_comparison_failures", f_cmp},
              {"first_failure", first_failure},
              {"pass", r.pass}};
  return r;
}

/// A fixed depth-(2,2) measure whose potential peaks off its support: the
/// bi-tree has no maximum principle even at this size.
[[nodiscard]] inline BiFn<std::int64_t> bi_violation_example() {
  BiFn<std::int64_t> mu(BiShape(2, 2));
  mu[BiNodeRef{{2, 0}, {2, 0}}] = 4;
  mu[BiNodeRef{{2, 2}, {2, 0}}] = 3;
  mu[BiNodeRef{{2, 3}, {2, 1}}] = 3;
  mu[BiNodeRef{{2, 3}, {2, 2}}] = 2;
  mu[BiNodeRef{{2, 3}, {2, 3}}] = 2;
  return mu;
}

// --- majorant sweep ------------------------------------------------------------------

struct MajorantSuiteConfig {
  int trials = 500;
  int max_depth = 5;
  std::uint64_t seed = 1;
};

/// H_n = 1 + 1/2 + ... + 1/n.
[[nodiscard]] inline double harmonic(int n) {
  double h = 0.0;
  for (int k = 1; k <= n; ++k) h += 1.0 / k;
  return h;
}

/// max over nodes of V_delta / (delta H_{l1+1} H_{l2+1}); at most 1.
[[nodiscard]] inline double harmonic_ratio(const TruncatedBundle<double>& t) {
  double worst = 0.0;
  const BiShape shape = t.truncated_potential.shape();
  for (std::size_t s = 0; s < t.truncated_potential.size(); ++s) {
    const BiNodeRef n = from_slot(shape, s);
    const double cap = t.delta * harmonic(n.first.level + 1) * harmonic(n.second.level + 1);
    worst = std::max(worst, t.truncated_potential.at_slot(s) / cap);
  }
  return worst;
}

struct MajorantTrial {
  MajorantInput input;
  int depth1 = 0, depth2 = 0;
};

/// Trial i: random shape and measure. Even trials put delta between |mu| and
/// sqrt(|mu| max V) on a log scale with lambda in [6 delta, 18 delta], which
/// populates E_delta and supp phi; odd trials put 3 lambda below max V so the
/// rays {V > 3 lambda} are non-empty.
[[nodiscard]] inline MajorantTrial majorant_trial(const MajorantSuiteConfig& cfg, std::size_t i) {
  Rng rng = Rng::for_trial(cfg.seed, i);
  MajorantTrial t;
  t.depth1 = static_cast<int>(rng.between(1, cfg.max_depth));
  t.depth2 = static_cast<int>(rng.between(1, cfg.max_depth));
  const BiShape shape(t.depth1, t.depth2);
  if (rng.coin(0.75)) {
    t.input.mu = random_sparse_measure(shape, rng);
  } else {
    const MeasureKind kind = kAllMeasureKinds[rng.below(std::size(kAllMeasureKinds))];
    t.input.mu = generate_measure(kind, shape, rng.next());
  }
  // V >= V(root) = |mu| everywhere, so E_delta is empty unless delta >= |mu|.
  const double mass = sum(t.input.mu);
  const double vmax = max_value(up_sum_bi(down_sum_bi(t.input.mu)));
  if (i % 2 == 0) {
    t.input.delta = mass * std::pow(vmax / mass, 0.5 * rng.unit());
    t.input.lambda = 6.0 * t.input.delta * (1.0 + static_cast<double>(rng.between(0, 16)) / 8.0);
  } else {
    t.input.lambda = vmax * static_cast<double>(rng.between(1, 16)) / 48.0;
    t.input.delta = t.input.lambda / 6.0 * static_cast<double>(rng.between(1, 8)) / 8.0;
  }
  t.input.delta = std::min(t.input.delta, t.input.lambda / 6.0);
  return t;
}

[[nodiscard]] inline SuiteResult run_majorant_suite(const MajorantSuiteConfig& cfg) {
  if (cfg.max_depth < 1 || cfg.max_depth > 8) throw invalid_input("majorant suite: depth must lie in [1, 8]");
  struct Row {
    std::size_t trial = 0;
    int d1 = 0, d2 = 0;
    double delta = 0, lambda = 0;
    bool pass = true;
    bool claim1 = true, strong = true, local = true, support = true, energy = true, rays = true;
    double energy_ratio = 0, strong_margin = 0, harmonic = 0;
    std::size_t domain40 = 0, domain20 = 0, ray_bases = 0, covered = 0;
    json failure;
  };
  const auto rows = parallel_map(static_cast<std::size_t>(std::max(0, cfg.trials)), [&](std::size_t i) {
    const MajorantTrial t = majorant_trial(cfg, i);
    const MajorantCertificate cert = build_majorant(t.input);
    const auto bundle = build_potential(t.input.mu);
    Row row;
    row.trial = i;
    row.d1 = t.depth1;
    row.d2 = t.depth2;
    row.delta = t.input.delta;
    row.lambda = t.input.lambda;
    row.claim1 = cert.claim1_pass;
    row.strong = cert.claim1_strong_pass;
    row.local = cert.local_pass;
    row.support = cert.claim2_pass;
    row.energy = cert.claim3_pass;
    row.rays = cert.rays.contiguity_failures == 0 && cert.rays.covering_failures == 0 &&
               cert.rays.bases20_not_covered == 0;
    row.harmonic = harmonic_ratio(build_truncated(bundle, t.input.delta));
    row.pass = cert.all_pass() && row.harmonic <= 1.0 + kCertSlack;
    row.energy_ratio = cert.claim3_ratio;
    row.strong_margin = cert.majorization.strong_min_margin / t.input.lambda;
    row.domain40 = cert.majorization.domain40_size;
    row.domain20 = cert.majorization.domain20_size;
    row.ray_bases = cert.rays.bases;
    row.covered = cert.rays.covered_bases;
    if (!row.pass) {
      row.failure = to_json(cert);
      row.failure["trial"] = i;
      row.failure["harmonic_ratio"] = row.harmonic;
    }
    return row;
  });

  SuiteResult r;
  r.name = "majorant";
  std::int64_t f_claim1 = 0, f_strong = 0, f_local = 0, f_support = 0, f_energy = 0, f_rays = 0, f_harm = 0;
  std::size_t dom40 = 0, dom20 = 0, bases = 0, covered = 0, nontrivial = 0;
  double worst_ratio = 0.0, min_margin = std::numeric_limits<double>::infinity(), worst_harmonic = 0.0;
  json failures = json::array();
  std::ostringstream csv;
  csv.precision(17);
  csv << "trial,depth1,depth2,delta,lambda,energy_ratio,strong_margin_over_lambda,harmonic_ratio,"
         "ray_bases,covered_bases,pass\n";
  for (const Row& row : rows) {
    f_claim1 += !row.claim1;
    f_strong += !row.strong;
    f_local += !row.local;
    f_support += !row.support;
    f_energy += !row.energy;
    f_rays += !row.rays;
    f_harm += row.harmonic > 1.0 + kCertSlack;
    dom40 += row.domain40;
    dom20 += row.domain20;
    bases += row.ray_bases;
    covered += row.covered;
    nontrivial += row.energy_ratio > 0.0;
    worst_ratio = std::max(worst_ratio, row.energy_ratio);
    min_margin = std::min(min_margin, row.strong_margin);
    worst_harmonic = std::max(worst_harmonic, row.harmonic);
    if (!row.pass && failures.size() < 5) failures.push_back(row.failure);
    csv << row.trial << ',' << row.d1 << ',' << row.d2 << ',' << row.delta << ',' << row.lambda << ','
        << row.energy_ratio << ',' << row.strong_margin << ',' << row.harmonic << ',' << row.ray_bases
        << ',' << row.covered << ',' << (row.pass ? 1 : 0) << '\n';
  }
  r.pass = f_claim1 + f_strong + f_local + f_support + f_energy + f_rays + f_harm == 0;
  r.report = {{"trials", cfg.trials},
              {"max_depth", cfg.max_depth},
              {"failures",
               {{"claim1_quarter_40", f_claim1},
                {"strong_form", f_strong},
                {"local_19_20", f_local},
                {"support", f_support},
                {"energy", f_energy},
                {"rays", f_rays},
                {"harmonic_bound", f_harm}}},
              {"worst_energy_ratio", worst_ratio},
              {"energy_ratio_bound", kEnergyConstantA0},
              {"trials_with_nonzero_phi", nontrivial},
              {"min_strong_margin_over_lambda", std::isfinite(min_margin) ? json(min_margin) : json(nullptr)},
              {"worst_harmonic_ratio", worst_harmonic},
              {"domain40_nodes", dom40},
              {"domain20_nodes", dom20},
              {"ray_bases", bases},
              {"covered_ray_bases", covered},
              {"first_failures", failures},
              {"pass", r.pass}};
  r.csv = csv.str();
  return r;
}

// --- superadditive and kernel lemmas ---------------------------------------------

struct LemmaSuiteConfig {
  int cases = 1000;
  int max_tree_depth = 8;
  std::size_t max_kernel = 12;
  std::uint64_t seed = 1;
};

/// Superadditive g built bottom-up: parent = children's sum plus a random
/// non-negative surplus. The support is then automatically an up-set.
[[nodiscard]] inline TreeFn<std::int64_t> random_superadditive(TreeShape shape, Rng& rng) {
  TreeFn<std::int64_t> g(shape);
  const double zero_leaf = 0.2 + 0.6 * rng.unit();
  for (std::uint64_t i = 0; i < shape.leaf_count(); ++i) {
    g[NodeRef{shape.depth, i}] = rng.coin(zero_leaf) ? 0 : rng.between(1, 8);
  }
  for (std::size_t s = TreeShape::first_slot(shape.depth); s-- > 0;) {
    const std::int64_t kids = g.at_slot(2 * s + 1) + g.at_slot(2 * s + 2);
    const std::int64_t surplus = rng.coin(0.5) ? 0 : rng.between(0, 4);
    g.at_slot(s) = kids + surplus;
  }
  return g;
}

[[nodiscard]] inline SuiteResult run_lemma_suite(const LemmaSuiteConfig& cfg) {
  struct Case {
    bool superadditive = true, kernel_basic = true, kernel_strong = true;
    std::string status;
  };
  const auto cases = parallel_map(static_cast<std::size_t>(std::max(0, cfg.cases)), [&](std::size_t i) {
    Rng rng = Rng::for_trial(cfg.seed, i);
    Case c;
    {
      const TreeShape shape(static_cast<int>(rng.between(1, cfg.max_tree_depth)));
      const TreeFn<std::int64_t> g = random_superadditive(shape, rng);
      TreeFn<std::int64_t> h(shape);
      const double density = 0.1 + 0.6 * rng.unit();
      for (auto& v : h.values()) v = rng.coin(density) ? rng.between(1, 6) : 0;
      const TreeFn<std::int64_t> ih = up_sum_tree(h);
      std::int64_t lambda = 1;
      for (std::size_t s = 0; s < g.size(); ++s) {
        if (g.at_slot(s) != 0) lambda = std::max(lambda, ih.at_slot(s));
      }
      lambda += rng.coin(0.5) ? 0 : rng.between(0, 3);
      const SuperadditiveReport rep = verify_superadditive_bound(g, h, static_cast<double>(lambda));
      c.status = rep.status();
      c.superadditive = c.status == "ok";
    }
    {
      const auto rows = static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(cfg.max_kernel)));
      const auto cols = static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(cfg.max_kernel)));
      std::vector<double> data(rows * cols), f(cols), g(rows);
      for (auto& v : data) v = rng.coin(0.3) ? 0.0 : rng.dyadic(32, 3);
      for (auto& v : f) v = rng.coin(0.3) ? 0.0 : rng.dyadic(32, 3);
      for (auto& v : g) v = rng.coin(0.3) ? 0.0 : rng.dyadic(32, 3);
      const KernelEnergyReport rep = verify_kernel_energy_bound(KernelMatrix(rows, cols, data), f, g);
      c.kernel_basic = rep.basic.pass;
      c.kernel_strong = rep.strong.pass;
    }
    return c;
  });
  SuiteResult r;
  r.name = "lemmas";
  std::int64_t f_sup = 0, f_basic = 0, f_strong = 0;
  json statuses = json::object();
  for (const Case& c : cases) {
    f_sup += !c.superadditive;
    f_basic += !c.kernel_basic;
    f_strong += !c.kernel_strong;
    if (!c.superadditive) statuses[c.status] = statuses.value(c.status, 0) + 1;
  }
  r.pass = f_sup + f_basic + f_strong == 0;
  r.report = {{"cases", cfg.cases},
              {"superadditive_failures", f_sup},
              {"superadditive_failure_kinds", statuses},
              {"kernel_basic_failures", f_basic},
              {"kernel_strong_failures", f_strong},
              {"pass", r.pass}};
  return r;
}

// --- scaling ladders -------------------------------------------------------------------

struct ScalingSuiteConfig {
  int depth1 = 5;
  int depth2 = 5;
  std::uint64_t seed = 1;
  int replicates = 3;  ///< seeds per randomized measure kind
  std::vector<MeasureKind> kinds{std::begin(kAllMeasureKinds), std::end(kAllMeasureKinds)};
  std::vector<double> relative_deltas = default_relative_ladder();
  std::vector<double> taus{0.1, 0.25, 0.5};
  bool include_coarse = true;  ///< add the dense M = 2 counterexample measure (depth 5)
};

[[nodiscard]] inline SuiteResult run_scaling_suite(const ScalingSuiteConfig& cfg) {
  if (cfg.depth1 < 0 || cfg.depth2 < 0 || BiShape(cfg.depth1, cfg.depth2).size() > (std::size_t{1} << 22)) {
    throw invalid_input("scaling suite: bi-tree too large");
  }
  struct Item {
    std::string id;
    MeasureKind kind;
    std::uint64_t seed;
    bool coarse = false;  ///< the dense M = 2 counterexample instead of a generated measure
  };
  std::vector<Item> items;
  for (MeasureKind k : cfg.kinds) {
    const bool randomized = k == MeasureKind::sparse_random || k == MeasureKind::diagonal;
    const int reps = randomized ? std::max(1, cfg.replicates) : 1;
    for (int rep = 0; rep < reps; ++rep) {
      const std::uint64_t s = Rng::for_trial(cfg.seed, static_cast<std::uint64_t>(rep)).next();
      items.push_back({std::string(to_string(k)) + "#" + std::to_string(rep), k, s});
    }
  }
  if (cfg.include_coarse) items.push_back({"coarse_M2", MeasureKind::single_node, 0, true});
  const BiShape shape(cfg.depth1, cfg.depth2);

  // Phase 1: bundles, two-scale checks and the empirical constant.
  struct Phase1 {
    PotentialBundle<double> bundle;
    std::size_t pairs = 0, failures = 0;
    double observed = 0.0;
    json first_failure;
  };
  const auto p1 = parallel_map(items.size(), [&](std::size_t i) {
    Phase1 p;
    p.bundle = build_potential(items[i].coarse ? rasterize(build_counterexample({2, 1.0}))
                                               : generate_measure(items[i].kind, shape, items[i].seed));
    const double a = p.bundle.energy / p.bundle.mass;
    std::vector<std::pair<double, double>> pairs;
    for (double rd : cfg.relative_deltas) {
      for (double rl : cfg.relative_deltas) {
        if (rd * a <= rl * a / 6.0) pairs.emplace_back(rd * a, rl * a);
      }
    }
    for (auto [d, l] : pairs) {
      const Certificate c = check_two_scale(p.bundle, d, l);
      ++p.pairs;
      if (!c.pass) {
        ++p.failures;
        if (p.first_failure.is_null()) p.first_failure = to_json(c);
      }
    }
    p.observed = observed_two_scale_constant(p.bundle, pairs);
    return p;
  });
  double observed = 0.0;
  for (const auto& p : p1) observed = std::max(observed, p.observed);
  ScalingConstants constants;
  constants.c0 = std::max(6.0, observed);

  // Phase 2: ladders at the fixed constants.
  struct Phase2 {
    LadderReport ladder;
    Certificate induction;
    std::optional<double> exponent;
    double subpower_c = 0.0;  ///< largest minimal c over ladder deltas in (0, 1)
  };
  const double floor = *std::min_element(cfg.relative_deltas.begin(), cfg.relative_deltas.end());
  const auto p2 = parallel_map(items.size(), [&](std::size_t i) {
    Phase2 p;
    const auto& b = p1[i].bundle;
    p.ladder = build_ladder(b, items[i].id, cfg.relative_deltas, cfg.taus, constants);
    p.induction = check_surrogate_induction(b, floor * b.energy / b.mass);
    if (b.mass <= b.energy) {
      for (const auto& row : p.ladder.rows) {
        if (row.delta < 1.0) {
          const Certificate c = check_subpower_bound(b, row.delta, std::numeric_limits<double>::infinity());
          p.subpower_c = std::max(p.subpower_c, c.details["minimal_c"].get<double>());
        }
      }
    }
    try {
      p.exponent = fit_exponent(p.ladder);
    } catch (const invalid_input&) {
    }
    return p;
  });

  SuiteResult r;
  r.name = "scaling";
  json measures = json::array();
  std::size_t two_scale_pairs = 0, two_scale_failures = 0, ladder_failures = 0, induction_failures = 0;
  std::size_t surrogate_rows = 0;
  double subpower_c = 0.0;
  std::ostringstream csv;
  csv.precision(17);
  csv << "mu_id,delta,energy_delta,bound_surrogate";
  for (double t : cfg.taus) csv << ",bound_tau_" << t;
  csv << '\n';
  for (std::size_t i = 0; i < items.size(); ++i) {
    two_scale_pairs += p1[i].pairs;
    two_scale_failures += p1[i].failures;
    ladder_failures += !p2[i].ladder.all_pass();
    induction_failures += !p2[i].induction.pass;
    for (const auto& row : p2[i].ladder.rows) {
      surrogate_rows += row.surrogate_applicable;
      csv << items[i].id << ',' << row.delta << ',' << row.energy_delta << ',' << row.bound_surrogate;
      for (double b : row.bound_tau) csv << ',' << b;
      csv << '\n';
    }
    json m = to_json(p2[i].ladder);
    m["fitted_exponent"] = p2[i].exponent ? json(*p2[i].exponent) : json(nullptr);
    m["two_scale_pairs"] = p1[i].pairs;
    m["two_scale_failures"] = p1[i].failures;
    m["two_scale_first_failure"] = p1[i].first_failure;
    m["observed_two_scale_constant"] = p1[i].observed;
    m["surrogate_induction"] = to_json(p2[i].induction);
    m["subpower_minimal_c"] = p2[i].subpower_c;
    subpower_c = std::max(subpower_c, p2[i].subpower_c);
    measures.push_back(std::move(m));
  }
  r.pass = two_scale_failures == 0 && ladder_failures == 0 && induction_failures == 0;
  r.report = {{"depths", {cfg.depth1, cfg.depth2}},
              {"A0", constants.a0},
              {"c0", constants.c0},
              {"observed_two_scale_constant", observed},
              {"sup_subpower_minimal_c", subpower_c},
              {"taus", cfg.taus},
              {"two_scale_pairs", two_scale_pairs},
              {"two_scale_failures", two_scale_failures},
              {"surrogate_rows", surrogate_rows},
              {"ladder_failures", ladder_failures},
              {"induction_failures", induction_failures},
              {"measures", measures},
              {"pass", r.pass}};
  r.csv = csv.str();
  return r;
}

// --- counterexample pipeline --------------------------------------------------------

struct CounterexampleSuiteConfig {
  int m_lo = 5;
  int m_hi = 10;
  double delta = 1.0;
  int samples = 16;  ///< random leaves per quadrant, on top of the 4 corners
  std::uint64_t seed = 1;
  int dense_m_max = 3;  ///< dense cross-check for 2 <= M <= this (0 disables)
};

struct DenseCrosscheck {
  int M = 0;
  std::size_t nodes = 0;
  std::size_t mismatches = 0;
  bool violation = false;  ///< dense max V exceeds its max on the support
  double max_potential = 0.0;
  double max_on_support = 0.0;
};

/// Sparse evaluation against the dense potential at every bi-node, exact in
/// the integer-scaled measure.
[[nodiscard]] inline DenseCrosscheck dense_crosscheck(int M) {
  const RectMeasure<std::int64_t> m = build_counterexample_scaled(M);
  const BiFn<std::int64_t> mu = rasterize(m);
  const PotentialBundle<std::int64_t> b = build_potential(mu);
  DenseCrosscheck out;
  out.M = M;
  out.nodes = mu.size();
  const auto bad = parallel_map(mu.size() / 4096 + 1, [&](std::size_t chunk) {
    std::size_t count = 0;
    const std::size_t end = std::min(mu.size(), (chunk + 1) * 4096);
    for (std::size_t s = chunk * 4096; s < end; ++s) {
      const DeepRect r = DeepRect::from(from_slot(mu.shape(), s));
      count += sparse_potential_at(m, r) != b.potential.at_slot(s);
    }
    return count;
  });
  for (std::size_t c : bad) out.mismatches += c;
  const double scale = integer_scale(M);
  std::int64_t vmax = 0, vsupp = 0;
  for (std::size_t s = 0; s < mu.size(); ++s) {
    vmax = std::max(vmax, b.potential.at_slot(s));
    if (mu.at_slot(s) != 0) vsupp = std::max(vsupp, b.potential.at_slot(s));
  }
  out.max_potential = static_cast<double>(vmax) / scale;
  out.max_on_support = static_cast<double>(vsupp) / scale;
  out.violation = !find_bi_violation(b.istar_mu).pass;
  return out;
}

[[nodiscard]] inline SuiteResult run_counterexample_suite(const CounterexampleSuiteConfig& cfg) {
  if (cfg.m_lo < 2 || cfg.m_hi < cfg.m_lo) throw invalid_input("counterexample suite: need 2 <= M_lo <= M_hi");
  if (cfg.samples < 1) throw invalid_input("counterexample suite: samples must be >= 1");
  struct Row {
    int M = 0;
    FlatnessReport flat;
    BlowupReport blow;
    CountingReport count;
    bool factored_agrees = true;
    bool delta_linear = true;
  };
  const auto rows = parallel_map(static_cast<std::size_t>(cfg.m_hi - cfg.m_lo + 1), [&](std::size_t i) {
    Row row;
    row.M = cfg.m_lo + static_cast<int>(i);
    const CoarseParams p{row.M, cfg.delta};
    const RectMeasure<double> m = build_counterexample(p);
    row.flat = verify_flatness(m, cfg.samples, cfg.seed);
    row.blow = verify_blowup(m);
    row.count = check_counting(p);
    const double fac = factored_potential_at(m, omega0(p));
    row.factored_agrees = std::abs(fac - row.blow.v_omega0) <= 1e-12 * std::max(1.0, fac);
    const RectMeasure<double> m2 = build_counterexample({row.M, 2.0 * cfg.delta});
    row.delta_linear = sparse_potential_at(m2, omega0(p)) == 2.0 * row.blow.v_omega0 &&
                       (!row.flat.worst || sparse_potential_at(m2, *row.flat.worst) == 2.0 * row.flat.max_value);
    return row;
  });

  SuiteResult r;
  r.name = "counterexample";
  json per_m = json::array();
  bool flat_ok = true, blow_ok = true, count_ok = true, aux_ok = true, monotone = true, growth = true;
  std::ostringstream csv;
  csv.precision(17);
  csv << "M,N,delta,V_at_omega0,max_on_support_samples,ratio,flatness_pass,blowup_pass\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& row = rows[i];
    const double ratio = row.blow.v_omega0 / row.flat.max_value;
    flat_ok = flat_ok && row.flat.pass;
    blow_ok = blow_ok && row.blow.pass;
    count_ok = count_ok && row.count.containing_pass && row.count.exclusive_pass;
    aux_ok = aux_ok && row.factored_agrees && row.delta_linear;
    if (i > 0) {
      const Row& prev = rows[i - 1];
      if (!(ratio > prev.blow.v_omega0 / prev.flat.max_value)) monotone = false;
      if (!(row.blow.v_omega0 - prev.blow.v_omega0 >= cfg.delta / 9.0)) growth = false;
    }
    const std::int64_t n = std::int64_t{1} << row.M;
    per_m.push_back({{"M", row.M},
                     {"N", n},
                     {"delta", cfg.delta},
                     {"V_at_omega0", row.blow.v_omega0},
                     {"blowup_lower_bound", row.blow.lower_bound},
                     {"max_on_support_samples", row.flat.max_value},
                     {"flatness_bound", row.flat.bound},
                     {"support_samples", row.flat.samples},
                     {"worst_support_leaf", row.flat.worst ? to_json(*row.flat.worst) : json(nullptr)},
                     {"ratio", ratio},
                     {"flatness_pass", row.flat.pass},
                     {"blowup_pass", row.blow.pass},
                     {"ninth_form_value", row.blow.ninth_bound},
                     {"ninth_form_holds", row.blow.ninth_form_holds},
                     {"ninth_form_asserted", row.blow.ninth_form_asserted},
                     {"containing_counts", row.count.containing},
                     {"containing_expected", row.count.containing_expected},
                     {"containing_pass", row.count.containing_pass},
                     {"exclusive_counts", row.count.exclusive},
                     {"exclusive_pass", row.count.exclusive_pass},
                     {"factored_agrees", row.factored_agrees},
                     {"delta_linear", row.delta_linear}});
    csv << row.M << ',' << n << ',' << cfg.delta << ',' << row.blow.v_omega0 << ',' << row.flat.max_value
        << ',' << ratio << ',' << (row.flat.pass ? 1 : 0) << ',' << (row.blow.pass ? 1 : 0) << '\n';
  }
  double slope = 0.0;
  if (rows.size() > 1) {
    slope = (rows.back().blow.v_omega0 - rows.front().blow.v_omega0) / (rows.back().M - rows.front().M);
  }

  json dense = json::array();
  bool dense_ok = true;
  for (int M = 2; M <= cfg.dense_m_max; ++M) {
    const DenseCrosscheck d = dense_crosscheck(M);
    dense_ok = dense_ok && d.mismatches == 0;
    dense.push_back({{"M", d.M},
                     {"nodes", d.nodes},
                     {"mismatches", d.mismatches},
                     {"max_potential", d.max_potential},
                     {"max_on_support", d.max_on_support},
                     {"violation", d.violation}});
  }

  r.pass = flat_ok && blow_ok && count_ok && aux_ok && monotone && growth && dense_ok;
  r.report = {{"M_range", {cfg.m_lo, cfg.m_hi}},
              {"delta", cfg.delta},
              {"seed", cfg.seed},
              {"samples_per_quadrant", cfg.samples},
              {"per_M", per_m},
              {"flatness_pass", flat_ok},
              {"blowup_pass", blow_ok},
              {"counting_pass", count_ok},
              {"ratio_monotone", monotone},
              {"growth_per_M_at_least_delta_over_9", growth},
              {"slope_V_omega0_per_M", slope},
              {"evaluation_routes_agree", aux_ok},
              {"dense_crosscheck", dense},
              {"dense_pass", dense_ok},
              {"pass", r.pass}};
  r.csv = csv.str();
  return r;
}

// --- capacity --------------------------------------------------------------------------

struct CapacitySuiteConfig {
  int M = 2;  ///< dense counterexample instance for the decay profile
  double tol = 1e-12;
  int oracle_cases = 200;
  int lambda_steps = 16;
  std::uint64_t seed = 1;
};

[[nodiscard]] inline SuiteResult run_capacity_suite(const CapacitySuiteConfig& cfg) {
  if (cfg.M < 2 || cfg.M > 3) throw invalid_input("capacity suite: dense instances need M in [2, 3]");
  if (cfg.lambda_steps < 2) throw invalid_input("capacity suite: need at least 2 lambda steps");
  SuiteResult r;
  r.name = "capacity";
  const BiShape small(3, 3);
  const CapacityProblem root = estimate_capacity(small, {BiNodeRef::root()}, cfg.tol);
  const CapacityProblem one_one = estimate_capacity(small, {BiNodeRef{{1, 1}, {1, 0}}}, cfg.tol);
  const bool closed_forms = std::abs(root.value - 1.0) <= 1e-6 && std::abs(one_one.value - 0.25) <= 1e-6;

  struct Case {
    double solver = 0, oracle = 0, residual = 0;
  };
  const auto cases = parallel_map(static_cast<std::size_t>(std::max(0, cfg.oracle_cases)), [&](std::size_t i) {
    Rng rng = Rng::for_trial(cfg.seed, i);
    const BiShape shape(static_cast<int>(rng.between(0, 3)), static_cast<int>(rng.between(0, 3)));
    std::vector<BiNodeRef> targets;
    const auto k = rng.between(1, 3);
    for (std::int64_t j = 0; j < k; ++j) {
      const int l1 = static_cast<int>(rng.between(0, shape.shape1.depth));
      const int l2 = static_cast<int>(rng.between(0, shape.shape2.depth));
      const BiNodeRef n{{l1, rng.below(std::uint64_t{1} << l1)}, {l2, rng.below(std::uint64_t{1} << l2)}};
      if (std::find(targets.begin(), targets.end(), n) == targets.end()) targets.push_back(n);
    }
    const CapacityProblem p = estimate_capacity(shape, targets, cfg.tol);
    return Case{p.value, capacity_by_active_set(shape, targets),
                std::max(p.kkt_residual, p.feasibility_residual)};
  });
  double oracle_gap = 0.0, oracle_residual = 0.0;
  for (const Case& c : cases) {
    oracle_gap = std::max(oracle_gap, std::abs(c.solver - c.oracle));
    oracle_residual = std::max(oracle_residual, c.residual);
  }

  const PotentialBundle<double> b = build_potential(rasterize(build_counterexample({cfg.M, 1.0})));
  const double vmax = max_value(b.potential);
  std::vector<double> lambdas;
  for (int i = 1; i <= cfg.lambda_steps; ++i) lambdas.push_back(vmax * i / cfg.lambda_steps);
  const CapacityProfile profile = capacity_profile(b, lambdas, cfg.tol);

  const double residual = std::max({root.kkt_residual, root.feasibility_residual, one_one.kkt_residual,
                                    one_one.feasibility_residual, oracle_residual, profile.max_residual});
  r.pass = closed_forms && oracle_gap <= 1e-8 && residual < 1e-8 && profile.non_increasing;
  std::ostringstream csv;
  csv.precision(17);
  csv << "lambda,set_size,binding,capacity,kkt_residual,feasibility_residual\n";
  for (const auto& row : profile.rows) {
    csv << row.lambda << ',' << row.set_size << ',' << row.binding_size << ',' << row.capacity << ','
        << row.kkt_residual << ',' << row.feasibility_residual << '\n';
  }
  r.report = {{"cap_root", to_json(root)},
              {"cap_level_1_1", to_json(one_one)},
              {"closed_forms_pass", closed_forms},
              {"oracle_cases", cfg.oracle_cases},
              {"oracle_max_gap", oracle_gap},
              {"max_residual", residual},
              {"profile_M", cfg.M},
              {"profile", to_json(profile)},
              {"pass", r.pass}};
  r.csv = csv.str();
  return r;
}

}  // namespace bitree
