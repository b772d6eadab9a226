#pragma once

// Potentials V = II(II* mu), sub-level sets E_s = {V <= s}, truncated
// potentials V_delta = II(1_{E_delta} II* mu) and the corresponding energies,
// on the bi-tree and on a simple tree, plus the simple-tree maximum
// principle checks and the bi-tree violation finder.
//
// Membership in E_s is the non-strict comparison V(a) <= s with no epsilon:
// all constructions use dyadic-rational masses, which are exact in doubles.

#include <cstddef>
#include <optional>
#include <string>

#include "certificate.hpp"
#include "grid_fn.hpp"
#include "hardy_ops.hpp"
#include "tree_core.hpp"

namespace bitree {

template <Scalar T = double>
struct PotentialBundle {
  BiFn<T> mu;
  BiFn<T> istar_mu;   ///< II* mu: mass of mu inside each rectangle
  BiFn<T> potential;  ///< II II* mu
  T mass{};
  T energy{};  ///< sum of (II* mu)^2

  [[nodiscard]] BiShape shape() const noexcept { return mu.shape(); }
};

template <Scalar T = double>
struct LevelSet {
  double threshold = 0.0;
  BiFn<T> indicator;  ///< 1 where potential <= threshold, else 0

  [[nodiscard]] bool contains(BiNodeRef n) const { return indicator[n] != T{}; }
  [[nodiscard]] std::size_t count() const {
    std::size_t c = 0;
    for (auto v : indicator.values()) c += v != T{} ? 1 : 0;
    return c;
  }
};

template <Scalar T = double>
struct TruncatedBundle {
  double delta = 0.0;
  LevelSet<T> level_set;       ///< E_delta
  BiFn<T> truncated_potential;  ///< II(1_{E_delta} II* mu)
  T truncated_energy{};         ///< sum over E_delta of (II* mu)^2
};

template <Scalar T>
[[nodiscard]] PotentialBundle<T> build_potential(BiFn<T> mu) {
  require_nonnegative(mu, "build_potential");
  PotentialBundle<T> b;
  b.istar_mu = down_sum_bi(mu);
  b.potential = up_sum_bi(b.istar_mu);
  b.mass = sum(mu);
  b.energy = inner(b.istar_mu, b.istar_mu);
  b.mu = std::move(mu);
  return b;
}

/// Energy through the other route, integral of V d(mu).
template <Scalar T>
[[nodiscard]] T energy_by_integral(const PotentialBundle<T>& b) {
  return inner(b.potential, b.mu);
}

/// Indicator of {potential <= s} for an arbitrary potential-like function.
template <Scalar T>
[[nodiscard]] BiFn<T> sublevel_indicator(const BiFn<T>& potential, double s) {
  BiFn<T> ind(potential.shape());
  for (std::size_t i = 0; i < ind.size(); ++i) {
    ind.at_slot(i) = static_cast<double>(potential.at_slot(i)) <= s ? T{1} : T{0};
  }
  return ind;
}

template <Scalar T>
[[nodiscard]] LevelSet<T> build_level_set(const PotentialBundle<T>& b, double s) {
  if (!(s >= 0.0)) throw invalid_input("build_level_set: threshold must be >= 0");
  return {s, sublevel_indicator(b.potential, s)};
}

/// Truncated energy without materializing the truncated potential.
template <Scalar T>
[[nodiscard]] T truncated_energy(const PotentialBundle<T>& b, double delta) {
  T acc{};
  for (std::size_t i = 0; i < b.potential.size(); ++i) {
    if (static_cast<double>(b.potential.at_slot(i)) <= delta) {
      acc += b.istar_mu.at_slot(i) * b.istar_mu.at_slot(i);
    }
  }
  return acc;
}

template <Scalar T>
[[nodiscard]] TruncatedBundle<T> build_truncated(const PotentialBundle<T>& b, double delta) {
  if (!(delta > 0.0)) throw invalid_input("build_truncated: delta must be > 0");
  TruncatedBundle<T> t;
  t.delta = delta;
  t.level_set = build_level_set(b, delta);
  const BiFn<T> masked = multiply(t.level_set.indicator, b.istar_mu);
  t.truncated_potential = up_sum_bi(masked);
  t.truncated_energy = inner(masked, masked);
  return t;
}

/// Truncated energy through the other route, integral of V_delta d(mu).
template <Scalar T>
[[nodiscard]] T truncated_energy_by_integral(const PotentialBundle<T>& b,
                                             const TruncatedBundle<T>& t) {
  return inner(t.truncated_potential, b.mu);
}

/// True iff the 0/1 indicator contains every ancestor of each member.
template <Scalar T>
[[nodiscard]] bool is_up_set(const BiFn<T>& indicator) {
  const BiShape shape = indicator.shape();
  bool ok = true;
  for_each_node(shape, [&](BiNodeRef a) {
    if (!ok || indicator[a] == T{}) return;
    if (!a.first.is_root() && indicator[BiNodeRef{a.first.parent(), a.second}] == T{}) ok = false;
    if (!a.second.is_root() && indicator[BiNodeRef{a.first, a.second.parent()}] == T{}) ok = false;
  });
  return ok;
}

// --- simple tree --------------------------------------------------------------

template <Scalar T>
[[nodiscard]] TreeFn<T> tree_potential(const TreeFn<T>& mu) {
  require_nonnegative(mu, "tree_potential");
  return up_sum_tree(down_sum_tree(mu));
}

/// V_delta = I(1_{V <= delta} I* mu).
template <Scalar T>
[[nodiscard]] TreeFn<T> tree_truncated(const TreeFn<T>& mu, double delta) {
  require_nonnegative(mu, "tree_truncated");
  if (!(delta > 0.0)) throw invalid_input("tree_truncated: delta must be > 0");
  TreeFn<T> h = down_sum_tree(mu);
  const TreeFn<T> v = up_sum_tree(h);
  for (std::size_t s = 0; s < h.size(); ++s) {
    if (!(static_cast<double>(v.at_slot(s)) <= delta)) h.at_slot(s) = T{};
  }
  return up_sum_tree(h);
}

/// max of Ih over the whole tree equals its max over supp h.
template <Scalar T>
[[nodiscard]] Certificate check_tree_max_principle(const TreeFn<T>& h) {
  require_nonnegative(h, "check_tree_max_principle");
  const TreeFn<T> ih = up_sum_tree(h);
  T all{}, on_support{};
  bool any_support = false;
  for (std::size_t s = 0; s < h.size(); ++s) {
    all = std::max(all, ih.at_slot(s));
    if (h.at_slot(s) != T{}) {
      on_support = any_support ? std::max(on_support, ih.at_slot(s)) : ih.at_slot(s);
      any_support = true;
    }
  }
  Certificate c;
  c.name = "tree_max_principle";
  c.lhs = static_cast<double>(all);
  c.rhs = static_cast<double>(on_support);
  c.pass = all == on_support;
  return c;
}

/// Potential form: max V over the tree equals max V over supp mu, so that
/// V <= 1 on supp mu forces V <= 1 everywhere.
template <Scalar T>
[[nodiscard]] Certificate check_tree_potential_max_principle(const TreeFn<T>& mu) {
  const TreeFn<T> v = tree_potential(mu);
  T all{}, on_support{};
  for (std::size_t s = 0; s < mu.size(); ++s) {
    all = std::max(all, v.at_slot(s));
    if (mu.at_slot(s) != T{}) on_support = std::max(on_support, v.at_slot(s));
  }
  Certificate c;
  c.name = "tree_potential_max_principle";
  c.lhs = static_cast<double>(all);
  c.rhs = static_cast<double>(on_support);
  c.pass = all <= on_support;
  return c;
}

/// V_delta <= delta everywhere on a simple tree.
template <Scalar T>
[[nodiscard]] Certificate check_tree_truncated_bound(const TreeFn<T>& mu, double delta) {
  const TreeFn<T> vd = tree_truncated(mu, delta);
  Certificate c;
  c.name = "tree_truncated_bound";
  c.lhs = static_cast<double>(max_value(vd));
  c.rhs = delta;
  c.pass = c.lhs <= c.rhs;
  return c;
}

/// integral of V_delta d(mu) <= delta |mu|.
template <Scalar T>
[[nodiscard]] Certificate check_one_param_bound(const TreeFn<T>& mu, double delta) {
  const TreeFn<T> vd = tree_truncated(mu, delta);
  Certificate c;
  c.name = "one_param_bound";
  c.lhs = static_cast<double>(inner(vd, mu));
  c.rhs = delta * static_cast<double>(sum(mu));
  c.pass = c.lhs <= c.rhs;
  return c;
}

/// Compares max II h over all bi-nodes with its max over supp h. pass means
/// no violation; otherwise the witness is the first node (slot order) where
/// the global maximum is attained.
template <Scalar T>
[[nodiscard]] Certificate find_bi_violation(const BiFn<T>& h) {
  require_nonnegative(h, "find_bi_violation");
  const BiFn<T> ih = up_sum_bi(h);
  T all{}, on_support{};
  std::size_t arg = 0;
  for (std::size_t s = 0; s < h.size(); ++s) {
    if (ih.at_slot(s) > all) {
      all = ih.at_slot(s);
      arg = s;
    }
    if (h.at_slot(s) != T{}) on_support = std::max(on_support, ih.at_slot(s));
  }
  Certificate c;
  c.name = "bi_max_principle";
  c.lhs = static_cast<double>(all);
  c.rhs = static_cast<double>(on_support);
  c.pass = all <= on_support;
  if (!c.pass) c.witness = from_slot(h.shape(), arg);
  return c;
}

template <Scalar T>
[[nodiscard]] json summary_json(const PotentialBundle<T>& b) {
  json j;
  j["depths"] = json::array({b.shape().shape1.depth, b.shape().shape2.depth});
  j["mass"] = static_cast<double>(b.mass);
  j["energy"] = static_cast<double>(b.energy);
  j["max_potential"] = static_cast<double>(max_value(b.potential));
  return j;
}

}  // namespace bitree
