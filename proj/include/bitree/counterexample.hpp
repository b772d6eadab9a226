#pragma once

// The N-coarse measure that breaks the maximum principle on the bi-tree.
//
// For N = 2^M and j = 1..M:
//   Q_j     = [0, 2^-(2^j)] x [0, 2^-(N/2^j)]
//   Q_j^++  = upper-right quadrant of Q_j, the dyadic rectangle at levels
//             (2^j + 1, N/2^j + 1) with index 1 in both coordinates
//   mu      = mass delta/N spread uniformly over each Q_j^++.
// The potential is flat (<= 9 delta) on supp mu but at
// omega0 = [0, 2^-N] x [0, 2^-N] it is at least delta (M - 4) / 8.
//
// Q_M^++ has side 2^-(N+1) in the first coordinate, so the finest level used
// is N + 1. Nodes are addressed with arbitrary-precision indices because
// levels reach N + 1 (1025 at M = 10); nothing here materializes the
// bi-tree except rasterize(), which is for small M only.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "certificate.hpp"
#include "grid_fn.hpp"
#include "random.hpp"
#include "tree_core.hpp"

namespace bitree {

using BigIndex = boost::multiprecision::cpp_int;

/// A dyadic interval at an arbitrary level.
struct DeepInterval {
  int level = 0;
  BigIndex index = 0;

  [[nodiscard]] DeepInterval ancestor_at(int coarser) const {
    return {coarser, index >> (level - coarser)};
  }
  [[nodiscard]] static DeepInterval from(NodeRef n) { return {n.level, BigIndex(n.index)}; }

  friend bool operator==(const DeepInterval&, const DeepInterval&) = default;
};

struct DeepRect {
  DeepInterval first;
  DeepInterval second;

  [[nodiscard]] static DeepRect from(BiNodeRef n) {
    return {DeepInterval::from(n.first), DeepInterval::from(n.second)};
  }
  friend bool operator==(const DeepRect&, const DeepRect&) = default;
};

/// Relation of interval `i` to a component interval `q`, as the exponent e
/// with |i intersect q| / |q| = 2^-e, or nullopt when they are disjoint.
[[nodiscard]] inline std::optional<int> overlap_exponent(const DeepInterval& i,
                                                         const DeepInterval& q) {
  if (i.level <= q.level) {
    if ((q.index >> (q.level - i.level)) == i.index) return 0;
  } else if ((i.index >> (i.level - q.level)) == q.index) {
    return i.level - q.level;
  }
  return std::nullopt;
}

[[nodiscard]] inline bool contains(const DeepInterval& outer, const DeepInterval& inner) {
  return outer.level <= inner.level && (inner.index >> (inner.level - outer.level)) == outer.index;
}

[[nodiscard]] inline bool contains(const DeepRect& outer, const DeepRect& inner) {
  return contains(outer.first, inner.first) && contains(outer.second, inner.second);
}

/// v / 2^k. Integer weights must be divisible; doubles scale exactly.
template <Scalar T>
[[nodiscard]] T scale_pow2(T v, int k) {
  if constexpr (std::is_integral_v<T>) {
    if (k >= 63) {
      if (v != 0) throw invalid_input("scale_pow2: integer weight not divisible");
      return 0;
    }
    if ((v & ((T{1} << k) - 1)) != 0) throw invalid_input("scale_pow2: integer weight not divisible");
    return v >> k;
  } else {
    return std::ldexp(v, -k);
  }
}

struct CoarseParams {
  int M = 2;
  double delta = 1.0;

  [[nodiscard]] std::int64_t N() const { return std::int64_t{1} << M; }
  /// Finest tree level used by the construction.
  [[nodiscard]] int leaf_level() const { return static_cast<int>(N()) + 1; }

  void validate() const {
    if (M < 2) throw invalid_input("CoarseParams: M must be >= 2");
    if (M > 14) throw invalid_input("CoarseParams: M > 14 is beyond sparse evaluation range");
    if (!(delta > 0.0) || !std::isfinite(delta)) throw invalid_input("CoarseParams: delta must be > 0");
  }
};

template <Scalar T = double>
struct RectComponent {
  int j = 0;
  DeepRect box;       ///< Q_j
  DeepRect quadrant;  ///< Q_j^++
  T mass{};           ///< total mass on the quadrant
};

template <Scalar T = double>
struct RectMeasure {
  CoarseParams params;
  std::vector<RectComponent<T>> components;

  [[nodiscard]] T total_mass() const {
    T acc{};
    for (const auto& c : components) acc += c.mass;
    return acc;
  }
};

namespace detail {

template <Scalar T>
RectMeasure<T> build_components(const CoarseParams& p, T mass) {
  p.validate();
  const std::int64_t n = p.N();
  RectMeasure<T> m;
  m.params = p;
  for (int j = 1; j <= p.M; ++j) {
    const int l1 = 1 << j;
    const int l2 = static_cast<int>(n >> j);
    RectComponent<T> c;
    c.j = j;
    c.box = {{l1, 0}, {l2, 0}};
    c.quadrant = {{l1 + 1, 1}, {l2 + 1, 1}};
    c.mass = mass;
    m.components.push_back(std::move(c));
  }
  return m;
}

}  // namespace detail

/// Components carry mass delta / N each.
[[nodiscard]] inline RectMeasure<double> build_counterexample(const CoarseParams& p) {
  p.validate();
  return detail::build_components<double>(p, p.delta / static_cast<double>(p.N()));
}

/// Exact integer-scaled variant at delta = 1: every mass is multiplied by
/// N * 4^(N+1), so each component weighs 4^(N+1) and every sub-rectangle
/// measure is an integer. Needs 2(N + 1) <= 62, i.e. M <= 4.
[[nodiscard]] inline RectMeasure<std::int64_t> build_counterexample_scaled(int M) {
  const CoarseParams p{M, 1.0};
  p.validate();
  const int bits = 2 * p.leaf_level();
  if (bits > 62) throw invalid_input("build_counterexample_scaled: M too large for 64-bit weights");
  return detail::build_components<std::int64_t>(p, std::int64_t{1} << bits);
}

/// Scale factor between the integer-scaled and the real measure (delta = 1).
[[nodiscard]] inline double integer_scale(int M) {
  const CoarseParams p{M, 1.0};
  return static_cast<double>(p.N()) * std::ldexp(1.0, 2 * p.leaf_level());
}

/// mu(R) = sum_j mass_j |R intersect Q_j^++| / |Q_j^++|; O(M).
template <Scalar T>
[[nodiscard]] T measure_of_rectangle(const RectMeasure<T>& m, const DeepRect& r) {
  T acc{};
  for (const auto& c : m.components) {
    const auto e1 = overlap_exponent(r.first, c.quadrant.first);
    if (!e1) continue;
    const auto e2 = overlap_exponent(r.second, c.quadrant.second);
    if (!e2) continue;
    acc += scale_pow2(c.mass, *e1 + *e2);
  }
  return acc;
}

namespace detail {

/// Per-component overlap exponents of every ancestor of `leaf` (index = level),
/// -1 for disjoint.
template <Scalar T>
std::vector<std::vector<int>> ancestor_exponents(const RectMeasure<T>& m, const DeepInterval& leaf,
                                                 bool first) {
  std::vector<std::vector<int>> out(m.components.size(),
                                    std::vector<int>(static_cast<std::size_t>(leaf.level) + 1, -1));
  for (int l = 0; l <= leaf.level; ++l) {
    const DeepInterval anc = leaf.ancestor_at(l);
    for (std::size_t j = 0; j < m.components.size(); ++j) {
      const DeepInterval& q = first ? m.components[j].quadrant.first : m.components[j].quadrant.second;
      if (auto e = overlap_exponent(anc, q)) out[j][static_cast<std::size_t>(l)] = *e;
    }
  }
  return out;
}

}  // namespace detail

/// The potential at one rectangle: the sum of mu(R) over its
/// (level1 + 1)(level2 + 1) ancestors, O(level1 * level2 * M) arithmetic and
/// O((level1 + level2) * M) big-index work.
template <Scalar T>
[[nodiscard]] T sparse_potential_at(const RectMeasure<T>& m, const DeepRect& omega) {
  const auto e1 = detail::ancestor_exponents(m, omega.first, true);
  const auto e2 = detail::ancestor_exponents(m, omega.second, false);
  T acc{};
  if constexpr (std::is_integral_v<T>) {
    for (std::size_t j = 0; j < m.components.size(); ++j) {
      for (int l1 = 0; l1 <= omega.first.level; ++l1) {
        const int a = e1[j][static_cast<std::size_t>(l1)];
        if (a < 0) continue;
        for (int l2 = 0; l2 <= omega.second.level; ++l2) {
          const int b = e2[j][static_cast<std::size_t>(l2)];
          if (b >= 0) acc += scale_pow2(m.components[j].mass, a + b);
        }
      }
    }
  } else {
    // Powers 2^-e are exact; the l1-major summation order is fixed.
    std::vector<std::vector<double>> p2(m.components.size());
    for (std::size_t j = 0; j < m.components.size(); ++j) {
      for (int e : e2[j]) p2[j].push_back(e < 0 ? 0.0 : std::ldexp(1.0, -e));
    }
    for (int l1 = 0; l1 <= omega.first.level; ++l1) {
      for (int l2 = 0; l2 <= omega.second.level; ++l2) {
        double term = 0.0;
        for (std::size_t j = 0; j < m.components.size(); ++j) {
          const int a = e1[j][static_cast<std::size_t>(l1)];
          if (a < 0) continue;
          term += m.components[j].mass * std::ldexp(p2[j][static_cast<std::size_t>(l2)], -a);
        }
        acc += term;
      }
    }
  }
  return acc;
}

/// Same potential through the product structure: for each component the
/// ancestor sum factors into (sum over first-coordinate ancestors) x (sum
/// over second-coordinate ancestors). O((level1 + level2) * M).
[[nodiscard]] inline double factored_potential_at(const RectMeasure<double>& m,
                                                  const DeepRect& omega) {
  const auto e1 = detail::ancestor_exponents(m, omega.first, true);
  const auto e2 = detail::ancestor_exponents(m, omega.second, false);
  double acc = 0.0;
  for (std::size_t j = 0; j < m.components.size(); ++j) {
    double f1 = 0.0, f2 = 0.0;
    for (int e : e1[j]) f1 += e < 0 ? 0.0 : std::ldexp(1.0, -e);
    for (int e : e2[j]) f2 += e < 0 ? 0.0 : std::ldexp(1.0, -e);
    acc += m.components[j].mass * f1 * f2;
  }
  return acc;
}

/// Dense copy of the measure on the bi-tree of depth N + 1, each component
/// spread evenly over the leaves of its quadrant. Small M only.
template <Scalar T>
[[nodiscard]] BiFn<T> rasterize(const RectMeasure<T>& m) {
  const int depth = m.params.leaf_level();
  if (depth > 12) throw invalid_input("rasterize: dense bi-tree too large (M <= 3)");
  const BiShape shape = BiShape::square(depth);
  BiFn<T> mu(shape);
  for (const auto& c : m.components) {
    const int s1 = depth - c.quadrant.first.level;
    const int s2 = depth - c.quadrant.second.level;
    const auto b1 = static_cast<std::uint64_t>(c.quadrant.first.index) << s1;
    const auto b2 = static_cast<std::uint64_t>(c.quadrant.second.index) << s2;
    const T per_leaf = scale_pow2(c.mass, s1 + s2);
    for (std::uint64_t i = 0; i < (std::uint64_t{1} << s1); ++i) {
      for (std::uint64_t k = 0; k < (std::uint64_t{1} << s2); ++k) {
        mu[BiNodeRef{{depth, b1 + i}, {depth, b2 + k}}] += per_leaf;
      }
    }
  }
  return mu;
}

// --- up-set family of rectangles containing some Q_j ----------------------------------

struct RectFamily {
  std::vector<DeepRect> generators;  ///< the Q_j

  [[nodiscard]] bool contains(const DeepRect& r) const {
    return std::any_of(generators.begin(), generators.end(),
                       [&](const DeepRect& q) { return bitree::contains(r, q); });
  }
};

[[nodiscard]] inline RectFamily build_rect_family(const CoarseParams& p) {
  const RectMeasure<double> m = build_counterexample(p);
  RectFamily f;
  for (const auto& c : m.components) f.generators.push_back(c.box);
  return f;
}

// --- certificates ----------------------------------------------------------------

[[nodiscard]] inline DeepRect omega0(const CoarseParams& p) {
  const int n = static_cast<int>(p.N());
  return {{n, 0}, {n, 0}};
}

namespace detail {

inline BigIndex random_bits(Rng& rng, int bits) {
  BigIndex v = 0;
  for (int done = 0; done < bits; done += 64) {
    const int take = std::min(64, bits - done);
    std::uint64_t word = rng.next();
    if (take < 64) word &= (std::uint64_t{1} << take) - 1;
    v = (v << take) | BigIndex(word);
  }
  return v;
}

}  // namespace detail

/// Leaf rectangles inside Q_j^++: the four corners, then `random_leaves`
/// seeded interior picks.
[[nodiscard]] inline std::vector<DeepRect> support_samples(const RectMeasure<double>& m,
                                                           std::size_t component,
                                                           int random_leaves, std::uint64_t seed) {
  const int leaf = m.params.leaf_level();
  const DeepRect& q = m.components.at(component).quadrant;
  const int s1 = leaf - q.first.level;
  const int s2 = leaf - q.second.level;
  const BigIndex base1 = q.first.index << s1;
  const BigIndex base2 = q.second.index << s2;
  const BigIndex last1 = (BigIndex(1) << s1) - 1;
  const BigIndex last2 = (BigIndex(1) << s2) - 1;
  std::vector<DeepRect> out;
  for (const BigIndex& a : {BigIndex(0), last1}) {
    for (const BigIndex& b : {BigIndex(0), last2}) {
      out.push_back({{leaf, base1 + a}, {leaf, base2 + b}});
    }
  }
  Rng rng = Rng::for_trial(seed, component);
  for (int i = 0; i < random_leaves; ++i) {
    out.push_back({{leaf, base1 + detail::random_bits(rng, s1)},
                   {leaf, base2 + detail::random_bits(rng, s2)}});
  }
  return out;
}

inline constexpr double kFlatnessConstant = 9.0;

struct FlatnessReport {
  double bound = 0.0;  ///< 9 delta
  double max_value = 0.0;
  std::vector<double> max_per_component;
  std::size_t samples = 0;
  std::optional<DeepRect> worst;
  bool pass = true;
};

/// Potential at sampled support leaves is at most 9 delta.
[[nodiscard]] inline FlatnessReport verify_flatness(const RectMeasure<double>& m,
                                                    int samples_per_quadrant,
                                                    std::uint64_t seed = 0) {
  if (samples_per_quadrant < 1) throw invalid_input("verify_flatness: samples must be >= 1");
  FlatnessReport r;
  r.bound = kFlatnessConstant * m.params.delta;
  for (std::size_t j = 0; j < m.components.size(); ++j) {
    double best = 0.0;
    for (const DeepRect& w : support_samples(m, j, samples_per_quadrant, seed)) {
      const double v = sparse_potential_at(m, w);
      ++r.samples;
      best = std::max(best, v);
      if (v > r.max_value) {
        r.max_value = v;
        r.worst = w;
      }
    }
    r.max_per_component.push_back(best);
  }
  r.pass = r.max_value <= r.bound;
  return r;
}

struct BlowupReport {
  double v_omega0 = 0.0;
  double lower_bound = 0.0;  ///< delta (M - 4) / 8
  bool pass = false;
  double ninth_bound = 0.0;  ///< delta M / 9, implied by the above only for M >= 36
  bool ninth_form_holds = false;
  bool ninth_form_asserted = false;
};

[[nodiscard]] inline BlowupReport verify_blowup(const RectMeasure<double>& m) {
  BlowupReport r;
  const double delta = m.params.delta;
  r.v_omega0 = sparse_potential_at(m, omega0(m.params));
  r.lower_bound = delta * (m.params.M - 4) / 8.0;
  r.pass = r.v_omega0 >= r.lower_bound;
  r.ninth_bound = delta * m.params.M / 9.0;
  r.ninth_form_holds = r.v_omega0 >= r.ninth_bound;
  r.ninth_form_asserted = m.params.M >= 36;
  if (r.ninth_form_asserted) r.pass = r.pass && r.ninth_form_holds;
  return r;
}

/// Exact rectangle counts along the anchored rectangles [0, 2^-l1] x [0, 2^-l2],
/// l1, l2 <= N (the ancestors of omega0):
///   containing[j]   number containing Q_j, expected (2^j + 1)(N / 2^j + 1)
///   exclusive[j]    number containing Q_j^++ and no other Q_i^++ (the class c_j)
///   overlap_count   sum over anchored R of #{j : Q_j^++ inside R}, so that
///                   V(omega0) = overlap_count * delta / N.
struct CountingReport {
  std::vector<std::int64_t> containing;
  std::vector<std::int64_t> containing_expected;
  std::vector<std::int64_t> exclusive;
  std::int64_t overlap_count = 0;
  bool containing_pass = true;
  bool exclusive_pass = true;  ///< |c_j| >= N/8 for 2 <= j <= M - 2
};

[[nodiscard]] inline CountingReport check_counting(const CoarseParams& p) {
  const RectMeasure<double> m = build_counterexample(p);
  const int n = static_cast<int>(p.N());
  const std::size_t M = m.components.size();
  // Per-level containment tables for the anchored intervals [0, 2^-l].
  std::vector<std::vector<char>> box1(M), box2(M), quad1(M), quad2(M);
  for (std::size_t j = 0; j < M; ++j) {
    for (int l = 0; l <= n; ++l) {
      const DeepInterval anchored{l, 0};
      box1[j].push_back(contains(anchored, m.components[j].box.first));
      box2[j].push_back(contains(anchored, m.components[j].box.second));
      quad1[j].push_back(contains(anchored, m.components[j].quadrant.first));
      quad2[j].push_back(contains(anchored, m.components[j].quadrant.second));
    }
  }
  CountingReport r;
  r.containing.assign(M, 0);
  r.exclusive.assign(M, 0);
  for (int l1 = 0; l1 <= n; ++l1) {
    for (int l2 = 0; l2 <= n; ++l2) {
      int quads = 0;
      std::size_t last = 0;
      for (std::size_t j = 0; j < M; ++j) {
        if (box1[j][l1] && box2[j][l2]) ++r.containing[j];
        if (quad1[j][l1] && quad2[j][l2]) {
          ++quads;
          last = j;
        }
      }
      r.overlap_count += quads;
      if (quads == 1) ++r.exclusive[last];
    }
  }
  for (std::size_t j = 0; j < M; ++j) {
    const std::int64_t jj = static_cast<std::int64_t>(j) + 1;
    const std::int64_t expected = ((std::int64_t{1} << jj) + 1) * ((p.N() >> jj) + 1);
    r.containing_expected.push_back(expected);
    if (r.containing[j] != expected) r.containing_pass = false;
    if (jj >= 2 && jj <= p.M - 2 && 8 * r.exclusive[j] < p.N()) r.exclusive_pass = false;
  }
  return r;
}

[[nodiscard]] inline json to_json(const DeepInterval& i) {
  return json::array({i.level, i.index.str()});
}

[[nodiscard]] inline json to_json(const DeepRect& r) {
  return json::array({to_json(r.first), to_json(r.second)});
}

}  // namespace bitree
