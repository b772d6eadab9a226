#pragma once

// Node arithmetic for finite dyadic trees and their two-fold products.
//
// Linearization (fixed, relied on for reproducible reduction order):
//   tree node (level, index)      -> heap slot  (1 << level) - 1 + index
//   bi-node   (first, second)     -> slot1 * shape2.size() + slot2
// so the first coordinate is the major (row) index and the second is
// contiguous in memory.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace bitree {

/// Raised for malformed arguments (invalid nodes, negative masses, bad sizes).
struct invalid_input : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Raised when a hypothesis of a bound (e.g. delta <= lambda / 6) fails.
struct hypothesis_error : std::domain_error {
  using std::domain_error::domain_error;
};

/// Dense trees are stored in full; this caps memory at a sane size.
inline constexpr int kMaxDenseDepth = 24;

struct TreeShape {
  int depth = 0;

  constexpr TreeShape() = default;
  constexpr explicit TreeShape(int d) : depth(d) {
    if (d < 0 || d > kMaxDenseDepth) {
      throw invalid_input("TreeShape: depth must lie in [0, " +
                          std::to_string(kMaxDenseDepth) + "]");
    }
  }

  [[nodiscard]] constexpr std::size_t size() const noexcept {
    return (std::size_t{1} << (depth + 1)) - 1;
  }
  [[nodiscard]] constexpr std::size_t level_size(int level) const noexcept {
    return std::size_t{1} << level;
  }
  /// Slot range [first_slot(l), first_slot(l+1)) holds level l.
  [[nodiscard]] static constexpr std::size_t first_slot(int level) noexcept {
    return (std::size_t{1} << level) - 1;
  }
  [[nodiscard]] constexpr std::size_t leaf_count() const noexcept {
    return std::size_t{1} << depth;
  }

  friend constexpr bool operator==(TreeShape, TreeShape) = default;
};

/// The dyadic interval [index * 2^-level, (index + 1) * 2^-level].
struct NodeRef {
  int level = 0;
  std::uint64_t index = 0;

  [[nodiscard]] static constexpr NodeRef root() noexcept { return {}; }

  [[nodiscard]] constexpr bool is_root() const noexcept { return level == 0; }
  [[nodiscard]] constexpr NodeRef parent() const noexcept {
    return {level - 1, index >> 1};
  }
  [[nodiscard]] constexpr NodeRef child(int side) const noexcept {
    return {level + 1, (index << 1) | static_cast<std::uint64_t>(side & 1)};
  }
  /// Ancestor-or-self at a coarser level.
  [[nodiscard]] constexpr NodeRef ancestor_at(int coarser_level) const noexcept {
    return {coarser_level, index >> (level - coarser_level)};
  }

  [[nodiscard]] constexpr std::size_t slot() const noexcept {
    return TreeShape::first_slot(level) + static_cast<std::size_t>(index);
  }
  [[nodiscard]] static constexpr NodeRef from_slot(std::size_t slot) noexcept {
    int level = 0;
    while (TreeShape::first_slot(level + 1) <= slot) ++level;
    return {level, static_cast<std::uint64_t>(slot - TreeShape::first_slot(level))};
  }

  friend constexpr bool operator==(NodeRef, NodeRef) = default;
  friend std::ostream& operator<<(std::ostream& os, NodeRef n) {
    return os << '(' << n.level << ',' << n.index << ')';
  }
};

[[nodiscard]] constexpr bool is_valid(TreeShape shape, NodeRef n) noexcept {
  return n.level >= 0 && n.level <= shape.depth &&
         n.index < (std::uint64_t{1} << n.level);
}

inline void require_valid(TreeShape shape, NodeRef n) {
  if (!is_valid(shape, n)) {
    throw invalid_input("node (" + std::to_string(n.level) + "," +
                        std::to_string(n.index) + ") is not in a tree of depth " +
                        std::to_string(shape.depth));
  }
}

/// True iff interval a is contained in interval b, i.e. b is an
/// ancestor-or-self of a.
[[nodiscard]] inline bool is_leq_tree(TreeShape shape, NodeRef a, NodeRef b) {
  require_valid(shape, a);
  require_valid(shape, b);
  return b.level <= a.level && (a.index >> (a.level - b.level)) == b.index;
}

/// Level of the smallest common ancestor.
[[nodiscard]] constexpr int common_ancestor_level(NodeRef a, NodeRef b) noexcept {
  int level = a.level < b.level ? a.level : b.level;
  while (level > 0 && a.ancestor_at(level).index != b.ancestor_at(level).index) --level;
  return level;
}

/// Root-first ancestor chain of a (inclusive).
[[nodiscard]] inline std::vector<NodeRef> ancestors_tree(TreeShape shape, NodeRef a) {
  require_valid(shape, a);
  std::vector<NodeRef> out;
  out.reserve(static_cast<std::size_t>(a.level) + 1);
  for (int l = 0; l <= a.level; ++l) out.push_back(a.ancestor_at(l));
  return out;
}

struct BiShape {
  TreeShape shape1;
  TreeShape shape2;

  constexpr BiShape() = default;
  constexpr BiShape(TreeShape s1, TreeShape s2) : shape1(s1), shape2(s2) {}
  constexpr BiShape(int d1, int d2) : shape1(d1), shape2(d2) {}
  [[nodiscard]] static constexpr BiShape square(int depth) { return {depth, depth}; }

  [[nodiscard]] constexpr std::size_t size() const noexcept {
    return shape1.size() * shape2.size();
  }

  friend constexpr bool operator==(BiShape, BiShape) = default;
};

/// A dyadic rectangle first x second.
struct BiNodeRef {
  NodeRef first;
  NodeRef second;

  [[nodiscard]] static constexpr BiNodeRef root() noexcept { return {}; }

  friend constexpr bool operator==(BiNodeRef, BiNodeRef) = default;
  friend std::ostream& operator<<(std::ostream& os, BiNodeRef n) {
    return os << '[' << n.first << ',' << n.second << ']';
  }
};

[[nodiscard]] constexpr bool is_valid(BiShape shape, BiNodeRef n) noexcept {
  return is_valid(shape.shape1, n.first) && is_valid(shape.shape2, n.second);
}

inline void require_valid(BiShape shape, BiNodeRef n) {
  require_valid(shape.shape1, n.first);
  require_valid(shape.shape2, n.second);
}

[[nodiscard]] constexpr std::size_t slot(BiShape shape, BiNodeRef n) noexcept {
  return n.first.slot() * shape.shape2.size() + n.second.slot();
}

[[nodiscard]] constexpr BiNodeRef from_slot(BiShape shape, std::size_t s) noexcept {
  const std::size_t n2 = shape.shape2.size();
  return {NodeRef::from_slot(s / n2), NodeRef::from_slot(s % n2)};
}

/// Rectangle containment: a <= b in both coordinates.
[[nodiscard]] inline bool is_leq_bi(BiShape shape, BiNodeRef a, BiNodeRef b) {
  return is_leq_tree(shape.shape1, a.first, b.first) &&
         is_leq_tree(shape.shape2, a.second, b.second);
}

/// Every b with a <= b, first-coordinate-major, root first. The count is
/// (level1 + 1) * (level2 + 1).
[[nodiscard]] inline std::vector<BiNodeRef> ancestors_bi(BiShape shape, BiNodeRef a) {
  require_valid(shape, a);
  std::vector<BiNodeRef> out;
  out.reserve(static_cast<std::size_t>(a.first.level + 1) *
              static_cast<std::size_t>(a.second.level + 1));
  for (int l1 = 0; l1 <= a.first.level; ++l1) {
    for (int l2 = 0; l2 <= a.second.level; ++l2) {
      out.push_back({a.first.ancestor_at(l1), a.second.ancestor_at(l2)});
    }
  }
  return out;
}

/// Visits all nodes of a tree in slot order.
template <class Fn>
void for_each_node(TreeShape shape, Fn&& fn) {
  for (int l = 0; l <= shape.depth; ++l) {
    for (std::uint64_t i = 0; i < (std::uint64_t{1} << l); ++i) fn(NodeRef{l, i});
  }
}

/// Visits all bi-nodes in slot order.
template <class Fn>
void for_each_node(BiShape shape, Fn&& fn) {
  for_each_node(shape.shape1, [&](NodeRef a) {
    for_each_node(shape.shape2, [&](NodeRef b) { fn(BiNodeRef{a, b}); });
  });
}

}  // namespace bitree
