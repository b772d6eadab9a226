#pragma once

// Hardy summation operators on a dyadic tree (I, I*) and on a bi-tree
// (I_1, I_2, their adjoints, and the full operators II = I_1 I_2,
// II* = I*_1 I*_2).
//
// Every fast path is a single dynamic-programming pass in heap-slot order
// (level-major, index-minor), so results are bit-reproducible. The
// brute_force_* functions are the O(n^2) pairwise oracles the fast paths are
// checked against; they are part of the public surface on purpose.

#include <cstddef>

#include "grid_fn.hpp"
#include "tree_core.hpp"

namespace bitree {

// --- simple tree -----------------------------------------------------------

/// (I f)(a) = sum of f over ancestors-or-self of a. Top-down pass.
template <Scalar T>
[[nodiscard]] TreeFn<T> up_sum_tree(const TreeFn<T>& f) {
  TreeFn<T> out = f;
  for (std::size_t s = 1; s < out.size(); ++s) out.at_slot(s) += out.at_slot((s - 1) / 2);
  return out;
}

/// (I* f)(a) = sum of f over descendants-or-self of a. Bottom-up pass.
template <Scalar T>
[[nodiscard]] TreeFn<T> down_sum_tree(const TreeFn<T>& f) {
  TreeFn<T> out = f;
  const std::size_t internal = TreeShape::first_slot(f.shape().depth);
  for (std::size_t s = internal; s-- > 0;) {
    out.at_slot(s) += out.at_slot(2 * s + 1) + out.at_slot(2 * s + 2);
  }
  return out;
}

template <Scalar T>
[[nodiscard]] TreeFn<T> brute_force_up_sum_tree(const TreeFn<T>& f) {
  const TreeShape shape = f.shape();
  TreeFn<T> out(shape);
  for_each_node(shape, [&](NodeRef a) {
    T acc{};
    for_each_node(shape, [&](NodeRef b) {
      if (is_leq_tree(shape, a, b)) acc += f[b];
    });
    out[a] = acc;
  });
  return out;
}

template <Scalar T>
[[nodiscard]] TreeFn<T> brute_force_down_sum_tree(const TreeFn<T>& f) {
  const TreeShape shape = f.shape();
  TreeFn<T> out(shape);
  for_each_node(shape, [&](NodeRef a) {
    T acc{};
    for_each_node(shape, [&](NodeRef b) {
      if (is_leq_tree(shape, b, a)) acc += f[b];
    });
    out[a] = acc;
  });
  return out;
}

// --- bi-tree, one coordinate -------------------------------------------------

/// I_1: up-sum along the first coordinate for every fixed second coordinate.
/// Whole rows are added at once, which keeps the inner loop contiguous.
template <Scalar T>
[[nodiscard]] BiFn<T> up_sum_1(const BiFn<T>& f) {
  BiFn<T> out = f;
  const std::size_t rows = f.shape().shape1.size();
  for (std::size_t r = 1; r < rows; ++r) {
    auto dst = out.row(r);
    auto src = out.row((r - 1) / 2);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
  }
  return out;
}

/// I*_1: down-sum along the first coordinate.
template <Scalar T>
[[nodiscard]] BiFn<T> down_sum_1(const BiFn<T>& f) {
  BiFn<T> out = f;
  const std::size_t internal = TreeShape::first_slot(f.shape().shape1.depth);
  for (std::size_t r = internal; r-- > 0;) {
    auto dst = out.row(r);
    auto left = out.row(2 * r + 1);
    auto right = out.row(2 * r + 2);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += left[c] + right[c];
  }
  return out;
}

/// I_2: up-sum along the second coordinate inside each row.
template <Scalar T>
[[nodiscard]] BiFn<T> up_sum_2(const BiFn<T>& f) {
  BiFn<T> out = f;
  const std::size_t rows = f.shape().shape1.size();
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = out.row(r);
    for (std::size_t s = 1; s < row.size(); ++s) row[s] += row[(s - 1) / 2];
  }
  return out;
}

/// I*_2: down-sum along the second coordinate inside each row.
template <Scalar T>
[[nodiscard]] BiFn<T> down_sum_2(const BiFn<T>& f) {
  BiFn<T> out = f;
  const std::size_t rows = f.shape().shape1.size();
  const std::size_t internal = TreeShape::first_slot(f.shape().shape2.depth);
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = out.row(r);
    for (std::size_t s = internal; s-- > 0;) row[s] += row[2 * s + 1] + row[2 * s + 2];
  }
  return out;
}

// --- bi-tree, full operators ---------------------------------------------------

/// The bi-tree Hardy operator: sum over all rectangles containing the node.
template <Scalar T>
[[nodiscard]] BiFn<T> up_sum_bi(const BiFn<T>& f) {
  return up_sum_1(up_sum_2(f));
}

/// Adjoint of up_sum_bi: sum over all rectangles contained in the node.
template <Scalar T>
[[nodiscard]] BiFn<T> down_sum_bi(const BiFn<T>& f) {
  return down_sum_1(down_sum_2(f));
}

template <Scalar T>
[[nodiscard]] BiFn<T> brute_force_up_sum_bi(const BiFn<T>& f) {
  const BiShape shape = f.shape();
  BiFn<T> out(shape);
  for_each_node(shape, [&](BiNodeRef a) {
    T acc{};
    for_each_node(shape, [&](BiNodeRef b) {
      if (is_leq_bi(shape, a, b)) acc += f[b];
    });
    out[a] = acc;
  });
  return out;
}

template <Scalar T>
[[nodiscard]] BiFn<T> brute_force_down_sum_bi(const BiFn<T>& f) {
  const BiShape shape = f.shape();
  BiFn<T> out(shape);
  for_each_node(shape, [&](BiNodeRef a) {
    T acc{};
    for_each_node(shape, [&](BiNodeRef b) {
      if (is_leq_bi(shape, b, a)) acc += f[b];
    });
    out[a] = acc;
  });
  return out;
}

/// Coordinate-restricted oracle: sums over b with b.second == a.second and
/// b.first an ancestor-or-self (up) or descendant-or-self (down) of a.first.
template <Scalar T>
[[nodiscard]] BiFn<T> brute_force_sum_1(const BiFn<T>& f, bool up) {
  const BiShape shape = f.shape();
  BiFn<T> out(shape);
  for_each_node(shape, [&](BiNodeRef a) {
    T acc{};
    for_each_node(shape.shape1, [&](NodeRef b1) {
      const bool related = up ? is_leq_tree(shape.shape1, a.first, b1)
                              : is_leq_tree(shape.shape1, b1, a.first);
      if (related) acc += f[BiNodeRef{b1, a.second}];
    });
    out[a] = acc;
  });
  return out;
}

template <Scalar T>
[[nodiscard]] BiFn<T> brute_force_sum_2(const BiFn<T>& f, bool up) {
  const BiShape shape = f.shape();
  BiFn<T> out(shape);
  for_each_node(shape, [&](BiNodeRef a) {
    T acc{};
    for_each_node(shape.shape2, [&](NodeRef b2) {
      const bool related = up ? is_leq_tree(shape.shape2, a.second, b2)
                              : is_leq_tree(shape.shape2, b2, a.second);
      if (related) acc += f[BiNodeRef{a.first, b2}];
    });
    out[a] = acc;
  });
  return out;
}

}  // namespace bitree
