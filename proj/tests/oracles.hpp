#pragma once

// Test-side ground truth. Everything here works on explicit interval
// endpoints (integers on the grid 2^-depth) instead of heap indices, so it
// shares no index arithmetic with the library.

#include <cstdint>
#include <vector>

#include "bitree/grid_fn.hpp"

namespace oracle {

struct Interval {
  std::uint64_t lo, hi;  // [lo, hi) in units of 2^-depth
};

inline Interval interval_of(bitree::NodeRef n, int depth) {
  const std::uint64_t width = std::uint64_t{1} << (depth - n.level);
  return {n.index * width, (n.index + 1) * width};
}

inline bool inside(Interval a, Interval b) { return b.lo <= a.lo && a.hi <= b.hi; }

inline std::vector<bitree::NodeRef> nodes(int depth) {
  std::vector<bitree::NodeRef> out;
  for (int l = 0; l <= depth; ++l) {
    for (std::uint64_t i = 0; i < (std::uint64_t{1} << l); ++i) out.push_back({l, i});
  }
  return out;
}

inline std::vector<bitree::BiNodeRef> bi_nodes(bitree::BiShape s) {
  std::vector<bitree::BiNodeRef> out;
  for (auto a : nodes(s.shape1.depth)) {
    for (auto b : nodes(s.shape2.depth)) out.push_back({a, b});
  }
  return out;
}

inline bool leq(bitree::BiShape s, bitree::BiNodeRef a, bitree::BiNodeRef b) {
  return inside(interval_of(a.first, s.shape1.depth), interval_of(b.first, s.shape1.depth)) &&
         inside(interval_of(a.second, s.shape2.depth), interval_of(b.second, s.shape2.depth));
}

// up: sum over rectangles containing the node; down: over rectangles it contains.
template <class T>
bitree::BiFn<T> bi_sum(const bitree::BiFn<T>& f, bool up) {
  const auto s = f.shape();
  const auto all = bi_nodes(s);
  bitree::BiFn<T> out(s);
  for (auto a : all) {
    T acc{};
    for (auto b : all) {
      if (up ? leq(s, a, b) : leq(s, b, a)) acc += f[b];
    }
    out[a] = acc;
  }
  return out;
}

// Up-sum in one coordinate only (coord 1 or 2), the other held fixed.
template <class T>
bitree::BiFn<T> coord_up_sum(const bitree::BiFn<T>& f, int coord) {
  const auto s = f.shape();
  bitree::BiFn<T> out(s);
  for (auto a : bi_nodes(s)) {
    T acc{};
    for (auto b : bi_nodes(s)) {
      const bool fixed = coord == 1 ? b.second == a.second : b.first == a.first;
      if (fixed && leq(s, a, b)) acc += f[b];
    }
    out[a] = acc;
  }
  return out;
}

template <class T>
bitree::TreeFn<T> tree_sum(const bitree::TreeFn<T>& f, bool up) {
  const int d = f.shape().depth;
  bitree::TreeFn<T> out(f.shape());
  for (auto a : nodes(d)) {
    T acc{};
    for (auto b : nodes(d)) {
      const bool rel = up ? inside(interval_of(a, d), interval_of(b, d))
                          : inside(interval_of(b, d), interval_of(a, d));
      if (rel) acc += f[b];
    }
    out[a] = acc;
  }
  return out;
}

// Potential: for each node, the sum over every mu-atom b of the number of
// rectangles containing both the node and b.
template <class T>
bitree::BiFn<T> potential(const bitree::BiFn<T>& mu) {
  return bi_sum(bi_sum(mu, false), true);
}

template <class T>
T energy(const bitree::BiFn<T>& mu) {
  const auto v = potential(mu);
  T acc{};
  for (auto a : bi_nodes(mu.shape())) acc += v[a] * mu[a];
  return acc;
}

}  // namespace oracle
