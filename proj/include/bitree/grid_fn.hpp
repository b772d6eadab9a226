#pragma once

// Dense real-valued functions on every node of a tree or bi-tree. Measures,
// potentials and majorants are all instances; non-negativity is checked by
// the operations that need it, not by the container.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "tree_core.hpp"

namespace bitree {

template <class T>
concept Scalar = std::is_same_v<T, double> || std::is_same_v<T, std::int64_t>;

template <Scalar T = double>
class TreeFn {
 public:
  using value_type = T;

  TreeFn() = default;
  explicit TreeFn(TreeShape shape, T fill = T{})
      : shape_(shape), values_(shape.size(), fill) {}
  TreeFn(TreeShape shape, std::vector<T> values) : shape_(shape), values_(std::move(values)) {
    if (values_.size() != shape_.size()) throw invalid_input("TreeFn: size mismatch");
  }

  [[nodiscard]] TreeShape shape() const noexcept { return shape_; }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

  T& operator[](NodeRef n) { return values_[n.slot()]; }
  const T& operator[](NodeRef n) const { return values_[n.slot()]; }
  T& at_slot(std::size_t s) { return values_[s]; }
  const T& at_slot(std::size_t s) const { return values_[s]; }

  [[nodiscard]] std::span<T> values() noexcept { return values_; }
  [[nodiscard]] std::span<const T> values() const noexcept { return values_; }

  friend bool operator==(const TreeFn&, const TreeFn&) = default;

 private:
  TreeShape shape_{};
  std::vector<T> values_;
};

template <Scalar T = double>
class BiFn {
 public:
  using value_type = T;

  BiFn() = default;
  explicit BiFn(BiShape shape, T fill = T{}) : shape_(shape), values_(shape.size(), fill) {}
  BiFn(BiShape shape, std::vector<T> values) : shape_(shape), values_(std::move(values)) {
    if (values_.size() != shape_.size()) throw invalid_input("BiFn: size mismatch");
  }

  [[nodiscard]] BiShape shape() const noexcept { return shape_; }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] std::size_t row_length() const noexcept { return shape_.shape2.size(); }

  T& operator[](BiNodeRef n) { return values_[slot(shape_, n)]; }
  const T& operator[](BiNodeRef n) const { return values_[slot(shape_, n)]; }
  T& at_slot(std::size_t s) { return values_[s]; }
  const T& at_slot(std::size_t s) const { return values_[s]; }

  /// Values with the first coordinate fixed at heap slot `row`.
  [[nodiscard]] std::span<T> row(std::size_t r) noexcept {
    return std::span<T>(values_).subspan(r * row_length(), row_length());
  }
  [[nodiscard]] std::span<const T> row(std::size_t r) const noexcept {
    return std::span<const T>(values_).subspan(r * row_length(), row_length());
  }

  [[nodiscard]] std::span<T> values() noexcept { return values_; }
  [[nodiscard]] std::span<const T> values() const noexcept { return values_; }

  friend bool operator==(const BiFn&, const BiFn&) = default;

 private:
  BiShape shape_{};
  std::vector<T> values_;
};

template <class Fn>
[[nodiscard]] auto sum(const Fn& f) {
  typename Fn::value_type acc{};
  for (auto v : f.values()) acc += v;
  return acc;
}

template <class Fn>
[[nodiscard]] auto max_value(const Fn& f) {
  auto vals = f.values();
  return vals.empty() ? typename Fn::value_type{} : *std::max_element(vals.begin(), vals.end());
}

/// Sum over nodes of f * g.
template <class Fn>
[[nodiscard]] auto inner(const Fn& f, const Fn& g) {
  if (!(f.shape() == g.shape())) throw invalid_input("inner: shape mismatch");
  typename Fn::value_type acc{};
  auto a = f.values();
  auto b = g.values();
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

template <class Fn>
[[nodiscard]] bool is_nonnegative(const Fn& f) {
  auto vals = f.values();
  return std::all_of(vals.begin(), vals.end(), [](auto v) { return v >= 0; });
}

template <class Fn>
[[nodiscard]] bool is_finite(const Fn& f) {
  if constexpr (std::is_floating_point_v<typename Fn::value_type>) {
    auto vals = f.values();
    return std::all_of(vals.begin(), vals.end(), [](auto v) { return std::isfinite(v); });
  } else {
    return true;
  }
}

template <class Fn>
void require_nonnegative(const Fn& f, const char* what) {
  if (!is_finite(f) || !is_nonnegative(f)) {
    throw invalid_input(std::string(what) + ": entries must be finite and non-negative");
  }
}

/// Pointwise product.
template <class Fn>
[[nodiscard]] Fn multiply(const Fn& f, const Fn& g) {
  if (!(f.shape() == g.shape())) throw invalid_input("multiply: shape mismatch");
  Fn out = f;
  auto o = out.values();
  auto b = g.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= b[i];
  return out;
}

/// Converts an exact integer-weight function to doubles.
[[nodiscard]] inline TreeFn<double> to_double(const TreeFn<std::int64_t>& f) {
  TreeFn<double> out(f.shape());
  for (std::size_t i = 0; i < f.size(); ++i) out.at_slot(i) = static_cast<double>(f.at_slot(i));
  return out;
}

[[nodiscard]] inline BiFn<double> to_double(const BiFn<std::int64_t>& f) {
  BiFn<double> out(f.shape());
  for (std::size_t i = 0; i < f.size(); ++i) out.at_slot(i) = static_cast<double>(f.at_slot(i));
  return out;
}

}  // namespace bitree
