#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include <json.hpp>

#include "tree_core.hpp"

namespace bitree {

using json = nlohmann::json;

/// Outcome of checking one inequality `lhs <= rhs` (or an equality, in which
/// case lhs and rhs are the two sides). `details` holds check-specific fields.
struct Certificate {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = true;
  std::optional<BiNodeRef> witness;
  json details = json::object();
};

inline json to_json(NodeRef n) { return json::array({n.level, n.index}); }

inline json to_json(BiNodeRef n) { return json::array({to_json(n.first), to_json(n.second)}); }

inline json to_json(const Certificate& c) {
  json j;
  j["name"] = c.name;
  j["lhs"] = c.lhs;
  j["rhs"] = c.rhs;
  j["pass"] = c.pass;
  j["witness"] = c.witness ? to_json(*c.witness) : json(nullptr);
  if (!c.details.empty()) j["details"] = c.details;
  return j;
}

/// a >= b up to `rel` relative slack; rel = 0 is an exact comparison.
[[nodiscard]] inline bool geq_within(double a, double b, double rel) {
  if (a >= b) return true;
  return b - a <= rel * std::max(std::fabs(a), std::fabs(b));
}

[[nodiscard]] inline bool leq_within(double a, double b, double rel) {
  return geq_within(b, a, rel);
}

/// Default slack for floating comparisons in the certification suites.
inline constexpr double kCertSlack = 1e-9;

}  // namespace bitree
