#pragma once

// Energy-scaling certificates on concrete measures: the two-scale inequality
// E_delta <= 2 A0 (delta / 3 lambda) E_{3 lambda} + 10 lambda |mu|, the
// ladder bound obtained from it by induction, the power-type bound with
// C_tau = c0^(1/tau), the sub-power bound, and exponent fitting.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "certificate.hpp"
#include "grid_fn.hpp"
#include "majorant.hpp"
#include "potentials.hpp"
#include "random.hpp"
#include "tree_core.hpp"

namespace bitree {

struct ScalingConstants {
  double a0 = kEnergyConstantA0;
  double c0 = 6.0;  ///< constant of the stopping recursion, at least 6
  double tau = 0.5;

  /// Ladder ratio of the stopping argument, c0^(1/tau).
  [[nodiscard]] double t_stop() const { return std::pow(c0, 1.0 / tau); }

  void validate() const {
    if (!(a0 > 0.0)) throw invalid_input("ScalingConstants: A0 must be positive");
    if (!(c0 >= 6.0)) throw invalid_input("ScalingConstants: c0 must be >= 6");
    if (!(tau > 0.0 && tau < 1.0)) throw invalid_input("ScalingConstants: tau must lie in (0, 1)");
  }
};

// --- measure generators ----------------------------------------------------------

enum class MeasureKind { uniform_leaves, sparse_random, diagonal, single_node };

inline constexpr MeasureKind kAllMeasureKinds[] = {MeasureKind::uniform_leaves,
                                                   MeasureKind::sparse_random,
                                                   MeasureKind::diagonal,
                                                   MeasureKind::single_node};

[[nodiscard]] inline std::string_view to_string(MeasureKind k) {
  switch (k) {
    case MeasureKind::uniform_leaves: return "uniform_leaves";
    case MeasureKind::sparse_random: return "sparse_random";
    case MeasureKind::diagonal: return "diagonal";
    case MeasureKind::single_node: return "single_node";
  }
  return "unknown";
}

[[nodiscard]] inline MeasureKind parse_measure_kind(std::string_view s) {
  for (MeasureKind k : kAllMeasureKinds) {
    if (to_string(k) == s) return k;
  }
  throw invalid_input("unknown measure kind '" + std::string(s) + "'");
}

/// Random sparse measure: a handful of atoms with dyadic masses k / 16,
/// k in [1, 64], at levels biased toward the leaves.
[[nodiscard]] inline BiFn<double> random_sparse_measure(BiShape shape, Rng& rng) {
  BiFn<double> mu(shape);
  auto deep_level = [&](int depth) {
    int l = depth;
    while (l > 0 && rng.coin(0.35)) --l;
    return l;
  };
  const std::int64_t atoms = rng.between(1, 8);
  for (std::int64_t a = 0; a < atoms; ++a) {
    const int l1 = deep_level(shape.shape1.depth);
    const int l2 = deep_level(shape.shape2.depth);
    const NodeRef n1{l1, rng.below(std::uint64_t{1} << l1)};
    const NodeRef n2{l2, rng.below(std::uint64_t{1} << l2)};
    mu[BiNodeRef{n1, n2}] += rng.dyadic(64, 4);
  }
  return mu;
}

/// Deterministic in (kind, shape, seed). All masses are dyadic rationals.
///   uniform_leaves  total mass 1 spread evenly over leaf rectangles
///   sparse_random   random_sparse_measure
///   diagonal        random dyadic masses on the nodes (a, a), a a leaf of the
///                   shallower tree
///   single_node     unit mass at the root
[[nodiscard]] inline BiFn<double> generate_measure(MeasureKind kind, BiShape shape,
                                                   std::uint64_t seed) {
  Rng rng(seed);
  BiFn<double> mu(shape);
  switch (kind) {
    case MeasureKind::uniform_leaves: {
      const double each = std::ldexp(1.0, -(shape.shape1.depth + shape.shape2.depth));
      for (std::uint64_t i = 0; i < shape.shape1.leaf_count(); ++i) {
        for (std::uint64_t j = 0; j < shape.shape2.leaf_count(); ++j) {
          mu[BiNodeRef{{shape.shape1.depth, i}, {shape.shape2.depth, j}}] = each;
        }
      }
      break;
    }
    case MeasureKind::sparse_random:
      mu = random_sparse_measure(shape, rng);
      break;
    case MeasureKind::diagonal: {
      const int d = std::min(shape.shape1.depth, shape.shape2.depth);
      for (std::uint64_t i = 0; i < (std::uint64_t{1} << d); ++i) {
        mu[BiNodeRef{{d, i}, {d, i}}] = rng.dyadic(16, 2);
      }
      break;
    }
    case MeasureKind::single_node:
      mu[BiNodeRef::root()] = 1.0;
      break;
  }
  return mu;
}

// --- two-scale inequality -----------------------------------------------------------

/// E_delta <= 2 A0 (delta / 3 lambda) E_{3 lambda} + 10 lambda |mu|.
[[nodiscard]] inline Certificate check_two_scale(const PotentialBundle<double>& b, double delta,
                                                 double lambda, double a0 = kEnergyConstantA0) {
  if (!(delta > 0.0 && lambda > 0.0)) throw invalid_input("check_two_scale: delta, lambda > 0");
  if (delta > lambda / 6.0) throw hypothesis_error("check_two_scale: requires delta <= lambda / 6");
  Certificate c;
  c.name = "two_scale";
  c.lhs = truncated_energy(b, delta);
  const double e3 = truncated_energy(b, 3.0 * lambda);
  c.rhs = 2.0 * a0 * (delta / (3.0 * lambda)) * e3 + 10.0 * lambda * b.mass;
  c.pass = leq_within(c.lhs, c.rhs, kCertSlack);
  c.details = {{"delta", delta}, {"lambda", lambda}, {"energy_3lambda", e3}};
  return c;
}

[[nodiscard]] inline Certificate check_two_scale(const BiFn<double>& mu, double delta,
                                                 double lambda, double a0 = kEnergyConstantA0) {
  return check_two_scale(build_potential(mu), delta, lambda, a0);
}

/// Best constant C with E_delta <= C ((delta / lambda) E_lambda + lambda |mu|)
/// over the given pairs (pairs with a vanishing right side are skipped).
[[nodiscard]] inline double observed_two_scale_constant(
    const PotentialBundle<double>& b, const std::vector<std::pair<double, double>>& pairs) {
  double best = 0.0;
  for (auto [delta, lambda] : pairs) {
    const double rhs = (delta / lambda) * truncated_energy(b, lambda) + lambda * b.mass;
    if (rhs > 0.0) best = std::max(best, truncated_energy(b, delta) / rhs);
  }
  return best;
}

// --- ladder bound -----------------------------------------------------------------

struct SurrogateBound {
  int k = 0;               ///< largest rung with delta_k >= delta
  double delta_k = 0.0;    ///< A (4 A0)^(-k(k+1)/2)
  double ladder_bound = 0.0;  ///< (4 A0)^(k+1) delta_k |mu|
  double bound = 0.0;      ///< min(ladder_bound, energy)
};

/// Rungs delta_k = A (4 A0)^(-k(k+1)/2), A = energy / mass, while delta_k >= floor.
[[nodiscard]] inline std::vector<double> surrogate_rungs(double a, double a0, double floor) {
  std::vector<double> rungs;
  double d = a;
  for (int k = 0; d >= floor && d > 0.0; ++k) {
    rungs.push_back(d);
    d /= std::pow(4.0 * a0, k + 1);
  }
  return rungs;
}

/// Upper bound on E_delta from the induction E_{delta_k} <= (4 A0)^(k+1)
/// delta_k |mu| and monotonicity in delta. Requires energy >= 2 delta mass.
[[nodiscard]] inline SurrogateBound surrogate_bound(double delta, double mass, double energy,
                                                    double a0 = kEnergyConstantA0) {
  if (!(mass > 0.0) || !(delta > 0.0) || !(a0 > 0.0)) {
    throw invalid_input("surrogate_bound: mass, delta and A0 must be positive");
  }
  if (!(energy >= 2.0 * delta * mass)) {
    throw hypothesis_error("surrogate_bound: requires energy >= 2 delta mass");
  }
  const std::vector<double> rungs = surrogate_rungs(energy / mass, a0, delta);
  SurrogateBound s;
  s.k = static_cast<int>(rungs.size()) - 1;
  s.delta_k = rungs.back();
  s.ladder_bound = std::pow(4.0 * a0, s.k + 1) * s.delta_k * mass;
  s.bound = std::min(s.ladder_bound, energy);
  return s;
}

/// Checks every rung of the induction down to `floor`.
[[nodiscard]] inline Certificate check_surrogate_induction(const PotentialBundle<double>& b,
                                                           double floor,
                                                           double a0 = kEnergyConstantA0) {
  Certificate c;
  c.name = "surrogate_induction";
  if (!(b.mass > 0.0)) throw invalid_input("check_surrogate_induction: empty measure");
  const std::vector<double> rungs = surrogate_rungs(b.energy / b.mass, a0, floor);
  double worst = -std::numeric_limits<double>::infinity();
  json rows = json::array();
  for (std::size_t k = 0; k < rungs.size(); ++k) {
    const double lhs = truncated_energy(b, rungs[k]);
    const double rhs = std::pow(4.0 * a0, static_cast<double>(k + 1)) * rungs[k] * b.mass;
    if (!leq_within(lhs, rhs, kCertSlack)) c.pass = false;
    if (rhs > 0.0 && lhs / rhs > worst) {
      worst = lhs / rhs;
      c.lhs = lhs;
      c.rhs = rhs;
    }
    rows.push_back({{"k", k}, {"delta_k", rungs[k]}, {"energy_delta", lhs}, {"bound", rhs}});
  }
  c.details["rungs"] = std::move(rows);
  return c;
}

// --- power-type and sub-power bounds -------------------------------------------------

/// E_delta <= c0^(1/tau) delta^(1-tau) |mu|^(1-tau) E^tau, for 0 < |mu| <= E.
[[nodiscard]] inline Certificate check_power_bound(const PotentialBundle<double>& b, double delta,
                                                   double tau, double c0 = 6.0) {
  if (!(b.mass > 0.0) || !(b.mass <= b.energy)) {
    throw hypothesis_error("check_power_bound: requires 0 < |mu| <= energy");
  }
  if (!(tau > 0.0 && tau < 1.0)) throw hypothesis_error("check_power_bound: requires 0 < tau < 1");
  if (!(delta > 0.0)) throw invalid_input("check_power_bound: delta must be positive");
  if (!(c0 >= 6.0)) throw invalid_input("check_power_bound: c0 must be >= 6");
  Certificate c;
  c.name = "power_bound";
  c.lhs = truncated_energy(b, delta);
  const double c_tau = std::pow(c0, 1.0 / tau);
  c.rhs = c_tau * std::pow(delta * b.mass, 1.0 - tau) * std::pow(b.energy, tau);
  c.pass = leq_within(c.lhs, c.rhs, kCertSlack);
  c.details = {{"delta", delta}, {"tau", tau}, {"c0", c0}, {"c_tau", c_tau}};
  return c;
}

/// Smallest c >= 0 with E_delta <= delta exp(c sqrt(log 1/delta)) E; pass
/// iff that c does not exceed c_max.
[[nodiscard]] inline Certificate check_subpower_bound(const PotentialBundle<double>& b,
                                                     double delta, double c_max) {
  if (!(b.mass <= b.energy)) throw hypothesis_error("check_subpower_bound: requires |mu| <= energy");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw hypothesis_error("check_subpower_bound: requires 0 < delta < 1");
  }
  Certificate c;
  c.name = "subpower_bound";
  c.lhs = truncated_energy(b, delta);
  c.rhs = delta * b.energy;
  double minimal_c = 0.0;
  if (c.lhs > c.rhs) minimal_c = std::log(c.lhs / c.rhs) / std::sqrt(std::log(1.0 / delta));
  c.pass = minimal_c <= c_max;
  c.details = {{"delta", delta}, {"minimal_c", minimal_c}, {"c_max", c_max}};
  return c;
}

// --- ladders ----------------------------------------------------------------------

struct LadderRow {
  double delta = 0.0;
  double energy_delta = 0.0;
  bool surrogate_applicable = false;  ///< energy >= 2 delta |mu|
  double bound_surrogate = std::numeric_limits<double>::quiet_NaN();
  bool pass_surrogate = true;
  std::vector<double> bound_tau;
  std::vector<bool> pass_tau;
};

struct LadderReport {
  std::string mu_id;
  double mass = 0.0;
  double energy = 0.0;
  double a = 0.0;  ///< energy / mass
  ScalingConstants constants;
  std::vector<double> taus;
  std::vector<LadderRow> rows;  ///< sorted by increasing delta

  [[nodiscard]] bool all_pass() const {
    return std::all_of(rows.begin(), rows.end(), [](const LadderRow& r) {
      return r.pass_surrogate &&
             std::all_of(r.pass_tau.begin(), r.pass_tau.end(), [](bool p) { return p; });
    });
  }
};

/// Geometric grid of `steps` values from lo to hi inclusive (lo, hi > 0).
[[nodiscard]] inline std::vector<double> geometric_ladder(double lo, double hi, int steps) {
  if (!(lo > 0.0 && hi >= lo) || steps < 1) throw invalid_input("ladder: need 0 < lo <= hi, steps >= 1");
  std::vector<double> out;
  if (steps == 1) return {lo};
  const double ratio = std::pow(hi / lo, 1.0 / (steps - 1));
  for (int i = 0; i < steps; ++i) out.push_back(i == steps - 1 ? hi : lo * std::pow(ratio, i));
  return out;
}

/// The default ladder, delta in {2^-20, ..., 2^-1} times A.
[[nodiscard]] inline std::vector<double> default_relative_ladder() {
  std::vector<double> out;
  for (int i = 20; i >= 1; --i) out.push_back(std::ldexp(1.0, -i));
  return out;
}

/// Ladder rows at delta = A * rel for each rel in `relative_deltas`.
[[nodiscard]] inline LadderReport build_ladder(const PotentialBundle<double>& b, std::string mu_id,
                                               const std::vector<double>& relative_deltas,
                                               const std::vector<double>& taus,
                                               const ScalingConstants& constants) {
  constants.validate();
  if (!(b.mass > 0.0)) throw invalid_input("build_ladder: empty measure");
  LadderReport r;
  r.mu_id = std::move(mu_id);
  r.mass = b.mass;
  r.energy = b.energy;
  r.a = b.energy / b.mass;
  r.constants = constants;
  r.taus = taus;
  std::vector<double> deltas;
  for (double rel : relative_deltas) deltas.push_back(rel * r.a);
  std::sort(deltas.begin(), deltas.end());
  const bool eps_applicable = b.mass <= b.energy;
  for (double delta : deltas) {
    LadderRow row;
    row.delta = delta;
    row.energy_delta = truncated_energy(b, delta);
    row.surrogate_applicable = b.energy >= 2.0 * delta * b.mass;
    if (row.surrogate_applicable) {
      row.bound_surrogate = surrogate_bound(delta, b.mass, b.energy, constants.a0).bound;
      row.pass_surrogate = leq_within(row.energy_delta, row.bound_surrogate, kCertSlack);
    }
    for (double tau : taus) {
      if (eps_applicable) {
        const Certificate c = check_power_bound(b, delta, tau, constants.c0);
        row.bound_tau.push_back(c.rhs);
        row.pass_tau.push_back(c.pass);
      } else {
        row.bound_tau.push_back(std::numeric_limits<double>::quiet_NaN());
        row.pass_tau.push_back(true);
      }
    }
    r.rows.push_back(std::move(row));
  }
  return r;
}

/// Least-squares slope of log E_delta against log delta over rows with
/// E_delta > 0. Needs at least 3 such rows.
[[nodiscard]] inline double fit_exponent(const LadderReport& report) {
  std::vector<std::pair<double, double>> pts;
  for (const LadderRow& r : report.rows) {
    if (r.energy_delta > 0.0 && r.delta > 0.0) pts.emplace_back(std::log(r.delta), std::log(r.energy_delta));
  }
  if (pts.size() < 3) throw invalid_input("fit_exponent: need at least 3 rows with positive energy");
  double mx = 0.0, my = 0.0;
  for (auto [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxy = 0.0, sxx = 0.0;
  for (auto [x, y] : pts) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
  }
  if (sxx == 0.0) throw invalid_input("fit_exponent: all deltas coincide");
  return sxy / sxx;
}

/// CSV columns: delta, energy_delta, bound_surrogate, bound_tau_<tau>...,
/// pass_surrogate, pass_tau_<tau>... Missing bounds are written as "nan".
[[nodiscard]] inline std::string ladder_csv(const LadderReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "delta,energy_delta,bound_surrogate";
  for (double t : r.taus) os << ",bound_tau_" << t;
  os << ",pass_surrogate";
  for (double t : r.taus) os << ",pass_tau_" << t;
  os << '\n';
  for (const LadderRow& row : r.rows) {
    os << row.delta << ',' << row.energy_delta << ',' << row.bound_surrogate;
    for (double b : row.bound_tau) os << ',' << b;
    os << ',' << (row.pass_surrogate ? 1 : 0);
    for (bool p : row.pass_tau) os << ',' << (p ? 1 : 0);
    os << '\n';
  }
  return os.str();
}

[[nodiscard]] inline json to_json(const LadderReport& r) {
  json rows = json::array();
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  for (const LadderRow& row : r.rows) {
    json bt = json::array();
    for (double b : row.bound_tau) bt.push_back(num(b));
    rows.push_back({{"delta", row.delta},
                    {"energy_delta", row.energy_delta},
                    {"surrogate_applicable", row.surrogate_applicable},
                    {"bound_surrogate", num(row.bound_surrogate)},
                    {"pass_surrogate", row.pass_surrogate},
                    {"bound_tau", bt},
                    {"pass_tau", row.pass_tau}});
  }
  return {{"mu_id", r.mu_id},
          {"mass", r.mass},
          {"energy", r.energy},
          {"A", r.a},
          {"A0", r.constants.a0},
          {"c0", r.constants.c0},
          {"taus", r.taus},
          {"rows", rows}};
}

}  // namespace bitree
