#pragma once

// Bi-tree capacity cap(E) = min { sum f^2 : f >= 0, II f >= 1 on E }.
//
// Solved through the dual: with f = II* kappa for kappa >= 0 supported on E,
// II f = G kappa where G(e, e') counts the common ancestors of e and e', and
// the problem becomes min 1/2 k'Gk - 1'k over k >= 0. Projected coordinate
// descent on that, then an exact solve on the detected active set.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "certificate.hpp"
#include "grid_fn.hpp"
#include "hardy_ops.hpp"
#include "potentials.hpp"
#include "tree_core.hpp"

namespace bitree {

struct convergence_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CapacityProblem {
  std::vector<BiNodeRef> targets;  ///< E as given
  std::vector<BiNodeRef> binding;  ///< E without members implied by an ancestor in E
  std::vector<double> kappa;       ///< dual weights on `binding`
  BiFn<double> f;
  double value = 0.0;
  double feasibility_residual = 0.0;  ///< max over E of (1 - II f)_+
  double kkt_residual = 0.0;          ///< max |min(kappa_e, II f(e) - 1)|
  double slackness_residual = 0.0;    ///< |sum f^2 - sum kappa|
  int iterations = 0;
};

/// Number of common ancestors (inclusive) of two bi-nodes.
[[nodiscard]] inline double common_ancestor_count(BiNodeRef a, BiNodeRef b) noexcept {
  return static_cast<double>(common_ancestor_level(a.first, b.first) + 1) *
         static_cast<double>(common_ancestor_level(a.second, b.second) + 1);
}

/// Members of E with no strict ancestor in E; the others are implied, since
/// II f only grows going down.
[[nodiscard]] inline std::vector<BiNodeRef> binding_targets(BiShape shape,
                                                            const std::vector<BiNodeRef>& targets) {
  BiFn<std::int64_t> ind(shape);
  for (const auto& e : targets) {
    require_valid(shape, e);
    ind[e] = 1;
  }
  const BiFn<std::int64_t> above = up_sum_bi(ind);
  std::vector<BiNodeRef> out;
  for (std::size_t s = 0; s < ind.size(); ++s) {
    if (ind.at_slot(s) == 1 && above.at_slot(s) == 1) out.push_back(from_slot(shape, s));
  }
  return out;
}

namespace detail {

inline void finish_capacity(BiShape shape, CapacityProblem& p) {
  BiFn<double> k(shape);
  for (std::size_t i = 0; i < p.binding.size(); ++i) k[p.binding[i]] = p.kappa[i];
  p.f = down_sum_bi(k);
  p.value = inner(p.f, p.f);
  const BiFn<double> u = up_sum_bi(p.f);
  p.feasibility_residual = 0.0;
  for (const auto& e : p.targets) p.feasibility_residual = std::max(p.feasibility_residual, 1.0 - u[e]);
  p.kkt_residual = 0.0;
  double ksum = 0.0;
  for (std::size_t i = 0; i < p.binding.size(); ++i) {
    p.kkt_residual = std::max(p.kkt_residual, std::abs(std::min(p.kappa[i], u[p.binding[i]] - 1.0)));
    ksum += p.kappa[i];
  }
  p.slackness_residual = std::abs(p.value - ksum);
}

}  // namespace detail

/// Active-set refinement: solve G_AA k_A = 1 on A = {k > 0} and accept it if
/// it stays nonnegative and feasible.
inline bool polish_active_set(const std::vector<BiNodeRef>& binding, std::vector<double>& kappa) {
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < kappa.size(); ++i) {
    if (kappa[i] > 0.0) active.push_back(i);
  }
  if (active.empty()) return false;
  const auto na = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd g(na, na);
  for (Eigen::Index r = 0; r < na; ++r) {
    for (Eigen::Index c = 0; c < na; ++c) {
      g(r, c) = common_ancestor_count(binding[active[static_cast<std::size_t>(r)]],
                                      binding[active[static_cast<std::size_t>(c)]]);
    }
  }
  const Eigen::VectorXd ka = g.ldlt().solve(Eigen::VectorXd::Ones(na));
  if (!ka.allFinite() || ka.minCoeff() < 0.0) return false;
  std::vector<double> trial(kappa.size(), 0.0);
  for (Eigen::Index r = 0; r < na; ++r) trial[active[static_cast<std::size_t>(r)]] = ka(r);
  for (std::size_t i = 0; i < binding.size(); ++i) {
    double u = 0.0;
    for (std::size_t j = 0; j < binding.size(); ++j) {
      if (trial[j] != 0.0) u += common_ancestor_count(binding[i], binding[j]) * trial[j];
    }
    if (u < 1.0 - 1e-12) return false;
  }
  kappa = std::move(trial);
  return true;
}

[[nodiscard]] inline CapacityProblem estimate_capacity(BiShape shape,
                                                       const std::vector<BiNodeRef>& targets,
                                                       double tol = 1e-12, int max_iter = 200000) {
  if (!(tol > 0.0)) throw invalid_input("estimate_capacity: tol must be > 0");
  if (shape.size() > (std::size_t{1} << 20)) throw invalid_input("estimate_capacity: bi-tree too large");
  CapacityProblem p;
  p.targets = targets;
  p.f = BiFn<double>(shape);
  if (targets.empty()) return p;

  p.binding = binding_targets(shape, targets);
  const std::size_t n = p.binding.size();
  std::vector<double> g(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) g[i * n + j] = common_ancestor_count(p.binding[i], p.binding[j]);
  }
  p.kappa.assign(n, 0.0);
  std::vector<double> u(n, 0.0);  // G kappa
  double prev_obj = 0.0;
  for (p.iterations = 1; p.iterations <= max_iter; ++p.iterations) {
    for (std::size_t e = 0; e < n; ++e) {
      const double next = std::max(0.0, p.kappa[e] + (1.0 - u[e]) / g[e * n + e]);
      const double step = next - p.kappa[e];
      if (step == 0.0) continue;
      p.kappa[e] = next;
      for (std::size_t i = 0; i < n; ++i) u[i] += step * g[i * n + e];
    }
    double kkt = 0.0, obj = 0.0;
    for (std::size_t e = 0; e < n; ++e) {
      kkt = std::max(kkt, std::abs(std::min(p.kappa[e], u[e] - 1.0)));
      obj += p.kappa[e] * (0.5 * u[e] - 1.0);
    }
    const bool settled = std::abs(obj - prev_obj) <= tol * std::max(1.0, std::abs(obj));
    prev_obj = obj;
    if (kkt < tol && settled) break;
    // Periodically try to jump to the exact solution on the current support.
    if (p.iterations % 50 == 0) {
      std::vector<double> trial = p.kappa;
      if (polish_active_set(p.binding, trial)) {
        p.kappa = std::move(trial);
        for (std::size_t i = 0; i < n; ++i) {
          u[i] = 0.0;
          for (std::size_t j = 0; j < n; ++j) u[i] += g[i * n + j] * p.kappa[j];
        }
      }
    }
  }
  detail::finish_capacity(shape, p);
  if (p.iterations > max_iter) {
    throw convergence_error("estimate_capacity: no convergence after " + std::to_string(max_iter) +
                            " sweeps (kkt " + std::to_string(p.kkt_residual) + ", feasibility " +
                            std::to_string(p.feasibility_residual) + ")");
  }
  return p;
}

/// Exact reference by enumerating active sets; |E| <= 12. The Gram matrix is
/// built by intersecting explicit ancestor lists.
[[nodiscard]] inline double capacity_by_active_set(BiShape shape, const std::vector<BiNodeRef>& targets) {
  const std::size_t n = targets.size();
  if (n == 0) return 0.0;
  if (n > 12) throw invalid_input("capacity_by_active_set: at most 12 targets");
  Eigen::MatrixXd g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto ai = ancestors_bi(shape, targets[i]);
    for (std::size_t j = 0; j < n; ++j) {
      const auto aj = ancestors_bi(shape, targets[j]);
      double c = 0.0;
      for (const auto& x : ai) c += std::count(aj.begin(), aj.end(), x) > 0 ? 1.0 : 0.0;
      g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c;
    }
  }
  double best = -1.0;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    std::vector<Eigen::Index> s;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) s.push_back(static_cast<Eigen::Index>(i));
    }
    const auto k = static_cast<Eigen::Index>(s.size());
    Eigen::MatrixXd gs(k, k);
    for (Eigen::Index r = 0; r < k; ++r) {
      for (Eigen::Index c = 0; c < k; ++c) gs(r, c) = g(s[r], s[c]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(gs);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd ks = lu.solve(Eigen::VectorXd::Ones(k));
    if (ks.minCoeff() < -1e-12) continue;
    Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (Eigen::Index r = 0; r < k; ++r) full(s[r]) = ks(r);
    const Eigen::VectorXd u = g * full;
    if (u.minCoeff() < 1.0 - 1e-9) continue;
    const double v = full.sum();
    // Every KKT point is optimal; keep the smallest for robustness to round-off.
    if (best < 0.0 || v < best) best = v;
  }
  if (best < 0.0) throw convergence_error("capacity_by_active_set: no KKT point found");
  return best;
}

/// {V >= lambda} as a list of bi-nodes.
template <Scalar T>
[[nodiscard]] std::vector<BiNodeRef> superlevel_set(const PotentialBundle<T>& b, double lambda) {
  std::vector<BiNodeRef> out;
  for (std::size_t s = 0; s < b.potential.size(); ++s) {
    if (static_cast<double>(b.potential.at_slot(s)) >= lambda) out.push_back(from_slot(b.shape(), s));
  }
  return out;
}

struct CapacityProfileRow {
  double lambda = 0.0;
  std::size_t set_size = 0;
  std::size_t binding_size = 0;
  double capacity = 0.0;
  double kkt_residual = 0.0;
  double feasibility_residual = 0.0;
};

struct CapacityProfile {
  std::vector<CapacityProfileRow> rows;
  bool non_increasing = true;
  double max_residual = 0.0;
};

/// cap{V >= lambda} along increasing lambdas; monotonicity is checked with
/// 1e-9 relative slack.
template <Scalar T>
[[nodiscard]] CapacityProfile capacity_profile(const PotentialBundle<T>& b, std::vector<double> lambdas,
                                               double tol = 1e-12) {
  std::sort(lambdas.begin(), lambdas.end());
  CapacityProfile out;
  for (double lambda : lambdas) {
    const auto set = superlevel_set(b, lambda);
    const CapacityProblem p = estimate_capacity(b.shape(), set, tol);
    out.rows.push_back({lambda, set.size(), p.binding.size(), p.value, p.kkt_residual,
                        p.feasibility_residual});
    out.max_residual = std::max({out.max_residual, p.kkt_residual, p.feasibility_residual});
  }
  for (std::size_t i = 1; i < out.rows.size(); ++i) {
    if (!leq_within(out.rows[i].capacity, out.rows[i - 1].capacity, kCertSlack)) out.non_increasing = false;
  }
  return out;
}

[[nodiscard]] inline json to_json(const CapacityProblem& p) {
  json j;
  j["targets"] = p.targets.size();
  j["binding"] = p.binding.size();
  j["value"] = p.value;
  j["feasibility_residual"] = p.feasibility_residual;
  j["kkt_residual"] = p.kkt_residual;
  j["slackness_residual"] = p.slackness_residual;
  j["iterations"] = p.iterations;
  return j;
}

[[nodiscard]] inline json to_json(const CapacityProfile& p) {
  json rows = json::array();
  for (const auto& r : p.rows) {
    rows.push_back({{"lambda", r.lambda}, {"set_size", r.set_size}, {"binding", r.binding_size},
                    {"capacity", r.capacity}, {"kkt_residual", r.kkt_residual},
                    {"feasibility_residual", r.feasibility_residual}});
  }
  return {{"rows", rows}, {"non_increasing", p.non_increasing}, {"max_residual", p.max_residual}};
}

}  // namespace bitree
