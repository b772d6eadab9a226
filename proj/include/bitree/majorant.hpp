#pragma once

// The majorant phi dominating the truncated potential, with certifiers for
// its three properties:
//
//   majorization   II phi >= V_delta / 4 where V_delta >= 40 lambda, and the
//                  strong form II phi + 10 lambda >= V_delta / 2 everywhere,
//                  and the local form II phi >= (19/20) V_delta where
//                  V_delta >= 20 lambda;
//   support        supp phi inside E_{3 lambda} \ E_delta;
//   energy         sum phi^2 <= A0 (delta / 3 lambda) E_delta[mu], A0 = 36.
//
// With m = 1_{E_delta} II* mu and n = II* mu,
//   phi = (I_1 m * I_2 n + I_2 m * I_1 n) * 1_{E_{3 lambda} \ E_delta} / lambda.
//
// A0 = 36 comes from (a + b)^2 <= 2a^2 + 2b^2 and the per-term bound
// (2 / lambda^2) * 3 delta lambda * E_delta for each of the two terms.
//
// Also here: standalone verifiers for the superadditive tree lemma and the
// positive-kernel energy lemma used in the energy estimate.

#include <algorithm>
#include <cmath>
#include <span>
#include <type_traits>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "certificate.hpp"
#include "grid_fn.hpp"
#include "hardy_ops.hpp"
#include "potentials.hpp"
#include "tree_core.hpp"

namespace bitree {

inline constexpr double kEnergyConstantA0 = 36.0;

struct MajorantInput {
  BiFn<double> mu;
  double delta = 0.0;
  double lambda = 0.0;
};

/// Outcome of the majorization checks over one (II phi, V_delta) pair.
struct MajorizationCheck {
  bool claim1_pass = true;         ///< quarter bound on {V_delta >= 40 lambda}
  bool claim1_strong_pass = true;  ///< II phi + 10 lambda >= V_delta / 2
  bool local_pass = true;          ///< 19/20 bound on {V_delta >= 20 lambda}
  std::size_t domain40_size = 0;
  std::size_t domain20_size = 0;
  std::optional<BiNodeRef> worst_claim1;
  std::optional<BiNodeRef> worst_strong;
  std::optional<BiNodeRef> worst_local;
  double strong_min_margin = std::numeric_limits<double>::infinity();
};

/// Summary of the ray/segment structure behind the local bound.
struct RaySweep {
  std::size_t bases = 0;  ///< bases with V > 3 lambda (non-empty rays)
  std::size_t contiguity_failures = 0;
  std::size_t covered_bases = 0;  ///< bases where (r, l) lies in E_delta
  std::size_t covering_failures = 0;
  std::size_t bases20 = 0;  ///< bases with V_delta >= 20 lambda
  std::size_t bases20_not_covered = 0;
  std::optional<BiNodeRef> first_failure;
};

struct MajorantCertificate {
  double delta = 0.0;
  double lambda = 0.0;
  BiFn<double> phi;
  BiFn<double> potential;  ///< V, kept to re-derive the support sets

  bool claim1_pass = false;
  bool claim1_strong_pass = false;
  bool local_pass = false;
  bool claim2_pass = false;
  bool claim3_pass = false;
  double claim3_ratio = 0.0;
  double phi_energy = 0.0;
  double truncated_energy = 0.0;

  MajorizationCheck majorization;
  std::optional<BiNodeRef> worst_support;
  RaySweep rays;

  [[nodiscard]] bool all_pass() const {
    return claim1_pass && claim1_strong_pass && local_pass && claim2_pass && claim3_pass &&
           rays.contiguity_failures == 0 && rays.covering_failures == 0 &&
           rays.bases20_not_covered == 0;
  }
};

/// Pure check of the three majorization statements at every node.
[[nodiscard]] inline MajorizationCheck check_majorization(const BiFn<double>& iphi,
                                                          const BiFn<double>& vdelta,
                                                          double lambda,
                                                          double slack = kCertSlack) {
  if (!(iphi.shape() == vdelta.shape())) throw invalid_input("check_majorization: shape mismatch");
  MajorizationCheck r;
  double worst1 = std::numeric_limits<double>::infinity();
  double worst_local = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < iphi.size(); ++s) {
    const double ip = iphi.at_slot(s);
    const double vd = vdelta.at_slot(s);
    if (vd >= 40.0 * lambda) {
      ++r.domain40_size;
      if (!geq_within(ip, 0.25 * vd, slack)) r.claim1_pass = false;
      if (ip - 0.25 * vd < worst1) {
        worst1 = ip - 0.25 * vd;
        r.worst_claim1 = from_slot(iphi.shape(), s);
      }
    }
    if (vd >= 20.0 * lambda) {
      ++r.domain20_size;
      if (!geq_within(ip, 0.95 * vd, slack)) r.local_pass = false;
      if (ip - 0.95 * vd < worst_local) {
        worst_local = ip - 0.95 * vd;
        r.worst_local = from_slot(iphi.shape(), s);
      }
    }
    const double margin = ip + 10.0 * lambda - 0.5 * vd;
    if (!geq_within(ip + 10.0 * lambda, 0.5 * vd, slack)) r.claim1_strong_pass = false;
    if (margin < r.strong_min_margin) {
      r.strong_min_margin = margin;
      r.worst_strong = from_slot(iphi.shape(), s);
    }
  }
  return r;
}

/// Ray structure at one base node (beta0, alpha0):
///   L = second-coordinate ancestors alpha of alpha0 with V(beta0, alpha) > 3 lambda,
///   R = first-coordinate ancestors beta of beta0 with V(beta, alpha0) > 3 lambda.
/// Both are expected to be segments starting at the base; top_l / top_r are
/// their coarsest elements.
struct RayDiagnostics {
  BiNodeRef base;
  bool l_contiguous = true;
  bool r_contiguous = true;
  std::optional<NodeRef> top_l;  ///< the segment end in the second coordinate
  std::optional<NodeRef> top_r;  ///< the segment end in the first coordinate
  bool covered = false;          ///< (top_r, top_l) lies in E_delta
  double partial_sums = 0.0;     ///< sum_L I_1 m(beta0, .) + sum_R I_2 m(., alpha0)
  double vdelta = 0.0;
};

namespace detail {

struct MajorantFields {
  BiFn<double> m, n, i1m, i2m, i1n, i2n;
};

inline MajorantFields majorant_fields(const PotentialBundle<double>& b,
                                      const TruncatedBundle<double>& t) {
  MajorantFields f;
  f.n = b.istar_mu;
  f.m = multiply(t.level_set.indicator, b.istar_mu);
  f.i1m = up_sum_1(f.m);
  f.i2m = up_sum_2(f.m);
  f.i1n = up_sum_1(f.n);
  f.i2n = up_sum_2(f.n);
  return f;
}

}  // namespace detail

[[nodiscard]] inline RayDiagnostics ray_diagnostics(const PotentialBundle<double>& b,
                                                    const TruncatedBundle<double>& t,
                                                    const BiFn<double>& i1m,
                                                    const BiFn<double>& i2m, double lambda,
                                                    BiNodeRef base) {
  RayDiagnostics d;
  d.base = base;
  d.vdelta = t.truncated_potential[base];
  const double cut = 3.0 * lambda;

  // Walk each chain from the base upwards; membership must be a prefix.
  bool inside = true;
  for (int l = base.second.level; l >= 0; --l) {
    const BiNodeRef node{base.first, base.second.ancestor_at(l)};
    const bool in_l = b.potential[node] > cut;
    if (in_l && !inside) d.l_contiguous = false;
    if (in_l && inside) {
      d.top_l = node.second;
      d.partial_sums += i1m[node];
    }
    inside = inside && in_l;
  }
  inside = true;
  for (int l = base.first.level; l >= 0; --l) {
    const BiNodeRef node{base.first.ancestor_at(l), base.second};
    const bool in_r = b.potential[node] > cut;
    if (in_r && !inside) d.r_contiguous = false;
    if (in_r && inside) {
      d.top_r = node.first;
      d.partial_sums += i2m[node];
    }
    inside = inside && in_r;
  }
  if (d.top_l && d.top_r) d.covered = t.level_set.contains(BiNodeRef{*d.top_r, *d.top_l});
  return d;
}

/// Runs ray_diagnostics at every base with V > 3 lambda. Where (r, l) lies in
/// E_delta the two partial sums must cover V_delta(base) - delta; where
/// V_delta >= 20 lambda that covering case must be the one that occurs.
[[nodiscard]] inline RaySweep sweep_rays(const PotentialBundle<double>& b,
                                         const TruncatedBundle<double>& t,
                                         const BiFn<double>& i1m, const BiFn<double>& i2m,
                                         double lambda, double slack = kCertSlack) {
  RaySweep sweep;
  for_each_node(b.shape(), [&](BiNodeRef base) {
    if (!(b.potential[base] > 3.0 * lambda)) return;
    ++sweep.bases;
    const RayDiagnostics d = ray_diagnostics(b, t, i1m, i2m, lambda, base);
    bool failed = false;
    if (!d.l_contiguous || !d.r_contiguous) {
      ++sweep.contiguity_failures;
      failed = true;
    }
    if (d.covered) {
      ++sweep.covered_bases;
      if (!geq_within(d.partial_sums, d.vdelta - t.delta, slack)) {
        ++sweep.covering_failures;
        failed = true;
      }
    }
    if (d.vdelta >= 20.0 * lambda) {
      ++sweep.bases20;
      if (!d.covered) {
        ++sweep.bases20_not_covered;
        failed = true;
      }
    }
    if (failed && !sweep.first_failure) sweep.first_failure = base;
  });
  return sweep;
}

/// Checks supp phi inside {delta < V <= 3 lambda}.
[[nodiscard]] inline bool verify_support(MajorantCertificate& cert) {
  cert.claim2_pass = true;
  cert.worst_support.reset();
  for (std::size_t s = 0; s < cert.phi.size(); ++s) {
    if (cert.phi.at_slot(s) < 0.0) {
      cert.claim2_pass = false;
    } else if (cert.phi.at_slot(s) > 0.0) {
      const double v = cert.potential.at_slot(s);
      if (!(v > cert.delta && v <= 3.0 * cert.lambda)) cert.claim2_pass = false;
    }
    if (!cert.claim2_pass) {
      cert.worst_support = from_slot(cert.phi.shape(), s);
      break;
    }
  }
  return cert.claim2_pass;
}

namespace detail {

inline void require_matching(const MajorantCertificate& cert, const PotentialBundle<double>& b,
                             const TruncatedBundle<double>& t) {
  if (!(cert.phi.shape() == b.shape()) || !(t.truncated_potential.shape() == b.shape())) {
    throw invalid_input("majorant: certificate and bundles have different shapes");
  }
  if (t.delta != cert.delta) throw invalid_input("majorant: truncation level differs from delta");
  if (cert.potential.values().size() != b.potential.values().size() ||
      !std::equal(cert.potential.values().begin(), cert.potential.values().end(),
                  b.potential.values().begin())) {
    throw invalid_input("majorant: certificate was built from a different measure");
  }
}

}  // namespace detail

[[nodiscard]] inline bool verify_majorization(MajorantCertificate& cert,
                                              const PotentialBundle<double>& b,
                                              const TruncatedBundle<double>& t) {
  detail::require_matching(cert, b, t);
  const BiFn<double> iphi = up_sum_bi(cert.phi);
  cert.majorization = check_majorization(iphi, t.truncated_potential, cert.lambda);
  cert.claim1_pass = cert.majorization.claim1_pass;
  cert.claim1_strong_pass = cert.majorization.claim1_strong_pass;
  cert.local_pass = cert.majorization.local_pass;
  return cert.claim1_pass && cert.claim1_strong_pass && cert.local_pass;
}

/// ratio = (sum phi^2) * 3 lambda / (delta * E_delta); pass iff ratio <= A0.
/// A vanishing truncated energy gives ratio 0.
[[nodiscard]] inline bool verify_energy(MajorantCertificate& cert,
                                        const TruncatedBundle<double>& t,
                                        double a0 = kEnergyConstantA0) {
  if (t.delta != cert.delta) throw invalid_input("verify_energy: truncation level differs");
  cert.phi_energy = inner(cert.phi, cert.phi);
  cert.truncated_energy = t.truncated_energy;
  if (t.truncated_energy > 0.0) {
    cert.claim3_ratio = cert.phi_energy * 3.0 * cert.lambda / (cert.delta * t.truncated_energy);
    cert.claim3_pass = leq_within(cert.claim3_ratio, a0, kCertSlack);
  } else {
    cert.claim3_ratio = 0.0;
    cert.claim3_pass = cert.phi_energy == 0.0;
  }
  return cert.claim3_pass;
}

/// Builds phi and fills every certificate field.
[[nodiscard]] inline MajorantCertificate build_majorant(const MajorantInput& in) {
  if (!(in.delta > 0.0) || !(in.lambda > 0.0)) {
    throw invalid_input("build_majorant: delta and lambda must be positive");
  }
  if (in.delta > in.lambda / 6.0) {
    throw hypothesis_error("build_majorant: requires delta <= lambda / 6");
  }
  const PotentialBundle<double> b = build_potential(in.mu);
  const TruncatedBundle<double> t = build_truncated(b, in.delta);
  const detail::MajorantFields f = detail::majorant_fields(b, t);

  MajorantCertificate cert;
  cert.delta = in.delta;
  cert.lambda = in.lambda;
  cert.potential = b.potential;
  cert.phi = BiFn<double>(b.shape());
  for (std::size_t s = 0; s < cert.phi.size(); ++s) {
    const double v = b.potential.at_slot(s);
    if (v > in.delta && v <= 3.0 * in.lambda) {
      cert.phi.at_slot(s) = (f.i1m.at_slot(s) * f.i2n.at_slot(s) +
                             f.i2m.at_slot(s) * f.i1n.at_slot(s)) /
                            in.lambda;
    }
  }
  (void)verify_majorization(cert, b, t);
  (void)verify_support(cert);
  (void)verify_energy(cert, t);
  cert.rays = sweep_rays(b, t, f.i1m, f.i2m, in.lambda);
  return cert;
}

[[nodiscard]] inline json to_json(const MajorantCertificate& c) {
  auto node = [](const std::optional<BiNodeRef>& n) { return n ? to_json(*n) : json(nullptr); };
  json j;
  j["delta"] = c.delta;
  j["lambda"] = c.lambda;
  j["claim1_pass"] = c.claim1_pass;
  j["claim1_strong_pass"] = c.claim1_strong_pass;
  j["local_pass"] = c.local_pass;
  j["claim2_pass"] = c.claim2_pass;
  j["claim3_pass"] = c.claim3_pass;
  j["claim3_ratio"] = c.claim3_ratio;
  j["phi_energy"] = c.phi_energy;
  j["truncated_energy"] = c.truncated_energy;
  j["domain40_size"] = c.majorization.domain40_size;
  j["domain20_size"] = c.majorization.domain20_size;
  j["strong_min_margin"] = c.majorization.strong_min_margin;
  j["worst_claim1"] = node(c.majorization.worst_claim1);
  j["worst_strong"] = node(c.majorization.worst_strong);
  j["worst_local"] = node(c.majorization.worst_local);
  j["worst_support"] = node(c.worst_support);
  j["rays"] = {{"bases", c.rays.bases},
               {"contiguity_failures", c.rays.contiguity_failures},
               {"covered_bases", c.rays.covered_bases},
               {"covering_failures", c.rays.covering_failures},
               {"bases20", c.rays.bases20},
               {"bases20_not_covered", c.rays.bases20_not_covered}};
  return j;
}

// --- superadditive tree lemma ----------------------------------------------------

struct SuperadditiveReport {
  bool superadditive = true;   ///< g(b) >= g(b+) + g(b-) at every internal node
  bool potential_bound = true;  ///< Ih <= lambda on supp g
  Certificate conclusion;       ///< I*(gh) <= lambda g, worst node
  Certificate sharper;          ///< I*(gh)(b) <= g(b) max_{a <= b} Ih(a), worst node

  [[nodiscard]] bool preconditions_hold() const { return superadditive && potential_bound; }
  [[nodiscard]] std::string status() const {
    if (!superadditive) return "precondition_failed:superadditive";
    if (!potential_bound) return "precondition_failed:potential_bound";
    if (!conclusion.pass || !sharper.pass) return "conclusion_failed";
    return "ok";
  }
};

template <Scalar T>
[[nodiscard]] bool is_superadditive(const TreeFn<T>& g) {
  const std::size_t internal = TreeShape::first_slot(g.shape().depth);
  for (std::size_t s = 0; s < internal; ++s) {
    if (g.at_slot(s) < g.at_slot(2 * s + 1) + g.at_slot(2 * s + 2)) return false;
  }
  return true;
}

/// Exact comparison for integer weights, `slack` relative otherwise.
template <Scalar T>
[[nodiscard]] SuperadditiveReport verify_superadditive_bound(const TreeFn<T>& g,
                                                             const TreeFn<T>& h, double lambda,
                                                             double slack = kCertSlack) {
  require_nonnegative(g, "verify_superadditive_bound(g)");
  require_nonnegative(h, "verify_superadditive_bound(h)");
  if (!(g.shape() == h.shape())) throw invalid_input("verify_superadditive_bound: shape mismatch");
  const double rel = std::is_integral_v<T> ? 0.0 : slack;

  SuperadditiveReport r;
  r.superadditive = is_superadditive(g);
  const TreeFn<T> ih = up_sum_tree(h);
  for (std::size_t s = 0; s < g.size(); ++s) {
    if (g.at_slot(s) != T{} && !leq_within(static_cast<double>(ih.at_slot(s)), lambda, rel)) {
      r.potential_bound = false;
    }
  }

  const TreeFn<T> lhs = down_sum_tree(multiply(g, h));
  // Max of Ih over descendants-or-self, bottom-up.
  TreeFn<T> below = ih;
  const std::size_t internal = TreeShape::first_slot(g.shape().depth);
  for (std::size_t s = internal; s-- > 0;) {
    below.at_slot(s) = std::max({below.at_slot(s), below.at_slot(2 * s + 1), below.at_slot(2 * s + 2)});
  }

  r.conclusion.name = "superadditive_bound";
  r.sharper.name = "superadditive_bound_sharp";
  double worst = -std::numeric_limits<double>::infinity();
  double worst_sharp = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < g.size(); ++s) {
    const double l = static_cast<double>(lhs.at_slot(s));
    const double gv = static_cast<double>(g.at_slot(s));
    const double rhs = lambda * gv;
    const double rhs_sharp = gv * static_cast<double>(below.at_slot(s));
    if (!leq_within(l, rhs, rel)) r.conclusion.pass = false;
    if (!leq_within(l, rhs_sharp, rel)) r.sharper.pass = false;
    if (l - rhs > worst) {
      worst = l - rhs;
      r.conclusion.lhs = l;
      r.conclusion.rhs = rhs;
      r.conclusion.details["node"] = to_json(NodeRef::from_slot(s));
    }
    if (l - rhs_sharp > worst_sharp) {
      worst_sharp = l - rhs_sharp;
      r.sharper.lhs = l;
      r.sharper.rhs = rhs_sharp;
      r.sharper.details["node"] = to_json(NodeRef::from_slot(s));
    }
  }
  return r;
}

// --- positive-kernel energy lemma ---------------------------------------------------

/// Dense non-negative kernel K(x, y); (I f)(x) = sum_y K(x, y) f(y).
struct KernelMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  ///< row-major

  KernelMatrix() = default;
  KernelMatrix(std::size_t r, std::size_t c, std::vector<double> d)
      : rows(r), cols(c), data(std::move(d)) {
    if (data.size() != rows * cols) throw invalid_input("KernelMatrix: size mismatch");
  }
  [[nodiscard]] double operator()(std::size_t x, std::size_t y) const { return data[x * cols + y]; }
};

struct KernelEnergyReport {
  Certificate basic;   ///< sum (If)^2 g <= sup_{supp g} II* g * sum f^2
  Certificate strong;  ///< same with I replaced by I(1_{supp f} .)
};

[[nodiscard]] inline KernelEnergyReport verify_kernel_energy_bound(const KernelMatrix& k,
                                                                   std::span<const double> f,
                                                                   std::span<const double> g,
                                                                   double slack = kCertSlack) {
  if (f.size() != k.cols || g.size() != k.rows) {
    throw invalid_input("verify_kernel_energy_bound: dimension mismatch");
  }
  auto nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!std::all_of(k.data.begin(), k.data.end(), nonneg) ||
      !std::all_of(f.begin(), f.end(), nonneg) || !std::all_of(g.begin(), g.end(), nonneg)) {
    throw invalid_input("verify_kernel_energy_bound: entries must be non-negative");
  }

  std::vector<double> i_f(k.rows, 0.0), istar_g(k.cols, 0.0);
  for (std::size_t x = 0; x < k.rows; ++x) {
    for (std::size_t y = 0; y < k.cols; ++y) {
      i_f[x] += k(x, y) * f[y];
      istar_g[y] += k(x, y) * g[x];
    }
  }
  double lhs = 0.0, f_norm2 = 0.0;
  for (std::size_t x = 0; x < k.rows; ++x) lhs += i_f[x] * i_f[x] * g[x];
  for (double v : f) f_norm2 += v * v;

  double sup_basic = 0.0, sup_strong = 0.0;
  for (std::size_t x = 0; x < k.rows; ++x) {
    if (g[x] == 0.0) continue;
    double basic = 0.0, strong = 0.0;
    for (std::size_t y = 0; y < k.cols; ++y) {
      basic += k(x, y) * istar_g[y];
      if (f[y] != 0.0) strong += k(x, y) * istar_g[y];
    }
    sup_basic = std::max(sup_basic, basic);
    sup_strong = std::max(sup_strong, strong);
  }

  KernelEnergyReport r;
  r.basic = {"kernel_energy_bound", lhs, sup_basic * f_norm2, true, std::nullopt, json::object()};
  r.strong = {"kernel_energy_bound_strong", lhs, sup_strong * f_norm2, true, std::nullopt,
              json::object()};
  r.basic.pass = leq_within(r.basic.lhs, r.basic.rhs, slack);
  r.strong.pass = leq_within(r.strong.lhs, r.strong.rhs, slack);
  return r;
}

}  // namespace bitree
