#pragma once

// Command dispatch for the bitree tool: a RunConfig in, a report and an exit
// status out. Exit 0: all asserted certificates pass; 1: some certificate
// failed; 2: invalid parameters.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "suites.hpp"

namespace bitree {

enum class Format { json, csv };

struct RunConfig {
  std::string command;
  int depth1 = 5;
  std::optional<int> depth2;  ///< defaults to depth1
  std::uint64_t seed = 1;
  std::optional<double> delta;
  std::optional<double> lambda;
  std::optional<double> tau;
  std::optional<std::string> m_range;  ///< "M" or "lo:hi"; per-command default
  std::optional<int> trials;
  std::optional<std::string> ladder;  ///< "lo:hi:steps", relative to A = energy / mass
  int max_depth = 2;                  ///< selfcheck basis depth
  std::optional<std::string> kind;
  int samples = 16;
  int dense_max = 3;
  std::string out;  ///< empty: stdout
  Format format = Format::json;
  bool metadata = false;
};

inline constexpr int kExitPass = 0;
inline constexpr int kExitCertificateFailure = 1;
inline constexpr int kExitUsage = 2;

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) parts.push_back(cur);
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

template <class T>
T parse_number(const std::string& s, const char* what) {
  std::istringstream is(s);
  T v{};
  is >> v;
  if (is.fail() || !is.eof()) throw invalid_input(std::string("cannot parse ") + what + " from '" + s + "'");
  return v;
}

}  // namespace detail

[[nodiscard]] inline std::pair<int, int> parse_m_range(const std::string& s) {
  const auto parts = detail::split(s, ':');
  if (parts.size() == 1) {
    const int m = detail::parse_number<int>(parts[0], "M");
    return {m, m};
  }
  if (parts.size() == 2) {
    return {detail::parse_number<int>(parts[0], "M"), detail::parse_number<int>(parts[1], "M")};
  }
  throw invalid_input("--M expects M or lo:hi");
}

[[nodiscard]] inline std::vector<double> parse_ladder(const std::string& s) {
  const auto parts = detail::split(s, ':');
  if (parts.size() != 3) throw invalid_input("--ladder expects lo:hi:steps");
  return geometric_ladder(detail::parse_number<double>(parts[0], "ladder lo"),
                          detail::parse_number<double>(parts[1], "ladder hi"),
                          detail::parse_number<int>(parts[2], "ladder steps"));
}

inline const char* kCsvHelp =
    "CSV columns (--format csv):\n"
    "  potential       slot,level1,index1,level2,index2,mu,istar_mu,potential\n"
    "  majorant        trial,depth1,depth2,delta,lambda,energy_ratio,strong_margin_over_lambda,\n"
    "                  harmonic_ratio,ray_bases,covered_bases,pass\n"
    "  scaling         mu_id,delta,energy_delta,bound_surrogate,bound_tau_<tau>...\n"
    "  counterexample  M,N,delta,V_at_omega0,max_on_support_samples,ratio,flatness_pass,blowup_pass\n"
    "  capacity        lambda,set_size,binding,capacity,kkt_residual,feasibility_residual\n"
    "Environment: BITREE_THREADS sets the worker count (default: all cores).\n";

namespace detail {

inline json config_json(const RunConfig& c) {
  auto opt = [](const auto& o) { return o ? json(*o) : json(nullptr); };
  return {{"command", c.command},
          {"depth", c.depth1},
          {"depth2", c.depth2.value_or(c.depth1)},
          {"seed", c.seed},
          {"delta", opt(c.delta)},
          {"lambda", opt(c.lambda)},
          {"tau", opt(c.tau)},
          {"M", opt(c.m_range)},
          {"trials", opt(c.trials)},
          {"ladder", opt(c.ladder)},
          {"max_depth", c.max_depth},
          {"kind", opt(c.kind)},
          {"samples", c.samples},
          {"dense_max", c.dense_max},
          {"format", c.format == Format::json ? "json" : "csv"}};
}

inline BiShape config_shape(const RunConfig& c) {
  const BiShape shape(c.depth1, c.depth2.value_or(c.depth1));
  if (shape.size() > (std::size_t{1} << 22)) throw invalid_input("depths too large for a dense bi-tree");
  return shape;
}

inline std::string potential_csv(const PotentialBundle<double>& b) {
  std::ostringstream os;
  os.precision(17);
  os << "slot,level1,index1,level2,index2,mu,istar_mu,potential\n";
  for (std::size_t s = 0; s < b.mu.size(); ++s) {
    const BiNodeRef n = from_slot(b.shape(), s);
    os << s << ',' << n.first.level << ',' << n.first.index << ',' << n.second.level << ','
       << n.second.index << ',' << b.mu.at_slot(s) << ',' << b.istar_mu.at_slot(s) << ','
       << b.potential.at_slot(s) << '\n';
  }
  return os.str();
}

inline std::vector<SuiteResult> run_selfcheck(const RunConfig& c) {
  OperatorSuiteConfig ops;
  ops.basis_max_depth = c.max_depth;
  ops.seed = c.seed;
  if (c.trials) ops.random_cases = *c.trials;
  TreeSuiteConfig tree;
  tree.seed = c.seed;
  if (c.trials) tree.cases = *c.trials;
  IdentitySuiteConfig ids;
  ids.seed = c.seed;

  SuiteResult witness;
  witness.name = "bi_violation_witness";
  const auto b = build_potential(bi_violation_example());
  const Certificate v = find_bi_violation(b.istar_mu);
  witness.pass = !v.pass;  // a violation must be found
  witness.report = to_json(v);
  witness.report["pass"] = witness.pass;
  return {run_operator_suite(ops), run_identity_suite(ids), run_tree_suite(tree), witness};
}

inline std::vector<SuiteResult> run_potential(const RunConfig& c) {
  const BiShape shape = config_shape(c);
  const MeasureKind kind = parse_measure_kind(c.kind.value_or("sparse_random"));
  const auto b = build_potential(generate_measure(kind, shape, c.seed));
  SuiteResult r;
  r.name = "potential";
  r.report = summary_json(b);
  r.report["kind"] = to_string(kind);
  const double by_integral = energy_by_integral(b);
  r.report["energy_by_integral"] = by_integral;
  r.pass = geq_within(b.energy, by_integral, kCertSlack) && leq_within(b.energy, by_integral, kCertSlack);
  if (c.delta) {
    const auto t = build_truncated(b, *c.delta);
    r.report["delta"] = *c.delta;
    r.report["level_set_size"] = t.level_set.count();
    r.report["truncated_energy"] = t.truncated_energy;
    r.report["max_truncated_potential"] = max_value(t.truncated_potential);
  }
  r.report["max_principle"] = to_json(find_bi_violation(b.istar_mu));
  r.report["pass"] = r.pass;
  r.csv = potential_csv(b);
  return {r};
}

inline std::vector<SuiteResult> run_majorant(const RunConfig& c) {
  if (c.delta || c.lambda) {
    if (!c.delta || !c.lambda) throw invalid_input("majorant: give both --delta and --lambda, or neither");
    const MeasureKind kind = parse_measure_kind(c.kind.value_or("sparse_random"));
    const MajorantCertificate cert =
        build_majorant({generate_measure(kind, config_shape(c), c.seed), *c.delta, *c.lambda});
    SuiteResult r;
    r.name = "majorant";
    r.pass = cert.all_pass();
    r.report = to_json(cert);
    r.report["pass"] = r.pass;
    return {r};
  }
  MajorantSuiteConfig m;
  m.seed = c.seed;
  m.max_depth = c.depth1;
  if (c.trials) m.trials = *c.trials;
  LemmaSuiteConfig l;
  l.seed = c.seed;
  return {run_majorant_suite(m), run_lemma_suite(l)};
}

inline std::vector<SuiteResult> run_scaling(const RunConfig& c) {
  ScalingSuiteConfig s;
  (void)config_shape(c);
  s.depth1 = c.depth1;
  s.depth2 = c.depth2.value_or(c.depth1);
  s.seed = c.seed;
  if (c.ladder) s.relative_deltas = parse_ladder(*c.ladder);
  if (c.tau) {
    if (!(*c.tau > 0.0 && *c.tau < 1.0)) throw invalid_input("--tau must lie in (0, 1)");
    s.taus = {*c.tau};
  }
  if (c.kind) s.kinds = {parse_measure_kind(*c.kind)};
  if (c.trials) s.replicates = *c.trials;
  return {run_scaling_suite(s)};
}

inline std::vector<SuiteResult> run_counterexample(const RunConfig& c) {
  CounterexampleSuiteConfig s;
  std::tie(s.m_lo, s.m_hi) = parse_m_range(c.m_range.value_or("5:10"));
  if (s.m_hi > 14) throw invalid_input("--M above 14 is out of range");
  if (c.delta) s.delta = *c.delta;
  if (!(s.delta > 0.0)) throw invalid_input("--delta must be > 0");
  s.samples = c.samples;
  s.seed = c.seed;
  s.dense_m_max = c.dense_max;
  if (s.dense_m_max > 3) throw invalid_input("--dense-max above 3 does not fit in memory");
  return {run_counterexample_suite(s)};
}

inline std::vector<SuiteResult> run_capacity(const RunConfig& c) {
  CapacitySuiteConfig s;
  const auto [lo, hi] = parse_m_range(c.m_range.value_or("2"));
  if (lo != hi) throw invalid_input("capacity: --M takes a single value");
  s.M = lo;
  s.seed = c.seed;
  if (c.trials) s.oracle_cases = *c.trials;
  return {run_capacity_suite(s)};
}

inline void write_atomically(const std::string& path, const std::string& payload) {
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw invalid_input("cannot open '" + tmp.string() + "' for writing");
    os << payload;
    os.flush();
    if (!os) throw invalid_input("cannot write '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw invalid_input("cannot move report to '" + path + "': " + ec.message());
  }
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace detail

[[nodiscard]] inline int run(const RunConfig& c, std::ostream& out, std::ostream& err) {
  std::vector<SuiteResult> results;
  try {
    if (c.seed == 0) throw invalid_input("--seed must be positive");
    if (c.command == "selfcheck") {
      results = detail::run_selfcheck(c);
    } else if (c.command == "potential") {
      results = detail::run_potential(c);
    } else if (c.command == "majorant") {
      results = detail::run_majorant(c);
    } else if (c.command == "scaling") {
      results = detail::run_scaling(c);
    } else if (c.command == "counterexample") {
      results = detail::run_counterexample(c);
    } else if (c.command == "capacity") {
      results = detail::run_capacity(c);
    } else {
      throw invalid_input("unknown command '" + c.command + "'");
    }
  } catch (const invalid_input& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const hypothesis_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  bool pass = true;
  json suites = json::object();
  json failed = json::array();
  for (const auto& r : results) {
    pass = pass && r.pass;
    suites[r.name] = r.report;
    if (!r.pass) failed.push_back(r.name);
  }

  std::string payload;
  if (c.format == Format::csv) {
    for (const auto& r : results) payload += r.csv;
    if (payload.empty()) {
      err << "error: command '" << c.command << "' has no CSV view\n";
      return kExitUsage;
    }
  } else {
    json report = {{"schema", 1},
                   {"command", c.command},
                   {"config", detail::config_json(c)},
                   {"pass", pass},
                   {"failed", failed},
                   {"results", suites}};
    if (c.metadata) report["metadata"] = {{"timestamp", detail::utc_timestamp()}, {"threads", worker_count()}};
    payload = report.dump(2) + "\n";
  }

  if (c.out.empty()) {
    out << payload;
  } else {
    try {
      detail::write_atomically(c.out, payload);
    } catch (const invalid_input& e) {
      err << "error: " << e.what() << '\n';
      return kExitUsage;
    }
  }
  if (!pass) {
    for (const auto& r : results) {
      if (!r.pass) err << "certificate failed: " << r.name << "\n" << r.report.dump(2) << '\n';
    }
    return kExitCertificateFailure;
  }
  return kExitPass;
}

}  // namespace bitree
