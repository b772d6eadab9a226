// Acceptance run: one line per criterion, with wall time against its budget.
// Exit status is non-zero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "bitree/cli.hpp"

using namespace bitree;

namespace {

struct Criterion {
  int id;
  std::string title;
  double budget_s;
  std::function<std::pair<bool, std::string>()> check;
};

std::string brief(const SuiteResult& r) {
  if (r.pass) return "";
  std::string s = r.report.dump();
  return s.size() > 400 ? s.substr(0, 400) + "..." : s;
}

std::pair<bool, std::string> all_of(const std::vector<SuiteResult>& rs) {
  bool ok = true;
  std::string note;
  for (const auto& r : rs) {
    ok = ok && r.pass;
    if (!r.pass) note += r.name + ": " + brief(r) + " ";
  }
  return {ok, note};
}

std::string payload(const RunConfig& c, int& code) {
  std::ostringstream out, err;
  code = run(c, out, err);
  return out.str();
}

}  // namespace

int main() {
  std::vector<Criterion> criteria;

  criteria.push_back({1, "operator exactness (exhaustive small shapes, indicator basis, 1000 random)", 10.0, [] {
    OperatorSuiteConfig cfg;
    cfg.basis_max_depth = 2;
    cfg.random_cases = 1000;
    cfg.random_max_depth = 6;
    return all_of({run_operator_suite(cfg)});
  }});

  criteria.push_back({2, "simple-tree maximum principle and one-parameter bound (1000 cases)", 5.0, [] {
    TreeSuiteConfig cfg;
    cfg.cases = 1000;
    return all_of({run_tree_suite(cfg)});
  }});

  criteria.push_back({3, "majorant certification (500 trials, depths <= 5)", 60.0, [] {
    MajorantSuiteConfig cfg;
    cfg.trials = 500;
    cfg.max_depth = 5;
    const auto r = run_majorant_suite(cfg);
    auto res = all_of({r});
    if (res.first) {
      std::ostringstream s;
      s << "worst energy ratio " << r.report.value("worst_energy_ratio", json()).dump();
      res.second = s.str();
    }
    return res;
  }});

  criteria.push_back({4, "superadditive and kernel energy lemmas (1000 cases each)", 10.0, [] {
    LemmaSuiteConfig cfg;
    cfg.cases = 1000;
    return all_of({run_lemma_suite(cfg)});
  }});

  criteria.push_back({5, "scaling bounds: surrogate, power-type, two-scale", 120.0, [] {
    return all_of({run_scaling_suite(ScalingSuiteConfig{})});
  }});

  criteria.push_back({6, "dense cross-check of the sparse evaluator, M = 2 and 3", 30.0, [] {
    bool ok = true;
    std::ostringstream note;
    for (int M : {2, 3}) {
      const auto d = dense_crosscheck(M);
      ok = ok && d.mismatches == 0;
      note << "M=" << M << " nodes=" << d.nodes << " mismatches=" << d.mismatches << "  ";
    }
    return std::pair{ok, note.str()};
  }});

  criteria.push_back({7, "counterexample quantities, M = 5..10, delta = 1", 120.0, [] {
    CounterexampleSuiteConfig cfg;
    cfg.m_lo = 5;
    cfg.m_hi = 10;
    cfg.delta = 1.0;
    cfg.dense_m_max = 0;  // covered by criterion 6
    return all_of({run_counterexample_suite(cfg)});
  }});

  criteria.push_back({8, "capacity solver: closed forms, residuals, monotone profile", 60.0, [] {
    return all_of({run_capacity_suite(CapacitySuiteConfig{})});
  }});

  criteria.push_back({9, "determinism: repeated runs and thread counts give identical payloads", 120.0, [] {
    std::vector<RunConfig> configs;
    for (const char* cmd : {"selfcheck", "majorant", "counterexample", "capacity", "scaling"}) {
      RunConfig c;
      c.command = cmd;
      c.seed = 7;
      c.depth1 = 3;
      if (c.command == "majorant") c.trials = 60;
      if (c.command == "counterexample") c.m_range = "5:6";
      if (c.command == "selfcheck") c.trials = 50;
      configs.push_back(c);
    }
    RunConfig csv;
    csv.command = "majorant";
    csv.trials = 40;
    csv.format = Format::csv;
    configs.push_back(csv);

    const char* saved = std::getenv("BITREE_THREADS");
    const std::string restore = saved ? saved : "";
    bool ok = true;
    std::string note;
    for (const auto& c : configs) {
      int c1 = 0, c2 = 0, c3 = 0;
      setenv("BITREE_THREADS", "1", 1);
      const auto a = payload(c, c1);
      setenv("BITREE_THREADS", "4", 1);
      const auto b = payload(c, c2);
      const auto d = payload(c, c3);
      const bool same = !a.empty() && a == b && b == d && c1 == 0 && c2 == 0 && c3 == 0;
      if (!same) note += c.command + " differs; ";
      ok = ok && same;
    }
    if (saved) setenv("BITREE_THREADS", restore.c_str(), 1); else unsetenv("BITREE_THREADS");
    return std::pair{ok, note};
  }});

  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    std::pair<bool, std::string> res;
    try {
      res = c.check();
    } catch (const std::exception& e) {
      res = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = res.first && in_time;
    failures += pass ? 0 : 1;
    std::printf("[%s] %d %s  (%.2f s, budget %.0f s)%s\n", pass ? "PASS" : "FAIL", c.id, c.title.c_str(),
                secs, c.budget_s, in_time ? "" : " over budget");
    if (!res.second.empty()) std::printf("       %s\n", res.second.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
