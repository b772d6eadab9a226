#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bitree/cli.hpp"

int main(int argc, char** argv) {
  bitree::RunConfig cfg;
  CLI::App app{"Potentials, majorants and capacity on dyadic bi-trees"};
  app.footer(bitree::kCsvHelp);
  app.require_subcommand(1);

  std::string format = "json";
  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "Seed for every randomized suite")->capture_default_str();
    sub->add_option("--out", cfg.out, "Report path (written atomically); stdout if omitted");
    sub->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
    sub->add_flag("--metadata", cfg.metadata, "Add a metadata block with a timestamp");
  };
  auto shape = [&](CLI::App* sub) {
    sub->add_option("--depth", cfg.depth1, "Tree depth (first coordinate)")->check(CLI::Range(0, 12))->capture_default_str();
    sub->add_option("--depth2", cfg.depth2, "Tree depth of the second coordinate (default: --depth)")->check(CLI::Range(0, 12));
  };

  auto* self = app.add_subcommand("selfcheck", "Operator oracles, energy identities, simple-tree maximum principle");
  common(self);
  self->add_option("--max-depth", cfg.max_depth, "Largest depth for the indicator-basis oracle check (0-3)")
      ->check(CLI::Range(0, 3))->capture_default_str();
  self->add_option("--trials", cfg.trials, "Random cases per suite")->check(CLI::PositiveNumber);

  auto* pot = app.add_subcommand("potential", "Build a potential bundle and report it");
  common(pot);
  shape(pot);
  pot->add_option("--kind", cfg.kind, "uniform_leaves, sparse_random, diagonal or single_node");
  pot->add_option("--delta", cfg.delta, "Also report the truncation at this level")->check(CLI::PositiveNumber);

  auto* maj = app.add_subcommand("majorant", "Majorant certification sweep and tree/kernel lemmas");
  common(maj);
  shape(maj);
  maj->add_option("--trials", cfg.trials, "Random (mu, delta, lambda) trials")->check(CLI::PositiveNumber);
  maj->add_option("--delta", cfg.delta, "Single certificate: truncation level");
  maj->add_option("--lambda", cfg.lambda, "Single certificate: lambda (needs delta <= lambda / 6)");
  maj->add_option("--kind", cfg.kind, "Measure kind for a single certificate");

  auto* sc = app.add_subcommand("scaling", "Energy ladders, two-scale, surrogate and power-type bounds");
  common(sc);
  shape(sc);
  sc->add_option("--ladder", cfg.ladder, "lo:hi:steps, delta as a multiple of A = energy / mass");
  sc->add_option("--tau", cfg.tau, "Single tau in (0, 1) instead of {0.1, 0.25, 0.5}");
  sc->add_option("--kind", cfg.kind, "Restrict to one measure kind");
  sc->add_option("--trials", cfg.trials, "Seeds per randomized measure kind")->check(CLI::PositiveNumber);

  auto* ce = app.add_subcommand("counterexample", "The N-coarse measure: flatness, blow-up, counting");
  common(ce);
  ce->add_option("--M", cfg.m_range, "M or lo:hi (N = 2^M), default 5:10");
  ce->add_option("--delta", cfg.delta, "Mass scale delta (default 1)");
  ce->add_option("--samples", cfg.samples, "Random support leaves per quadrant")->check(CLI::PositiveNumber)->capture_default_str();
  ce->add_option("--dense-max", cfg.dense_max, "Dense cross-check for M up to this (0 disables)")->check(CLI::Range(0, 3))->capture_default_str();

  auto* cap = app.add_subcommand("capacity", "Capacity solver checks and decay of cap{V >= lambda}");
  common(cap);
  cap->add_option("--M", cfg.m_range, "Dense counterexample instance, 2 or 3 (default 2)");
  cap->add_option("--trials", cfg.trials, "Random problems compared with the active-set oracle")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : bitree::kExitUsage;
  }
  cfg.command = app.get_subcommands().front()->get_name();
  cfg.format = format == "csv" ? bitree::Format::csv : bitree::Format::json;
  return bitree::run(cfg, std::cout, std::cerr);
}
