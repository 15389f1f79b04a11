// Copyright 2026 The qldp Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: one subcommand per experiment kind plus `run`,
// which takes the kind from the config file.
//
// Exit codes: 0 all checks passed, 1 a tolerance check failed,
//             2 usage or configuration error, 3 internal or resource error.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "qldp/harness/config.hpp"
#include "qldp/harness/experiment.hpp"
#include "qldp/harness/record.hpp"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string format;
  std::vector<std::string> sets;
  bool quiet = false;
};

void add_common(CLI::App* app, Options& o) {
  app->add_option("--config,-c", o.config, "key = value experiment file");
  app->add_option("--out,-o", o.out, "output directory (overrides `out`)");
  app->add_option("--seed", o.seed, "RNG seed (overrides `seed`)");
  app->add_option("--format", o.format, "csv | json | both")->check(CLI::IsMember({"csv", "json", "both"}));
  app->add_option("--set", o.sets, "extra key=value override, repeatable");
  app->add_flag("--quiet,-q", o.quiet, "do not print the check summary");
}

int run(const Options& o, std::optional<std::string> kind) {
  using namespace qldp::harness;
  std::vector<std::pair<std::string, std::string>> overrides;
  if (kind) overrides.emplace_back("kind", *kind);
  for (const std::string& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw qldp::ConfigError("--set", "expected key=value, got '" + s + "'");
    overrides.emplace_back(detail::trim(s.substr(0, eq)), detail::trim(s.substr(eq + 1)));
  }
  if (o.seed) overrides.emplace_back("seed", std::to_string(*o.seed));
  if (!o.format.empty()) overrides.emplace_back("format", o.format);
  if (!o.out.empty()) overrides.emplace_back("out", o.out);

  ExperimentConfig cfg = o.config.empty() ? parse_config("", overrides) : load_config(o.config, overrides);
  const ExperimentRecord rec = run_experiment(cfg);
  const EmittedFiles files = emit(rec, cfg.out_dir, cfg.stem(), cfg.format);

  if (!o.quiet) {
    for (const Check& c : rec.checks) {
      std::printf("%-4s %-34s value=%-12.6g %s", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.value, c.relation.c_str());
      // Interval relations already spell out their bounds.
      if (c.relation.rfind("in ", 0) != 0) std::printf(" %.6g", c.threshold);
      std::printf("\n");
    }
    if (!rec.complete) std::printf("INCOMPLETE %s\n", rec.failure.c_str());
    if (!files.csv.empty()) std::printf("wrote %s\n", files.csv.string().c_str());
    if (!files.json.empty()) std::printf("wrote %s\n", files.json.string().c_str());
  }
  if (!rec.complete) return 3;
  return rec.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Large-deviation experiments for ideal quantum gases"};
  app.require_subcommand(1);
  Options opts;
  std::optional<std::string> kind;

  CLI::App* run_cmd = app.add_subcommand("run", "run the experiment described by --config");
  add_common(run_cmd, opts);
  for (std::string_view k : qldp::harness::kKindNames) {
    CLI::App* sub = app.add_subcommand(std::string(k), "run a '" + std::string(k) + "' experiment");
    add_common(sub, opts);
    sub->callback([&kind, k] { kind = std::string(k); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    return run(opts, kind);
  } catch (const qldp::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
