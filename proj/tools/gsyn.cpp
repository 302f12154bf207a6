// gsyn: batch front end for the consensus simulator. Subcommands mirror the
// library entry points: check-graph, run, fuzz, library, replay.

#include <CLI11.hpp>
#include <iostream>

#include "gsyn/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"granular-timing consensus protocols: checkers, simulator, verifier"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string trace_out;
  std::string family = "cft-gps";
  std::string name;
  uint64_t seed = 0;
  uint64_t count = 100;
  uint64_t index = 0;
  int64_t horizon = 0;
  bool seed_given = false;

  auto* check = app.add_subcommand("check-graph", "evaluate the solvability conditions");
  check->add_option("scenario", scenario_path, "scenario file")->required();

  auto* run = app.add_subcommand("run", "simulate a scenario and verify the trace");
  run->add_option("scenario", scenario_path, "scenario file")->required();
  run->add_option("--trace-out", trace_out, "write the trace to this path");
  run->add_option("--seed", seed, "override the scenario seed")
      ->each([&](const std::string&) { seed_given = true; });
  run->add_option("--horizon-override", horizon, "override the scenario horizon");

  auto* fuzz = app.add_subcommand("fuzz", "run seeded randomized scenarios");
  fuzz->add_option("--family", family, "cft-gps | cft-gas | bft-gps | bft-gas")->required();
  fuzz->add_option("--count", count, "number of scenarios");
  fuzz->add_option("--seed", seed, "fuzzer seed");

  auto* lib = app.add_subcommand("library", "list or print the named scenarios");
  lib->add_option("name", name, "print this scenario as a scenario file");

  auto* replay = app.add_subcommand("replay", "re-run one fuzz case by (seed, index)");
  replay->add_option("--family", family, "protocol family")->required();
  replay->add_option("--seed", seed, "fuzzer seed")->required();
  replay->add_option("--index", index, "case index")->required();
  replay->add_option("--trace-out", trace_out, "write the trace to this path");

  CLI11_PARSE(app, argc, argv);

  if (check->parsed()) return gsyn::cmd_check_graph(scenario_path, std::cout);
  if (run->parsed()) {
    std::optional<uint64_t> seed_ov;
    if (seed_given) seed_ov = seed;
    std::optional<gsyn::Time> horizon_ov;
    if (horizon > 0) horizon_ov = horizon;
    return gsyn::cmd_run(scenario_path, trace_out, seed_ov, horizon_ov, std::cout);
  }
  if (fuzz->parsed()) return gsyn::cmd_fuzz(family, count, seed, std::cout);
  if (lib->parsed()) return gsyn::cmd_library(name, std::cout);
  if (replay->parsed()) return gsyn::cmd_replay(family, seed, index, trace_out, std::cout);
  return 2;
}
