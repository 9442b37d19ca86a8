// Command-line front end: `fblab run <config>` and `fblab list-fixtures`.
//
// Exit status: 0 all checks passed, 1 some check failed, 2 invalid config,
// 3 any other error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fblab/experiment.hpp"

#ifndef FBLAB_FIXTURES_DIR
#define FBLAB_FIXTURES_DIR "fixtures"
#endif

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for the nonnegative free-boundary problem -Lap u = f chi{u>0}"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  std::string fixtures_dir = FBLAB_FIXTURES_DIR;

  auto* run = app.add_subcommand("run", "Solve and analyse the experiment described by a config file");
  run->add_option("config", config_path, "Path to the JSON config")->required();
  run->add_option("--output-dir", output_dir, "Output directory (overrides FBLAB_OUTPUT_DIR and the config)");
  run->add_option("--seed", seed, "Seed for randomized checks (overrides the config)");
  run->add_flag("--quiet", quiet, "Suppress progress output");

  auto* list = app.add_subcommand("list-fixtures", "List the shipped fixture configs");
  list->add_option("--fixtures-dir", fixtures_dir, "Directory holding fixture configs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto m = fblab::run_experiment(config_path, {output_dir, seed, quiet});
      return m.passed() ? 0 : 1;
    }
    const auto rows = fblab::list_fixtures(fixtures_dir);
    std::cout << "fixture | exercises | expected\n";
    for (const auto& r : rows) std::cout << r.name << " | " << r.exercises << " | " << r.expected << '\n';
    return 0;
  } catch (const fblab::ConfigurationError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const fblab::RegimeError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
