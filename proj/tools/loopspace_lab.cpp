#include <cstdio>
#include <iostream>
#include <utility>

#include <CLI11.hpp>

#include "loopspace/experiments.hpp"
#include "loopspace/random.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Loop-space verification experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t samples = 0;
  int grid = 0;
  const std::pair<const char*, const char*> commands[] = {
      {"ibp", "integration-by-parts and quasi-invariance batteries"},
      {"forms", "canonical form, transgression and closedness checks"},
      {"np", "NP regularity constants of the kernel-form battery"},
      {"anticipative", "anticipative Stratonovich convergence"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "key = value experiment file")->required();
    sub->add_option("--seed", seed, "override the seed");
    sub->add_option("--out", out, "override the output directory");
    sub->add_option("--samples", samples, "override the Monte Carlo sample count");
    sub->add_option("--grid", grid, "override the grid size");
  }
  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();
  const CLI::App* sub = app.get_subcommands().front();

  try {
    loopspace::ExperimentConfig config = loopspace::load_config(config_path);
    if (config.experiment != command) {
      throw loopspace::ConfigError(0, "config describes experiment '" + config.experiment +
                                          "' but the subcommand is '" + command + "'");
    }
    if (sub->count("--seed")) config.seed = seed;
    if (sub->count("--out")) config.out = out;
    if (sub->count("--samples")) {
      if (samples == 0) throw loopspace::ConfigError(0, "--samples must be positive");
      config.samples = samples;
    }
    if (sub->count("--grid")) config.grid = grid;
    loopspace::validate(config);
    if (config.workers > 0) loopspace::set_worker_count(config.workers);

    const loopspace::RunResult result = loopspace::run_experiment(config);
    loopspace::write_outputs(config, result);
    for (const auto& r : result.rows) {
      std::printf("%-4s %-48s lhs=% .6e rhs=% .6e z=% .3f\n", r.pass ? "ok" : "FAIL",
                  r.check.c_str(), r.lhs, r.rhs, r.z);
    }
    std::printf("%zu passed, %zu failed; outputs in %s\n", result.passed(), result.failed(),
                config.out.c_str());
    return result.failed() == 0 ? 0 : 1;
  } catch (const loopspace::ConfigError& e) {
    std::cerr << config_path << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
