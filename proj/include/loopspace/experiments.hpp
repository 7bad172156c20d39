#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "loopspace/svg_plot.hpp"

namespace loopspace {

class ConfigError : public std::runtime_error {
public:
  ConfigError(int line, const std::string& what)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  // 0 when the problem is not tied to one line.
  int line() const { return line_; }

private:
  int line_;
};

// Key-value experiment description, one `key = value` per line, '#' starts a
// comment. Sample counts of 0 in the struct mean "use the experiment default".
struct ExperimentConfig {
  std::string experiment;
  std::string bundle = "mc-S3";
  double bundle_parameter = 0.5;
  std::string manifold = "S2";
  int grid = 256;
  std::size_t samples = 0;
  std::uint64_t seed = 1;
  double threshold = 3.0;
  std::string out = "out";
  double p = 2.0;
  int pair_budget = 2000;
  int workers = 0;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
// Rejects non-positive sizes and unknown experiment, bundle or manifold names.
void validate(const ExperimentConfig& config);

std::size_t default_samples(const std::string& experiment);

struct ResultRow {
  std::string experiment;
  std::string check;
  double lhs = 0.0;
  double rhs = 0.0;
  double se = 0.0;
  double z = 0.0;
  bool pass = false;
  double wall_time = 0.0;
};

// NP constants per (form, p, component); k is the number of vertical slots
// ("aggregate" rows use k = -1).
struct NPRow {
  std::string form;
  double p = 2.0;
  int k = -1;
  std::string component;
  double c = 0.0;
  double c_prime = 0.0;
  int budget = 0;
};

struct RunResult {
  std::vector<ResultRow> rows;
  std::vector<NPRow> np_rows;
  std::vector<SvgChart> charts;
  std::size_t passed() const;
  std::size_t failed() const;
};

RunResult run_ibp(const ExperimentConfig& config);
RunResult run_forms(const ExperimentConfig& config);
RunResult run_np(const ExperimentConfig& config);
RunResult run_anticipative(const ExperimentConfig& config);
// Dispatch on config.experiment.
RunResult run_experiment(const ExperimentConfig& config);

// results.csv holds everything except wall time, which goes to timing.csv so
// that results.csv is byte-identical across runs.
std::string results_csv(const RunResult& result);
std::string timing_csv(const RunResult& result);
std::string np_constants_csv(const RunResult& result);
std::string summary_text(const ExperimentConfig& config, const RunResult& result);
// Writes results.csv, timing.csv, summary.txt, np_constants.csv (np runs) and
// the charts into config.out.
void write_outputs(const ExperimentConfig& config, const RunResult& result);

} // namespace loopspace
