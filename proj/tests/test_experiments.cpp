#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "loopspace/experiments.hpp"
#include "loopspace/random.hpp"

using namespace loopspace;

namespace {

int error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

} // namespace

TEST_CASE("parse_config: values, comments and defaults") {
  const ExperimentConfig c = parse_config(
      "# comment\n"
      "experiment = np   # trailing\n"
      "\n"
      "bundle = flat-S2\n"
      "grid=128\n"
      "seed = 18446744073709551615\n"
      "p = 4\n");
  CHECK(c.experiment == "np");
  CHECK(c.bundle == "flat-S2");
  CHECK(c.grid == 128);
  CHECK(c.seed == 18446744073709551615ULL);
  CHECK(c.p == 4.0);
  CHECK(c.samples == 0);
  CHECK(default_samples("ibp") == 100000);
  CHECK(default_samples("np") == 10000);
}

TEST_CASE("parse_config: errors carry line numbers") {
  CHECK(error_line("experiment = ibp\nsamples = 0\n") == 2);
  CHECK(error_line("experiment = ibp\n\ncolour = red\n") == 3);
  CHECK(error_line("experiment = ibp\ngrid = -4\n") == 2);
  CHECK(error_line("experiment = ibp\ngrid = 12x\n") == 2);
  CHECK(error_line("experiment = ibp\nthreshold = 0\n") == 2);
  CHECK(error_line("experiment = ibp\nno equals sign\n") == 2);
  CHECK(error_line("experiment = ibp\nseed = 1\nseed = 2\n") == 3);
  CHECK(error_line("experiment = walk\n") == 1);
  CHECK(error_line("experiment = forms\nbundle = mobius\n") == 2);
  CHECK(error_line("experiment = np\np = 3\n") == 2);
  CHECK(error_line("grid = 64\n") == 0);
  CHECK_THROWS_AS(load_config("/nonexistent/config"), ConfigError);
  ExperimentConfig c = parse_config("experiment = forms\n");
  c.grid = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("run_anticipative: deterministic CSV bytes independent of worker count") {
  ExperimentConfig c = parse_config("experiment = anticipative\ngrid = 32\nsamples = 200\n");
  set_worker_count(1);
  const RunResult a = run_experiment(c);
  set_worker_count(3);
  const RunResult b = run_experiment(c);
  set_worker_count(0);
  CHECK(results_csv(a) == results_csv(b));
  CHECK(results_csv(a).rfind("experiment,check,lhs,rhs,se,z,pass\n", 0) == 0);
  CHECK(a.rows.size() == 4);
  CHECK(timing_csv(a).find("wall_time") != std::string::npos);

  const std::string summary = summary_text(c, a);
  CHECK(summary.find("passed: " + std::to_string(a.passed())) != std::string::npos);
  CHECK(summary.find("-1/2 tr(XY)") != std::string::npos);
}

TEST_CASE("write_outputs: files and SVG") {
  const auto dir = std::filesystem::temp_directory_path() / "loopspace_test_outputs";
  std::filesystem::remove_all(dir);
  ExperimentConfig c = parse_config("experiment = anticipative\ngrid = 16\nsamples = 50\n");
  c.out = dir.string();
  RunResult r = run_experiment(c);
  r.np_rows.push_back({"zero", 2.0, -1, "aggregate", 0.0, 0.0, 10});
  write_outputs(c, r);
  CHECK(std::filesystem::exists(dir / "results.csv"));
  CHECK(std::filesystem::exists(dir / "summary.txt"));
  CHECK(slurp(dir / "np_constants.csv") == "form,p,k,component,C,C_prime,budget\nzero,2,-1,aggregate,0,0,10\n");
  const std::string svg = slurp(dir / "anticipative_convergence.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("flat") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("render_svg: log axes drop non-positive points and output is deterministic") {
  SvgChart chart{"x.svg", "t <&>", "N", "err", true, true,
                 {{"a", {1, 10, 100}, {1, 0.1, 0.0}}, {"b", {1, 10}, {2, 3}}}};
  const std::string s = render_svg(chart);
  CHECK(s == render_svg(chart));
  CHECK(s.find("t &lt;&amp;&gt;") != std::string::npos);
}
