#include "loopspace/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "experiment_rows.hpp"
#include "loopspace/bundle.hpp"
#include "loopspace/forms.hpp"
#include "loopspace/ibp.hpp"
#include "loopspace/np_regularity.hpp"

namespace loopspace {

// ---------------------------------------------------------------- config

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& value, int line, const std::string& key) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(line, "bad numeric value for '" + key + "': '" + value + "'");
  }
  return out;
}

double parse_positive(const std::string& value, int line, const std::string& key) {
  const double v = parse_number<double>(value, line, key);
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(line, "'" + key + "' must be positive");
  return v;
}

long long parse_positive_integer(const std::string& value, int line, const std::string& key) {
  if (!value.empty() && value[0] == '-') throw ConfigError(line, "'" + key + "' must be positive");
  const auto v = parse_number<unsigned long long>(value, line, key);
  if (v == 0) throw ConfigError(line, "'" + key + "' must be positive");
  if (v > static_cast<unsigned long long>(std::numeric_limits<int>::max()) && key != "seed" &&
      key != "samples") {
    throw ConfigError(line, "'" + key + "' is too large");
  }
  return static_cast<long long>(v);
}

const std::vector<std::string> kExperiments = {"ibp", "forms", "np", "anticipative"};

} // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::istringstream in(text);
  std::string raw;
  std::map<std::string, int> seen;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string content = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "expected 'key = value'");
    const std::string key = trim(content.substr(0, eq));
    const std::string value = trim(content.substr(eq + 1));
    if (key.empty()) throw ConfigError(line, "missing key");
    if (value.empty()) throw ConfigError(line, "missing value for '" + key + "'");
    if (auto it = seen.find(key); it != seen.end()) {
      throw ConfigError(line, "duplicate key '" + key + "' (first on line " +
                                  std::to_string(it->second) + ")");
    }
    seen[key] = line;
    if (key == "experiment") {
      if (std::find(kExperiments.begin(), kExperiments.end(), value) == kExperiments.end()) {
        throw ConfigError(line, "unknown experiment '" + value + "'");
      }
      c.experiment = value;
    } else if (key == "bundle") {
      c.bundle = value;
    } else if (key == "bundle_parameter") {
      c.bundle_parameter = parse_positive(value, line, key);
    } else if (key == "manifold") {
      c.manifold = value;
    } else if (key == "grid") {
      c.grid = static_cast<int>(parse_positive_integer(value, line, key));
    } else if (key == "samples") {
      c.samples = static_cast<std::size_t>(parse_positive_integer(value, line, key));
    } else if (key == "seed") {
      c.seed = static_cast<std::uint64_t>(parse_positive_integer(value, line, key));
    } else if (key == "threshold") {
      c.threshold = parse_positive(value, line, key);
    } else if (key == "out") {
      c.out = value;
    } else if (key == "p") {
      c.p = parse_positive(value, line, key);
      if (c.p < 2.0 || std::fmod(c.p, 2.0) != 0.0) throw ConfigError(line, "'p' must be even and >= 2");
    } else if (key == "pair_budget") {
      c.pair_budget = static_cast<int>(parse_positive_integer(value, line, key));
    } else if (key == "workers") {
      c.workers = static_cast<int>(parse_positive_integer(value, line, key));
    } else {
      throw ConfigError(line, "unknown key '" + key + "'");
    }
    // Bundle and manifold names are checked here so the error carries the line.
    try {
      if (key == "bundle") BundleSpec::from_name(value, 1.0);
      if (key == "manifold") Manifold::from_name(value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(line, e.what());
    }
  }
  if (c.experiment.empty()) throw ConfigError(0, "missing required key 'experiment'");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot read config file " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return parse_config(s.str());
}

void validate(const ExperimentConfig& c) {
  if (std::find(kExperiments.begin(), kExperiments.end(), c.experiment) == kExperiments.end()) {
    throw ConfigError(0, "unknown experiment '" + c.experiment + "'");
  }
  if (c.grid < 8) throw ConfigError(0, "grid must be at least 8");
  if (c.seed == 0) throw ConfigError(0, "seed must be positive");
  if (!(c.bundle_parameter > 0.0) || !(c.threshold > 0.0)) {
    throw ConfigError(0, "numeric fields must be positive");
  }
  if (c.pair_budget <= 0) throw ConfigError(0, "pair_budget must be positive");
  if (c.p < 2.0 || std::fmod(c.p, 2.0) != 0.0) throw ConfigError(0, "p must be even and >= 2");
  try {
    BundleSpec::from_name(c.bundle, c.bundle_parameter);
    Manifold::from_name(c.manifold);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(0, e.what());
  }
}

std::size_t default_samples(const std::string& experiment) {
  if (experiment == "ibp") return 100000;
  if (experiment == "np") return 10000;
  if (experiment == "anticipative") return 2000;
  return 1;
}

std::size_t RunResult::passed() const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const ResultRow& r) { return r.pass; }));
}

std::size_t RunResult::failed() const { return rows.size() - passed(); }

// ---------------------------------------------------------------- rows

RowRecorder::RowRecorder(std::string experiment, RunResult& out)
    : experiment_(std::move(experiment)), out_(out), start_(std::chrono::steady_clock::now()) {}

double RowRecorder::lap() {
  const auto now = std::chrono::steady_clock::now();
  const double t = std::chrono::duration<double>(now - start_).count();
  start_ = now;
  return t;
}

void RowRecorder::add(const std::string& check, double lhs, double rhs, double se, double z,
                      bool pass) {
  out_.rows.push_back({experiment_, check, lhs, rhs, se, z, pass, lap()});
}

void RowRecorder::report(const MCReport& r) {
  add(r.id, r.lhs, r.rhs, r.standard_error, r.z, r.pass);
}

void RowRecorder::close(const std::string& check, double lhs, double rhs, double tolerance) {
  add(check, lhs, rhs, 0.0, 0.0, std::isfinite(lhs) && std::abs(lhs - rhs) <= tolerance);
}

void RowRecorder::at_most(const std::string& check, double lhs, double bound) {
  add(check, lhs, bound, 0.0, 0.0, lhs <= bound);
}

void RowRecorder::at_least(const std::string& check, double lhs, double bound) {
  add(check, lhs, bound, 0.0, 0.0, lhs >= bound);
}

void RowRecorder::within(const std::string& check, double lhs, double lo, double hi) {
  add(check + "-in-[" + format_number(lo) + "," + format_number(hi) + "]", lhs, 0.5 * (lo + hi),
      0.0, 0.0, lhs >= lo && lhs <= hi);
}

std::string format_number(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

// ---------------------------------------------------------------- ibp

RunResult run_ibp(const ExperimentConfig& config) {
  RunResult out;
  RowRecorder rec("ibp", out);
  IbpOptions o;
  o.samples = config.samples ? config.samples : default_samples("ibp");
  o.grid = config.grid;
  o.seed = config.seed;
  o.threshold = config.threshold;

  for (const auto& r : group_ibp_battery(o)) rec.report(r);

  const Manifold base = Manifold::from_name(config.manifold);
  const BaseIbpResult b = base_ibp_battery(base, o);
  for (const auto& r : b.with_ricci) rec.report(r);
  if (!base.flat()) {
    double worst = 0.0;
    for (const auto& r : b.without_ricci) worst = std::max(worst, std::abs(r.z));
    rec.add("base-" + base.name() + "-without-ricci-max-abs-z", worst, 5.0, 0.0, 0.0, worst > 5.0);
  }

  const BundleSpec spec = BundleSpec::from_name(config.bundle, config.bundle_parameter);
  const TotalIbpResult t = total_ibp_battery(spec, o);
  for (const auto& r : t.horizontal) rec.report(r);
  for (const auto& r : t.vertical) rec.report(r);

  const QuasiInvarianceResult q = quasi_invariance_battery(o);
  for (const auto& r : q.density_mean) rec.report(r);
  for (const auto& r : q.change_of_measure) rec.report(r);

  SvgChart chart{"ibp_z.svg", "Integration by parts: z per check", "check index", "z", false, false, {}};
  SvgSeries z{"z", {}, {}}, hi{"+threshold", {}, {}}, lo{"-threshold", {}, {}};
  for (std::size_t i = 0; i < out.rows.size(); ++i) {
    if (out.rows[i].se == 0.0) continue;
    z.x.push_back(static_cast<double>(i));
    z.y.push_back(out.rows[i].z);
  }
  if (!z.x.empty()) {
    hi.x = lo.x = {z.x.front(), z.x.back()};
    hi.y = {o.threshold, o.threshold};
    lo.y = {-o.threshold, -o.threshold};
  }
  chart.series = {z, hi, lo};
  out.charts.push_back(chart);
  return out;
}

// ---------------------------------------------------------------- anticipative

RunResult run_anticipative(const ExperimentConfig& config) {
  RunResult out;
  RowRecorder rec("anticipative", out);
  const std::size_t samples = config.samples ? config.samples : default_samples("anticipative");
  const int n = config.grid;
  const int fine = 16 * n;
  const std::vector<int> grids = {std::max(2, n / 2), n, 2 * n, 4 * n};

  const FlatIntegrand flat = [](const std::vector<FrameVector>& path) {
    std::vector<FrameVector> u(path.size());
    const FrameVector& end = path.back();
    for (std::size_t k = 0; k < path.size(); ++k) u[k] = (path[k] + end).array().sin().matrix();
    return u;
  };
  const ConvergenceSweep fs = anticipative_self_convergence(flat, 2, fine, grids, samples, config.seed);
  rec.within("flat-self-convergence-rate", fs.rate, 0.4, 0.6);

  const GroupIntegrand group = [](const GroupPath<SU2>& p) {
    std::vector<AlgebraElement> u(p.points.size());
    const AlgebraElement end = SU2::log_unchecked(p.points.back().matrix());
    for (std::size_t k = 0; k < u.size(); ++k) u[k] = SU2::vee(p.points[k].matrix()) + end;
    return u;
  };
  const ConvergenceSweep gs =
      anticipative_group_self_convergence(group, fine, grids, samples, config.seed + 1);
  rec.within("group-self-convergence-rate", gs.rate, 0.4, 0.6);

  const ReductionCheck red = anticipative_reduction(
      [](double s) {
        FrameVector v(2);
        v << std::cos(3.0 * s), s * s;
        return v;
      },
      2, std::max(2, n / 4), 16, samples, config.seed + 2);
  rec.add("deterministic-u-reduction", red.rms_error, 3.0 * red.adapted_standard_error,
          red.adapted_standard_error, red.rms_error / red.adapted_standard_error, red.pass);

  Rng rng(config.seed, 0);
  std::vector<FrameVector> dw(fine), zero(fine + 1, FrameVector::Zero(2));
  for (auto& d : dw) d = std::sqrt(1.0 / fine) * rng.normal_vector(2);
  double worst = 0.0;
  for (int g : grids) worst = std::max(worst, std::abs(anticipative_stratonovich(zero, dw, g)));
  rec.close("zero-u", worst, 0.0, 0.0);

  SvgChart chart{"anticipative_convergence.svg", "Self-convergence ||I_N - I_2N||", "N",
                 "L2 difference", true, true, {}};
  SvgSeries a{"flat", {}, fs.differences}, b{"group", {}, gs.differences}, ref{"N^-1/2", {}, {}};
  for (int g : grids) {
    a.x.push_back(g);
    b.x.push_back(g);
    ref.x.push_back(g);
    ref.y.push_back(fs.differences.front() * std::sqrt(static_cast<double>(grids.front()) / g));
  }
  chart.series = {a, b, ref};
  out.charts.push_back(chart);
  return out;
}

// ---------------------------------------------------------------- np

RunResult run_np(const ExperimentConfig& config) {
  RunResult out;
  RowRecorder rec("np", out);
  const BundleSpec spec = BundleSpec::from_name(config.bundle, config.bundle_parameter);
  const InfinityConnection conn;
  const int d = spec.base().dim();
  NPOptions o;
  o.grid = config.grid;
  o.samples = config.samples ? config.samples : default_samples("np");
  o.pair_budget = config.pair_budget;
  o.p = config.p;
  o.seed = config.seed;

  auto record = [&](const NPReport& r) {
    for (std::size_t m = 0; m < r.split.size(); ++m) {
      out.np_rows.push_back({r.form, o.p, static_cast<int>(m), "split", r.split[m].c,
                             r.split[m].c_prime, r.split[m].pairs});
    }
    out.np_rows.push_back({r.form, o.p, -1, "aggregate", r.aggregate.c, r.aggregate.c_prime,
                           r.aggregate.pairs});
  };

  const NPReport det = np_estimate(deterministic_form(d), spec, conn, o);
  record(det);
  rec.close("deterministic-c-prime", det.aggregate.c_prime, 1.0 / 6.0, 1e-12);
  // |sigma(s) - sigma(s')| <= |s - s'| and |s - s'| <= 1/4 for sampled pairs.
  rec.at_most("deterministic-c-lipschitz-bound", det.aggregate.c, 0.5);

  const NPReport zero = np_estimate(zero_form(1, d), spec, conn, o);
  record(zero);
  rec.close("zero-form-c", zero.aggregate.c, 0.0, 0.0);
  rec.close("zero-form-c-prime", zero.aggregate.c_prime, 0.0, 0.0);

  const NPReport hol = np_estimate(holonomy_form(spec, 0), spec, conn, o);
  record(hol);
  rec.within("holonomy-slope", hol.aggregate.slope, 0.45, 0.55);

  const NPReport fib = np_estimate(fiber_coordinate_form(spec, conn), spec, conn, o);
  record(fib);
  rec.within("fiber-coordinate-horizontal-slope", fib.split[0].slope, 0.45, 0.55);

  const NPReport can = np_estimate(vertical_canonical_form(d), spec, conn, o);
  record(can);
  rec.at_least("canonical-c-prime-positive", can.aggregate.c_prime, 1e-12);

  // Base pullbacks leave the constants unchanged.
  for (const auto& [f, a] : {std::pair{deterministic_form(d), det}, {holonomy_form(spec, 0), hol}}) {
    const NPReport b = np_estimate(pullback_base(f), spec, conn, o);
    rec.close("pullback-base-" + f.name + "-c", b.aggregate.c, a.aggregate.c, 0.0);
    rec.close("pullback-base-" + f.name + "-c-prime", b.aggregate.c_prime, a.aggregate.c_prime, 0.0);
  }

  const std::vector<int> grids = {o.grid, 2 * o.grid, 4 * o.grid};
  const GridStability gs =
      np_grid_stability([&](int) { return holonomy_form(spec, 0); }, spec, conn, grids, o);
  rec.at_most("holonomy-c-grid-spread", gs.c_spread, 0.2);
  rec.at_most("holonomy-c-prime-grid-spread", gs.c_prime_spread, 0.2);
  for (std::size_t i = 0; i < grids.size(); ++i) {
    rec.within("holonomy-slope-N" + std::to_string(grids[i]), gs.slope[i], 0.45, 0.55);
  }

  const ConnectionIndependence ci = connection_independence_check(
      [&](const InfinityConnection& c) { return fiber_coordinate_form(spec, c); }, spec, grids, o);
  for (std::size_t j = 0; j < ci.components.size(); ++j) {
    for (std::size_t i = 0; i < grids.size(); ++i) {
      const std::string id = "connection-ratio-k" + std::to_string(ci.components[j]) + "-N" +
                             std::to_string(grids[i]);
      rec.add(id + "-c", ci.c_ratio[j][i], 1.0, 0.0, 0.0, std::isfinite(ci.c_ratio[j][i]));
      rec.add(id + "-c-prime", ci.c_prime_ratio[j][i], 1.0, 0.0, 0.0,
              std::isfinite(ci.c_prime_ratio[j][i]));
    }
  }
  rec.at_most("connection-ratio-c-spread", ci.c_ratio_spread, 0.2);
  rec.at_most("connection-ratio-c-prime-spread", ci.c_prime_ratio_spread, 0.2);

  const WedgeBound w =
      wedge_bound_check(holonomy_form(spec, 0), fiber_coordinate_form(spec, conn), spec, conn, o);
  rec.at_most("wedge-bound-holonomy-fiber", w.lhs, w.rhs);

  SvgChart stab{"np_grid_stability.svg", "NP constants of the holonomy form", "N", "estimate",
                true, false, {}};
  std::vector<double> gx(grids.begin(), grids.end());
  stab.series = {{"C", gx, gs.c}, {"C'", gx, gs.c_prime}, {"slope", gx, gs.slope}};
  out.charts.push_back(stab);
  SvgChart ratio{"np_connection_ratios.svg", "NP constant ratios, linear vs sine section", "N",
                 "ratio", true, false, {}};
  for (std::size_t j = 0; j < ci.components.size(); ++j) {
    const std::string k = "k=" + std::to_string(ci.components[j]);
    ratio.series.push_back({"C " + k, gx, ci.c_ratio[j]});
    ratio.series.push_back({"C' " + k, gx, ci.c_prime_ratio[j]});
  }
  out.charts.push_back(ratio);
  return out;
}

// ---------------------------------------------------------------- dispatch and output

RunResult run_experiment(const ExperimentConfig& config) {
  validate(config);
  if (config.experiment == "ibp") return run_ibp(config);
  if (config.experiment == "forms") return run_forms(config);
  if (config.experiment == "np") return run_np(config);
  return run_anticipative(config);
}

namespace {

std::string csv_number(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

std::string csv_text(const std::string& v) {
  if (v.find_first_of(",\"\n") == std::string::npos) return v;
  std::string q = "\"";
  for (char ch : v) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + '"';
}

} // namespace

std::string results_csv(const RunResult& result) {
  std::ostringstream s;
  s << "experiment,check,lhs,rhs,se,z,pass\n";
  for (const auto& r : result.rows) {
    s << r.experiment << ',' << csv_text(r.check) << ',' << csv_number(r.lhs) << ',' << csv_number(r.rhs)
      << ',' << csv_number(r.se) << ',' << csv_number(r.z) << ',' << (r.pass ? 1 : 0) << '\n';
  }
  return s.str();
}

std::string timing_csv(const RunResult& result) {
  std::ostringstream s;
  s << "experiment,check,wall_time\n";
  for (const auto& r : result.rows) {
    s << r.experiment << ',' << csv_text(r.check) << ',' << csv_number(r.wall_time) << '\n';
  }
  return s.str();
}

std::string np_constants_csv(const RunResult& result) {
  std::ostringstream s;
  s << "form,p,k,component,C,C_prime,budget\n";
  for (const auto& r : result.np_rows) {
    s << r.form << ',' << csv_number(r.p) << ',' << r.k << ',' << r.component << ','
      << csv_number(r.c) << ',' << csv_number(r.c_prime) << ',' << r.budget << '\n';
  }
  return s.str();
}

std::string summary_text(const ExperimentConfig& c, const RunResult& result) {
  std::ostringstream s;
  s << "experiment: " << c.experiment << '\n'
    << "bundle: " << c.bundle << " (parameter " << csv_number(c.bundle_parameter) << ")\n"
    << "manifold: " << c.manifold << '\n'
    << "grid: " << c.grid << '\n'
    << "samples: " << (c.samples ? c.samples : default_samples(c.experiment)) << '\n'
    << "seed: " << c.seed << '\n'
    << "threshold: " << csv_number(c.threshold) << '\n'
    << "inner product: <X, Y> = -1/2 tr(XY) on su(2)\n"
    << "form normalization: 1/(8 pi^2) = " << csv_number(kFormNormalization) << '\n'
    << "passed: " << result.passed() << '\n'
    << "failed: " << result.failed() << '\n';
  for (const auto& r : result.rows) {
    if (!r.pass) s << "FAIL " << r.check << '\n';
  }
  s << (result.failed() == 0 ? "PASS" : "FAIL") << ' ' << result.passed() << '/'
    << result.rows.size() << '\n';
  return s.str();
}

void write_outputs(const ExperimentConfig& config, const RunResult& result) {
  const std::filesystem::path dir(config.out);
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    f << text;
  };
  write("results.csv", results_csv(result));
  write("timing.csv", timing_csv(result));
  write("summary.txt", summary_text(config, result));
  if (!result.np_rows.empty()) write("np_constants.csv", np_constants_csv(result));
  for (const auto& chart : result.charts) write(chart.file, render_svg(chart));
}

} // namespace loopspace
