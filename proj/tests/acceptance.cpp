// Acceptance run: executes the default experiment suite through the CLI and
// checks each criterion, printing one PASS/FAIL line per criterion.
//
// usage: acceptance <loopspace-lab> <configs-dir> [work-dir]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "loopspace/battery.hpp"
#include "loopspace/bundle.hpp"
#include "loopspace/manifold.hpp"
#include "loopspace/random.hpp"

using namespace loopspace;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

AmbientVector vec3(double a, double b, double c) {
  AmbientVector v(3);
  v << a, b, c;
  return v;
}

struct Row {
  std::string check;
  double lhs = 0.0, rhs = 0.0, z = 0.0;
  bool pass = false;
  double wall_time = 0.0;
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        out.back() += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.emplace_back();
    } else {
      out.back() += ch;
    }
  }
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Rows of results.csv joined with timing.csv.
std::vector<Row> load_rows(const fs::path& dir) {
  std::vector<Row> rows;
  std::istringstream res(read_file(dir / "results.csv")), tim(read_file(dir / "timing.csv"));
  std::string a, b;
  std::getline(res, a);
  std::getline(tim, b);
  while (std::getline(res, a)) {
    const auto f = split_csv_line(a);
    if (f.size() != 7) continue;
    Row r{f[1], std::stod(f[2]), std::stod(f[3]), std::stod(f[5]), f[6] == "1"};
    if (std::getline(tim, b)) {
      const auto t = split_csv_line(b);
      if (t.size() == 3 && t[1] == r.check) r.wall_time = std::stod(t[2]);
    }
    rows.push_back(r);
  }
  return rows;
}

std::vector<Row> with_prefix(const std::vector<Row>& rows, const std::string& prefix) {
  std::vector<Row> out;
  for (const auto& r : rows)
    if (r.check.rfind(prefix, 0) == 0) out.push_back(r);
  return out;
}

const Row* find_row(const std::vector<Row>& rows, const std::string& check) {
  for (const auto& r : rows)
    if (r.check == check) return &r;
  return nullptr;
}

bool all_pass(const std::vector<Row>& rows) {
  for (const auto& r : rows)
    if (!r.pass) return false;
  return !rows.empty();
}

std::string failing(const std::vector<Row>& rows) {
  std::string s;
  for (const auto& r : rows)
    if (!r.pass) s += " " + r.check;
  return s;
}

struct Criterion {
  std::string name;
  bool pass = false;
  std::string detail;
};

std::vector<Criterion> results;

void report(const std::string& name, bool pass, const std::string& detail) {
  results.push_back({name, pass, detail});
  std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

// Runs one subcommand; returns wall seconds, or a negative value on a nonzero exit.
double run_cli(const std::string& lab, const fs::path& config, const std::string& sub,
               const fs::path& out, const std::string& extra = "") {
  fs::create_directories(out);
  const std::string cmd = "\"" + lab + "\" " + sub + " --config \"" + config.string() +
                          "\" --out \"" + out.string() + "\" " + extra + " > \"" +
                          (out / "stdout.log").string() + "\" 2>&1";
  const auto t0 = std::chrono::steady_clock::now();
  const int status = std::system(cmd.c_str());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return status == 0 ? secs : -secs;
}

AlgebraElement fd_holonomy_derivative(const BundleSpec& spec, const ManifoldPath& loop,
                                      const std::vector<AmbientVector>& x, double eps) {
  const Manifold& m = spec.base();
  auto moved = [&](double e) {
    std::vector<AmbientVector> pts(loop.points.size());
    for (std::size_t k = 0; k < pts.size(); ++k) pts[k] = m.geodesic_exp(loop.points[k], e * x[k]);
    return bundle_transport(make_path(m, pts), spec).holonomy;
  };
  const Fiber::Matrix d = (moved(eps).matrix() - moved(-eps).matrix()) / (2 * eps);
  return Fiber::vee(bundle_transport(loop, spec).holonomy.inverse().matrix() * d);
}

void geometry_criterion() {
  double isometry = 0.0;
  for (auto kind : {ManifoldKind::sphere2, ManifoldKind::sphere3}) {
    const Manifold m(kind);
    Rng rng(12);
    const auto path = sample_brownian_motion_manifold(m, 1024, rng);
    const AmbientMatrix id = AmbientMatrix::Identity(m.ambient_dim(), m.ambient_dim());
    for (const auto& t : path.transport) isometry = std::max(isometry, (t.transpose() * t - id).norm());
  }

  const Manifold s2(ManifoldKind::sphere2);
  bool octant = true;
  double worst_octant = 0.0;
  for (int n : {60, 240, 960}) {
    const int side = n / 3;
    auto arc = [](const AmbientVector& a, const AmbientVector& b, double t) {
      return AmbientVector(std::cos(t * kPi / 2) * a + std::sin(t * kPi / 2) * b);
    };
    const AmbientVector north = vec3(0, 0, 1), ex = vec3(1, 0, 0), ey = vec3(0, 1, 0);
    std::vector<AmbientVector> pts;
    for (int k = 0; k < side; ++k) pts.push_back(arc(north, ex, double(k) / side));
    for (int k = 0; k < side; ++k) pts.push_back(arc(ex, ey, double(k) / side));
    for (int k = 0; k <= side; ++k) pts.push_back(arc(ey, north, double(k) / side));
    const auto path = make_path(s2, pts);
    const AmbientVector u = path.transport.back() * ex;
    const double err = std::abs(std::abs(std::atan2(u[1], u[0])) - kPi / 2);
    worst_octant = std::max(worst_octant, err * n / (2 * kPi));
    octant = octant && err < 2 * kPi / n;
  }

  const auto mc = BundleSpec::maurer_cartan(0.5);
  const auto loop = smooth_loop(mc.base(), 2048);
  const auto t = bundle_transport(loop, mc);
  double worst_rel = 0.0;
  for (int i = 0; i < kBatteryFieldCount; ++i) {
    const auto xi = field_values(mc.base(), battery_field(2048, 3, i), loop);
    const AlgebraElement analytic = holonomy_derivative(loop, t, mc, xi);
    const AlgebraElement fd = fd_holonomy_derivative(mc, loop, xi, 1e-4);
    worst_rel = std::max(worst_rel, (analytic - fd).norm() / fd.norm());
  }
  report("4 geometry", isometry < 1e-10 && octant && worst_rel < 1e-3,
         "transport isometry " + fmt(isometry) + " (< 1e-10), octant error " + fmt(worst_octant) +
             " x 2pi/N (< 1), holonomy derivative rel " + fmt(worst_rel) + " (< 1e-3)");
}

void bracket_criterion() {
  const int n = 1024;
  auto rel = [](const AmbientTangent& a, const AmbientTangent& b) {
    return (a - b).max_norm() / std::max(b.max_norm(), 1e-300);
  };
  const auto mc = BundleSpec::maurer_cartan(0.5);
  Rng rng(8);
  const auto base = smooth_loop(mc.base(), n);
  const auto t0 = bundle_transport(base, mc);
  const auto loop = make_bundle_loop(mc, base, sample_brownian_bridge<Fiber>(t0.holonomy.inverse(), n, rng));
  const auto h1 = battery_field(n, 3, 0), h2 = battery_field(n, 3, 1);
  const auto k1 = battery_field(n, 3, 2), k2 = battery_field(n, 3, 3);
  TotalField x1 = [&](const BundleLoop& l) { return horizontal_field(h1, l, mc).tangent; };
  TotalField x2 = [&](const BundleLoop& l) { return horizontal_field(h2, l, mc).tangent; };
  TotalField v1 = [&](const BundleLoop& l) { return vertical_field(k1, l); };
  TotalField v2 = [&](const BundleLoop& l) { return vertical_field(k2, l); };

  const double hh = rel(to_ambient(loop, bracket_horizontal(h1, h2, loop, mc).total()), flow_commutator(x1, x2, loop, mc));
  const auto vv_flow = flow_commutator(v1, v2, loop, mc);
  const double vv = rel(to_ambient(loop, bracket_vertical(k1, k2, loop)), vv_flow);
  const double hv = flow_commutator(x1, v1, loop, mc).max_norm() / vv_flow.max_norm();

  const auto plane = BundleSpec::flat(ManifoldKind::plane);
  const auto ploop = make_bundle_loop(plane, smooth_loop(plane.base(), n),
                                      sample_brownian_bridge<Fiber>(FiberElement::identity(), n, rng));
  const auto p1 = battery_field(n, 2, 0), p2 = battery_field(n, 2, 1);
  TotalField g1 = [&](const BundleLoop& l) { return horizontal_field(p1, l, plane).tangent; };
  TotalField g2 = [&](const BundleLoop& l) { return horizontal_field(p2, l, plane).tangent; };
  const double flat = flow_commutator(g1, g2, ploop, plane).max_norm();

  report("5 brackets", hh < 5e-2 && vv < 5e-2 && flat < 1e-6 && hv < 5e-3,
         "HH rel " + fmt(hh) + ", VV rel " + fmt(vv) + " (< 5e-2), flat " + fmt(flat) +
             " (< 1e-6), mixed " + fmt(hv) + " (< 5e-3)");
}

} // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: acceptance <loopspace-lab> <configs-dir> [work-dir]\n";
    return 2;
  }
  const std::string lab = argv[1];
  const fs::path configs = argv[2];
  const fs::path work = argc > 3 ? fs::path(argv[3]) : fs::current_path() / "acceptance_out";
  fs::remove_all(work);

  const std::vector<std::string> subs = {"ibp", "forms", "np", "anticipative"};
  std::map<std::string, std::vector<Row>> rows;
  std::map<std::string, double> seconds;
  double suite = 0.0;
  bool exits_ok = true;
  for (const auto& s : subs) {
    const double t = run_cli(lab, configs / (s + ".conf"), s, work / "run1" / s);
    exits_ok = exits_ok && t >= 0;
    seconds[s] = std::abs(t);
    suite += std::abs(t);
    rows[s] = load_rows(work / "run1" / s);
    std::cout << "  ran " << s << " in " << fmt(std::abs(t)) << " s (" << rows[s].size() << " rows)"
              << std::endl;
  }

  const auto& ibp = rows["ibp"];
  {
    const auto g = with_prefix(ibp, "group-");
    double wall = 0.0;
    for (const auto& r : g) wall += r.wall_time;
    report("1 group IBP", all_pass(g) && g.size() == 6 && wall < 120.0,
           std::to_string(g.size()) + " checks at 1e5 samples, " + fmt(wall) + " s (< 120)" + failing(g));
  }
  {
    std::vector<Row> b;
    for (const auto& r : with_prefix(ibp, "base-"))
      if (r.check.find("without-ricci") == std::string::npos) b.push_back(r);
    const Row* ablation = nullptr;
    for (const auto& r : ibp)
      if (r.check.find("without-ricci-max-abs-z") != std::string::npos) ablation = &r;
    report("2 base IBP with Ricci ablation", all_pass(b) && ablation && ablation->lhs > 5.0,
           std::to_string(b.size()) + " checks pass, ablation max|z| " +
               (ablation ? fmt(ablation->lhs) : "missing") + " (> 5)" + failing(b));
  }
  {
    const auto h = with_prefix(ibp, "total-"), hz = [&] {
      std::vector<Row> v;
      for (const auto& r : h)
        if (r.check.find("-horizontal-") != std::string::npos) v.push_back(r);
      return v;
    }();
    const std::size_t vertical = h.size() - hz.size();
    report("3 total-space IBP", all_pass(h) && hz.size() == 4 && vertical == 4,
           std::to_string(hz.size()) + " horizontal + " + std::to_string(vertical) +
               " vertical checks" + failing(h));
  }

  geometry_criterion();
  bracket_criterion();

  const auto& forms = rows["forms"];
  {
    const Row* c = find_row(forms, "canonical-analytic-1/(4pi)");
    const Row* k = find_row(forms, "canonical-cocycle");
    report("6 canonical form", c && k && c->pass && k->pass,
           c && k ? "|c - 1/(4pi)| " + fmt(std::abs(c->lhs - c->rhs)) + " (< 1e-8), cocycle " +
                        fmt(std::abs(k->lhs)) + " (< 1e-6)"
                  : "rows missing");
  }
  {
    const Row* o = find_row(forms, "dF_Q-order");
    const Row* p = find_row(forms, "d-nu-equals-p1");
    report("7 closedness", o && p && o->pass && p->pass,
           o && p ? "dF_Q order " + fmt(o->lhs) + " (monotone, >= 1), |d nu - p1| " + fmt(p->lhs) +
                        " (< 1e-5)"
                  : "rows missing");
  }
  {
    const auto m = with_prefix(ibp, "quasi-invariance-mean-");
    const auto q = with_prefix(ibp, "quasi-invariance-");
    report("8 quasi-invariance", all_pass(q) && m.size() == 3 && q.size() == 6,
           std::to_string(m.size()) + " density means + " + std::to_string(q.size() - m.size()) +
               " change-of-measure checks" + failing(q));
  }
  {
    const auto& np = rows["np"];
    const Row* slope = find_row(np, "holonomy-slope-in-[0.45,0.55]");
    const Row* spread = find_row(np, "holonomy-c-grid-spread");
    const Row* conn = find_row(np, "connection-ratio-c-spread");
    report("9 NP regularity", all_pass(np) && slope && spread && conn,
           slope && spread && conn ? "slope " + fmt(slope->lhs) + " in [0.45, 0.55], grid spread " +
                                         fmt(spread->lhs) + " (< 0.2), connection spread " +
                                         fmt(conn->lhs) + " (< 0.2), " + std::to_string(np.size()) +
                                         " checks" + failing(np)
                                   : "rows missing");
  }
  {
    const auto& a = rows["anticipative"];
    const Row* f = find_row(a, "flat-self-convergence-rate-in-[0.4,0.6]");
    const Row* g = find_row(a, "group-self-convergence-rate-in-[0.4,0.6]");
    report("10 anticipative", all_pass(a) && f && g,
           f && g ? "rates " + fmt(f->lhs) + ", " + fmt(g->lhs) + " in [0.4, 0.6], " +
                        std::to_string(a.size()) + " checks" + failing(a)
                  : "rows missing");
  }
  {
    // Same-seed reruns: forms and anticipative at their defaults, ibp and np reduced.
    bool identical = true;
    std::string detail;
    auto compare = [&](const std::string& s, const std::string& extra) {
      const fs::path d2 = work / "run2" / s, d3 = work / "run3" / s;
      fs::path a = work / "run1" / s;
      if (!extra.empty()) {
        run_cli(lab, configs / (s + ".conf"), s, d3, extra);
        a = d3;
      }
      run_cli(lab, configs / (s + ".conf"), s, d2, extra);
      bool same = read_file(a / "results.csv") == read_file(d2 / "results.csv") &&
                  !read_file(d2 / "results.csv").empty();
      if (s == "np") same = same && read_file(a / "np_constants.csv") == read_file(d2 / "np_constants.csv");
      identical = identical && same;
      detail += " " + s + (same ? "=" : "!=");
    };
    compare("forms", "");
    compare("anticipative", "");
    compare("ibp", "--samples 5000 --grid 128");
    compare("np", "--samples 500 --grid 128");
    report("11 reproducibility and runtime", identical && exits_ok && suite < 900.0,
           "byte-identical reruns:" + detail + "; default suite " + fmt(suite) + " s (< 900)" +
               (exits_ok ? "" : "; a subcommand exited nonzero"));
  }

  std::size_t passed = 0;
  for (const auto& c : results) passed += c.pass;
  std::cout << (passed == results.size() ? "PASS " : "FAIL ") << passed << "/" << results.size()
            << " criteria" << std::endl;
  return passed == results.size() ? 0 : 1;
}
