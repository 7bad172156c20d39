#include "loopspace/np_regularity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "loopspace/stochastic_calculus.hpp"

namespace loopspace {

namespace {

struct ArgPair {
  std::vector<double> x;
  std::vector<double> y;
  double distance;
};

bool increasing(const std::vector<double>& x) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && x[i] < 1.0)) return false;
    if (i > 0 && !(x[i] > x[i - 1])) return false;
  }
  return true;
}

// Pairs in the component 0 < x_0 < x_1 < ... < 1 differing in one slot.
std::vector<ArgPair> sample_pairs(int degree, int grid, int budget, std::uint64_t seed, int m) {
  Rng rng(seed ^ 0x9a17b0c5ULL, static_cast<std::uint64_t>(m));
  const double lo = std::log(4.0 / grid), hi = std::log(0.25);
  std::vector<ArgPair> out;
  while (static_cast<int>(out.size()) < budget) {
    std::vector<double> x(degree);
    for (double& v : x) v = rng.uniform();
    std::sort(x.begin(), x.end());
    const int slot = std::min(static_cast<int>(rng.uniform() * degree), degree - 1);
    const double delta = std::exp(lo + (hi - lo) * rng.uniform());
    std::vector<double> y = x;
    y[slot] += rng.uniform() < 0.5 ? delta : -delta;
    if (!increasing(x) || !increasing(y)) continue;
    out.push_back({x, y, delta});
  }
  return out;
}

// Grid of points in the closure of the component for the sup scan.
std::vector<std::vector<double>> scan_points(int degree, int scan) {
  std::vector<std::vector<double>> out;
  if (degree == 1) {
    for (int i = 0; i <= scan; ++i) out.push_back({static_cast<double>(i) / scan});
  } else if (degree == 2) {
    for (int i = 0; i <= scan; ++i) {
      for (int j = i + 1; j <= scan; ++j) {
        out.push_back({static_cast<double>(i) / scan, static_cast<double>(j) / scan});
      }
    }
  } else if (degree > 2) {
    throw std::invalid_argument("NP estimates support degree <= 2");
  }
  return out;
}

Eigen::VectorXd call(const BoundKernel& k, const std::vector<double>& args, int h) {
  std::vector<double> s(args.begin(), args.begin() + h), t(args.begin() + h, args.end());
  return k(s, t);
}

struct Accumulated {
  std::vector<double> diff_p, diff_2, point_p;
};

NPConstants finish(const Accumulated& a, const std::vector<ArgPair>& pairs, double p,
                   std::size_t samples, std::vector<double>* log_d, std::vector<double>* log_n) {
  NPConstants c;
  c.pairs = static_cast<int>(pairs.size());
  std::vector<double> xd, yn;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double norm_p = std::pow(a.diff_p[i] / samples, 1.0 / p);
    c.c = std::max(c.c, norm_p / std::sqrt(pairs[i].distance));
    const double norm_2 = std::sqrt(a.diff_2[i] / samples);
    if (norm_2 > 0.0) {
      xd.push_back(std::log(pairs[i].distance));
      yn.push_back(std::log(norm_2));
    }
  }
  for (double v : a.point_p) c.c_prime = std::max(c.c_prime, std::pow(v / samples, 1.0 / p));
  if (xd.size() > 1) {
    // loglog_slope takes positive inputs.
    std::vector<double> x, y;
    for (std::size_t i = 0; i < xd.size(); ++i) {
      x.push_back(std::exp(xd[i]));
      y.push_back(std::exp(yn[i]));
    }
    c.slope = loglog_slope(x, y);
  }
  if (log_d) log_d->insert(log_d->end(), xd.begin(), xd.end());
  if (log_n) log_n->insert(log_n->end(), yn.begin(), yn.end());
  return c;
}

} // namespace

NPReport np_estimate(const KernelForm& sigma, const BundleSpec& spec,
                     const InfinityConnection& conn, const NPOptions& o) {
  (void)conn;
  if (o.samples == 0) throw std::invalid_argument("NP estimate needs samples > 0");
  if (o.p < 2.0 || std::fmod(o.p, 2.0) != 0.0) {
    throw std::invalid_argument("NP moment order must be even and >= 2");
  }
  NPReport r;
  r.form = sigma.name;
  r.grid = o.grid;
  r.split.assign(sigma.degree + 1, NPConstants{});
  if (sigma.degree == 0) return r;
  std::map<int, std::vector<ArgPair>> pairs;
  std::map<int, Accumulated> acc;
  const std::vector<std::vector<double>> scan = scan_points(sigma.degree, o.scan);
  for (const auto& [m, binder] : sigma.kernels) {
    pairs[m] = sample_pairs(sigma.degree, o.grid, o.pair_budget, o.seed, m);
    acc[m] = {std::vector<double>(o.pair_budget, 0.0), std::vector<double>(o.pair_budget, 0.0),
              std::vector<double>(scan.size(), 0.0)};
  }
  for (std::size_t i = 0; i < o.samples; ++i) {
    Rng rng(o.seed, i);
    const BundleLoop loop = sample_total(spec, o.grid, rng);
    for (const auto& [m, binder] : sigma.kernels) {
      const int h = sigma.degree - m;
      const BoundKernel k = binder(loop);
      Accumulated& a = acc[m];
      const auto& pm = pairs[m];
      for (std::size_t j = 0; j < pm.size(); ++j) {
        const double d = (call(k, pm[j].x, h) - call(k, pm[j].y, h)).norm();
        a.diff_p[j] += std::pow(d, o.p);
        a.diff_2[j] += d * d;
      }
      for (std::size_t j = 0; j < scan.size(); ++j) {
        a.point_p[j] += std::pow(call(k, scan[j], h).norm(), o.p);
      }
    }
  }
  std::vector<double> log_d, log_n;
  for (const auto& [m, a] : acc) {
    r.split[m] = finish(a, pairs[m], o.p, o.samples, &log_d, &log_n);
    r.aggregate.c = std::max(r.aggregate.c, r.split[m].c);
    r.aggregate.c_prime = std::max(r.aggregate.c_prime, r.split[m].c_prime);
    r.aggregate.pairs += r.split[m].pairs;
  }
  if (log_d.size() > 1) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < log_d.size(); ++i) {
      x.push_back(std::exp(log_d[i]));
      y.push_back(std::exp(log_n[i]));
    }
    r.aggregate.slope = loglog_slope(x, y);
  }
  return r;
}

double relative_spread(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  if (*hi == 0.0) return 0.0;
  if (*lo <= 0.0) return std::numeric_limits<double>::infinity();
  return *hi / *lo - 1.0;
}

GridStability np_grid_stability(const std::function<KernelForm(int)>& make_form,
                                const BundleSpec& spec, const InfinityConnection& conn,
                                const std::vector<int>& grids, NPOptions options) {
  GridStability g;
  g.grids = grids;
  for (int n : grids) {
    options.grid = n;
    const NPReport r = np_estimate(make_form(n), spec, conn, options);
    g.c.push_back(r.aggregate.c);
    g.c_prime.push_back(r.aggregate.c_prime);
    g.slope.push_back(r.aggregate.slope);
  }
  g.c_spread = relative_spread(g.c);
  g.c_prime_spread = relative_spread(g.c_prime);
  return g;
}

ConnectionIndependence connection_independence_check(
    const std::function<KernelForm(const InfinityConnection&)>& make_form,
    const BundleSpec& spec, const std::vector<int>& grids, NPOptions options, double tolerance) {
  ConnectionIndependence ci;
  ci.grids = grids;
  const InfinityConnection lin(SectionProfile::linear), sine(SectionProfile::sine);
  const KernelForm probe = make_form(lin);
  for (int m = 0; m <= probe.degree; ++m) ci.components.push_back(m);
  auto ratio = [](double a, double b) { return (a == 0.0 && b == 0.0) ? 1.0 : a / b; };
  ci.c_ratio.assign(ci.components.size(), {});
  ci.c_prime_ratio.assign(ci.components.size(), {});
  for (int n : grids) {
    options.grid = n;
    const NPReport a = np_estimate(make_form(lin), spec, lin, options);
    const NPReport b = np_estimate(make_form(sine), spec, sine, options);
    for (std::size_t j = 0; j < ci.components.size(); ++j) {
      const int m = ci.components[j];
      ci.c_ratio[j].push_back(ratio(a.split[m].c, b.split[m].c));
      ci.c_prime_ratio[j].push_back(ratio(a.split[m].c_prime, b.split[m].c_prime));
    }
  }
  for (std::size_t j = 0; j < ci.components.size(); ++j) {
    ci.c_ratio_spread = std::max(ci.c_ratio_spread, relative_spread(ci.c_ratio[j]));
    ci.c_prime_ratio_spread = std::max(ci.c_prime_ratio_spread, relative_spread(ci.c_prime_ratio[j]));
  }
  ci.pass = ci.c_ratio_spread < tolerance &&
            ci.c_prime_ratio_spread < tolerance;
  return ci;
}

WedgeBound wedge_bound_check(const KernelForm& a, const KernelForm& b, const BundleSpec& spec,
                             const InfinityConnection& conn, const NPOptions& options) {
  if (a.degree != 1 || b.degree != 1) throw DegreeMismatchError("wedge bound takes 1-forms");
  NPOptions doubled = options;
  doubled.p = 2.0 * options.p;
  const NPConstants ca = np_estimate(a, spec, conn, doubled).aggregate;
  const NPConstants cb = np_estimate(b, spec, conn, doubled).aggregate;
  WedgeBound w;
  w.lhs = np_estimate(wedge(a, b), spec, conn, options).aggregate.c;
  w.rhs = 2.0 * (ca.c * cb.c_prime + ca.c_prime * cb.c);
  w.pass = w.lhs <= w.rhs;
  return w;
}

} // namespace loopspace
