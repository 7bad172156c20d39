#include "loopspace/ibp.hpp"

#include <atomic>
#include <cmath>

#include "loopspace/battery.hpp"

namespace loopspace {

namespace {

struct Pair {
  int functional;
  int field;
};

// Keeps the Cameron-Martin energy of the translating paths near 1 so the
// Girsanov weights have moderate variance.
constexpr double kQuasiScale = 0.25;

int grid_index(double s, int n) { return static_cast<int>(std::lround(s * n)); }

// Per-pair lhs/rhs sample columns filled in parallel.
struct Columns {
  std::vector<std::vector<double>> lhs, rhs;
  Columns(std::size_t pairs, std::size_t samples)
      : lhs(pairs, std::vector<double>(samples)), rhs(pairs, std::vector<double>(samples)) {}
};

Eigen::VectorXd matrix_direction(const SU2::Matrix& m) { return flatten_matrix(m); }

} // namespace

Eigen::VectorXd flatten_matrix(const SU2::Matrix& m) {
  Eigen::VectorXd v(8);
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      v[2 * r + c] = m(r, c).real();
      v[4 + 2 * r + c] = m(r, c).imag();
    }
  }
  return v;
}

Eigen::VectorXd flatten_total(const AmbientVector& gamma, const SU2::Matrix& q) {
  Eigen::VectorXd v(gamma.size() + 8);
  v << gamma, flatten_matrix(q);
  return v;
}

std::vector<MCReport> group_ibp_battery(const IbpOptions& o) {
  const std::vector<double> times{0.5, 0.75};
  const std::vector<Pair> pairs{{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 0}, {1, 2}};
  const std::vector<bool> right{true, true, true, false, false, false};
  const int n = o.grid;
  std::vector<CylindricalFunctional> fs;
  std::vector<VectorFieldH> ks;
  for (const auto& p : pairs) {
    fs.push_back(battery_functional(p.functional, 8, times));
    ks.push_back(battery_field(n, 3, p.field));
  }
  std::vector<int> idx;
  for (double t : times) idx.push_back(grid_index(t, n));
  Columns cols(pairs.size(), o.samples);
  parallel_for(o.samples, [&](std::size_t i) {
    Rng rng(o.seed, i);
    const auto path = sample_brownian_motion<SU2>(n, rng);
    std::vector<Eigen::VectorXd> z;
    for (int k : idx) z.push_back(flatten_matrix(path.points[k].matrix()));
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      std::vector<Eigen::VectorXd> dz;
      for (int k : idx) {
        const SU2::Matrix& g = path.points[k].matrix();
        const SU2::Matrix kh = SU2::hat(ks[p].value(k));
        dz.push_back(matrix_direction(right[p] ? SU2::Matrix(g * kh) : SU2::Matrix(kh * g)));
      }
      const double div =
          right[p] ? divergence_right(ks[p], path) : divergence_left(ks[p], path);
      cols.lhs[p][i] = functional_derivative(fs[p], z, dz);
      cols.rhs[p][i] = fs[p].value(z) * div;
    }
  });
  std::vector<MCReport> out;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const std::string id = std::string("group-") + (right[p] ? "right-" : "left-") +
                           fs[p].name + "-k" + std::to_string(pairs[p].field);
    out.push_back(make_report(id, cols.lhs[p], cols.rhs[p], o.threshold));
  }
  return out;
}

BaseIbpResult base_ibp_battery(const Manifold& m, const IbpOptions& o) {
  const std::vector<double> times{1.0 / 3.0, 2.0 / 3.0};
  const std::vector<Pair> pairs{{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 0}, {2, 1}};
  const int n = o.grid;
  const int amb = m.ambient_dim();
  std::vector<CylindricalFunctional> fs;
  std::vector<VectorFieldH> hs;
  for (const auto& p : pairs) {
    fs.push_back(battery_functional(p.functional, amb, times));
    hs.push_back(battery_field(n, m.dim(), p.field));
  }
  std::vector<int> idx;
  for (double t : times) idx.push_back(grid_index(t, n));
  Columns with(pairs.size(), o.samples);
  std::vector<std::vector<double>> without(pairs.size(), std::vector<double>(o.samples));
  parallel_for(o.samples, [&](std::size_t i) {
    Rng rng(o.seed, i);
    const auto path = sample_brownian_bridge_manifold(m, n, rng);
    std::vector<Eigen::VectorXd> z;
    for (int k : idx) z.push_back(path.points[k]);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      std::vector<Eigen::VectorXd> dz;
      for (int k : idx) dz.push_back(path.transport[k] * (m.frame() * hs[p].value(k)));
      const double f = fs[p].value(z);
      with.lhs[p][i] = functional_derivative(fs[p], z, dz);
      with.rhs[p][i] = f * divergence_base(m, hs[p], path, true);
      without[p][i] = f * divergence_base(m, hs[p], path, false);
    }
  });
  BaseIbpResult r;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const std::string id = "base-" + m.name() + "-" + fs[p].name + "-h" +
                           std::to_string(pairs[p].field);
    r.with_ricci.push_back(make_report(id, with.lhs[p], with.rhs[p], o.threshold));
    r.without_ricci.push_back(
        make_report(id + "-no-ricci", with.lhs[p], without[p], o.threshold));
  }
  return r;
}

TotalIbpResult total_ibp_battery(const BundleSpec& spec, const IbpOptions& o,
                                 const InfinityConnection& conn) {
  const std::vector<double> times{1.0 / 3.0, 2.0 / 3.0};
  const std::vector<Pair> hpairs{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
  const std::vector<Pair> vpairs{{4, 0}, {1, 1}, {2, 2}, {0, 3}};
  const Manifold& m = spec.base();
  const int n = o.grid;
  const int dim = m.ambient_dim() + 8;
  std::vector<CylindricalFunctional> hf, vf;
  std::vector<VectorFieldH> hs, ks;
  for (const auto& p : hpairs) {
    hf.push_back(battery_functional(p.functional, dim, times));
    hs.push_back(battery_field(n, m.dim(), p.field));
  }
  for (const auto& p : vpairs) {
    vf.push_back(battery_functional(p.functional, dim, times));
    ks.push_back(battery_field(n, 3, p.field));
  }
  std::vector<int> idx;
  for (double t : times) idx.push_back(grid_index(t, n));
  Columns hc(hpairs.size(), o.samples), vc(vpairs.size(), o.samples);
  std::atomic<std::size_t> near_cut{0};
  parallel_for(o.samples, [&](std::size_t i) {
    Rng rng(o.seed, i);
    const BundleLoop loop = sample_total(spec, n, rng);
    if (loop.near_cut_locus()) ++near_cut;
    std::vector<Eigen::VectorXd> z;
    for (int k : idx) z.push_back(flatten_total(loop.base.points[k], loop.point(k).matrix()));
    const HolonomyCache cache = holonomy_cache(loop.base, loop.transport, spec);
    const HorizontalFieldOptions options{&cache, false};
    for (std::size_t p = 0; p < hpairs.size(); ++p) {
      const HorizontalField f = horizontal_field(hs[p], loop, spec, conn, options);
      std::vector<Eigen::VectorXd> dz;
      for (int k : idx) {
        dz.push_back(flatten_total(f.tangent.base[k],
                                   total_point_variation(loop, f.tangent, f.eta, k)));
      }
      const double div =
          divergence_base(m, hs[p], loop.base) + divergence_horizontal_fiber(f.xi, loop, conn);
      hc.lhs[p][i] = functional_derivative(hf[p], z, dz);
      hc.rhs[p][i] = hf[p].value(z) * div;
    }
    const std::vector<AlgebraElement> no_eta(n + 1, AlgebraElement::Zero());
    for (std::size_t p = 0; p < vpairs.size(); ++p) {
      const TotalTangent t = vertical_field(ks[p], loop);
      std::vector<Eigen::VectorXd> dz;
      for (int k : idx) dz.push_back(flatten_total(t.base[k], total_point_variation(loop, t, no_eta, k)));
      vc.lhs[p][i] = functional_derivative(vf[p], z, dz);
      vc.rhs[p][i] = vf[p].value(z) * divergence_vertical(ks[p], loop);
    }
  });
  TotalIbpResult r;
  r.near_cut = near_cut.load();
  for (std::size_t p = 0; p < hpairs.size(); ++p) {
    r.horizontal.push_back(make_report("total-" + spec.name() + "-horizontal-" + hf[p].name +
                                           "-h" + std::to_string(hpairs[p].field),
                                       hc.lhs[p], hc.rhs[p], o.threshold));
  }
  for (std::size_t p = 0; p < vpairs.size(); ++p) {
    r.vertical.push_back(make_report("total-" + spec.name() + "-vertical-" + vf[p].name +
                                         "-k" + std::to_string(vpairs[p].field),
                                     vc.lhs[p], vc.rhs[p], o.threshold));
  }
  return r;
}

QuasiInvarianceResult quasi_invariance_battery(const IbpOptions& o) {
  const int n = o.grid;
  const std::vector<int> fields{0, 1, 3};
  const std::vector<double> times{0.5, 0.75};
  std::vector<std::vector<GroupElement<SU2>>> ks;
  std::vector<CylindricalFunctional> fs;
  for (int f : fields) {
    const VectorFieldH k = battery_field(n, 3, f);
    std::vector<GroupElement<SU2>> path;
    for (int j = 0; j <= n; ++j) path.push_back(exp_map<SU2>(kQuasiScale * k.value(j)));
    ks.push_back(std::move(path));
    fs.push_back(battery_functional(f + 1, 8, times));
  }
  std::vector<int> idx;
  for (double t : times) idx.push_back(grid_index(t, n));
  const std::size_t c = fields.size();
  Columns dens(c, o.samples), com(c, o.samples);
  parallel_for(o.samples, [&](std::size_t i) {
    Rng rng(o.seed, i);
    const auto path = sample_brownian_motion<SU2>(n, rng);
    std::vector<Eigen::VectorXd> z;
    for (int k : idx) z.push_back(flatten_matrix(path.points[k].matrix()));
    for (std::size_t p = 0; p < c; ++p) {
      const double j = quasi_invariance_density(ks[p], path, TranslationSide::left);
      std::vector<Eigen::VectorXd> zt;
      for (int k : idx) zt.push_back(flatten_matrix((ks[p][k] * path.points[k]).matrix()));
      dens.lhs[p][i] = j;
      dens.rhs[p][i] = 1.0;
      com.lhs[p][i] = fs[p].value(zt);
      com.rhs[p][i] = fs[p].value(z) * j;
    }
  });
  QuasiInvarianceResult r;
  for (std::size_t p = 0; p < c; ++p) {
    const std::string k = "k" + std::to_string(fields[p]);
    r.density_mean.push_back(
        make_report("quasi-invariance-mean-" + k, dens.lhs[p], dens.rhs[p], o.threshold));
    r.change_of_measure.push_back(make_report("quasi-invariance-" + fs[p].name + "-" + k,
                                              com.lhs[p], com.rhs[p], o.threshold));
  }
  return r;
}

} // namespace loopspace
