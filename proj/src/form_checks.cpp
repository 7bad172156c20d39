#include <algorithm>
#include <cmath>
#include <numbers>

#include "experiment_rows.hpp"
#include "loopspace/battery.hpp"
#include "loopspace/carey_murray.hpp"
#include "loopspace/experiments.hpp"
#include "loopspace/forms.hpp"

namespace loopspace {

namespace {

constexpr double kPi = std::numbers::pi;

AlgebraPath trig_path(double freq, bool cosine, const AlgebraElement& dir) {
  if (cosine) {
    return {[=](double s) { return AlgebraElement((1.0 - std::cos(freq * kPi * s)) * dir); },
            [=](double s) { return AlgebraElement(freq * kPi * std::sin(freq * kPi * s) * dir); }};
  }
  return {[=](double s) { return AlgebraElement(std::sin(freq * kPi * s) * dir); },
          [=](double s) { return AlgebraElement(freq * kPi * std::cos(freq * kPi * s) * dir); }};
}

AlgebraPath scaled(const AlgebraPath& x, double c) {
  return {[=](double s) { return AlgebraElement(c * x.value(s)); },
          [=](double s) { return AlgebraElement(c * x.derivative(s)); }};
}

VectorFieldH sampled(const AlgebraPath& x, int n) {
  return VectorFieldH(n, 3, [x](double s) { return FrameVector(x.value(s)); });
}

// Swaps slots a and b of a kernel tensor whose slots all have size `dim`.
Eigen::VectorXd swap_slots(const Eigen::VectorXd& v, int slots, int dim, int a, int b) {
  Eigen::VectorXd out(v.size());
  std::vector<int> idx(slots);
  for (Eigen::Index flat = 0; flat < v.size(); ++flat) {
    Eigen::Index r = flat;
    for (int i = slots - 1; i >= 0; --i) {
      idx[i] = static_cast<int>(r % dim);
      r /= dim;
    }
    std::swap(idx[a], idx[b]);
    Eigen::Index target = 0;
    for (int i = 0; i < slots; ++i) target = target * dim + idx[i];
    out[target] = v[flat];
  }
  return out;
}

struct KernelInvariants {
  double antisymmetry = 0.0;
  double zero_mean = 0.0;
};

// Random-permutation antisymmetry within each block and slot-wise zero mean
// by two-point Gauss quadrature on `quadrature` cells.
KernelInvariants kernel_invariants(const KernelForm& sigma, const BundleLoop& loop, Rng& rng,
                                   int quadrature, int trials) {
  KernelInvariants r;
  for (const auto& [m, binder] : sigma.kernels) {
    const int h = sigma.degree - m;
    const BoundKernel k = binder(loop);
    const bool uniform_dim = (h == 0 || m == 0 || sigma.h_dim == sigma.v_dim);
    for (int trial = 0; trial < trials; ++trial) {
      // Fixed arguments on grid nodes, so every jump sits on a cell boundary.
      std::vector<double> s(h), t(m);
      const int n = loop.base.steps();
      auto node = [&] { return std::floor(rng.uniform() * n) / n; };
      for (double& v : s) v = node();
      for (double& v : t) v = node();
      const Eigen::VectorXd base = k(s, t);
      if (uniform_dim) {
        const int dim = h > 0 ? sigma.h_dim : sigma.v_dim;
        for (int a = 0; a + 1 < h; ++a) {
          std::vector<double> s2 = s;
          std::swap(s2[a], s2[a + 1]);
          const Eigen::VectorXd v = swap_slots(k(s2, t), sigma.degree, dim, a, a + 1);
          r.antisymmetry = std::max(r.antisymmetry, (v + base).norm());
        }
        for (int a = 0; a + 1 < m; ++a) {
          std::vector<double> t2 = t;
          std::swap(t2[a], t2[a + 1]);
          const Eigen::VectorXd v = swap_slots(k(s, t2), sigma.degree, dim, h + a, h + a + 1);
          r.antisymmetry = std::max(r.antisymmetry, (v + base).norm());
        }
      }
      for (int slot = 0; slot < sigma.degree; ++slot) {
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(base.size());
        const double g = 0.5 / std::sqrt(3.0);
        for (int q = 0; q < quadrature; ++q) {
          for (double offset : {0.5 - g, 0.5 + g}) {
            std::vector<double> s2 = s, t2 = t;
            (slot < h ? s2[slot] : t2[slot - h]) = (q + offset) / quadrature;
            mean += 0.5 * k(s2, t2) / quadrature;
          }
        }
        r.zero_mean = std::max(r.zero_mean, mean.norm());
      }
    }
  }
  return r;
}

double mu_on_smooth_loop(const BundleSpec& spec, int n) {
  const ManifoldPath base = smooth_loop(spec.base(), n);
  const auto x = field_values(spec.base(), battery_field(n, spec.base().dim(), 0), base);
  const auto y = field_values(spec.base(), battery_field(n, spec.base().dim(), 1), base);
  return mu_form(base, bundle_transport(base, spec), spec, x, y);
}

} // namespace

RunResult run_forms(const ExperimentConfig& config) {
  RunResult out;
  RowRecorder rec("forms", out);
  const BundleSpec spec = BundleSpec::from_name(config.bundle, config.bundle_parameter);
  const BundleSpec flat = BundleSpec::flat(spec.base().kind());
  const InfinityConnection conn;
  const FormContext ctx{spec, conn};
  const Manifold& man = spec.base();
  const int d = man.dim();
  const int n = config.grid;

  // Canonical cocycle on deterministic algebra paths.
  const AlgebraElement e1(1, 0, 0), e2(0, 1, 0), e3(0, 0, 1);
  const AlgebraPath kx = trig_path(2, false, e1), ky = trig_path(2, true, e1);
  const double c_value = canonical_two_form(kx, ky, 4096);
  rec.close("canonical-analytic-1/(4pi)", c_value, 1.0 / (4.0 * kPi), 1e-8);
  rec.close("canonical-bilinearity", canonical_two_form(scaled(kx, 2.0), ky, 4096), 2.0 * c_value,
            1e-12);
  rec.close("canonical-repeated-argument", canonical_two_form(kx, kx, 4096), 0.0, 1e-12);
  const AlgebraPath ly{[=](double s) { return AlgebraElement(s * (1 - s) * e2 + std::sin(2 * kPi * s) * e3); },
                       [=](double s) { return AlgebraElement((1 - 2 * s) * e2 + 2 * kPi * std::cos(2 * kPi * s) * e3); }};
  const AlgebraPath lz = trig_path(2, true, AlgebraElement(0.3, 0.4, -0.1));
  rec.close("canonical-cocycle", cocycle_residual(kx, ly, lz, 4096), 0.0, 1e-6);
  // The cyclic terms themselves are of order 1e-3.
  rec.at_least("canonical-cocycle-term-scale",
               std::abs(canonical_two_form(pointwise_bracket(kx, ly), lz, 4096)), 1e-4);

  // Kernel form of c against the same pair.
  Rng rng(config.seed, 0);
  const BundleLoop sampled_loop = sample_total(spec, n, rng);
  const VectorFieldH k1 = sampled(kx, n), k2 = sampled(ky, n);
  rec.close("canonical-kernel-quadrature",
            evaluate(vertical_canonical_form(d), sampled_loop, {}, {k1, k2}, 2 * n),
            1.0 / (4.0 * kPi), 2.0 / n);

  // mu and tau(nu).
  const BundleLoop loop = smooth_total_loop(spec, conn, n);
  const auto x = field_values(man, battery_field(n, d, 0), loop.base);
  const auto y = field_values(man, battery_field(n, d, 1), loop.base);
  const double mu_xy = mu_form(loop.base, loop.transport, spec, x, y);
  const double mu_yx = mu_form(loop.base, loop.transport, spec, y, x);
  rec.close("mu-antisymmetry", mu_xy + mu_yx, 0.0, 1e-10);
  rec.close("mu-repeated-argument", mu_form(loop.base, loop.transport, spec, x, x), 0.0, 1e-10);
  const double mu_fine = mu_on_smooth_loop(spec, 8192);
  // O(dt) against the N = 8192 quadrature.
  rec.close("mu-refined-grid-N8192", mu_xy, mu_fine, 4.0 * std::max(std::abs(mu_fine), 1e-3) / n);

  const AmbientThreeForm nu = chern_simons_form(spec);
  const double tn_xy = transgression_tau_nu(loop.base, nu, x, y);
  rec.close("tau-nu-antisymmetry", tn_xy + transgression_tau_nu(loop.base, nu, y, x), 0.0, 1e-10);
  rec.close("tau-nu-repeated-argument", transgression_tau_nu(loop.base, nu, x, x), 0.0, 1e-10);

  {
    const InfinityConnection c0;
    const BundleLoop fl = smooth_total_loop(flat, c0, n);
    const auto fx = field_values(man, battery_field(n, d, 0), fl.base);
    const auto fy = field_values(man, battery_field(n, d, 1), fl.base);
    rec.close("flat-mu", mu_form(fl.base, fl.transport, flat, fx, fy), 0.0, 1e-14);
    rec.close("flat-tau-nu", transgression_tau_nu(fl.base, chern_simons_form(flat), fx, fy), 0.0, 1e-14);
    const FormContext fctx{flat, c0};
    const FieldGenerator a{FieldKind::horizontal, battery_field(n, d, 0)};
    const FieldGenerator b{FieldKind::horizontal, battery_field(n, d, 1)};
    rec.close("flat-carey-murray-horizontal",
              carey_murray(fl, realize(a, fl, fctx), realize(b, fl, fctx), flat), 0.0, 1e-14);
  }

  // dnu = p_1 at random points.
  if (man.ambient_dim() == 4) {
    double worst = 0.0;
    Rng r(config.seed, 1);
    for (int trial = 0; trial < 20; ++trial) {
      AmbientVector v[5];
      for (auto& a : v) a = r.normal_vector(4);
      v[0].normalize();
      worst = std::max(worst, std::abs(exterior_derivative_three_form(nu, v[0], v[1], v[2], v[3], v[4]) -
                                       pontryagin_density(spec, v[0], v[1], v[2], v[3], v[4])));
    }
    rec.close("d-nu-equals-p1", worst, 0.0, 1e-5);
  }

  // F_Q on vertical fields reduces to c.
  {
    const TotalTangent v1 = vertical_field(k1, loop), v2 = vertical_field(k2, loop);
    rec.close("carey-murray-vertical-equals-c", carey_murray(loop, v1, v2, spec),
              canonical_two_form(v1.fiber, v2.fiber), 1e-14);
  }

  // Closedness sweep on smooth loops.
  const std::vector<int> sweep_grids = {256, 512, 1024, 2048};
  const ClosednessSweep sweep = carey_murray_closedness(spec, conn, sweep_grids);
  bool curved = false;
  for (double r : sweep.residuals) curved = curved || r > 1e-12;
  for (std::size_t i = 0; i < sweep_grids.size(); ++i) {
    const bool ok = !curved || i == 0 || sweep.residuals[i] < sweep.residuals[i - 1];
    rec.add("dF_Q-N" + std::to_string(sweep_grids[i]), sweep.residuals[i], 0.0, 0.0, 0.0, ok);
  }
  if (curved) {
    rec.add("dF_Q-order", sweep.order, 1.0, 0.0, 0.0, sweep.monotone && sweep.order >= 1.0);
  }
  std::vector<double> gx(sweep_grids.begin(), sweep_grids.end());
  SvgChart chart{"forms_closedness.svg", "Carey-Murray closedness on smooth loops", "N",
                 "|dF_Q|", true, true, {}};
  for (std::size_t t = 0; t < sweep.types.size(); ++t) {
    const auto& r = sweep.by_type[t];
    if (*std::max_element(r.begin(), r.end()) <= 1e-12) {
      rec.close("dF_Q-" + sweep.types[t] + "-vanishes", r.back(), 0.0, 1e-12);
      continue;
    }
    const double order = -loglog_slope(gx, r);
    rec.add("dF_Q-" + sweep.types[t] + "-order", order, 1.0, 0.0, 0.0, order >= 1.0);
    chart.series.push_back({sweep.types[t], gx, r});
  }

  // d^2 = 0 on a cylindrical 0-form.
  {
    const int m = 1024;
    const BundleLoop l = smooth_total_loop(spec, conn, m);
    const FieldGenerator h0{FieldKind::horizontal, battery_field(m, d, 0)};
    const FieldGenerator h1{FieldKind::horizontal, battery_field(m, d, 1)};
    const FieldGenerator v2{FieldKind::vertical, battery_field(m, 3, 2)};
    const FieldGenerator v3{FieldKind::vertical, battery_field(m, 3, 3)};
    const TotalForm df = functional_differential(
        battery_functional(2, man.ambient_dim() + 8, {0.5, 0.75}), ctx);
    rec.close("d-squared-HH", exterior_derivative(df, {h0, h1}, l, ctx), 0.0, 1e-5);
    rec.close("d-squared-HV", exterior_derivative(df, {h0, v2}, l, ctx), 0.0, 1e-5);
    rec.close("d-squared-VV", exterior_derivative(df, {v2, v3}, l, ctx), 0.0, 1e-5);

    // Naturality of the pullbacks.
    auto bases = [&](std::initializer_list<FieldGenerator> g) {
      std::vector<std::vector<AmbientVector>> v;
      for (const auto& f : g) v.push_back(realize(f, l, ctx).base);
      return v;
    };
    auto fibers = [&](std::initializer_list<FieldGenerator> g) {
      std::vector<std::vector<AlgebraElement>> v;
      for (const auto& f : g) v.push_back(realize(f, l, ctx).fiber);
      return v;
    };
    const FieldGenerator h3{FieldKind::horizontal, battery_field(m, d, 3)};
    const BaseForm b1 = sample_base_one_form();
    rec.close("pullback-base-naturality-HH", exterior_derivative(pullback_base(b1, ctx), {h0, h1}, l, ctx),
              exterior_derivative_base(b1, man, l.base, bases({h0, h1})), 1e-5);
    rec.close("pullback-base-naturality-HV", exterior_derivative(pullback_base(b1, ctx), {h0, v2}, l, ctx),
              0.0, 1e-5);
    const BaseForm mu = mu_base_form(spec);
    rec.close("pullback-base-naturality-mu-HHH",
              exterior_derivative(pullback_base(mu, ctx), {h0, h1, h3}, l, ctx),
              exterior_derivative_base(mu, man, l.base, bases({h0, h1, h3})), 1e-5);
    const FiberForm f1 = sample_fiber_one_form();
    rec.close("pullback-fiber-naturality-HH", exterior_derivative(pullback_fiber(f1, ctx), {h0, h1}, l, ctx),
              exterior_derivative_fiber(f1, l.fiber, fibers({h0, h1})), 1e-5);
    rec.close("pullback-fiber-naturality-HV", exterior_derivative(pullback_fiber(f1, ctx), {h0, v2}, l, ctx),
              exterior_derivative_fiber(f1, l.fiber, fibers({h0, v2})), 1e-5);
    rec.close("pullback-fiber-naturality-VV", exterior_derivative(pullback_fiber(f1, ctx), {v2, v3}, l, ctx),
              exterior_derivative_fiber(f1, l.fiber, fibers({v2, v3})), 1e-5);
  }

  // Kernel-form invariants over the battery on a sampled loop.
  {
    const int q = 2 * n;
    const std::vector<KernelForm> battery = {
        deterministic_form(d), holonomy_form(spec, 0), fiber_coordinate_form(spec, conn),
        vertical_canonical_form(d), wedge(holonomy_form(spec, 0), holonomy_form(spec, 1)),
        wedge(holonomy_form(spec, 0), fiber_coordinate_form(spec, conn))};
    Rng r(config.seed, 2);
    for (const KernelForm& f : battery) {
      const KernelInvariants inv = kernel_invariants(f, sampled_loop, r, q, 4);
      rec.close("kernel-antisymmetry-" + f.name, inv.antisymmetry, 0.0, 1e-10);
      rec.close("kernel-zero-mean-" + f.name, inv.zero_mean, 0.0, 1e-8);
    }

    const VectorFieldH h0 = battery_field(n, d, 0), h1 = battery_field(n, d, 1);
    const KernelForm a = holonomy_form(spec, 0), b = fiber_coordinate_form(spec, conn);
    const KernelForm ab = wedge(a, b);
    rec.close("evaluate-repeated-argument-canonical",
              evaluate(vertical_canonical_form(d), sampled_loop, {}, {k1, k1}, q), 0.0, 1e-10);
    rec.close("evaluate-repeated-argument-wedge", evaluate(ab, sampled_loop, {h0, h0}, {}, q), 0.0, 1e-10);
    rec.close("evaluate-zero-form", evaluate(zero_form(2, d), sampled_loop, {h0}, {k1}, q), 0.0, 0.0);
    rec.close("wedge-self-one-form", evaluate(wedge(b, b), sampled_loop, {h0}, {k1}, q), 0.0, 1e-10);
    rec.close("wedge-unit", evaluate(wedge(constant_form(1.0), b), sampled_loop, {h1}, {}, q),
              evaluate(b, sampled_loop, {h1}, {}, q), 1e-12);
    const double direct = evaluate(a, sampled_loop, {h0}, {}, q) * evaluate(b, sampled_loop, {}, {k2}, q) -
                          evaluate(a, sampled_loop, {}, {k2}, q) * evaluate(b, sampled_loop, {h0}, {}, q);
    rec.close("wedge-expansion", evaluate(ab, sampled_loop, {h0}, {k2}, q), direct, 1e-9);

    KernelForm fd = b;
    fd.derivative_kernels.clear();
    const FieldGenerator dirs[] = {{FieldKind::vertical, battery_field(n, 3, 2)},
                                   {FieldKind::horizontal, h1}};
    double worst = 0.0;
    for (const auto& dir : dirs) {
      worst = std::max(worst, std::abs(covariant_derivative(b, sampled_loop, {}, {k1}, dir, ctx, q) -
                                       covariant_derivative(fd, sampled_loop, {}, {k1}, dir, ctx, q)));
    }
    rec.close("covariant-analytic-vs-flow", worst, 0.0, 1e-5);

    const CylindricalFunctional f = battery_functional(3, man.ambient_dim() + 8, {0.25, 0.625});
    const KernelForm fb = multiply(f, b);
    const double fval = functional_form(f).value(sampled_loop, {});
    double leibniz = 0.0;
    for (const auto& dir : dirs) {
      const double lhs = covariant_derivative(fb, sampled_loop, {}, {k1}, dir, ctx, q);
      const double rhs =
          directional_derivative(functional_form(f), {}, dir, sampled_loop, ctx) *
              evaluate(b, sampled_loop, {}, {k1}, q) +
          fval * covariant_derivative(b, sampled_loop, {}, {k1}, dir, ctx, q);
      leibniz = std::max(leibniz, std::abs(lhs - rhs));
    }
    rec.close("covariant-leibniz", leibniz, 0.0, 1e-6);
    const FieldGenerator none{FieldKind::horizontal, VectorFieldH::zero(n, d)};
    rec.close("covariant-zero-direction", covariant_derivative(fd, sampled_loop, {}, {k1}, none, ctx, q),
              0.0, 1e-12);
  }

  std::vector<double> ref;
  for (int g : sweep_grids) ref.push_back(sweep.residuals.front() * std::pow(256.0 / g, 2));
  chart.series.push_back({"N^-2", gx, ref});
  out.charts.push_back(chart);
  return out;
}

} // namespace loopspace
