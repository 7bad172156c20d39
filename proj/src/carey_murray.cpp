#include "loopspace/carey_murray.hpp"

#include <cmath>

#include "loopspace/battery.hpp"
#include "loopspace/stochastic_calculus.hpp"

namespace loopspace {

CareyMurrayParts carey_murray_parts(const BundleLoop& loop, const TotalTangent& a,
                                    const TotalTangent& b, const BundleSpec& spec) {
  CareyMurrayParts p;
  p.canonical = canonical_two_form(a.fiber, b.fiber);
  p.mu = mu_form(loop.base, loop.transport, spec, a.base, b.base);
  p.tau_nu = transgression_tau_nu(loop.base, chern_simons_form(spec), a.base, b.base);
  return p;
}

double carey_murray(const BundleLoop& loop, const TotalTangent& a, const TotalTangent& b,
                    const BundleSpec& spec) {
  return carey_murray_parts(loop, a, b, spec).total();
}

namespace {

using PartFn = std::function<double(const CareyMurrayParts&)>;

TotalForm part_form(const std::string& name, const FormContext& ctx, PartFn part) {
  return {name, 2, [ctx, part](const BundleLoop& loop, const std::vector<FieldGenerator>& x) {
            return part(carey_murray_parts(loop, realize(x.at(0), loop, ctx),
                                           realize(x.at(1), loop, ctx), ctx.spec));
          }};
}

double sign_of(int i) { return i % 2 == 0 ? 1.0 : -1.0; }

template <class T>
std::vector<T> omit(const std::vector<T>& v, int i, int j = -1) {
  std::vector<T> out;
  for (int k = 0; k < static_cast<int>(v.size()); ++k) {
    if (k != i && k != j) out.push_back(v[k]);
  }
  return out;
}

// Exterior derivative for frozen generators of type T on points of type P.
template <class P, class T>
double frozen_exterior_derivative(int degree, const P& point, const std::vector<T>& gens,
                                  const std::function<double(const P&, const std::vector<T>&)>& value,
                                  const std::function<P(const P&, const T&, double)>& flow,
                                  const std::function<T(const P&, const T&, const T&)>& bracket,
                                  double eps) {
  if (static_cast<int>(gens.size()) != degree + 1) {
    throw DegreeMismatchError("exterior derivative needs degree + 1 tangents");
  }
  auto derivative = [&](const T& dir, const std::vector<T>& args) {
    auto central = [&](double e) {
      return (value(flow(point, dir, e), args) - value(flow(point, dir, -e), args)) / (2.0 * e);
    };
    return (4.0 * central(0.5 * eps) - central(eps)) / 3.0;
  };
  double sum = 0.0;
  for (int i = 0; i <= degree; ++i) sum += sign_of(i) * derivative(gens[i], omit(gens, i));
  for (int i = 0; i <= degree; ++i) {
    for (int j = i + 1; j <= degree; ++j) {
      std::vector<T> args{bracket(point, gens[i], gens[j])};
      for (const T& g : omit(gens, i, j)) args.push_back(g);
      sum += sign_of(i + j) * value(point, args);
    }
  }
  return sum;
}

using FrameValues = std::vector<FrameVector>;

std::vector<AmbientVector> frame_field(const Manifold& m, const ManifoldPath& path,
                                       const FrameValues& h) {
  std::vector<AmbientVector> x(h.size());
  for (std::size_t k = 0; k < h.size(); ++k) x[k] = path.transport[k] * (m.frame() * h[k]);
  return x;
}

VectorFieldH as_field(FrameValues h) {
  h.front().setZero();
  h.back().setZero();
  return VectorFieldH::from_values(std::move(h));
}

double trapezoid_weight(int k, int n) { return (k == 0 || k == n) ? 0.5 / n : 1.0 / n; }

} // namespace

TotalForm fiber_canonical_form(const FormContext& ctx) {
  return part_form("c", ctx, [](const CareyMurrayParts& p) { return p.canonical; });
}

TotalForm base_mu_form(const FormContext& ctx) {
  return part_form("mu", ctx, [](const CareyMurrayParts& p) { return p.mu; });
}

TotalForm tau_nu_form(const FormContext& ctx) {
  return part_form("tau-nu", ctx, [](const CareyMurrayParts& p) { return p.tau_nu; });
}

TotalForm carey_murray_form(const FormContext& ctx) {
  return part_form("F_Q", ctx, [](const CareyMurrayParts& p) { return p.total(); });
}

TotalForm pullback_base(const BaseForm& sigma, const FormContext& ctx) {
  return {"pi*" + sigma.name, sigma.degree,
          [sigma, ctx](const BundleLoop& loop, const std::vector<FieldGenerator>& x) {
            std::vector<std::vector<AmbientVector>> t;
            for (const auto& g : x) t.push_back(realize(g, loop, ctx).base);
            return sigma.value(loop.base, t);
          }};
}

TotalForm pullback_fiber(const FiberForm& sigma, const FormContext& ctx) {
  return {"f*" + sigma.name, sigma.degree,
          [sigma, ctx](const BundleLoop& loop, const std::vector<FieldGenerator>& x) {
            std::vector<std::vector<AlgebraElement>> t;
            for (const auto& g : x) t.push_back(realize(g, loop, ctx).fiber);
            return sigma.value(loop.fiber, t);
          }};
}

double exterior_derivative_base(const BaseForm& sigma, const Manifold& m, const ManifoldPath& path,
                                const std::vector<std::vector<AmbientVector>>& tangents,
                                double eps) {
  std::vector<FrameValues> gens;
  for (const auto& x : tangents) {
    FrameValues h(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      h[k] = m.frame().transpose() * (path.transport[k].transpose() * x[k]);
    }
    gens.push_back(std::move(h));
  }
  std::function<double(const ManifoldPath&, const std::vector<FrameValues>&)> value =
      [&](const ManifoldPath& p, const std::vector<FrameValues>& hs) {
        std::vector<std::vector<AmbientVector>> xs;
        for (const auto& h : hs) xs.push_back(frame_field(m, p, h));
        return sigma.value(p, xs);
      };
  std::function<ManifoldPath(const ManifoldPath&, const FrameValues&, double)> flow =
      [&](const ManifoldPath& p, const FrameValues& h, double e) {
        const auto x = frame_field(m, p, h);
        std::vector<AmbientVector> pts(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) pts[k] = m.geodesic_exp(p.points[k], e * x[k]);
        return make_path(m, std::move(pts));
      };
  std::function<FrameValues(const ManifoldPath&, const FrameValues&, const FrameValues&)> bracket =
      [&](const ManifoldPath& p, const FrameValues& a, const FrameValues& b) {
        const auto ma = transport_derivative(m, as_field(a), p);
        const auto mb = transport_derivative(m, as_field(b), p);
        FrameValues out(a.size());
        for (std::size_t k = 0; k < a.size(); ++k) {
          const Eigen::VectorXd va = a[k], vb = b[k];
          out[k] = ma[k] * vb - mb[k] * va;
        }
        return out;
      };
  return frozen_exterior_derivative(sigma.degree, path, gens, value, flow, bracket, eps);
}

double exterior_derivative_fiber(const FiberForm& sigma, const GroupPath<Fiber>& path,
                                 const std::vector<std::vector<AlgebraElement>>& tangents,
                                 double eps) {
  using Values = std::vector<AlgebraElement>;
  std::function<double(const GroupPath<Fiber>&, const std::vector<Values>&)> value =
      [&](const GroupPath<Fiber>& p, const std::vector<Values>& ys) { return sigma.value(p, ys); };
  std::function<GroupPath<Fiber>(const GroupPath<Fiber>&, const Values&, double)> flow =
      [](const GroupPath<Fiber>& p, const Values& y, double e) {
        GroupPath<Fiber> out;
        for (std::size_t k = 0; k < p.points.size(); ++k) {
          out.points.push_back(p.points[k] * FiberElement(Fiber::exp(e * y[k])));
        }
        for (std::size_t k = 0; k + 1 < out.points.size(); ++k) {
          out.increments.push_back(
              Fiber::log_unchecked((out.points[k + 1] * out.points[k].inverse()).matrix()));
        }
        return out;
      };
  std::function<Values(const GroupPath<Fiber>&, const Values&, const Values&)> bracket =
      [](const GroupPath<Fiber>&, const Values& a, const Values& b) {
        Values out(a.size());
        for (std::size_t k = 0; k < a.size(); ++k) out[k] = Fiber::bracket(a[k], b[k]);
        return out;
      };
  return frozen_exterior_derivative(sigma.degree, path, tangents, value, flow, bracket, eps);
}

BaseForm mu_base_form(const BundleSpec& spec) {
  return {"mu", 2,
          [spec](const ManifoldPath& p, const std::vector<std::vector<AmbientVector>>& x) {
            return mu_form(p, bundle_transport(p, spec), spec, x.at(0), x.at(1));
          }};
}

FiberForm canonical_fiber_form() {
  return {"c", 2,
          [](const GroupPath<Fiber>&, const std::vector<std::vector<AlgebraElement>>& y) {
            return canonical_two_form(y.at(0), y.at(1));
          }};
}

BaseForm sample_base_one_form() {
  return {"base-one-form", 1,
          [](const ManifoldPath& p, const std::vector<std::vector<AmbientVector>>& x) {
            const int n = p.steps();
            double sum = 0.0;
            for (int k = 0; k <= n; ++k) {
              const AmbientVector& q = p.points[k];
              const int last = static_cast<int>(q.size()) - 1;
              AmbientVector c(q.size());
              for (int i = 0; i <= last; ++i) c[i] = q[i] * q[i];
              c[0] = std::sin(q[0]);
              c[1] = q[0] * q[1];
              c[last] = std::cos(q[last]);
              sum += trapezoid_weight(k, n) * c.dot(x.at(0)[k]);
            }
            return sum;
          }};
}

FiberForm sample_fiber_one_form() {
  return {"fiber-one-form", 1,
          [](const GroupPath<Fiber>& g, const std::vector<std::vector<AlgebraElement>>& y) {
            const int n = g.steps();
            double sum = 0.0;
            for (int k = 0; k <= n; ++k) {
              const auto& m = g.points[k].matrix();
              sum += trapezoid_weight(k, n) * Fiber::vee(0.5 * (m - m.adjoint())).dot(y.at(0)[k]);
            }
            return sum;
          }};
}

ClosednessSweep carey_murray_closedness(const BundleSpec& spec, const InfinityConnection& conn,
                                        const std::vector<int>& grids) {
  ClosednessSweep s;
  s.grids = grids;
  const FormContext ctx{spec, conn};
  const TotalForm f = carey_murray_form(ctx);
  const int d = spec.base().dim();
  s.types = {"HHH", "HHV", "HVV", "VVV"};
  s.by_type.assign(s.types.size(), {});
  for (int n : grids) {
    const BundleLoop loop = smooth_total_loop(spec, conn, n);
    auto h = [&](int i) { return FieldGenerator{FieldKind::horizontal, battery_field(n, d, i)}; };
    auto v = [&](int i) { return FieldGenerator{FieldKind::vertical, battery_field(n, 3, i)}; };
    const std::vector<std::vector<FieldGenerator>> triples = {
        {h(0), h(1), h(3)}, {h(0), h(1), v(2)}, {h(0), v(2), v(3)}, {v(2), v(3), v(0)}};
    double worst = 0.0;
    for (std::size_t i = 0; i < triples.size(); ++i) {
      s.by_type[i].push_back(std::abs(exterior_derivative(f, triples[i], loop, ctx)));
      worst = std::max(worst, s.by_type[i].back());
    }
    s.residuals.push_back(worst);
  }
  std::vector<double> x;
  for (int n : grids) x.push_back(static_cast<double>(n));
  s.order = grids.size() > 1 ? -loglog_slope(x, s.residuals) : 0.0;
  s.monotone = true;
  for (std::size_t i = 1; i < s.residuals.size(); ++i) {
    if (!(s.residuals[i] < s.residuals[i - 1])) s.monotone = false;
  }
  return s;
}

} // namespace loopspace
