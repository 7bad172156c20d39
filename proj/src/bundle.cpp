#include "loopspace/bundle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "loopspace/stochastic_calculus.hpp"

namespace loopspace {

namespace {

constexpr double kPi = std::numbers::pi;

AlgebraElement vee_skew(const Fiber::Matrix& m) {
  return Fiber::vee(0.5 * (m - m.adjoint()));
}

Eigen::Matrix3d skew(const AlgebraElement& a) {
  Eigen::Matrix3d s;
  s << 0, -a[2], a[1], a[2], 0, -a[0], -a[1], a[0], 0;
  return s;
}

Eigen::Matrix3d ad_inverse_transpose(const FiberElement& g) {
  return Fiber::adjoint(g.matrix()).transpose();
}

} // namespace

BundleSpec BundleSpec::flat(ManifoldKind base) {
  return BundleSpec(BundleKind::flat, Manifold(base), 0.0);
}

BundleSpec BundleSpec::maurer_cartan(double lambda) {
  return BundleSpec(BundleKind::maurer_cartan, Manifold(ManifoldKind::sphere3), lambda);
}

BundleSpec BundleSpec::abelian(ManifoldKind base, double beta) {
  return BundleSpec(BundleKind::abelian, Manifold(base), beta);
}

BundleSpec BundleSpec::from_name(const std::string& name, double parameter) {
  if (name == "flat-S2") return flat(ManifoldKind::sphere2);
  if (name == "flat-S3") return flat(ManifoldKind::sphere3);
  if (name == "flat-R2") return flat(ManifoldKind::plane);
  if (name == "mc-S3") return maurer_cartan(parameter);
  if (name == "abelian-S2") return abelian(ManifoldKind::sphere2, parameter);
  if (name == "abelian-R2") return abelian(ManifoldKind::plane, parameter);
  throw std::invalid_argument("unknown bundle instance: " + name);
}

std::string BundleSpec::name() const {
  switch (kind_) {
    case BundleKind::flat: return "flat-" + base_.name();
    case BundleKind::maurer_cartan: return "mc-S3";
    case BundleKind::abelian: return "abelian-" + base_.name();
  }
  return "";
}

Fiber::Matrix quaternion_matrix(const AmbientVector& p) {
  return p[0] * Fiber::Matrix::Identity() + Fiber::hat(AlgebraElement(p[1], p[2], p[3]));
}

AlgebraElement BundleSpec::connection(const AmbientVector& p, const AmbientVector& v) const {
  switch (kind_) {
    case BundleKind::flat: return AlgebraElement::Zero();
    case BundleKind::maurer_cartan:
      return parameter_ * vee_skew(quaternion_matrix(p).adjoint() * quaternion_matrix(v));
    case BundleKind::abelian:
      return AlgebraElement(0, 0, 0.5 * parameter_ * (p[0] * v[1] - p[1] * v[0]));
  }
  return AlgebraElement::Zero();
}

AlgebraElement BundleSpec::connection_differential(const AmbientVector&, const AmbientVector& u,
                                                   const AmbientVector& v) const {
  switch (kind_) {
    case BundleKind::flat: return AlgebraElement::Zero();
    case BundleKind::maurer_cartan:
      return 2.0 * parameter_ * vee_skew(quaternion_matrix(u).adjoint() * quaternion_matrix(v));
    case BundleKind::abelian:
      return AlgebraElement(0, 0, parameter_ * (u[0] * v[1] - u[1] * v[0]));
  }
  return AlgebraElement::Zero();
}

AlgebraElement BundleSpec::curvature(const AmbientVector& p, const AmbientVector& u,
                                     const AmbientVector& v) const {
  if (kind_ == BundleKind::flat) return AlgebraElement::Zero();
  return connection_differential(p, u, v) + Fiber::bracket(connection(p, u), connection(p, v));
}

BundleTransport bundle_transport(const ManifoldPath& base_loop, const BundleSpec& spec) {
  const int n = base_loop.steps();
  BundleTransport t;
  t.tau.assign(n + 1, FiberElement::identity());
  if (spec.kind() != BundleKind::flat) {
    for (int k = 0; k < n; ++k) {
      const AmbientVector& p = base_loop.points[k];
      const AmbientVector& q = base_loop.points[k + 1];
      const AmbientVector mid = 0.5 * (p + q);
      t.tau[k + 1] = exp_map<Fiber>(-spec.connection(mid, q - p)) * t.tau[k];
    }
  }
  t.holonomy = t.tau.back();
  return t;
}

HolonomyCache holonomy_cache(const ManifoldPath& base_loop, const BundleTransport& t,
                             const BundleSpec& spec) {
  const int n = base_loop.steps();
  HolonomyCache c;
  c.ad_mid.resize(n);
  for (int k = 0; k < n; ++k) {
    const AmbientVector& p = base_loop.points[k];
    const AmbientVector& q = base_loop.points[k + 1];
    const FiberElement tau_mid =
        exp_map<Fiber>(-0.5 * spec.connection(0.5 * (p + q), q - p)) * t.tau[k];
    c.ad_mid[k] = ad_inverse_transpose(tau_mid);
  }
  return c;
}

std::vector<AlgebraElement> holonomy_increments(const ManifoldPath& base_loop,
                                                 const BundleTransport& t,
                                                 const BundleSpec& spec,
                                                 const std::vector<AmbientVector>& x,
                                                 const HolonomyCache* cache) {
  const int n = base_loop.steps();
  std::vector<AlgebraElement> inc(n, AlgebraElement::Zero());
  if (spec.kind() == BundleKind::flat) return inc;
  HolonomyCache local;
  if (cache == nullptr) {
    local = holonomy_cache(base_loop, t, spec);
    cache = &local;
  }
  for (int k = 0; k < n; ++k) {
    const AmbientVector& p = base_loop.points[k];
    const AmbientVector& q = base_loop.points[k + 1];
    const AmbientVector xm = 0.5 * (x[k] + x[k + 1]);
    inc[k] = cache->ad_mid[k] * spec.curvature(0.5 * (p + q), q - p, xm);
  }
  return inc;
}

AlgebraElement holonomy_derivative(const ManifoldPath& base_loop, const BundleTransport& t,
                                   const BundleSpec& spec, const std::vector<AmbientVector>& x) {
  AlgebraElement sum = AlgebraElement::Zero();
  for (const auto& v : holonomy_increments(base_loop, t, spec, x, nullptr)) sum += v;
  return sum;
}

std::vector<AlgebraElement> partial_holonomy_derivative(const ManifoldPath& base_loop,
                                                        const BundleTransport& t,
                                                        const BundleSpec& spec,
                                                        const std::vector<AmbientVector>& x,
                                                        const HolonomyCache* cache) {
  const int n = base_loop.steps();
  std::vector<AlgebraElement> eta(n + 1, AlgebraElement::Zero());
  if (spec.kind() == BundleKind::flat) return eta;
  const auto inc = holonomy_increments(base_loop, t, spec, x, cache);
  AlgebraElement cum = AlgebraElement::Zero();
  for (int k = 0; k <= n; ++k) {
    eta[k] = cum - ad_inverse_transpose(t.tau[k]) * spec.connection(base_loop.points[k], x[k]);
    if (k < n) cum += inc[k];
  }
  return eta;
}

double section_phi(SectionProfile profile, double s) {
  if (profile == SectionProfile::linear) return s;
  return s - std::sin(2.0 * kPi * s) / (2.0 * kPi);
}

double section_phi_derivative(SectionProfile profile, double s) {
  if (profile == SectionProfile::linear) return 1.0;
  return 1.0 - std::cos(2.0 * kPi * s);
}

FiberElement InfinityConnection::local_section(const FiberElement& g1, double s) const {
  if (s == 0.0) return FiberElement::identity();
  if (s == 1.0) {
    log_map(g1);
    return g1;
  }
  return exp_map<Fiber>(phi(s) * log_map(g1));
}

AlgebraElement InfinityConnection::section_derivative(const FiberElement& g1,
                                                      const AlgebraElement& xi, double s) const {
  const AlgebraElement y = log_map(g1);
  const double f = phi(s);
  if (f == 0.0) return AlgebraElement::Zero();
  // ad_Y = -2 [Y]_x in these coordinates; its rotation angle is a = 2|Y|.
  const Eigen::Matrix3d m = -2.0 * skew(y);
  const Eigen::Matrix3d m2 = m * m;
  const double a = 2.0 * y.norm();
  const double c_inv = a < 1e-4 ? 1.0 / 12.0 + a * a / 720.0
                                 : 1.0 / (a * a) - 1.0 / (2.0 * a * std::tan(0.5 * a));
  const Eigen::Matrix3d j_inv = Eigen::Matrix3d::Identity() - 0.5 * m + c_inv * m2;
  const double b = f * a;
  const double c1 = b < 1e-4 ? 0.5 - b * b / 24.0 : (1.0 - std::cos(b)) / (b * b);
  const double c3 = b < 1e-4 ? 1.0 / 6.0 - b * b / 120.0 : (b - std::sin(b)) / (b * b * b);
  const Eigen::Matrix3d j_phi = Eigen::Matrix3d::Identity() + c1 * f * m + c3 * f * f * m2;
  return f * (j_phi * (j_inv * xi));
}

AlgebraElement InfinityConnection::form(const FiberElement& g1, const AlgebraElement& xi,
                                        double s) const {
  return section_derivative(g1, xi, s) - phi(s) * xi;
}

FiberElement local_section(const FiberElement& g1, double s) {
  return InfinityConnection().local_section(g1, s);
}

AlgebraElement infinity_connection_form(const FiberElement& g1, const AlgebraElement& xi,
                                        double s) {
  return InfinityConnection().form(g1, xi, s);
}

bool BundleLoop::near_cut_locus() const {
  return Fiber::cut_margin(holonomy().inverse().matrix()) < kDefaultCutMargin;
}

BundleLoop make_bundle_loop(const BundleSpec& spec, ManifoldPath base, GroupPath<Fiber> fiber) {
  BundleLoop loop;
  loop.transport = bundle_transport(base, spec);
  loop.base = std::move(base);
  loop.fiber = std::move(fiber);
  return loop;
}

BundleLoop sample_total(const BundleSpec& spec, int grid_size, Rng& rng) {
  Rng base_rng = rng.split(0);
  Rng fiber_rng = rng.split(1);
  BundleLoop loop;
  loop.base = sample_brownian_bridge_manifold(spec.base(), grid_size, base_rng);
  loop.transport = bundle_transport(loop.base, spec);
  loop.fiber = sample_brownian_bridge<Fiber>(loop.holonomy().inverse(), grid_size, fiber_rng);
  return loop;
}

TotalTangent& TotalTangent::operator+=(const TotalTangent& o) {
  for (std::size_t k = 0; k < base.size(); ++k) base[k] += o.base[k];
  for (std::size_t k = 0; k < fiber.size(); ++k) fiber[k] += o.fiber[k];
  return *this;
}

TotalTangent TotalTangent::operator-(const TotalTangent& o) const {
  TotalTangent r = *this;
  for (std::size_t k = 0; k < base.size(); ++k) r.base[k] -= o.base[k];
  for (std::size_t k = 0; k < fiber.size(); ++k) r.fiber[k] -= o.fiber[k];
  return r;
}

double TotalTangent::max_norm() const {
  double m = 0.0;
  for (const auto& b : base) m = std::max(m, b.norm());
  for (const auto& f : fiber) m = std::max(m, f.norm());
  return m;
}

HorizontalField horizontal_field_from_values(const std::vector<FrameVector>& h,
                                             const BundleLoop& loop, const BundleSpec& spec,
                                             const InfinityConnection& conn,
                                             const HorizontalFieldOptions& options) {
  const Manifold& m = spec.base();
  const int n = loop.base.steps();
  HorizontalField f;
  f.base_values.resize(n + 1);
  for (int k = 0; k <= n; ++k) f.base_values[k] = loop.base.transport[k] * (m.frame() * h[k]);
  f.eta = partial_holonomy_derivative(loop.base, loop.transport, spec, f.base_values,
                                      options.cache);
  f.xi = -f.eta.back();
  f.tangent.base = f.base_values;
  f.tangent.fiber.resize(n + 1);
  for (int k = 0; k <= n; ++k) {
    f.tangent.fiber[k] =
        ad_inverse_transpose(loop.fiber.points[k]) * (conn.phi(loop.base.time(k)) * f.xi);
  }
  const FiberElement g1 = loop.holonomy().inverse();
  if (options.connection_part && Fiber::cut_margin(g1.matrix()) >= kDefaultCutMargin) {
    f.connection_part.resize(n + 1);
    for (int k = 0; k <= n; ++k) {
      f.connection_part[k] =
          -(ad_inverse_transpose(loop.fiber.points[k]) * conn.form(g1, f.xi, loop.base.time(k)));
    }
  }
  return f;
}

HorizontalField horizontal_field(const VectorFieldH& h, const BundleLoop& loop,
                                 const BundleSpec& spec, const InfinityConnection& conn,
                                 const HorizontalFieldOptions& options) {
  std::vector<FrameVector> values(h.steps() + 1);
  for (int k = 0; k <= h.steps(); ++k) values[k] = h.value(k);
  return horizontal_field_from_values(values, loop, spec, conn, options);
}

TotalTangent vertical_field(const VectorFieldH& k, const BundleLoop& loop) {
  const int n = loop.base.steps();
  if (k.steps() != n) throw std::invalid_argument("grid mismatch");
  TotalTangent t;
  const int amb = static_cast<int>(loop.base.points[0].size());
  t.base.assign(n + 1, AmbientVector::Zero(amb));
  t.fiber.resize(n + 1);
  for (int j = 0; j <= n; ++j) t.fiber[j] = k.value(j);
  return t;
}

double vertical_norm_squared(const VectorFieldH& k) { return k.norm_squared(); }

Fiber::Matrix total_point_variation(const BundleLoop& loop, const TotalTangent& t,
                                    const std::vector<AlgebraElement>& eta, int k) {
  const Fiber::Matrix& g = loop.fiber.points[k].matrix();
  return loop.transport.tau[k].matrix() * (Fiber::hat(eta[k]) * g + g * Fiber::hat(t.fiber[k]));
}

double divergence_vertical(const VectorFieldH& k, const BundleLoop& loop) {
  return divergence_right(k, loop.fiber);
}

double divergence_horizontal_fiber(const AlgebraElement& xi, const BundleLoop& loop,
                                   const InfinityConnection& conn) {
  const int n = loop.fiber.steps();
  double s = 0.0;
  for (int j = 0; j < n; ++j) {
    const double dphi = (conn.phi(loop.fiber.time(j + 1)) - conn.phi(loop.fiber.time(j))) * n;
    s += dphi * xi.dot(loop.fiber.increments[j]);
  }
  const FiberElement h = loop.holonomy().inverse();
  const AlgebraElement log_h = Fiber::log_unchecked(h.matrix());
  const double theta = log_h.norm();
  if (theta > 0.0) s -= bridge_drift_factor<Fiber>(1.0, theta) * log_h.dot(xi);
  return s;
}

double divergence_horizontal(const VectorFieldH& h, const BundleLoop& loop,
                             const BundleSpec& spec, const InfinityConnection& conn) {
  const HorizontalField f = horizontal_field(h, loop, spec, conn);
  return divergence_base(spec.base(), h, loop.base) + divergence_horizontal_fiber(f.xi, loop, conn);
}

TotalTangent BracketDecomposition::total() const {
  TotalTangent t = horizontal;
  for (std::size_t k = 0; k < t.fiber.size(); ++k) t.fiber[k] += r_infinity[k];
  return t;
}

BracketDecomposition bracket_horizontal(const VectorFieldH& h1, const VectorFieldH& h2,
                                        const BundleLoop& loop, const BundleSpec& spec,
                                        const InfinityConnection& conn) {
  const Manifold& m = spec.base();
  const int n = loop.base.steps();
  const auto m1 = transport_derivative(m, h1, loop.base);
  const auto m2 = transport_derivative(m, h2, loop.base);
  BracketDecomposition d;
  d.h_hat.resize(n + 1);
  for (int k = 0; k <= n; ++k) {
    const Eigen::VectorXd a = h1.value(k), b = h2.value(k);
    d.h_hat[k] = m1[k] * b - m2[k] * a;
  }
  d.horizontal = horizontal_field_from_values(d.h_hat, loop, spec, conn).tangent;
  const AlgebraElement xi1 = horizontal_field(h1, loop, spec, conn).xi;
  const AlgebraElement xi2 = horizontal_field(h2, loop, spec, conn).xi;
  const AlgebraElement c = Fiber::bracket(xi1, xi2);
  d.r_infinity.resize(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double f = conn.phi(loop.base.time(k));
    d.r_infinity[k] = ad_inverse_transpose(loop.fiber.points[k]) * (f * (1.0 - f) * c);
  }
  return d;
}

TotalTangent bracket_vertical(const VectorFieldH& k1, const VectorFieldH& k2,
                              const BundleLoop& loop) {
  TotalTangent t = vertical_field(k1, loop);
  for (int j = 0; j <= k1.steps(); ++j) {
    t.fiber[j] = Fiber::bracket(AlgebraElement(k1.value(j)), AlgebraElement(k2.value(j)));
  }
  return t;
}

TotalTangent bracket_mixed(const VectorFieldH&, const VectorFieldH& k, const BundleLoop& loop) {
  TotalTangent t = vertical_field(k, loop);
  for (auto& f : t.fiber) f.setZero();
  return t;
}

BundleLoop flow_total(const BundleLoop& loop, const TotalTangent& t, double eps,
                      const BundleSpec& spec) {
  const Manifold& m = spec.base();
  const int n = loop.base.steps();
  std::vector<AmbientVector> pts(n + 1);
  for (int k = 0; k <= n; ++k) pts[k] = m.geodesic_exp(loop.base.points[k], eps * t.base[k]);
  GroupPath<Fiber> fiber;
  fiber.points.resize(n + 1);
  for (int k = 0; k <= n; ++k) {
    fiber.points[k] = loop.fiber.points[k] * exp_map<Fiber>(eps * t.fiber[k]);
  }
  fiber.increments.resize(n);
  for (int k = 0; k < n; ++k) {
    fiber.increments[k] =
        Fiber::log_unchecked((fiber.points[k + 1] * fiber.points[k].inverse()).matrix());
  }
  return make_bundle_loop(spec, make_path(m, std::move(pts)), std::move(fiber));
}

} // namespace loopspace

namespace loopspace {

double AmbientTangent::max_norm() const {
  double m = 0.0;
  for (const auto& b : base) m = std::max(m, b.norm());
  for (const auto& f : fiber) m = std::max(m, f.norm());
  return m;
}

AmbientTangent AmbientTangent::operator-(const AmbientTangent& o) const {
  AmbientTangent r = *this;
  for (std::size_t k = 0; k < base.size(); ++k) r.base[k] -= o.base[k];
  for (std::size_t k = 0; k < fiber.size(); ++k) r.fiber[k] -= o.fiber[k];
  return r;
}

AmbientTangent to_ambient(const BundleLoop& loop, const TotalTangent& t) {
  AmbientTangent a;
  a.base = t.base;
  a.fiber.resize(t.fiber.size());
  for (std::size_t k = 0; k < t.fiber.size(); ++k) {
    a.fiber[k] = loop.fiber.points[k].matrix() * Fiber::hat(t.fiber[k]);
  }
  return a;
}

namespace {

AmbientTangent directional(const TotalField& along, const TotalField& field,
                           const BundleLoop& loop, const BundleSpec& spec, double eps) {
  const TotalTangent dir = along(loop);
  const BundleLoop plus = flow_total(loop, dir, eps, spec);
  const BundleLoop minus = flow_total(loop, dir, -eps, spec);
  AmbientTangent a = to_ambient(plus, field(plus));
  const AmbientTangent b = to_ambient(minus, field(minus));
  for (std::size_t k = 0; k < a.base.size(); ++k) a.base[k] = (a.base[k] - b.base[k]) / (2 * eps);
  for (std::size_t k = 0; k < a.fiber.size(); ++k) a.fiber[k] = (a.fiber[k] - b.fiber[k]) / (2 * eps);
  return a;
}

} // namespace

AmbientTangent flow_commutator(const TotalField& a, const TotalField& b, const BundleLoop& loop,
                               const BundleSpec& spec, double eps) {
  return directional(a, b, loop, spec, eps) - directional(b, a, loop, spec, eps);
}

} // namespace loopspace
