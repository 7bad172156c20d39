#include "loopspace/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "loopspace/lie_group.hpp"

namespace loopspace {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kAntipodeMargin = 1e-8;

} // namespace

Manifold::Manifold(ManifoldKind kind) : kind_(kind) {
  switch (kind) {
    case ManifoldKind::sphere2: dim_ = 2; ambient_ = 3; break;
    case ManifoldKind::sphere3: dim_ = 3; ambient_ = 4; break;
    case ManifoldKind::plane: dim_ = 2; ambient_ = 2; break;
  }
  base_ = AmbientVector::Zero(ambient_);
  frame_ = AmbientMatrix::Zero(ambient_, dim_);
  switch (kind) {
    case ManifoldKind::sphere2:
      base_[2] = 1.0;
      frame_(0, 0) = 1.0;
      frame_(1, 1) = 1.0;
      break;
    case ManifoldKind::sphere3:
      base_[0] = 1.0;
      for (int j = 0; j < 3; ++j) frame_(j + 1, j) = 1.0;
      break;
    case ManifoldKind::plane:
      frame_(0, 0) = 1.0;
      frame_(1, 1) = 1.0;
      break;
  }
}

Manifold Manifold::from_name(const std::string& name) {
  if (name == "S2") return Manifold(ManifoldKind::sphere2);
  if (name == "S3") return Manifold(ManifoldKind::sphere3);
  if (name == "R2") return Manifold(ManifoldKind::plane);
  throw std::invalid_argument("unknown manifold: " + name);
}

std::string Manifold::name() const {
  switch (kind_) {
    case ManifoldKind::sphere2: return "S2";
    case ManifoldKind::sphere3: return "S3";
    case ManifoldKind::plane: return "R2";
  }
  return "";
}

AmbientVector Manifold::project_tangent(const AmbientVector& p, const AmbientVector& v) const {
  if (flat()) return v;
  return v - v.dot(p) * p;
}

AmbientVector Manifold::normalize(const AmbientVector& p) const {
  if (flat()) return p;
  return p / p.norm();
}

double Manifold::distance(const AmbientVector& p, const AmbientVector& q) const {
  if (flat()) return (q - p).norm();
  const double c = p.dot(q);
  return std::atan2((q - c * p).norm(), c);
}

AmbientVector Manifold::geodesic_exp(const AmbientVector& p, const AmbientVector& v) const {
  if (flat()) return p + v;
  const double n = v.norm();
  if (n == 0.0) return p;
  return normalize(std::cos(n) * p + (std::sin(n) / n) * v);
}

AmbientVector Manifold::log_map(const AmbientVector& p, const AmbientVector& q) const {
  if (flat()) return q - p;
  const double c = p.dot(q);
  const AmbientVector w = q - c * p;
  const double s = w.norm();
  const double theta = std::atan2(s, c);
  if (kPi - theta < kAntipodeMargin) throw StepTooLargeError("points nearly antipodal");
  if (s == 0.0) return AmbientVector::Zero(ambient_);
  return (theta / s) * w;
}

AmbientMatrix Manifold::step_transport(const AmbientVector& p, const AmbientVector& q) const {
  AmbientMatrix r = AmbientMatrix::Identity(ambient_, ambient_);
  if (flat()) return r;
  const double c = p.dot(q);
  const AmbientVector w = q - c * p;
  const double s = w.norm();
  const double theta = std::atan2(s, c);
  if (kPi - theta < kAntipodeMargin) throw StepTooLargeError("points nearly antipodal");
  if (s == 0.0) return r;
  const AmbientVector u = w / s;
  r += std::sin(theta) * (u * p.transpose() - p * u.transpose()) +
       (std::cos(theta) - 1.0) * (p * p.transpose() + u * u.transpose());
  return r;
}

AmbientVector Manifold::curvature(const AmbientVector& x, const AmbientVector& y,
                                  const AmbientVector& z) const {
  if (flat()) return AmbientVector::Zero(ambient_);
  return y.dot(z) * x - x.dot(z) * y;
}

AmbientVector Manifold::ricci(const AmbientVector& x) const { return ricci_constant() * x; }

double sphere2_heat_kernel(double t, double theta, int order) {
  const double c = std::cos(theta);
  double p_prev = 1.0, p = c, sum = 1.0;
  for (int l = 1; l <= order; ++l) {
    sum += (2.0 * l + 1.0) * p * std::exp(-0.5 * l * (l + 1) * t);
    const double next = ((2.0 * l + 1.0) * c * p - l * p_prev) / (l + 1.0);
    p_prev = p;
    p = next;
  }
  return sum;
}

double Manifold::bridge_drift_factor(double remaining_time, double theta) const {
  const double t = remaining_time;
  switch (kind_) {
    case ManifoldKind::plane: return 1.0 / t;
    case ManifoldKind::sphere3: return loopspace::bridge_drift_factor<SU2>(t, theta);
    case ManifoldKind::sphere2: break;
  }
  if (t < 0.05) {
    const double th = std::min(theta, kPi - 1e-3);
    const double corr = th < 1e-4 ? 1.0 / 3.0 + th * th / 45.0
                                   : (1.0 / th - std::cos(th) / std::sin(th)) / th;
    return 1.0 / t - 0.5 * corr;
  }
  // Legendre series with P'_{l+1} = P'_{l-1} + (2l+1) P_l.
  const double c = std::cos(theta);
  double p_prev = 1.0, p = c;
  double d_prev = 0.0, d = 1.0;
  double num = 0.0, den = 1.0;
  for (int l = 1; l <= 80; ++l) {
    const double w = (2.0 * l + 1.0) * std::exp(-0.5 * l * (l + 1) * t);
    if (w < 1e-300) break;
    den += w * p;
    num += w * d;
    const double p_next = ((2.0 * l + 1.0) * c * p - l * p_prev) / (l + 1.0);
    const double d_next = d_prev + (2.0 * l + 1.0) * p;
    p_prev = p;
    p = p_next;
    d_prev = d;
    d = d_next;
  }
  const double sinc = theta < 1e-8 ? 1.0 : std::sin(theta) / theta;
  return sinc * num / den;
}

ManifoldPoint geodesic_exp(const Manifold& m, const ManifoldPoint& x, const TangentVector& v) {
  return {m.geodesic_exp(x.coords, v.vec)};
}

AmbientVector curvature(const Manifold& m, const TangentVector& x, const TangentVector& y,
                        const TangentVector& z) {
  return m.curvature(x.vec, y.vec, z.vec);
}

AmbientVector ricci(const Manifold& m, const TangentVector& x) { return m.ricci(x.vec); }

int ManifoldPath::index_of(double s) const {
  const int k = static_cast<int>(std::lround(s * steps()));
  if (std::abs(k - s * steps()) > 1e-9) throw std::invalid_argument("time not on grid");
  return k;
}

void parallel_transport(const Manifold& m, ManifoldPath& path) {
  const int n = path.steps();
  path.kind = m.kind();
  path.transport.assign(n + 1, AmbientMatrix::Identity(m.ambient_dim(), m.ambient_dim()));
  path.antidevelopment.assign(n, FrameVector::Zero(m.dim()));
  for (int k = 0; k < n; ++k) {
    const AmbientVector& p = path.points[k];
    const AmbientVector& q = path.points[k + 1];
    path.antidevelopment[k] =
        m.frame().transpose() * (path.transport[k].transpose() * m.log_map(p, q));
    path.transport[k + 1] = m.step_transport(p, q) * path.transport[k];
  }
}

ManifoldPath make_path(const Manifold& m, std::vector<AmbientVector> points) {
  ManifoldPath path;
  path.points = std::move(points);
  parallel_transport(m, path);
  return path;
}

ManifoldPath make_path(const Manifold& m, int grid_size,
                       const std::function<AmbientVector(double)>& curve) {
  std::vector<AmbientVector> pts(grid_size + 1);
  for (int k = 0; k <= grid_size; ++k) {
    pts[k] = m.normalize(curve(static_cast<double>(k) / grid_size));
  }
  return make_path(m, std::move(pts));
}

namespace {

AmbientVector tangent_noise(const Manifold& m, const AmbientVector& p, Rng& rng) {
  AmbientVector g(m.ambient_dim());
  for (int i = 0; i < m.ambient_dim(); ++i) g[i] = rng.normal();
  return m.project_tangent(p, g);
}

} // namespace

ManifoldPath sample_brownian_motion_manifold(const Manifold& m, int grid_size, Rng& rng) {
  if (grid_size < 2) throw std::invalid_argument("grid_size must be at least 2");
  const double sq = std::sqrt(1.0 / grid_size);
  std::vector<AmbientVector> pts(grid_size + 1);
  pts[0] = m.base_point();
  for (int k = 0; k < grid_size; ++k) {
    pts[k + 1] = m.geodesic_exp(pts[k], sq * tangent_noise(m, pts[k], rng));
  }
  return make_path(m, std::move(pts));
}

ManifoldPath sample_brownian_bridge_manifold(const Manifold& m, int grid_size, Rng& rng) {
  if (grid_size < 2) throw std::invalid_argument("grid_size must be at least 2");
  const AmbientVector& x = m.base_point();
  const double dt = 1.0 / grid_size;
  std::vector<AmbientVector> pts(grid_size + 1);
  pts[0] = x;
  double forcing = 0.0;
  for (int k = 0; k < grid_size; ++k) {
    const AmbientVector& p = pts[k];
    const double remaining = 1.0 - k * dt;
    const double theta = m.distance(p, x);
    AmbientVector step = AmbientVector::Zero(m.ambient_dim());
    if (kPi - theta > 1e-6 || m.flat()) {
      step = (m.bridge_drift_factor(remaining, theta) * dt) * m.log_map(p, x);
    }
    const double var = dt * (remaining - dt) / remaining;
    if (var > 0.0) step += std::sqrt(var) * tangent_noise(m, p, rng);
    const AmbientVector proposal = m.geodesic_exp(p, step);
    if (k + 1 == grid_size) {
      forcing = m.distance(proposal, x);
      pts[k + 1] = x;
    } else {
      pts[k + 1] = proposal;
    }
  }
  ManifoldPath path = make_path(m, std::move(pts));
  path.forcing_correction = forcing;
  return path;
}

VectorFieldH::VectorFieldH(int grid_size, int dim, const std::function<FrameVector(double)>& h)
    : dim_(dim), h_(h) {
  if (h(0.0).norm() > 1e-12 || h(1.0).norm() > 1e-12) {
    throw EndpointError("path must vanish at s = 0 and s = 1");
  }
  values_.resize(grid_size + 1);
  for (int k = 0; k <= grid_size; ++k) values_[k] = h(static_cast<double>(k) / grid_size);
  values_.front() = FrameVector::Zero(dim);
  values_.back() = FrameVector::Zero(dim);
  derivatives_.resize(grid_size);
  for (int k = 0; k < grid_size; ++k) {
    derivatives_[k] = (values_[k + 1] - values_[k]) * static_cast<double>(grid_size);
  }
}

VectorFieldH VectorFieldH::from_values(std::vector<FrameVector> values) {
  const int n = static_cast<int>(values.size()) - 1;
  auto shared = std::make_shared<std::vector<FrameVector>>(std::move(values));
  return VectorFieldH(n, static_cast<int>(shared->front().size()), [shared, n](double s) {
    const double x = std::clamp(s, 0.0, 1.0) * n;
    const int k = std::min(static_cast<int>(x), n - 1);
    const double w = x - k;
    return FrameVector((1.0 - w) * (*shared)[k] + w * (*shared)[k + 1]);
  });
}

VectorFieldH VectorFieldH::zero(int grid_size, int dim) {
  return VectorFieldH(grid_size, dim, [dim](double) { return FrameVector::Zero(dim); });
}

double VectorFieldH::norm_squared() const {
  double s = 0.0;
  for (const auto& d : derivatives_) s += d.squaredNorm();
  return s / steps();
}

std::vector<AmbientVector> field_values(const Manifold& m, const VectorFieldH& h,
                                        const ManifoldPath& path) {
  if (h.steps() != path.steps()) throw std::invalid_argument("grid mismatch");
  std::vector<AmbientVector> x(path.points.size());
  for (int k = 0; k <= path.steps(); ++k) x[k] = path.transport[k] * (m.frame() * h.value(k));
  return x;
}

} // namespace loopspace
