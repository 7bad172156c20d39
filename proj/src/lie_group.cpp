#include "loopspace/lie_group.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace loopspace {

namespace {

constexpr double kPi = std::numbers::pi;
using cd = std::complex<double>;

// Chebyshev polynomials of the second kind: U_l(cos a) = sin((l+1)a)/sin(a).
// Fills u[0..order] without dividing by sin(a).
void chebyshev_u(double x, int order, std::vector<double>& u) {
  u.assign(order + 1, 0.0);
  u[0] = 1.0;
  if (order >= 1) u[1] = 2.0 * x;
  for (int l = 2; l <= order; ++l) u[l] = 2.0 * x * u[l - 1] - u[l - 2];
}

double log_sum_exp(double a, double b) {
  const double m = std::max(a, b);
  if (!std::isfinite(m)) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

} // namespace

// ---------------------------------------------------------------- SU(2)

SU2::Matrix SU2::hat(const AlgebraElement& a) {
  Matrix m;
  m << cd(0.0, a[2]), cd(a[1], a[0]),
       cd(-a[1], a[0]), cd(0.0, -a[2]);
  return m;
}

AlgebraElement SU2::vee(const Matrix& m) {
  // Projection onto span{i sigma_j}, valid for any 2x2 complex matrix.
  const Matrix s = 0.5 * (m - m.adjoint());
  const cd tr_half = 0.5 * s.trace();
  const Matrix t = s - tr_half * Matrix::Identity();
  return AlgebraElement(t(0, 1).imag(), t(0, 1).real(), t(0, 0).imag());
}

SU2::Matrix SU2::exp(const AlgebraElement& a) {
  const double theta = a.norm();
  const double c = std::cos(theta);
  const double sinc = theta < 1e-8 ? 1.0 - theta * theta / 6.0 : std::sin(theta) / theta;
  return c * Matrix::Identity() + sinc * hat(a);
}

double SU2::angle(const Matrix& g) {
  const double c = 0.5 * g.trace().real();
  const double s = vee(g).norm();
  return std::atan2(s, c);
}

double SU2::cut_margin(const Matrix& g) { return std::abs(g.trace().real() + 2.0); }

AlgebraElement SU2::log_unchecked(const Matrix& g) {
  const AlgebraElement v = vee(g);
  const double s = v.norm();
  const double c = 0.5 * g.trace().real();
  const double theta = std::atan2(s, c);
  if (s < 1e-300) return AlgebraElement::Zero();
  const double factor = s < 1e-8 ? 1.0 + theta * theta / 6.0 : theta / s;
  return factor * v;
}

SU2::Matrix SU2::reproject(const Matrix& g) {
  Eigen::Vector4d q(g(0, 0).real(), g(0, 1).imag(), g(0, 1).real(), g(0, 0).imag());
  q.normalize();
  return q[0] * Matrix::Identity() + hat(AlgebraElement(q[1], q[2], q[3]));
}

Eigen::Matrix3d SU2::adjoint(const Matrix& g) {
  // g = q0 I + hat(q); hat(x) hat(y) = -<x,y> I - hat(x cross y).
  const double q0 = g(0, 0).real();
  const Eigen::Vector3d q(g(0, 1).imag(), g(0, 1).real(), g(0, 0).imag());
  Eigen::Matrix3d cross;
  cross << 0.0, -q[2], q[1],
           q[2], 0.0, -q[0],
           -q[1], q[0], 0.0;
  return (q0 * q0 - q.squaredNorm()) * Eigen::Matrix3d::Identity() + 2.0 * q * q.transpose() -
         2.0 * q0 * cross;
}

double SU2::unitarity_error(const Matrix& g) {
  return std::max((g.adjoint() * g - Matrix::Identity()).norm(), std::abs(g.determinant() - 1.0));
}

double SU2::heat_kernel_series(double t, double theta, int order, double* tail) {
  std::vector<double> u;
  chebyshev_u(std::cos(theta), order, u);
  double sum = 0.0;
  for (int l = 0; l <= order; ++l) {
    sum += (l + 1) * u[l] * std::exp(-0.5 * l * (l + 2) * t);
  }
  if (tail) {
    // |U_l| <= l+1; sum the dominated tail until it stops contributing.
    double bound = 0.0;
    for (int l = order + 1; l < order + 400; ++l) {
      const double term = (l + 1.0) * (l + 1.0) * std::exp(-0.5 * l * (l + 2) * t);
      bound += term;
      if (term < 1e-300 || term < 1e-18 * bound) break;
    }
    *tail = bound;
  }
  return sum;
}

double SU2::haar_class_density(double theta) {
  const double s = std::sin(theta);
  return 2.0 / kPi * s * s;
}

double SU2::log_heat_kernel(double t, double theta) {
  if (t > 1.0) {
    return std::log(std::max(heat_kernel_series(t, theta, 40, nullptr), 1e-300));
  }
  theta = std::clamp(theta, 1e-7, kPi - 1e-7);
  // p_t(theta) = 2 pi^2 (2 pi t)^{-3/2} e^{t/2} sum_n a_n exp(-a_n^2 / 2t) / sin(theta),
  // a_n = theta + 2 pi n, factored by exp(-theta^2 / 2t).
  double sum = 0.0;
  for (int n = -3; n <= 3; ++n) {
    const double a = theta + 2.0 * kPi * n;
    sum += a * std::exp(-(a * a - theta * theta) / (2.0 * t));
  }
  return std::log(2.0 * kPi * kPi) - 1.5 * std::log(2.0 * kPi * t) + 0.5 * t -
         theta * theta / (2.0 * t) + std::log(sum / std::sin(theta));
}

// ---------------------------------------------------------------- SO(3)

SO3::Matrix SO3::hat(const AlgebraElement& a) {
  Matrix m;
  m << 0.0, -a[2], a[1],
       a[2], 0.0, -a[0],
       -a[1], a[0], 0.0;
  return m;
}

AlgebraElement SO3::vee(const Matrix& m) {
  const Matrix s = 0.5 * (m - m.transpose());
  return AlgebraElement(s(2, 1), s(0, 2), s(1, 0));
}

SO3::Matrix SO3::exp(const AlgebraElement& a) {
  const double theta = a.norm();
  const Matrix k = hat(a);
  double s1, s2;
  if (theta < 1e-6) {
    s1 = 1.0 - theta * theta / 6.0;
    s2 = 0.5 - theta * theta / 24.0;
  } else {
    s1 = std::sin(theta) / theta;
    s2 = (1.0 - std::cos(theta)) / (theta * theta);
  }
  return Matrix::Identity() + s1 * k + s2 * k * k;
}

double SO3::angle(const Matrix& g) {
  const double c = std::clamp(0.5 * (g.trace() - 1.0), -1.0, 1.0);
  const double s = vee(g).norm();
  return std::atan2(s, c);
}

double SO3::cut_margin(const Matrix& g) { return std::abs(g.trace() + 1.0); }

AlgebraElement SO3::log_unchecked(const Matrix& g) {
  const AlgebraElement v = vee(g);
  const double s = v.norm();
  const double c = std::clamp(0.5 * (g.trace() - 1.0), -1.0, 1.0);
  const double theta = std::atan2(s, c);
  if (s < 1e-300) return AlgebraElement::Zero();
  if (theta > 3.0) {
    // Near pi the skew part loses precision; read the axis from the
    // symmetric part (1 - cos theta) n n^T and the sign from the skew part.
    const Matrix sym = 0.5 * (g + g.transpose()) - c * Matrix::Identity();
    int j;
    sym.diagonal().maxCoeff(&j);
    AlgebraElement n = sym.col(j) / std::sqrt(std::max(sym(j, j), 1e-300));
    n.normalize();
    if (n.dot(v) < 0) n = -n;
    return theta * n;
  }
  const double factor = s < 1e-8 ? 1.0 + theta * theta / 6.0 : theta / s;
  return factor * v;
}

SO3::Matrix SO3::reproject(const Matrix& g) {
  Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0) {
    Matrix u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }
  return r;
}

double SO3::unitarity_error(const Matrix& g) {
  return std::max((g.transpose() * g - Matrix::Identity()).norm(), std::abs(g.determinant() - 1.0));
}

double SO3::heat_kernel_series(double t, double theta, int order, double* tail) {
  // Integer spins j with characters U_{2j}(cos(theta/2)), Casimir j(j+1).
  std::vector<double> u;
  chebyshev_u(std::cos(0.5 * theta), 2 * order, u);
  double sum = 0.0;
  for (int j = 0; j <= order; ++j) {
    sum += (2 * j + 1) * u[2 * j] * std::exp(-0.5 * j * (j + 1) * t);
  }
  if (tail) {
    double bound = 0.0;
    for (int j = order + 1; j < order + 400; ++j) {
      const double term = (2.0 * j + 1.0) * (2.0 * j + 1.0) * std::exp(-0.5 * j * (j + 1) * t);
      bound += term;
      if (term < 1e-300 || term < 1e-18 * bound) break;
    }
    *tail = bound;
  }
  return sum;
}

double SO3::haar_class_density(double theta) { return (1.0 - std::cos(theta)) / kPi; }

double SO3::log_heat_kernel(double t, double theta) {
  // SO(3) = SU(2)/{+-1}: the rotation by theta lifts to class angles theta/2
  // and pi - theta/2, and the SO(3) clock runs four times faster.
  const double a = SU2::log_heat_kernel(0.25 * t, 0.5 * theta);
  const double b = SU2::log_heat_kernel(0.25 * t, kPi - 0.5 * theta);
  return log_sum_exp(a, b) - std::log(2.0);
}

// ---------------------------------------------------------------- generic

template <class Group>
bool GroupElement<Group>::is_valid(double tol) const {
  return Group::unitarity_error(m_) < tol;
}

template <class Group>
const GroupElement<Group>& GroupPath<Group>::at_time(double s) const {
  const int k = std::clamp(static_cast<int>(std::lround(s * steps())), 0, steps());
  return points[k];
}

template <class Group>
AlgebraElement log_map(const GroupElement<Group>& g, double cut_margin) {
  if (Group::cut_margin(g.matrix()) < cut_margin) {
    throw CutLocusError(std::string(Group::name) + " element within cut-locus margin");
  }
  return Group::log_unchecked(g.matrix());
}

template <class Group>
double algebra_inner(const AlgebraElement& a, const AlgebraElement& b) {
  return -Group::metric_constant * std::real((Group::hat(a) * Group::hat(b)).trace());
}

template <class Group>
HeatKernelValue heat_kernel_density(const HeatKernelModel& model, double t,
                                    const GroupElement<Group>& g) {
  if (t < model.time_floor) {
    throw std::invalid_argument("heat kernel time below floor");
  }
  HeatKernelValue v;
  v.density = Group::heat_kernel_series(t, g.angle(), model.truncation_order, &v.tail_bound);
  v.truncation_warning = v.tail_bound > 1e-8;
  return v;
}

template <class Group>
double bridge_drift_factor(double remaining_time, double theta) {
  const double h = 1e-5;
  const double th = std::max(theta, 1e-3);
  const double d = (Group::log_heat_kernel(remaining_time, th + h) -
                    Group::log_heat_kernel(remaining_time, th - h)) / (2.0 * h);
  return -d / th;
}

template <class Group>
GroupPath<Group> sample_brownian_motion(int grid_size, Rng& rng) {
  if (grid_size < 2) throw std::invalid_argument("grid_size must be >= 2");
  GroupPath<Group> path;
  path.points.reserve(grid_size + 1);
  path.increments.reserve(grid_size);
  path.points.emplace_back();
  const double sdt = std::sqrt(1.0 / grid_size);
  for (int k = 0; k < grid_size; ++k) {
    AlgebraElement db(rng.normal(), rng.normal(), rng.normal());
    db *= sdt;
    path.increments.push_back(db);
    path.points.emplace_back(Group::reproject(Group::exp(db) * path.points.back().matrix()));
  }
  return path;
}

template <class Group>
GroupPath<Group> sample_brownian_bridge(const GroupElement<Group>& target, int grid_size,
                                        Rng& rng) {
  if (grid_size < 2) throw std::invalid_argument("grid_size must be >= 2");
  if (!target.is_valid(1e-8)) throw std::invalid_argument("bridge target is not a group element");
  GroupPath<Group> path;
  path.points.reserve(grid_size + 1);
  path.increments.reserve(grid_size);
  path.points.emplace_back();
  const double dt = 1.0 / grid_size;
  for (int k = 0; k < grid_size; ++k) {
    const auto& g = path.points.back().matrix();
    const typename Group::Matrix to_target = target.matrix() * Group::inverse(g);
    const double remaining = 1.0 - k * dt;
    AlgebraElement noise(rng.normal(), rng.normal(), rng.normal());
    noise *= std::sqrt(std::max(0.0, dt * (remaining - dt) / remaining));
    AlgebraElement drift = AlgebraElement::Zero();
    if (Group::cut_margin(to_target) > 1e-9) {
      const AlgebraElement l = Group::log_unchecked(to_target);
      drift = bridge_drift_factor<Group>(remaining, l.norm()) * l * dt;
    }
    AlgebraElement db = drift + noise;
    if (k == grid_size - 1) {
      const typename Group::Matrix proposal = Group::exp(db) * g;
      path.forcing_correction =
          Group::log_unchecked(target.matrix() * Group::inverse(proposal)).norm();
      db = log_map(GroupElement<Group>(to_target));
      path.increments.push_back(db);
      path.points.push_back(target);
      break;
    }
    path.increments.push_back(db);
    path.points.emplace_back(Group::reproject(Group::exp(db) * g));
  }
  return path;
}

double smooth_cutoff(double r, const CutoffRadii& radii) {
  if (r <= radii.inner) return 1.0;
  if (r >= radii.outer) return 0.0;
  const double x = (r - radii.inner) / (radii.outer - radii.inner);
  auto f = [](double y) { return y <= 0.0 ? 0.0 : std::exp(-1.0 / y); };
  return f(1.0 - x) / (f(1.0 - x) + f(x));
}

template <class Group>
LoopTransform<Group> path_to_loop(const GroupPath<Group>& path, const CutoffRadii& radii) {
  LoopTransform<Group> out;
  const auto& end = path.points.back();
  AlgebraElement l;
  try {
    l = log_map(end);
  } catch (const CutLocusError&) {
    out.loop = path;
    out.cutoff_weight = 0.0;
    return out;
  }
  out.cutoff_weight = smooth_cutoff(l.norm(), radii);
  GroupPath<Group> loop;
  loop.points.reserve(path.points.size());
  const int n = path.steps();
  for (int k = 0; k <= n; ++k) {
    loop.points.emplace_back(path.points[k].matrix() * Group::exp(-path.time(k) * l));
  }
  loop.points.back() = GroupElement<Group>::identity();
  for (int k = 0; k < n; ++k) {
    loop.increments.push_back(Group::log_unchecked(
        loop.points[k + 1].matrix() * Group::inverse(loop.points[k].matrix())));
  }
  out.loop = std::move(loop);
  return out;
}

template <class Group>
double quasi_invariance_density(const std::vector<GroupElement<Group>>& k,
                                const GroupPath<Group>& path, TranslationSide side) {
  const int n = path.steps();
  if (static_cast<int>(k.size()) != n + 1) {
    throw std::invalid_argument("translation path must live on the sample grid");
  }
  const double dt = path.dt();
  double stochastic = 0.0;
  double energy = 0.0;
  for (int j = 0; j < n; ++j) {
    AlgebraElement u;
    if (side == TranslationSide::left) {
      // g -> k g shifts the driving noise by k' k^{-1}.
      u = Group::log_unchecked(k[j + 1].matrix() * Group::inverse(k[j].matrix())) / dt;
    } else {
      // g -> g k shifts it by Ad_g (k^{-1} k'), adapted through g.
      const AlgebraElement v =
          Group::log_unchecked(Group::inverse(k[j].matrix()) * k[j + 1].matrix()) / dt;
      u = Group::adjoint(path.points[j].matrix()) * v;
    }
    stochastic += u.dot(path.increments[j]);
    energy += u.squaredNorm() * dt;
  }
  return std::exp(stochastic - 0.5 * energy);
}

template <class Group>
GroupPath<Group> translate_path(const std::vector<GroupElement<Group>>& k,
                                const GroupPath<Group>& path, TranslationSide side) {
  GroupPath<Group> out;
  const int n = path.steps();
  for (int j = 0; j <= n; ++j) {
    out.points.push_back(side == TranslationSide::left ? k[j] * path.points[j]
                                                       : path.points[j] * k[j]);
  }
  for (int j = 0; j < n; ++j) {
    out.increments.push_back(Group::log_unchecked(
        out.points[j + 1].matrix() * Group::inverse(out.points[j].matrix())));
  }
  return out;
}

#define LOOPSPACE_INSTANTIATE_GROUP(G)                                                        \
  template class GroupElement<G>;                                                             \
  template struct GroupPath<G>;                                                               \
  template AlgebraElement log_map<G>(const GroupElement<G>&, double);                         \
  template double algebra_inner<G>(const AlgebraElement&, const AlgebraElement&);             \
  template HeatKernelValue heat_kernel_density<G>(const HeatKernelModel&, double,            \
                                                  const GroupElement<G>&);                    \
  template double bridge_drift_factor<G>(double, double);                                     \
  template GroupPath<G> sample_brownian_motion<G>(int, Rng&);                                 \
  template GroupPath<G> sample_brownian_bridge<G>(const GroupElement<G>&, int, Rng&);         \
  template LoopTransform<G> path_to_loop<G>(const GroupPath<G>&, const CutoffRadii&);         \
  template double quasi_invariance_density<G>(const std::vector<GroupElement<G>>&,            \
                                              const GroupPath<G>&, TranslationSide);          \
  template GroupPath<G> translate_path<G>(const std::vector<GroupElement<G>>&,                \
                                          const GroupPath<G>&, TranslationSide);

LOOPSPACE_INSTANTIATE_GROUP(SU2)
LOOPSPACE_INSTANTIATE_GROUP(SO3)

#undef LOOPSPACE_INSTANTIATE_GROUP

} // namespace loopspace
