#include "loopspace/battery.hpp"

#include <cmath>
#include <numbers>

namespace loopspace {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

} // namespace

ManifoldPath smooth_loop(const Manifold& m, int grid_size, int variant) {
  const double a = variant == 0 ? 0.6 : 0.9;
  const double b = variant == 0 ? 0.5 : 0.3;
  const double c = variant == 0 ? 0.3 : 0.7;
  return make_path(m, grid_size, [&](double s) {
    AmbientVector p = m.base_point();
    const AmbientMatrix& e = m.frame();
    p += a * std::sin(kTwoPi * s) * e.col(0);
    p += b * (1.0 - std::cos(kTwoPi * s)) * e.col(1);
    if (m.dim() > 2) p += c * std::sin(2.0 * kTwoPi * s) * e.col(2);
    else p += c * std::sin(2.0 * kTwoPi * s) * e.col(0);
    return p;
  });
}

BundleLoop smooth_total_loop(const BundleSpec& spec, const InfinityConnection& conn,
                             int grid_size, int variant) {
  ManifoldPath base = smooth_loop(spec.base(), grid_size, variant);
  const FiberElement target = bundle_transport(base, spec).holonomy.inverse();
  GroupPath<Fiber> fiber;
  for (int k = 0; k <= grid_size; ++k) {
    fiber.points.push_back(conn.local_section(target, static_cast<double>(k) / grid_size));
  }
  for (int k = 0; k < grid_size; ++k) {
    fiber.increments.push_back(
        Fiber::log_unchecked((fiber.points[k + 1] * fiber.points[k].inverse()).matrix()));
  }
  return make_bundle_loop(spec, std::move(base), std::move(fiber));
}

VectorFieldH battery_field(int grid_size, int dim, int index) {
  return VectorFieldH(grid_size, dim, [dim, index](double s) {
    FrameVector v = FrameVector::Zero(dim);
    const double pi = std::numbers::pi;
    switch (index % kBatteryFieldCount) {
      case 0: v[0] = std::sin(pi * s); break;
      case 1:
        v[1] = std::sin(kTwoPi * s);
        v[0] = 0.5 * s * (1.0 - s);
        break;
      case 2:
        v[0] = 2.0 * s * (1.0 - s);
        v[dim - 1] += 4.0 * s * s * (1.0 - s);
        break;
      default:
        for (int j = 0; j < dim; ++j) v[j] = std::sin((j + 1) * pi * s) * (0.8 - 0.3 * j);
        break;
    }
    return v;
  });
}

namespace {

Eigen::VectorXd coefficients(int point_dim, std::uint64_t tag) {
  Rng rng(0x5eed, tag);
  Eigen::VectorXd c(point_dim);
  for (int i = 0; i < point_dim; ++i) c[i] = rng.normal();
  return c / c.norm();
}

} // namespace

CylindricalFunctional battery_functional(int index, int point_dim, std::vector<double> times) {
  CylindricalFunctional f;
  f.times = std::move(times);
  const std::size_t last = f.times.size() - 1;
  const Eigen::VectorXd c1 = coefficients(point_dim, 2 * index + 1);
  const Eigen::VectorXd c2 = coefficients(point_dim, 2 * index + 2);
  auto grad = [last, point_dim](const Eigen::VectorXd& first, const Eigen::VectorXd& end) {
    std::vector<Eigen::VectorXd> g(last + 1, Eigen::VectorXd::Zero(point_dim));
    g[0] += first;
    g[last] += end;
    return g;
  };
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(point_dim);
  switch (index % kBatteryFunctionalCount) {
    case 0: {
      Eigen::VectorXd c = c1;
      if (point_dim % 8 == 0) {
        // Re tr of the trailing 2x2 block stored as (Re row-major, Im row-major).
        c.setZero();
        c[point_dim - 8] = 1.0;
        c[point_dim - 5] = 1.0;
      }
      f.name = "linear";
      f.value = [c](const std::vector<Eigen::VectorXd>& z) { return c.dot(z[0]); };
      f.gradient = [c, grad, zero](const std::vector<Eigen::VectorXd>&) { return grad(c, zero); };
      break;
    }
    case 1:
      f.name = "product";
      f.value = [=](const std::vector<Eigen::VectorXd>& z) { return c1.dot(z[0]) * c2.dot(z[last]); };
      f.gradient = [=](const std::vector<Eigen::VectorXd>& z) {
        return grad(c2.dot(z[last]) * c1, c1.dot(z[0]) * c2);
      };
      break;
    case 2:
      f.name = "sine";
      f.value = [=](const std::vector<Eigen::VectorXd>& z) { return std::sin(c1.dot(z[0]) + c2.dot(z[last])); };
      f.gradient = [=](const std::vector<Eigen::VectorXd>& z) {
        const double d = std::cos(c1.dot(z[0]) + c2.dot(z[last]));
        return grad(d * c1, d * c2);
      };
      break;
    case 3:
      f.name = "exp-cos";
      f.value = [=](const std::vector<Eigen::VectorXd>& z) {
        return std::exp(c1.dot(z[0])) * std::cos(c2.dot(z[last]));
      };
      f.gradient = [=](const std::vector<Eigen::VectorXd>& z) {
        const double e = std::exp(c1.dot(z[0]));
        return grad(e * std::cos(c2.dot(z[last])) * c1, -e * std::sin(c2.dot(z[last])) * c2);
      };
      break;
    default:
      f.name = "bump";
      f.value = [=](const std::vector<Eigen::VectorXd>& z) {
        const double u = z[0][point_dim - 1] - 0.3;
        return std::exp(-4.0 * u * u);
      };
      f.gradient = [=](const std::vector<Eigen::VectorXd>& z) {
        const double u = z[0][point_dim - 1] - 0.3;
        Eigen::VectorXd g = Eigen::VectorXd::Zero(point_dim);
        g[point_dim - 1] = -8.0 * u * std::exp(-4.0 * u * u);
        return grad(g, zero);
      };
      break;
  }
  return f;
}

} // namespace loopspace
