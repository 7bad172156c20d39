#include "doctest.h"

#include <cmath>
#include <numbers>

#include "loopspace/battery.hpp"
#include "loopspace/stochastic_calculus.hpp"

using namespace loopspace;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<FrameVector> flat_increments(int n, int dim, Rng& rng) {
  std::vector<FrameVector> dw(n);
  for (auto& d : dw) d = std::sqrt(1.0 / n) * rng.normal_vector(dim);
  return dw;
}

CylindricalFunctional constant_functional(std::vector<double> times, int dim) {
  CylindricalFunctional f;
  f.name = "constant";
  f.times = std::move(times);
  const std::size_t r = f.times.size();
  f.value = [](const std::vector<Eigen::VectorXd>&) { return 2.5; };
  f.gradient = [r, dim](const std::vector<Eigen::VectorXd>&) {
    return std::vector<Eigen::VectorXd>(r, Eigen::VectorXd::Zero(dim));
  };
  return f;
}

} // namespace

TEST_CASE("ito_integral: zero, martingale mean and isometry") {
  const int n = 128;
  std::vector<FrameVector> h(n);
  for (int k = 0; k < n; ++k) {
    const double s = static_cast<double>(k) / n;
    h[k] = FrameVector(2);
    h[k] << std::sin(2 * kPi * s), 1.0 - s;
  }
  Rng r0(1);
  CHECK(ito_integral(std::vector<FrameVector>(n, FrameVector::Zero(2)), flat_increments(n, 2, r0)) == 0.0);

  double energy = 0.0;
  for (const auto& v : h) energy += v.squaredNorm() / n;
  const std::size_t samples = 40000;
  std::vector<double> value(samples), square(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    Rng rng(11, i);
    value[i] = ito_integral(h, flat_increments(n, 2, rng));
    square[i] = value[i] * value[i];
  }
  const auto m = sample_stats(value);
  const auto q = sample_stats(square);
  CHECK(std::abs(m.mean) < 3 * m.standard_error);
  CHECK(std::abs(q.mean - energy) < 3 * q.standard_error);

  std::vector<AlgebraElement> a(n, AlgebraElement(1, 0, 0)), da(n, AlgebraElement(0.1, 0.2, 0.3));
  CHECK(ito_integral(a, da) == doctest::Approx(0.1 * n));
}

TEST_CASE("stratonovich_integral: quadrature, chain rule and reversal") {
  const int n = 200;
  std::vector<double> f(n + 1), dx(n);
  for (int k = 0; k <= n; ++k) f[k] = std::exp(static_cast<double>(k) / n);
  for (int k = 0; k < n; ++k) dx[k] = 1.0 / n;
  // int_0^1 e^s ds with the trapezoid rule.
  CHECK(std::abs(stratonovich_integral(f, dx) - (std::exp(1.0) - 1.0)) < 2.0 / (n * n));

  Rng rng(5);
  std::vector<double> b(n + 1, 0.0), db(n);
  for (int k = 0; k < n; ++k) {
    db[k] = rng.normal() / std::sqrt(n);
    b[k + 1] = b[k] + db[k];
  }
  CHECK(stratonovich_integral(b, db) == doctest::Approx(0.5 * b[n] * b[n]).epsilon(1e-12));

  std::vector<double> dr(n);
  for (int k = 0; k < n; ++k) dr[k] = -db[n - 1 - k];
  std::vector<double> bf(n + 1);
  for (int k = 0; k <= n; ++k) bf[k] = std::sin(b[k]);
  std::vector<double> bfr(bf.rbegin(), bf.rend());
  CHECK(std::abs(stratonovich_integral(bfr, dr) + stratonovich_integral(bf, db)) < 1e-12);
}

TEST_CASE("divergence_base: zero field and mean zero on the S2 bridge") {
  const Manifold s2 = Manifold::from_name("S2");
  Rng rng(3);
  const auto path = sample_brownian_bridge_manifold(s2, 128, rng);
  CHECK(divergence_base(s2, VectorFieldH::zero(128, 2), path) == 0.0);
  const VectorFieldH h = battery_field(128, 2, 1);
  const std::size_t samples = 4000;
  std::vector<double> d(samples);
  parallel_for(samples, [&](std::size_t i) {
    Rng r(21, i);
    d[i] = divergence_base(s2, h, sample_brownian_bridge_manifold(s2, 128, r));
  });
  const auto st = sample_stats(d);
  CHECK(std::abs(st.mean) < 3 * st.standard_error);
}

TEST_CASE("divergence_left equals divergence_right along a torus") {
  const int n = 64;
  GroupPath<SU2> path;
  path.points.emplace_back();
  Rng rng(8);
  for (int k = 0; k < n; ++k) {
    const AlgebraElement db(0.0, 0.0, rng.normal() / std::sqrt(n));
    path.increments.push_back(db);
    path.points.emplace_back(SU2::exp(db) * path.points.back().matrix());
  }
  const VectorFieldH k(n, 3, [](double s) { return FrameVector(Eigen::Vector3d(0, 0, std::sin(kPi * s))); });
  CHECK(std::abs(divergence_left(k, path) - divergence_right(k, path)) < 1e-12);
  CHECK(divergence_left(VectorFieldH::zero(n, 3), path) == 0.0);
  CHECK(divergence_right(VectorFieldH::zero(n, 3), path) == 0.0);
}

TEST_CASE("battery functionals: gradients match finite differences") {
  Rng rng(17);
  for (int dim : {3, 8, 12}) {
    for (int idx = 0; idx < kBatteryFunctionalCount; ++idx) {
      const auto f = battery_functional(idx, dim, {0.25, 0.5, 0.75});
      std::vector<Eigen::VectorXd> z(3);
      for (auto& p : z) p = 0.5 * rng.normal_vector(dim);
      const auto g = f.gradient(z);
      for (std::size_t slot = 0; slot < z.size(); ++slot) {
        for (int c = 0; c < dim; ++c) {
          const double e = 1e-6;
          auto zp = z, zm = z;
          zp[slot][c] += e;
          zm[slot][c] -= e;
          CHECK(std::abs((f.value(zp) - f.value(zm)) / (2 * e) - g[slot][c]) < 1e-6);
        }
      }
    }
  }
}

TEST_CASE("functional_derivative: trivial cases and flow finite difference") {
  const Manifold s2 = Manifold::from_name("S2");
  const auto c = constant_functional({0.5}, 3);
  std::vector<Eigen::VectorXd> z{Eigen::Vector3d(0, 0, 1)}, x{Eigen::Vector3d(1, 2, 0)};
  CHECK(functional_derivative(c, z, x) == 0.0);

  CylindricalFunctional lin;
  lin.times = {0.5};
  lin.value = [](const std::vector<Eigen::VectorXd>& p) { return 3.0 * p[0][1]; };
  lin.gradient = [](const std::vector<Eigen::VectorXd>&) {
    return std::vector<Eigen::VectorXd>{Eigen::Vector3d(0, 3, 0)};
  };
  CHECK(functional_derivative(lin, z, {Eigen::Vector3d(0, 1, 0)}) == 3.0);

  const int n = 256;
  const ManifoldPath loop = smooth_loop(s2, n, 0);
  const VectorFieldH h = battery_field(n, 2, 3);
  const auto x_all = field_values(s2, h, loop);
  for (int idx = 0; idx < kBatteryFunctionalCount; ++idx) {
    const auto f = battery_functional(idx, 3, {0.25, 0.75});
    std::vector<int> slots{n / 4, 3 * n / 4};
    std::vector<Eigen::VectorXd> pts, dir;
    for (int k : slots) {
      pts.push_back(loop.points[k]);
      dir.push_back(x_all[k]);
    }
    auto moved = [&](double e) {
      std::vector<Eigen::VectorXd> q;
      for (int k : slots) q.push_back(s2.geodesic_exp(loop.points[k], e * x_all[k]));
      return f.value(q);
    };
    const double e = 1e-4;
    CHECK(std::abs((moved(e) - moved(-e)) / (2 * e) - functional_derivative(f, pts, dir)) < 1e-5);
  }
}

TEST_CASE("transport_derivative: zero cases and perturbed-path oracle") {
  const Manifold s2 = Manifold::from_name("S2");
  const Manifold plane = Manifold::from_name("R2");
  const int n = 1024;
  const ManifoldPath loop = smooth_loop(s2, n, 1);
  for (const auto& m : transport_derivative(s2, VectorFieldH::zero(n, 2), loop)) CHECK(m.norm() == 0.0);
  const ManifoldPath pl = smooth_loop(plane, n, 0);
  for (const auto& m : transport_derivative(plane, battery_field(n, 2, 1), pl)) CHECK(m.norm() == 0.0);

  const VectorFieldH h = battery_field(n, 2, 2);
  const auto x = field_values(s2, h, loop);
  const auto mk = transport_derivative(s2, h, loop);
  auto moved = [&](double e) {
    std::vector<AmbientVector> pts(loop.points.size());
    for (std::size_t k = 0; k < pts.size(); ++k) pts[k] = s2.geodesic_exp(loop.points[k], e * x[k]);
    return make_path(s2, pts);
  };
  const double e = 1e-5;
  const ManifoldPath plus = moved(e), minus = moved(-e);
  double worst = 0.0;
  for (int k : {n / 4, n / 2, 3 * n / 4, n}) {
    const Eigen::MatrixXd fd = s2.frame().transpose() * loop.transport[k].transpose() *
                               (plus.transport[k] - minus.transport[k]) / (2 * e) * s2.frame();
    worst = std::max(worst, (fd - mk[k]).norm() / fd.norm());
  }
  CHECK(worst < 1e-3);

  const auto inc = transport_derivative_of_increment(s2, h, loop);
  CHECK(inc.size() == static_cast<std::size_t>(n));
  CHECK((inc[n / 3] - loop.transport[n / 3] * (s2.frame() * h.derivative(n / 3)) / n).norm() < 1e-15);
}

TEST_CASE("ibp_check: constant functional and flat Gaussian oracle") {
  const int n = 256;
  const std::size_t samples = 20000;
  auto h = [](double s) { return s <= 0.5 ? s : 1.0 - s; };
  std::vector<double> hd(n);
  for (int k = 0; k < n; ++k) hd[k] = (h(static_cast<double>(k + 1) / n) - h(static_cast<double>(k) / n)) * n;

  const MCReport constant = ibp_check("constant", samples, 3.0, [&](std::size_t i, double& l, double& r) {
    Rng rng(4, i);
    double div = 0.0;
    for (int k = 0; k < n; ++k) div += hd[k] * rng.normal() / std::sqrt(n);
    l = 0.0;
    r = 2.0 * div;
  });
  CHECK(constant.lhs == 0.0);
  CHECK(constant.pass);

  const MCReport gauss = ibp_check("wiener", samples, 3.0, [&](std::size_t i, double& l, double& r) {
    Rng rng(6, i);
    double b_half = 0.0, div = 0.0;
    for (int k = 0; k < n; ++k) {
      const double db = rng.normal() / std::sqrt(n);
      if (k < n / 2) b_half += db;
      div += hd[k] * db;
    }
    l = h(0.5);
    r = b_half * div;
  });
  CHECK(gauss.lhs == doctest::Approx(0.5));
  CHECK(gauss.pass);
  CHECK(std::abs(gauss.z) <= gauss.threshold);

  const MCReport again = ibp_check("wiener", samples, 3.0, [&](std::size_t i, double& l, double& r) {
    Rng rng(6, i);
    double b_half = 0.0, div = 0.0;
    for (int k = 0; k < n; ++k) {
      const double db = rng.normal() / std::sqrt(n);
      if (k < n / 2) b_half += db;
      div += hd[k] * db;
    }
    l = h(0.5);
    r = b_half * div;
  });
  CHECK(again.rhs == gauss.rhs);
  CHECK(again.standard_error == gauss.standard_error);
}

TEST_CASE("anticipative_stratonovich: zero, linearity, reduction and self-convergence") {
  const int fine = 2048;
  Rng rng(9);
  const auto dw = flat_increments(fine, 2, rng);
  std::vector<FrameVector> w(fine + 1, FrameVector::Zero(2));
  for (int k = 0; k < fine; ++k) w[k + 1] = w[k] + dw[k];
  std::vector<FrameVector> zero(fine + 1, FrameVector::Zero(2));
  CHECK(anticipative_stratonovich(zero, dw, 64) == 0.0);

  std::vector<FrameVector> u1(fine + 1), u2(fine + 1), mix(fine + 1);
  for (int k = 0; k <= fine; ++k) {
    u1[k] = w[k].array().sin().matrix() * w[fine][0];
    u2[k] = w[fine - k];
    mix[k] = 2.0 * u1[k] - 0.7 * u2[k];
  }
  for (int g : {64, 256, 2048}) {
    const double lhs = anticipative_stratonovich(mix, dw, g);
    const double rhs = 2.0 * anticipative_stratonovich(u1, dw, g) - 0.7 * anticipative_stratonovich(u2, dw, g);
    CHECK(std::abs(lhs - rhs) < 1e-12);
  }
  // With no averaging the scheme is the midpoint rule.
  CHECK(std::abs(anticipative_stratonovich(u1, dw, fine) - stratonovich_integral(u1, dw)) < 1e-12);

  const auto red = anticipative_reduction(
      [](double s) { FrameVector v(2); v << std::cos(3 * s), s * s; return v; }, 2, 64, 16, 4000, 13);
  CHECK(red.pass);

  const FlatIntegrand u = [](const std::vector<FrameVector>& path) {
    std::vector<FrameVector> out(path.size());
    const FrameVector& end = path.back();
    for (std::size_t k = 0; k < path.size(); ++k) out[k] = (path[k] + end).array().sin().matrix();
    return out;
  };
  const auto sweep = anticipative_self_convergence(u, 2, fine, {128, 256, 512, 1024}, 400, 31);
  CHECK(sweep.rate > 0.4);
  CHECK(sweep.rate < 0.6);

  const GroupIntegrand ug = [](const GroupPath<SU2>& p) {
    std::vector<AlgebraElement> out(p.points.size());
    const AlgebraElement end = SU2::log_unchecked(p.points.back().matrix());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = SU2::vee(p.points[k].matrix()) + end;
    return out;
  };
  const auto gs = anticipative_group_self_convergence(ug, fine, {128, 256, 512, 1024}, 400, 37);
  CHECK(gs.rate > 0.4);
  CHECK(gs.rate < 0.6);
}
