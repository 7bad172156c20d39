#include "doctest.h"

#include <cmath>
#include <numbers>

#include "loopspace/lie_group.hpp"
#include "test_oracles.hpp"

using namespace loopspace;

namespace {

constexpr double kPi = std::numbers::pi;

template <class M>
M taylor_exp(const M& a, int terms) {
  M sum = M::Identity();
  M term = M::Identity();
  for (int k = 1; k < terms; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

} // namespace

TEST_CASE("exp_map: identity, rotation generator, Taylor oracle") {
  CHECK((exp_map<SU2>(AlgebraElement::Zero()).matrix() - SU2::identity()).norm() < 1e-15);
  CHECK((exp_map<SO3>(AlgebraElement::Zero()).matrix() - SO3::identity()).norm() < 1e-15);

  const double theta = 0.7;
  Eigen::Matrix3d rz;
  rz << std::cos(theta), -std::sin(theta), 0, std::sin(theta), std::cos(theta), 0, 0, 0, 1;
  CHECK((exp_map<SO3>(theta * AlgebraElement::UnitZ()).matrix() - rz).norm() < 1e-14);

  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const AlgebraElement a = 0.3 * AlgebraElement(rng.normal(), rng.normal(), rng.normal());
    CHECK((exp_map<SU2>(a).matrix() - taylor_exp(SU2::hat(a), 20)).norm() < 1e-12);
    CHECK((exp_map<SO3>(a).matrix() - taylor_exp(SO3::hat(a), 20)).norm() < 1e-12);
    CHECK(exp_map<SU2>(a).is_valid(1e-10));
    CHECK(exp_map<SO3>(a).is_valid(1e-10));
  }
}

TEST_CASE("log_map: identity, roundtrip, cut locus") {
  CHECK(log_map(GroupElement<SU2>::identity()).norm() < 1e-15);
  CHECK(log_map(GroupElement<SO3>::identity()).norm() < 1e-15);

  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    AlgebraElement a(rng.normal(), rng.normal(), rng.normal());
    const AlgebraElement small = 0.3 * a.normalized();
    CHECK((log_map(exp_map<SU2>(small)) - small).norm() < 1e-10);
    CHECK((log_map(exp_map<SO3>(small)) - small).norm() < 1e-10);
    // Roundtrip on the ball of radius 2 (inside the principal branch).
    const AlgebraElement big = 2.0 * rng.uniform() * a.normalized();
    CHECK((log_map(exp_map<SU2>(big)) - big).norm() < 1e-9);
    CHECK((log_map(exp_map<SO3>(big)) - big).norm() < 1e-9);
    // Principal branch: exp(log g) = g and |log g| <= pi.
    const AlgebraElement any = 3.0 * a;
    const auto g = exp_map<SU2>(any);
    const AlgebraElement l = SU2::log_unchecked(g.matrix());
    CHECK(l.norm() <= kPi + 1e-12);
    CHECK((exp_map<SU2>(l).matrix() - g.matrix()).norm() < 1e-9);
  }

  const GroupElement<SU2> antipode(-SU2::identity());
  CHECK_THROWS_AS(log_map(antipode), CutLocusError);
  CHECK_THROWS_AS(log_map(exp_map<SO3>(kPi * AlgebraElement::UnitX())), CutLocusError);
}

TEST_CASE("algebra_inner: orthonormal basis and Pythagoras") {
  const AlgebraElement k1 = AlgebraElement::UnitX();
  const AlgebraElement k2 = AlgebraElement::UnitY();
  const AlgebraElement k3 = AlgebraElement::UnitZ();
  CHECK(algebra_inner<SU2>(k1, k1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(algebra_inner<SU2>(k1, k2)) < 1e-15);
  CHECK(algebra_inner<SU2>(2 * k1 + k3, 2 * k1 + k3) == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(algebra_inner<SO3>(k3, k3) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(algebra_inner<SO3>(k2, k3)) < 1e-15);
  CHECK(algebra_inner<SO3>(2 * k1 + k3, 2 * k1 + k3) == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("bracket coordinates agree with matrix commutators") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const AlgebraElement a(rng.normal(), rng.normal(), rng.normal());
    const AlgebraElement b(rng.normal(), rng.normal(), rng.normal());
    const SU2::Matrix cu = SU2::hat(a) * SU2::hat(b) - SU2::hat(b) * SU2::hat(a);
    CHECK((SU2::vee(cu) - SU2::bracket(a, b)).norm() < 1e-12);
    const SO3::Matrix co = SO3::hat(a) * SO3::hat(b) - SO3::hat(b) * SO3::hat(a);
    CHECK((SO3::vee(co) - SO3::bracket(a, b)).norm() < 1e-12);
    const auto g = exp_map<SU2>(a);
    CHECK((SU2::adjoint(g.matrix()) * b -
           SU2::vee(g.matrix() * SU2::hat(b) * g.inverse().matrix())).norm() < 1e-12);
  }
}

TEST_CASE("sample_brownian_motion: unitarity, determinism, Gaussian increments") {
  Rng a(42), b(42);
  const auto p = sample_brownian_motion<SU2>(256, a);
  const auto q = sample_brownian_motion<SU2>(256, b);
  CHECK(p.points.front().distance(GroupElement<SU2>::identity()) == 0.0);
  bool identical = true;
  for (int k = 0; k <= 256; ++k) {
    CHECK(p.points[k].unitarity_error() < 1e-8);
    identical = identical && (p.points[k].matrix() == q.points[k].matrix());
  }
  CHECK(identical);

  Rng c(7);
  const auto r = sample_brownian_motion<SO3>(10000, c);
  for (int coord = 0; coord < 3; ++coord) {
    std::vector<double> x;
    for (const auto& inc : r.increments) x.push_back(inc[coord] * 100.0);
    CHECK(oracle::jarque_bera(x) < 9.21);
  }
  CHECK_THROWS(sample_brownian_motion<SU2>(1, c));
}

TEST_CASE("sample_brownian_motion: E[tr g_1] matches the character heat trace") {
  // Casimir of the fundamental representation in the orthonormal basis.
  SU2::Matrix casimir = SU2::Matrix::Zero();
  for (int j = 0; j < 3; ++j) casimir += SU2::hat(AlgebraElement::Unit(j)) * SU2::hat(AlgebraElement::Unit(j));
  const double c = -casimir(0, 0).real();
  const double expected = 2.0 * std::exp(-0.5 * c);

  const std::size_t n = 100000;
  std::vector<double> tr(n);
  parallel_for(n, [&](std::size_t i) {
    Rng rng(2024, i);
    tr[i] = sample_brownian_motion<SU2>(256, rng).points.back().matrix().trace().real();
  });
  const auto s = sample_stats(tr);
  CHECK(std::abs(s.mean - expected) < 3.0 * s.standard_error);
}

TEST_CASE("heat_kernel_density: stationarity, class function, series oracle") {
  HeatKernelModel model;
  Rng rng(9);
  const auto g = exp_map<SU2>(AlgebraElement(0.4, -1.1, 0.7));
  const auto h = exp_map<SU2>(AlgebraElement(rng.normal(), rng.normal(), rng.normal()));
  CHECK(std::abs(heat_kernel_density(model, 40.0, g).density - 1.0) < 1e-6);
  CHECK(heat_kernel_density(model, 0.3, g).density ==
        doctest::Approx(heat_kernel_density(model, 0.3, h * g * h.inverse()).density).epsilon(1e-12));
  const auto r = exp_map<SO3>(AlgebraElement(0.4, -1.1, 0.7));
  CHECK(std::abs(heat_kernel_density(model, 40.0, r).density - 1.0) < 1e-6);

  // Direct eigenfunction sum at the identity: U_l(1) = l + 1.
  double direct = 0.0;
  for (int l = 0; l <= 50; ++l) direct += (l + 1.0) * (l + 1.0) * std::exp(-0.5 * l * (l + 2) * 0.5);
  CHECK(std::abs(heat_kernel_density(model, 0.5, GroupElement<SU2>::identity()).density - direct) < 1e-10);

  CHECK(heat_kernel_density(model, 0.01, g).truncation_warning);
  CHECK_FALSE(heat_kernel_density(model, 0.5, g).truncation_warning);
  CHECK_THROWS(heat_kernel_density(model, 1e-4, g));
}

TEST_CASE("heat kernel integrates to one against Haar measure") {
  for (double t : {0.2, 0.5, 1.0}) {
    const double su2 = oracle::simpson([&](double th) {
      return SU2::haar_class_density(th) * SU2::heat_kernel_series(t, th, 30, nullptr);
    }, 0.0, kPi, 4000);
    CHECK(std::abs(su2 - 1.0) < 1e-6);
    const double so3 = oracle::simpson([&](double th) {
      return SO3::haar_class_density(th) * SO3::heat_kernel_series(t, th, 30, nullptr);
    }, 0.0, kPi, 4000);
    CHECK(std::abs(so3 - 1.0) < 1e-6);
  }
}

TEST_CASE("image-sum heat kernel agrees with the character series") {
  for (double t : {0.1, 0.3, 0.8}) {
    for (double th : {0.05, 0.7, 1.9, 3.0}) {
      const double series = SU2::heat_kernel_series(t, th, 60, nullptr);
      CHECK(std::exp(SU2::log_heat_kernel(t, th)) == doctest::Approx(series).epsilon(1e-9));
      const double so3 = SO3::heat_kernel_series(t, th, 60, nullptr);
      CHECK(std::exp(SO3::log_heat_kernel(t, th)) == doctest::Approx(so3).epsilon(1e-9));
    }
  }
}

TEST_CASE("sample_brownian_bridge: endpoint and refinement") {
  for (std::uint64_t i = 0; i < 20; ++i) {
    Rng rng(77, i);
    const auto p = sample_brownian_bridge(GroupElement<SU2>::identity(), 128, rng);
    CHECK(p.points.back().distance(GroupElement<SU2>::identity()) < 1e-6);
    const auto target = exp_map<SO3>(AlgebraElement(0.3, 0.2, -0.9));
    const auto q = sample_brownian_bridge(target, 64, rng);
    CHECK(q.points.back().distance(target) < 1e-6);
    CHECK(q.points.back().is_valid(1e-8));
  }

  auto mean_correction = [](int grid) {
    std::vector<double> c(400);
    for (std::size_t i = 0; i < c.size(); ++i) {
      Rng rng(5, i);
      c[i] = sample_brownian_bridge(GroupElement<SU2>::identity(), grid, rng).forcing_correction;
    }
    return sample_stats(c).mean;
  };
  CHECK(mean_correction(256) < mean_correction(64));
}

TEST_CASE("bridge midpoint marginal passes chi-square against p_{1/2}^2 / p_1") {
  const double p1 = SU2::heat_kernel_series(1.0, 0.0, 40, nullptr);
  auto density = [&](double th) {
    const double p = SU2::heat_kernel_series(0.5, th, 40, nullptr);
    return SU2::haar_class_density(th) * p * p / p1;
  };
  const std::size_t n = 20000;
  std::vector<double> angles(n);
  parallel_for(n, [&](std::size_t i) {
    Rng rng(31337, i);
    angles[i] = sample_brownian_bridge(GroupElement<SU2>::identity(), 256, rng).at_time(0.5).angle();
  });
  const double stat = oracle::chi_square_statistic(angles, density, 0.0, kPi, 20);
  CHECK(stat < 36.19);  // chi^2_{19}, 1%
}

TEST_CASE("bridge with heat-kernel-distributed target reproduces the free marginal") {
  auto density = [](double th) {
    return SU2::haar_class_density(th) * SU2::heat_kernel_series(0.5, th, 40, nullptr);
  };
  const std::size_t n = 20000;
  std::vector<double> angles(n);
  parallel_for(n, [&](std::size_t i) {
    Rng rng(99, i);
    Rng target_rng = rng.split(1);
    const auto target = sample_brownian_motion<SU2>(512, target_rng).points.back();
    angles[i] = sample_brownian_bridge(target, 256, rng).at_time(0.5).angle();
  });
  CHECK(oracle::chi_square_statistic(angles, density, 0.0, kPi, 20) < 36.19);
}

TEST_CASE("path_to_loop: closed paths, cutoff support") {
  Rng rng(1);
  const auto loop = sample_brownian_bridge(GroupElement<SU2>::identity(), 64, rng);
  const auto same = path_to_loop(loop);
  CHECK(same.cutoff_weight == 1.0);
  for (int k = 0; k <= 64; ++k) CHECK(same.loop.points[k].distance(loop.points[k]) < 1e-12);

  int checked = 0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    Rng r(3, i);
    const auto p = sample_brownian_motion<SU2>(64, r);
    if (p.points.back().angle() >= kPi / 2) continue;
    const auto t = path_to_loop(p);
    CHECK(t.cutoff_weight == 1.0);
    CHECK(t.loop.points.back().distance(GroupElement<SU2>::identity()) < 1e-9);
    ++checked;
  }
  CHECK(checked > 20);

  GroupPath<SU2> at_cut = loop;
  at_cut.points.back() = GroupElement<SU2>(-SU2::identity());
  CHECK(path_to_loop(at_cut).cutoff_weight == 0.0);
  CHECK(smooth_cutoff(2.0) > 0.0);
  CHECK(smooth_cutoff(2.0) < 1.0);
  CHECK(smooth_cutoff(3.0) == 0.0);
}

namespace {

std::vector<GroupElement<SU2>> battery_translation(int n, int which) {
  std::vector<GroupElement<SU2>> k;
  for (int j = 0; j <= n; ++j) {
    const double s = static_cast<double>(j) / n;
    AlgebraElement a;
    switch (which) {
      case 0: a = AlgebraElement(0.8 * s, 0.0, 0.0); break;
      case 1: a = AlgebraElement(0.5 * std::sin(kPi * s), 0.3 * s * s, 0.0); break;
      default: a = AlgebraElement(0.2 * s, -0.4 * s, 0.6 * std::sin(2 * kPi * s)); break;
    }
    k.push_back(exp_map<SU2>(a));
  }
  return k;
}

} // namespace

TEST_CASE("quasi_invariance_density: trivial translation and unit mean") {
  Rng rng(8);
  const auto p = sample_brownian_motion<SU2>(128, rng);
  std::vector<GroupElement<SU2>> trivial(129);
  CHECK(quasi_invariance_density(trivial, p, TranslationSide::left) == doctest::Approx(1.0));
  CHECK(quasi_invariance_density(trivial, p, TranslationSide::right) == doctest::Approx(1.0));

  for (int which = 0; which < 3; ++which) {
    const auto k = battery_translation(128, which);
    for (auto side : {TranslationSide::left, TranslationSide::right}) {
      const std::size_t n = 100000;
      std::vector<double> j(n), j2(n);
      parallel_for(n, [&](std::size_t i) {
        Rng r(400 + which, i);
        j[i] = quasi_invariance_density(k, sample_brownian_motion<SU2>(128, r), side);
        j2[i] = j[i] * j[i];
      });
      const auto s = sample_stats(j);
      CHECK(std::abs(s.mean - 1.0) < 3.0 * s.standard_error);
      for (double v : j) REQUIRE(v > 0.0);
      CHECK(std::isfinite(sample_stats(j2).mean));
    }
  }
}

TEST_CASE("quasi_invariance_density: change of measure for F = tr(g_{1/2})") {
  const int grid = 128;
  const auto k = battery_translation(grid, 1);
  for (auto side : {TranslationSide::left, TranslationSide::right}) {
    const std::size_t n = 100000;
    std::vector<double> lhs(n), rhs(n);
    parallel_for(n, [&](std::size_t i) {
      Rng r(900, i);
      const auto g = sample_brownian_motion<SU2>(grid, r);
      lhs[i] = translate_path(k, g, side).at_time(0.5).matrix().trace().real();
      rhs[i] = g.at_time(0.5).matrix().trace().real() * quasi_invariance_density(k, g, side);
    });
    const auto a = sample_stats(lhs);
    const auto b = sample_stats(rhs);
    const double pooled = std::sqrt(a.standard_error * a.standard_error + b.standard_error * b.standard_error);
    CHECK(std::abs(a.mean - b.mean) < 3.0 * pooled);
  }
}
