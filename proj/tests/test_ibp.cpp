#include "doctest.h"

#include <cmath>

#include "loopspace/ibp.hpp"

using namespace loopspace;

namespace {

IbpOptions reduced() {
  IbpOptions o;
  o.samples = 4000;
  o.grid = 128;
  o.seed = 3;
  return o;
}

void check_all(const std::vector<MCReport>& reports, std::size_t expected) {
  CHECK(reports.size() == expected);
  for (const auto& r : reports) {
    INFO(r.id << " z=" << r.z);
    CHECK(std::abs(r.z) <= 3.5);
    CHECK(r.standard_error > 0.0);
  }
}

} // namespace

TEST_CASE("IBP batteries at reduced sample size") {
  check_all(group_ibp_battery(reduced()), 6);
  check_all(base_ibp_battery(Manifold(ManifoldKind::sphere2), reduced()).with_ricci, 6);
  const TotalIbpResult t = total_ibp_battery(BundleSpec::maurer_cartan(0.5), reduced());
  check_all(t.horizontal, 4);
  check_all(t.vertical, 4);
  const QuasiInvarianceResult q = quasi_invariance_battery(reduced());
  check_all(q.density_mean, 3);
  check_all(q.change_of_measure, 3);
}

TEST_CASE("IBP batteries are deterministic in the seed") {
  IbpOptions o = reduced();
  o.samples = 500;
  const auto a = group_ibp_battery(o);
  const auto b = group_ibp_battery(o);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].lhs == b[i].lhs);
    CHECK(a[i].rhs == b[i].rhs);
  }
  o.seed = 4;
  CHECK(group_ibp_battery(o)[0].lhs != a[0].lhs);
}
