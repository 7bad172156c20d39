#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "loopspace/forms.hpp"

namespace loopspace {

struct NPOptions {
  int grid = 256;
  std::size_t samples = 10000;
  // Number of argument pairs per kernel component.
  int pair_budget = 2000;
  double p = 2.0;
  std::uint64_t seed = 1;
  // Nodes per slot of the sup scan for C'.
  int scan = 64;
};

// C: sup ||sigma(x) - sigma(x')||_p / sum_i sqrt|x_i - x'_i| over sampled
// pairs in one component off the diagonals. C': sup ||sigma(x)||_p.
// slope: regression of log ||sigma(x) - sigma(x')||_2 on log |x - x'|.
struct NPConstants {
  double c = 0.0;
  double c_prime = 0.0;
  double slope = 0.0;
  int pairs = 0;
};

struct NPReport {
  std::string form;
  int grid = 0;
  // Indexed by the number of vertical slots.
  std::vector<NPConstants> split;
  NPConstants aggregate;
};

NPReport np_estimate(const KernelForm& sigma, const BundleSpec& spec,
                     const InfinityConnection& conn, const NPOptions& options);

// Relative spread max/min - 1 of positive values.
double relative_spread(const std::vector<double>& v);

struct GridStability {
  std::vector<int> grids;
  std::vector<double> c;
  std::vector<double> c_prime;
  std::vector<double> slope;
  double c_spread = 0.0;
  double c_prime_spread = 0.0;
};
GridStability np_grid_stability(const std::function<KernelForm(int grid)>& make_form,
                                const BundleSpec& spec, const InfinityConnection& conn,
                                const std::vector<int>& grids, NPOptions options);

// Ratios of the NP constants of a form built under two section profiles,
// per kernel component (number of vertical slots) and grid.
struct ConnectionIndependence {
  std::vector<int> grids;
  std::vector<int> components;
  // [component][grid]
  std::vector<std::vector<double>> c_ratio;
  std::vector<std::vector<double>> c_prime_ratio;
  // Ratios are 1 where both estimates vanish. Largest spread over components.
  double c_ratio_spread = 0.0;
  double c_prime_ratio_spread = 0.0;
  bool pass = false;
};
ConnectionIndependence connection_independence_check(
    const std::function<KernelForm(const InfinityConnection&)>& make_form,
    const BundleSpec& spec, const std::vector<int>& grids, NPOptions options,
    double tolerance = 0.2);

// C_p(a ^ b) against 2 (C_2p(a) C'_2p(b) + C'_2p(a) C_2p(b)) for 1-forms.
struct WedgeBound {
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};
WedgeBound wedge_bound_check(const KernelForm& a, const KernelForm& b, const BundleSpec& spec,
                             const InfinityConnection& conn, const NPOptions& options);

} // namespace loopspace
