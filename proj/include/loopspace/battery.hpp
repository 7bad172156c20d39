#pragma once

#include <vector>

#include "loopspace/bundle.hpp"
#include "loopspace/manifold.hpp"
#include "loopspace/stochastic_calculus.hpp"

namespace loopspace {

// Smooth closed loop through the base point; `variant` selects one of a few
// fixed shapes.
ManifoldPath smooth_loop(const Manifold& m, int grid_size, int variant = 0);
// smooth_loop lifted to the total space with the section fiber path
// g_s = exp(phi(s) Log holonomy^{-1}).
BundleLoop smooth_total_loop(const BundleSpec& spec, const InfinityConnection& conn,
                             int grid_size, int variant = 0);

// Deterministic finite-energy paths with zero endpoints. `dim` is the base
// dimension for H fields and 3 for algebra paths K.
VectorFieldH battery_field(int grid_size, int dim, int index);
constexpr int kBatteryFieldCount = 4;

// Smooth cylindrical functionals of the points at `times`, each point a real
// coordinate vector of length `point_dim`:
//   0  <c, z_first>, with c picking Re tr for 2x2 matrix coordinates
//   1  <c1, z_first> <c2, z_last>
//   2  sin(<c1, z_first> + <c2, z_last>)
//   3  exp(<c1, z_first>) cos(<c2, z_last>)
//   4  exp(-4 (z_first[point_dim - 1] - 0.3)^2), a bump in one coordinate
CylindricalFunctional battery_functional(int index, int point_dim, std::vector<double> times);
constexpr int kBatteryFunctionalCount = 5;

} // namespace loopspace
