#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "loopspace/bundle.hpp"
#include "loopspace/stochastic_calculus.hpp"

namespace loopspace {

struct IbpOptions {
  std::size_t samples = 100000;
  int grid = 256;
  std::uint64_t seed = 1;
  double threshold = 3.0;
};

// Flattened coordinates used by the battery functionals: 2x2 matrices as
// (Re row-major, Im row-major); total-space points as (gamma, Re q, Im q).
Eigen::VectorXd flatten_matrix(const SU2::Matrix& m);
Eigen::VectorXd flatten_total(const AmbientVector& gamma, const SU2::Matrix& q);

// Brownian motion on SU(2), F of the path at two times, three right fields
// g K and three left fields K g.
std::vector<MCReport> group_ibp_battery(const IbpOptions& options);

struct BaseIbpResult {
  std::vector<MCReport> with_ricci;
  // Same samples with the Ricci term dropped from the divergence.
  std::vector<MCReport> without_ricci;
};
// Brownian bridge on the base, six (F, H) pairs.
BaseIbpResult base_ibp_battery(const Manifold& m, const IbpOptions& options);

struct TotalIbpResult {
  std::vector<MCReport> horizontal;
  std::vector<MCReport> vertical;
  // Samples whose holonomy fell within the cut margin; they are kept.
  std::size_t near_cut = 0;
};
// Total-space measure, four X^H pairs and four X^V pairs on the same samples.
TotalIbpResult total_ibp_battery(const BundleSpec& spec, const IbpOptions& options,
                                 const InfinityConnection& conn = InfinityConnection());

struct QuasiInvarianceResult {
  // E[J_l(k)] against 1, per battery path k_s = exp(K_s / 4).
  std::vector<MCReport> density_mean;
  // E[F(k g)] against E[F(g) J_l(k)(g)].
  std::vector<MCReport> change_of_measure;
};
QuasiInvarianceResult quasi_invariance_battery(const IbpOptions& options);

} // namespace loopspace
