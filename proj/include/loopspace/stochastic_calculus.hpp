#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "loopspace/lie_group.hpp"
#include "loopspace/manifold.hpp"

namespace loopspace {

// Left-point sum  sum_k <f_k, dW_k>.
double ito_integral(const std::vector<FrameVector>& integrand,
                    const std::vector<FrameVector>& increments);
double ito_integral(const std::vector<AlgebraElement>& integrand,
                    const std::vector<AlgebraElement>& increments);
// Midpoint sum  sum_k <(f_k + f_{k+1})/2, dW_k>; integrand has one more entry
// than increments.
double stratonovich_integral(const std::vector<FrameVector>& integrand,
                             const std::vector<FrameVector>& increments);
double stratonovich_integral(const std::vector<double>& integrand,
                             const std::vector<double>& increments);

// int <H'_s + 1/2 Ric(H_s), dW_s> against the antidevelopment increments.
double divergence_base(const Manifold& m, const VectorFieldH& h, const ManifoldPath& path,
                       bool include_ricci = true);

// int <K'_s, dB_s>  (left field K_s g_s).
template <class Group>
double divergence_left(const VectorFieldH& k, const GroupPath<Group>& path);
// int <g_s K'_s g_s^{-1}, dB_s>  (right field g_s K_s).
template <class Group>
double divergence_right(const VectorFieldH& k, const GroupPath<Group>& path);

// M_k = tau_k^{-1} nabla_X tau_k in frame coordinates, for the field X = tau H:
// M_k w = sum_{u<k} <H_u, w> dW_u - <dW_u, w> H_u (constant curvature, midpoint
// values of H). Zero on the plane.
std::vector<Eigen::MatrixXd> transport_derivative(const Manifold& m, const VectorFieldH& h,
                                                  const ManifoldPath& path);
// nabla_X dgamma_k = tau_k H'_k dt (ambient).
std::vector<AmbientVector> transport_derivative_of_increment(const Manifold& m,
                                                             const VectorFieldH& h,
                                                             const ManifoldPath& path);

// Smooth function of r sampled points with its gradient per slot. Points are
// flattened real coordinate vectors (ambient vectors for manifolds, real and
// imaginary parts for matrices).
struct CylindricalFunctional {
  std::string name;
  std::vector<double> times;
  std::function<double(const std::vector<Eigen::VectorXd>&)> value;
  std::function<std::vector<Eigen::VectorXd>(const std::vector<Eigen::VectorXd>&)> gradient;
};

// sum_i <grad_i F, X_{s_i}>.
double functional_derivative(const CylindricalFunctional& f,
                             const std::vector<Eigen::VectorXd>& points,
                             const std::vector<Eigen::VectorXd>& field);

struct MCReport {
  std::string id;
  double lhs = 0.0;
  double rhs = 0.0;
  double standard_error = 0.0;
  double z = 0.0;
  std::size_t samples = 0;
  double threshold = 3.0;
  bool pass = false;
};

// Paired per-sample values: lhs_i = <dF, X>, rhs_i = F div X. The standard
// error is that of the paired difference.
MCReport make_report(const std::string& id, const std::vector<double>& lhs,
                     const std::vector<double>& rhs, double threshold);

// Runs `sample(i, lhs, rhs)` for i < samples in parallel and reduces.
MCReport ibp_check(const std::string& id, std::size_t samples, double threshold,
                   const std::function<void(std::size_t, double&, double&)>& sample);

// Anticipative Stratonovich integral  int_0^1 u(v) o dW_v  of a random field
// given by its values on a fine reference grid, evaluated on a coarser grid
// of `coarse` intervals: sum_i <(1/(t_{i+1}-t_i)) int_{t_i}^{t_{i+1}} u dv,
// W_{t_{i+1}} - W_{t_i}>.
double anticipative_stratonovich(const std::vector<FrameVector>& u_fine,
                                 const std::vector<FrameVector>& dw_fine, int coarse);
// Group version: int <g_v u_v g_v^{-1}, dB_v> with the Ad-rotated integrand.
double anticipative_stratonovich_group(const std::vector<AlgebraElement>& u_fine,
                                       const GroupPath<SU2>& path, int coarse);

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct ConvergenceSweep {
  std::vector<int> grids;
  // ||I_N - I_{2N}||_{L^2} per grid N.
  std::vector<double> differences;
  // Slope against dt = 1/N; 1/2 for the Riemann scheme.
  double rate = 0.0;
};

// Integrand u on the fine grid as a function of the driving path values
// W_0..W_n (flat case) or of the group path.
using FlatIntegrand = std::function<std::vector<FrameVector>(const std::vector<FrameVector>&)>;
using GroupIntegrand = std::function<std::vector<AlgebraElement>(const GroupPath<SU2>&)>;

// Grid-doubling differences I_N - I_{2N} over `grids`, all evaluated on one
// fine path of `fine_grid` steps per sample.
ConvergenceSweep anticipative_self_convergence(const FlatIntegrand& u, int dim, int fine_grid,
                                               const std::vector<int>& grids,
                                               std::size_t samples, std::uint64_t seed);
ConvergenceSweep anticipative_group_self_convergence(const GroupIntegrand& u, int fine_grid,
                                                     const std::vector<int>& grids,
                                                     std::size_t samples, std::uint64_t seed);

struct ReductionCheck {
  double rms_error = 0.0;
  double adapted_standard_error = 0.0;
  bool pass = false;
};
// Deterministic u: the interval-average scheme on `grid` intervals against
// stratonovich_integral on the same grid, with the noise refined by
// `refinement`. Passes when the RMS difference is below 3 standard errors of
// the adapted integral's mean.
ReductionCheck anticipative_reduction(const std::function<FrameVector(double)>& u, int dim,
                                      int grid, int refinement, std::size_t samples,
                                      std::uint64_t seed);

} // namespace loopspace
