#pragma once

#include <functional>
#include <string>
#include <vector>

#include "loopspace/lie_group.hpp"
#include "loopspace/manifold.hpp"

namespace loopspace {

using Fiber = SU2;
using FiberElement = GroupElement<SU2>;

enum class BundleKind { flat, maurer_cartan, abelian };

// Trivial SU(2) bundle over a base with a global connection form A. Transport
// convention: d tau = -A(d gamma) tau, curvature F(u,v) = dA(u,v) + [A u, A v].
//
//   flat           A = 0
//   maurer_cartan  over S^3: A_p(v) = lambda * Im(conj(p) v) in quaternion
//                  notation, i.e. lambda times the Maurer-Cartan form; the
//                  formula is used as is on all of R^4
//   abelian        A_p(v) = beta/2 (p_0 v_1 - p_1 v_0) k_3 on the first two
//                  ambient coordinates; dA = beta dx^dy
class BundleSpec {
public:
  static BundleSpec flat(ManifoldKind base);
  static BundleSpec maurer_cartan(double lambda);
  static BundleSpec abelian(ManifoldKind base, double beta);
  static BundleSpec from_name(const std::string& name, double parameter);

  BundleKind kind() const { return kind_; }
  std::string name() const;
  double parameter() const { return parameter_; }
  const Manifold& base() const { return base_; }

  AlgebraElement connection(const AmbientVector& p, const AmbientVector& v) const;
  // dA(u, v) of the ambient extension.
  AlgebraElement connection_differential(const AmbientVector& p, const AmbientVector& u,
                                         const AmbientVector& v) const;
  AlgebraElement curvature(const AmbientVector& p, const AmbientVector& u,
                           const AmbientVector& v) const;

private:
  BundleSpec(BundleKind kind, Manifold base, double parameter)
      : kind_(kind), base_(base), parameter_(parameter) {}
  BundleKind kind_;
  Manifold base_;
  double parameter_;
};

// S^3 point as a unit quaternion in SU(2): p_0 I + hat(p_1, p_2, p_3).
Fiber::Matrix quaternion_matrix(const AmbientVector& p);

struct BundleTransport {
  std::vector<FiberElement> tau;
  FiberElement holonomy;
};

// Exponential midpoint steps tau_{k+1} = exp(-A_{m_k}(p_{k+1} - p_k)) tau_k with
// m_k the chord midpoint.
BundleTransport bundle_transport(const ManifoldPath& base_loop, const BundleSpec& spec);

// Ad(tau_{k+1/2}^{-1}) per step; shared by every field on the same loop.
struct HolonomyCache {
  std::vector<Eigen::Matrix3d> ad_mid;
};
HolonomyCache holonomy_cache(const ManifoldPath& base_loop, const BundleTransport& t,
                             const BundleSpec& spec);

// Midpoint increments tau_{k+1/2}^{-1} F(d gamma_k, X_{k+1/2}) tau_{k+1/2}.
std::vector<AlgebraElement> holonomy_increments(const ManifoldPath& base_loop,
                                                const BundleTransport& t, const BundleSpec& spec,
                                                const std::vector<AmbientVector>& x,
                                                const HolonomyCache* cache = nullptr);

// tau_1^{-1} <d tau_1, X> = int tau_s^{-1} F(d gamma_s, X_s) tau_s, midpoint rule.
AlgebraElement holonomy_derivative(const ManifoldPath& base_loop, const BundleTransport& t,
                                   const BundleSpec& spec, const std::vector<AmbientVector>& x);
// eta_k = tau_k^{-1} <d tau_k, X>
//       = -tau_k^{-1} A(X_k) tau_k + int_0^{s_k} tau^{-1} F(d gamma, X) tau.
std::vector<AlgebraElement> partial_holonomy_derivative(const ManifoldPath& base_loop,
                                                        const BundleTransport& t,
                                                        const BundleSpec& spec,
                                                        const std::vector<AmbientVector>& x,
                                                        const HolonomyCache* cache = nullptr);

// Reparametrization phi of [0,1] used by a local section.
enum class SectionProfile { linear, sine };
double section_phi(SectionProfile profile, double s);
double section_phi_derivative(SectionProfile profile, double s);

// Local section g_s(g_1) = exp(phi(s) Log g_1) on the chart away from the cut
// locus, and the associated infinity connection
//   K_s(g_1)(xi) = (D_xi g_s) g_s^{-1} - phi(s) xi,
// where xi = (delta g_1) g_1^{-1}. K_0 = K_1 = 0 and K is linear in xi.
class InfinityConnection {
public:
  explicit InfinityConnection(SectionProfile profile = SectionProfile::linear)
      : profile_(profile) {}
  SectionProfile profile() const { return profile_; }
  double phi(double s) const { return section_phi(profile_, s); }
  double phi_derivative(double s) const { return section_phi_derivative(profile_, s); }

  FiberElement local_section(const FiberElement& g1, double s) const;
  // (D_xi g_s) g_s^{-1}, analytic via the derivative of exp.
  AlgebraElement section_derivative(const FiberElement& g1, const AlgebraElement& xi,
                                    double s) const;
  AlgebraElement form(const FiberElement& g1, const AlgebraElement& xi, double s) const;

private:
  SectionProfile profile_;
};

FiberElement local_section(const FiberElement& g1, double s);
AlgebraElement infinity_connection_form(const FiberElement& g1, const AlgebraElement& xi,
                                        double s);

// Loop in the total space: q_s = (gamma_s, tau_s g_s) with g_1 = holonomy^{-1}.
struct BundleLoop {
  ManifoldPath base;
  GroupPath<Fiber> fiber;
  BundleTransport transport;

  const FiberElement& holonomy() const { return transport.holonomy; }
  FiberElement point(int k) const { return transport.tau[k] * fiber.points[k]; }
  bool near_cut_locus() const;
};

// Base bridge from stream split(0), fiber bridge e -> holonomy^{-1} from split(1).
BundleLoop sample_total(const BundleSpec& spec, int grid_size, Rng& rng);
// Deterministic base loop with a sampled or given fiber path.
BundleLoop make_bundle_loop(const BundleSpec& spec, ManifoldPath base, GroupPath<Fiber> fiber);

// Tangent vector to the total space: base variation (ambient vectors along
// gamma) and fiber variation delta g_s = g_s Y_s (left-trivialized).
struct TotalTangent {
  std::vector<AmbientVector> base;
  std::vector<AlgebraElement> fiber;

  TotalTangent& operator+=(const TotalTangent& o);
  TotalTangent operator-(const TotalTangent& o) const;
  double max_norm() const;
};

// Horizontal field X^H(H): base part tau_s H_s; fiber part
// delta g_s = phi(s) xi g_s with xi = -tau_1^{-1} <d tau_1, X>, the variation
// of the fiber endpoint holonomy^{-1}. In section terms this is
// (D_xi g_{.,s}) g_{.,s}^{-1} g_s - K_s(xi) g_s.
struct HorizontalField {
  TotalTangent tangent;
  AlgebraElement xi;
  std::vector<AmbientVector> base_values;
  // tau_k^{-1} <d tau_k, X> along the grid; eta.back() = -xi.
  std::vector<AlgebraElement> eta;
  // -Ad_{g_s^{-1}} K_s(xi), the part of the fiber variation not induced by
  // moving the section; vanishes at s = 0 and s = 1. Empty when the holonomy
  // is outside the chart or when not requested.
  std::vector<AlgebraElement> connection_part;
};
struct HorizontalFieldOptions {
  const HolonomyCache* cache = nullptr;
  bool connection_part = true;
};
HorizontalField horizontal_field(const VectorFieldH& h, const BundleLoop& loop,
                                 const BundleSpec& spec,
                                 const InfinityConnection& conn = InfinityConnection(),
                                 const HorizontalFieldOptions& options = {});
HorizontalField horizontal_field_from_values(const std::vector<FrameVector>& h,
                                             const BundleLoop& loop, const BundleSpec& spec,
                                             const InfinityConnection& conn,
                                             const HorizontalFieldOptions& options = {});

// Vertical field X^V(K): delta g_s = g_s K_s. Throws EndpointError unless
// K_0 = K_1 = 0 (enforced by VectorFieldH).
TotalTangent vertical_field(const VectorFieldH& k, const BundleLoop& loop);
double vertical_norm_squared(const VectorFieldH& k);

// Variation of the total-space point q_k = tau_k g_k as a matrix.
Fiber::Matrix total_point_variation(const BundleLoop& loop, const TotalTangent& t,
                                    const std::vector<AlgebraElement>& eta, int k);

double divergence_vertical(const VectorFieldH& k, const BundleLoop& loop);
double divergence_horizontal(const VectorFieldH& h, const BundleLoop& loop,
                             const BundleSpec& spec,
                             const InfinityConnection& conn = InfinityConnection());
// The fiber correction alone, given xi.
double divergence_horizontal_fiber(const AlgebraElement& xi, const BundleLoop& loop,
                                   const InfinityConnection& conn);

// [X^H(H1), X^H(H2)] = X^H(H_hat) + R^inf g_. with
//   H_hat_k = M1_k H2_k - M2_k H1_k   (M from transport_derivative),
//   R^inf_s = phi(s)(1 - phi(s)) [xi_1, xi_2]  (left-trivialized: Ad_{g^{-1}}).
struct BracketDecomposition {
  std::vector<FrameVector> h_hat;
  TotalTangent horizontal;
  std::vector<AlgebraElement> r_infinity;
  TotalTangent total() const;
};
BracketDecomposition bracket_horizontal(const VectorFieldH& h1, const VectorFieldH& h2,
                                        const BundleLoop& loop, const BundleSpec& spec,
                                        const InfinityConnection& conn = InfinityConnection());
// [X^V(K1), X^V(K2)] = X^V([K1, K2]).
TotalTangent bracket_vertical(const VectorFieldH& k1, const VectorFieldH& k2,
                              const BundleLoop& loop);
// [X^H(H), X^V(K)] = 0.
TotalTangent bracket_mixed(const VectorFieldH& h, const VectorFieldH& k, const BundleLoop& loop);

// Flow of a total-space field for finite-difference oracles: base points move
// along geodesics, fiber points by g_s exp(eps Y_s). Transports are recomputed.
BundleLoop flow_total(const BundleLoop& loop, const TotalTangent& t, double eps,
                      const BundleSpec& spec);

// Tangent in ambient coordinates: base vectors and fiber matrices g_s Y_s.
struct AmbientTangent {
  std::vector<AmbientVector> base;
  std::vector<Fiber::Matrix> fiber;
  double max_norm() const;
  AmbientTangent operator-(const AmbientTangent& o) const;
};
AmbientTangent to_ambient(const BundleLoop& loop, const TotalTangent& t);

using TotalField = std::function<TotalTangent(const BundleLoop&)>;
// D_a b - D_b a by central differences along the flows of a and b.
AmbientTangent flow_commutator(const TotalField& a, const TotalField& b, const BundleLoop& loop,
                               const BundleSpec& spec, double eps = 1e-4);

} // namespace loopspace
