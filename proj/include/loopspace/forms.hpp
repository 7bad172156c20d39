#pragma once

#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "loopspace/bundle.hpp"
#include "loopspace/stochastic_calculus.hpp"

namespace loopspace {

// Normalization of the canonical cocycle, 1/(8 pi^2), taken against
// <X, Y> = -1/2 tr(XY) on su(2).
extern const double kFormNormalization;

class DegreeMismatchError : public std::invalid_argument {
public:
  explicit DegreeMismatchError(const std::string& what) : std::invalid_argument(what) {}
};

class MissingDerivativeKernelError : public std::runtime_error {
public:
  explicit MissingDerivativeKernelError(const std::string& what) : std::runtime_error(what) {}
};

// Algebra-valued path with an analytic derivative.
struct AlgebraPath {
  std::function<AlgebraElement(double)> value;
  std::function<AlgebraElement(double)> derivative;
};
AlgebraPath pointwise_bracket(const AlgebraPath& x, const AlgebraPath& y);

// c(X, Y) = (1/8 pi^2) int <X, dY> - <Y, dX>, trapezoid rule on `grid` intervals.
double canonical_two_form(const AlgebraPath& x, const AlgebraPath& y, int grid);
// Grid-value version with midpoint increments.
double canonical_two_form(const std::vector<AlgebraElement>& x,
                          const std::vector<AlgebraElement>& y);
// c([X,Y],Z) + c([Y,Z],X) + c([Z,X],Y).
double cocycle_residual(const AlgebraPath& x, const AlgebraPath& y, const AlgebraPath& z,
                        int grid);

// Fields on the total loop space generated by deterministic (or frozen) H or K.
enum class FieldKind { horizontal, vertical };
struct FieldGenerator {
  FieldKind kind;
  VectorFieldH path;
};

struct FormContext {
  BundleSpec spec;
  InfinityConnection connection;
  // Flow step of the finite-difference derivatives.
  double eps = 1e-4;
};

TotalTangent realize(const FieldGenerator& x, const BundleLoop& loop, const FormContext& ctx);
// [X, Y] at `loop` as a sum of generalized generators: H-H gives the
// horizontal field of H_hat plus the vertical field Ad_{g^{-1}} R^inf, V-V
// gives [K1, K2], mixed brackets vanish.
std::vector<FieldGenerator> lie_bracket(const FieldGenerator& x, const FieldGenerator& y,
                                        const BundleLoop& loop, const FormContext& ctx);

// An n-form on the total loop space, multilinear in generator arguments.
struct TotalForm {
  std::string name;
  int degree = 0;
  std::function<double(const BundleLoop&, const std::vector<FieldGenerator>&)> value;
};

// d/de sigma(X_1..X_n) along the flow of `direction`, generators held fixed.
// Central differences at eps and eps/2 combined by Richardson extrapolation.
double directional_derivative(const TotalForm& sigma, const std::vector<FieldGenerator>& fields,
                              const FieldGenerator& direction, const BundleLoop& loop,
                              const FormContext& ctx);
// Alternating sum of directional derivatives plus bracket terms.
double exterior_derivative(const TotalForm& sigma, const std::vector<FieldGenerator>& fields,
                           const BundleLoop& loop, const FormContext& ctx);
TotalForm wedge(const TotalForm& a, const TotalForm& b);

// Cylindrical functional of the total-space points (gamma, Re q, Im q) as a
// 0-form, and its differential as a 1-form.
TotalForm functional_form(const CylindricalFunctional& f);
TotalForm functional_differential(const CylindricalFunctional& f, const FormContext& ctx);

// Kernel representation: sigma(X^H(H_1)..X^H(H_n), X^V(K_1)..X^V(K_m)) =
// int sigma^{n,m}(s; t) H'_1(s_1)..K'_m(t_m). A bound kernel returns the
// tensor over the slots (h..., v...), first slot slowest, each slot of size
// h_dim or v_dim.
using BoundKernel =
    std::function<Eigen::VectorXd(const std::vector<double>& s, const std::vector<double>& t)>;
using KernelBinder = std::function<BoundKernel(const BundleLoop&)>;
using DerivativeBinder = std::function<BoundKernel(const BundleLoop&, const FieldGenerator&)>;

struct KernelForm {
  std::string name;
  int degree = 0;
  int h_dim = 3;
  int v_dim = 3;
  // Indexed by the number m of vertical slots; absent entries are zero.
  std::map<int, KernelBinder> kernels;
  // Kernels of the directional derivative of sigma^{n,m}.
  std::map<int, DerivativeBinder> derivative_kernels;
  bool finite_difference_fallback = true;
};

int kernel_size(const KernelForm& sigma, int vertical_slots);

// Tensor-grid midpoint quadrature with `quadrature` nodes per slot.
double evaluate(const KernelForm& sigma, const BundleLoop& loop, const std::vector<VectorFieldH>& h,
                const std::vector<VectorFieldH>& k, int quadrature = 256);
// Ties between slot arguments are broken by `order` (a permutation of the
// slots, earliest first), selecting the half-limit from that component.
Eigen::VectorXd kernel_value(const KernelForm& sigma, const BundleLoop& loop,
                             std::vector<double> s, std::vector<double> t,
                             const std::vector<int>& order = {});
TotalForm as_total_form(const KernelForm& sigma, int quadrature = 256);

KernelForm constant_form(double c);
KernelForm zero_form(int degree, int h_dim = 3, int v_dim = 3);
// f * sigma for a functional of the total-space points.
KernelForm multiply(const CylindricalFunctional& f, const KernelForm& sigma);
// Antisymmetrized shuffle product.
KernelForm wedge(const KernelForm& a, const KernelForm& b);

// (nabla_X sigma)(X_1..X_n) with deterministic H_i, K_i, whose covariant
// derivatives vanish. Uses analytic derivative kernels when present, else the
// finite-difference flow derivative when enabled.
double covariant_derivative(const KernelForm& sigma, const BundleLoop& loop,
                            const std::vector<VectorFieldH>& h,
                            const std::vector<VectorFieldH>& k, const FieldGenerator& direction,
                            const FormContext& ctx, int quadrature = 256);

// Battery of kernel forms.
//   deterministic  1-form, horizontal kernel (s(1-s) - 1/6) e_1
//   holonomy       1-form X -> <e_j, xi(X)>, xi the variation of g_1
//   fiber          1-form X -> int <vee(g_s), Y_s> ds (left-trivialized fiber part)
//   canonical      2-form c on the vertical parts
KernelForm deterministic_form(int h_dim);
KernelForm holonomy_form(const BundleSpec& spec, int component);
KernelForm fiber_coordinate_form(const BundleSpec& spec, const InfinityConnection& conn);
KernelForm vertical_canonical_form(int h_dim);

// Base pullback: horizontal kernels unchanged, vertical slots annihilated.
KernelForm pullback_base(const KernelForm& sigma_base);
// Fiber pullback of a 1-form on the path group whose kernel pairs with Y'
// (not centered, since Y_1 is free on paths). The vertical kernel is kept;
// the horizontal kernel composes with Y_s = Ad_{g_s^{-1}} phi(s) xi(H) through
// the Stratonovich sum sum_j sigma(t_j) (Y_{j+1} - Y_j).
KernelForm pullback_fiber(const KernelForm& sigma_group, const BundleSpec& spec,
                          const InfinityConnection& conn);
// Uncentered path-group 1-form Y -> int <vee(g_s), Y_s> ds.
KernelForm path_group_coordinate_form();

// mu(X, Y) = (1/8 pi^2) sum_{u<s} <a_s(X), a_u(Y)> - <a_s(Y), a_u(X)> with
// a_k the holonomy increments. Arguments are ambient base tangents.
double mu_form(const ManifoldPath& base, const BundleTransport& t, const BundleSpec& spec,
               const std::vector<AmbientVector>& x, const std::vector<AmbientVector>& y);

// 3-form on the ambient space of the base.
using AmbientThreeForm = std::function<double(const AmbientVector& p, const AmbientVector& u,
                                              const AmbientVector& v, const AmbientVector& w)>;
// (1/8 pi^2)(<A ^ dA> + 1/3 <A ^ [A ^ A]>) of the ambient connection form.
AmbientThreeForm chern_simons_form(const BundleSpec& spec);
// (1/8 pi^2) <F ^ F>(u, v, w, z).
double pontryagin_density(const BundleSpec& spec, const AmbientVector& p, const AmbientVector& u,
                          const AmbientVector& v, const AmbientVector& w, const AmbientVector& z);
// d nu(u, v, w, z) at p for constant vector fields, by central differences.
double exterior_derivative_three_form(const AmbientThreeForm& nu, const AmbientVector& p,
                                      const AmbientVector& u, const AmbientVector& v,
                                      const AmbientVector& w, const AmbientVector& z,
                                      double h = 1e-4);
// tau(nu)(X, Y) = sum_k nu_{mid}(d gamma_k, X_mid, Y_mid).
double transgression_tau_nu(const ManifoldPath& base, const AmbientThreeForm& nu,
                            const std::vector<AmbientVector>& x,
                            const std::vector<AmbientVector>& y);

} // namespace loopspace
