#pragma once

#include <functional>
#include <string>
#include <vector>

#include "loopspace/forms.hpp"

namespace loopspace {

// F_Q = f*c - pi*mu - tau(nu) evaluated on two total-space tangents.
struct CareyMurrayParts {
  double canonical = 0.0;
  double mu = 0.0;
  double tau_nu = 0.0;
  double total() const { return canonical - mu - tau_nu; }
};
CareyMurrayParts carey_murray_parts(const BundleLoop& loop, const TotalTangent& a,
                                    const TotalTangent& b, const BundleSpec& spec);
double carey_murray(const BundleLoop& loop, const TotalTangent& a, const TotalTangent& b,
                    const BundleSpec& spec);

// The pieces and F_Q itself as 2-forms on generator fields.
TotalForm fiber_canonical_form(const FormContext& ctx);
TotalForm base_mu_form(const FormContext& ctx);
TotalForm tau_nu_form(const FormContext& ctx);
TotalForm carey_murray_form(const FormContext& ctx);

// Forms on the base loop space (ambient tangents along the loop) and on the
// path group (left-trivialized tangents).
struct BaseForm {
  std::string name;
  int degree = 0;
  std::function<double(const ManifoldPath&, const std::vector<std::vector<AmbientVector>>&)> value;
};
struct FiberForm {
  std::string name;
  int degree = 0;
  std::function<double(const GroupPath<Fiber>&, const std::vector<std::vector<AlgebraElement>>&)>
      value;
};

TotalForm pullback_base(const BaseForm& sigma, const FormContext& ctx);
TotalForm pullback_fiber(const FiberForm& sigma, const FormContext& ctx);

// d sigma at the given tangents, extended as frozen-frame fields tau H (base)
// or frozen left-trivialized fields g Y (path group).
double exterior_derivative_base(const BaseForm& sigma, const Manifold& m, const ManifoldPath& path,
                                const std::vector<std::vector<AmbientVector>>& tangents,
                                double eps = 1e-4);
double exterior_derivative_fiber(const FiberForm& sigma, const GroupPath<Fiber>& path,
                                 const std::vector<std::vector<AlgebraElement>>& tangents,
                                 double eps = 1e-4);

BaseForm mu_base_form(const BundleSpec& spec);
FiberForm canonical_fiber_form();
// X -> sum_k w_k <c(p_k), X_k> with c(p) = (sin p_0, p_0 p_1, cos p_last, ...).
BaseForm sample_base_one_form();
// Y -> int <vee(g_s), Y_s> ds.
FiberForm sample_fiber_one_form();

// d F_Q on a fixed triple of generators across grid refinements of the
// smooth total loop.
struct ClosednessSweep {
  std::vector<int> grids;
  // max |d F_Q| over the triple types HHH, HHV, HVV, VVV.
  std::vector<double> residuals;
  std::vector<std::string> types;
  // |d F_Q| per [type][grid].
  std::vector<std::vector<double>> by_type;
  // -slope of log residual against log N.
  double order = 0.0;
  bool monotone = false;
};
ClosednessSweep carey_murray_closedness(const BundleSpec& spec, const InfinityConnection& conn,
                                        const std::vector<int>& grids);

} // namespace loopspace
