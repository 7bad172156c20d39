#pragma once

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Dense>

#include "loopspace/random.hpp"

namespace loopspace {

// Coordinates in the fixed orthonormal basis {k_1, k_2, k_3} of the Lie
// algebra. Both shipped groups are three dimensional.
using AlgebraElement = Eigen::Vector3d;

class CutLocusError : public std::runtime_error {
public:
  explicit CutLocusError(const std::string& what) : std::runtime_error(what) {}
};

// SU(2) with basis k_j = i·sigma_j and metric <X,Y> = -1/2 tr(XY). With this
// normalization SU(2) is isometric to the unit 3-sphere and the cut locus of
// the identity is {-I}, at distance pi.
struct SU2 {
  using Matrix = Eigen::Matrix2cd;
  static constexpr const char* name = "SU(2)";
  static constexpr double metric_constant = 0.5;

  static Matrix identity() { return Matrix::Identity(); }
  static Matrix hat(const AlgebraElement& a);
  static AlgebraElement vee(const Matrix& m);
  static Matrix exp(const AlgebraElement& a);
  static Matrix inverse(const Matrix& g) { return g.adjoint(); }
  // Distance to the identity, in [0, pi].
  static double angle(const Matrix& g);
  // Signed distance of g from the cut locus in the trace criterion used by
  // log_map: |tr g + 2|.
  static double cut_margin(const Matrix& g);
  static AlgebraElement log_unchecked(const Matrix& g);
  static Matrix reproject(const Matrix& g);
  static AlgebraElement bracket(const AlgebraElement& a, const AlgebraElement& b) {
    return -2.0 * a.cross(b);
  }
  static Eigen::Matrix3d adjoint(const Matrix& g);
  static double unitarity_error(const Matrix& g);

  // Character expansion of the heat kernel of 1/2 Laplacian, density with
  // respect to normalized Haar measure, as a function of the class angle.
  static double heat_kernel_series(double t, double theta, int order, double* tail);
  static double haar_class_density(double theta);
  // Exact small-time log density (method of images on the unit 3-sphere).
  static double log_heat_kernel(double t, double theta);
};

// SO(3) with the rotation generators J_x, J_y, J_z as basis and metric
// -1/2 tr(XY); exp(theta J_z) is the rotation by theta about z.
struct SO3 {
  using Matrix = Eigen::Matrix3d;
  static constexpr const char* name = "SO(3)";
  static constexpr double metric_constant = 0.5;

  static Matrix identity() { return Matrix::Identity(); }
  static Matrix hat(const AlgebraElement& a);
  static AlgebraElement vee(const Matrix& m);
  static Matrix exp(const AlgebraElement& a);
  static Matrix inverse(const Matrix& g) { return g.transpose(); }
  static double angle(const Matrix& g);
  static double cut_margin(const Matrix& g);
  static AlgebraElement log_unchecked(const Matrix& g);
  static Matrix reproject(const Matrix& g);
  static AlgebraElement bracket(const AlgebraElement& a, const AlgebraElement& b) {
    return a.cross(b);
  }
  static Eigen::Matrix3d adjoint(const Matrix& g) { return g; }
  static double unitarity_error(const Matrix& g);

  static double heat_kernel_series(double t, double theta, int order, double* tail);
  static double haar_class_density(double theta);
  static double log_heat_kernel(double t, double theta);
};

template <class Group>
class GroupElement {
public:
  using Matrix = typename Group::Matrix;

  GroupElement() : m_(Group::identity()) {}
  explicit GroupElement(const Matrix& m) : m_(m) {}

  static GroupElement identity() { return GroupElement(); }

  const Matrix& matrix() const { return m_; }
  GroupElement inverse() const { return GroupElement(Group::inverse(m_)); }
  GroupElement operator*(const GroupElement& o) const { return GroupElement(m_ * o.m_); }
  double angle() const { return Group::angle(m_); }
  double unitarity_error() const { return Group::unitarity_error(m_); }
  bool is_valid(double tol = 1e-10) const;
  double distance(const GroupElement& o) const { return (m_ - o.m_).norm(); }

private:
  Matrix m_;
};

// Uniform grid on [0,1] with points[k] at time k/N. increments[k] is the
// driving increment of step k: points[k+1] = exp(increments[k]) points[k].
template <class Group>
struct GroupPath {
  std::vector<GroupElement<Group>> points;
  std::vector<AlgebraElement> increments;
  // Size of the last-step correction needed to hit the bridge target.
  double forcing_correction = 0.0;

  int steps() const { return static_cast<int>(points.size()) - 1; }
  double dt() const { return 1.0 / steps(); }
  double time(int k) const { return static_cast<double>(k) / steps(); }
  const GroupElement<Group>& at_time(double s) const;
};

template <class Group>
GroupElement<Group> exp_map(const AlgebraElement& a) {
  return GroupElement<Group>(Group::exp(a));
}

constexpr double kDefaultCutMargin = 1e-3;

// Principal logarithm. Throws CutLocusError when g is within `cut_margin` of
// the cut locus (trace criterion).
template <class Group>
AlgebraElement log_map(const GroupElement<Group>& g, double cut_margin = kDefaultCutMargin);

// <A,B> = -c_G tr(hat(A) hat(B)); equals the Euclidean product of coordinates.
template <class Group>
double algebra_inner(const AlgebraElement& a, const AlgebraElement& b);

struct HeatKernelModel {
  int truncation_order = 30;
  double time_floor = 1e-3;
};

struct HeatKernelValue {
  double density = 0.0;
  double tail_bound = 0.0;
  bool truncation_warning = false;
};

template <class Group>
HeatKernelValue heat_kernel_density(const HeatKernelModel& model, double t,
                                    const GroupElement<Group>& g);

// -(d/dtheta log p_T)(theta) / theta: the guiding drift toward a target at
// log-distance L is this factor times L.
template <class Group>
double bridge_drift_factor(double remaining_time, double theta);

template <class Group>
GroupPath<Group> sample_brownian_motion(int grid_size, Rng& rng);

template <class Group>
GroupPath<Group> sample_brownian_bridge(const GroupElement<Group>& target, int grid_size,
                                        Rng& rng);

struct CutoffRadii {
  double inner = 1.5707963267948966;  // pi/2
  double outer = 2.356194490192345;   // 3pi/4
};

// C-infinity bump in r: 1 on [0, inner], 0 on [outer, inf).
double smooth_cutoff(double r, const CutoffRadii& radii = {});

template <class Group>
struct LoopTransform {
  GroupPath<Group> loop;
  double cutoff_weight = 0.0;
};

template <class Group>
LoopTransform<Group> path_to_loop(const GroupPath<Group>& path, const CutoffRadii& radii = {});

enum class TranslationSide { left, right };

// Girsanov weight J with E[F(k g)] = E[F(g) J_l(k)(g)] (left) or
// E[F(g k)] = E[F(g) J_r(k)(g)] (right), computed from the recorded driving
// increments. `k` holds the translating path on the same grid, k[0] = e.
template <class Group>
double quasi_invariance_density(const std::vector<GroupElement<Group>>& k,
                                const GroupPath<Group>& path, TranslationSide side);

template <class Group>
GroupPath<Group> translate_path(const std::vector<GroupElement<Group>>& k,
                                const GroupPath<Group>& path, TranslationSide side);

} // namespace loopspace
