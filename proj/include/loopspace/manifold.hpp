#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "loopspace/random.hpp"

namespace loopspace {

// Ambient vectors and frames. Bounded storage keeps the hot sampling loops
// free of heap allocation.
using AmbientVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 4, 1>;
using AmbientMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;
// Coordinates of a tangent vector at the base point in the fixed frame.
using FrameVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;

class StepTooLargeError : public std::runtime_error {
public:
  explicit StepTooLargeError(const std::string& what) : std::runtime_error(what) {}
};

class EndpointError : public std::invalid_argument {
public:
  explicit EndpointError(const std::string& what) : std::invalid_argument(what) {}
};

enum class ManifoldKind { sphere2, sphere3, plane };

struct ManifoldPoint {
  AmbientVector coords;
};

struct TangentVector {
  ManifoldPoint base;
  AmbientVector vec;
};

// Unit spheres S^2 in R^3, S^3 in R^4 (identified with SU(2)), and the flat
// plane R^2. The base point is the north pole e_last for S^2, (1,0,0,0) for
// S^3 (the identity of SU(2)) and the origin for the plane.
class Manifold {
public:
  explicit Manifold(ManifoldKind kind);
  static Manifold from_name(const std::string& name);

  ManifoldKind kind() const { return kind_; }
  std::string name() const;
  int dim() const { return dim_; }
  int ambient_dim() const { return ambient_; }
  bool flat() const { return kind_ == ManifoldKind::plane; }

  const AmbientVector& base_point() const { return base_; }
  // Orthonormal frame of T_x as columns (ambient x dim).
  const AmbientMatrix& frame() const { return frame_; }

  AmbientVector project_tangent(const AmbientVector& p, const AmbientVector& v) const;
  AmbientVector normalize(const AmbientVector& p) const;
  double distance(const AmbientVector& p, const AmbientVector& q) const;

  AmbientVector geodesic_exp(const AmbientVector& p, const AmbientVector& v) const;
  // Initial velocity of the minimizing geodesic from p to q.
  AmbientVector log_map(const AmbientVector& p, const AmbientVector& q) const;
  // Parallel transport T_p -> T_q along the minimizing geodesic, as an
  // ambient orthogonal map (rotation in the plane of p and q).
  AmbientMatrix step_transport(const AmbientVector& p, const AmbientVector& q) const;

  AmbientVector curvature(const AmbientVector& x, const AmbientVector& y,
                          const AmbientVector& z) const;
  AmbientVector ricci(const AmbientVector& x) const;
  double ricci_constant() const { return flat() ? 0.0 : dim_ - 1.0; }

  // -(d/dtheta log p_T)(theta) / theta for the heat kernel of 1/2 Laplacian.
  double bridge_drift_factor(double remaining_time, double theta) const;

private:
  ManifoldKind kind_;
  int dim_;
  int ambient_;
  AmbientVector base_;
  AmbientMatrix frame_;
};

ManifoldPoint geodesic_exp(const Manifold& m, const ManifoldPoint& x, const TangentVector& v);
AmbientVector curvature(const Manifold& m, const TangentVector& x, const TangentVector& y,
                        const TangentVector& z);
AmbientVector ricci(const Manifold& m, const TangentVector& x);

// Heat kernel of 1/2 Laplacian on the unit S^2 against normalized area.
double sphere2_heat_kernel(double t, double theta, int order = 80);

// Uniform grid path. transport[k] maps T_x to T_{points[k]}; antidevelopment[k]
// is the frame-coordinate increment tau_k^{-1} log_{p_k}(p_{k+1}).
struct ManifoldPath {
  ManifoldKind kind = ManifoldKind::sphere2;
  std::vector<AmbientVector> points;
  std::vector<AmbientMatrix> transport;
  std::vector<FrameVector> antidevelopment;
  double forcing_correction = 0.0;

  int steps() const { return static_cast<int>(points.size()) - 1; }
  double dt() const { return 1.0 / steps(); }
  double time(int k) const { return static_cast<double>(k) / steps(); }
  int index_of(double s) const;
};

// Recomputes transport and antidevelopment from the points.
void parallel_transport(const Manifold& m, ManifoldPath& path);
ManifoldPath make_path(const Manifold& m, std::vector<AmbientVector> points);
// Deterministic path from a function of time on the grid.
ManifoldPath make_path(const Manifold& m, int grid_size,
                       const std::function<AmbientVector(double)>& curve);

ManifoldPath sample_brownian_motion_manifold(const Manifold& m, int grid_size, Rng& rng);
ManifoldPath sample_brownian_bridge_manifold(const Manifold& m, int grid_size, Rng& rng);

// Finite-energy path H in T_x (frame coordinates) with H_0 = H_1 = 0. Also
// used for algebra paths K (dim 3).
class VectorFieldH {
public:
  VectorFieldH() = default;
  VectorFieldH(int grid_size, int dim, const std::function<FrameVector(double)>& h);
  static VectorFieldH zero(int grid_size, int dim);
  // Grid values only; function() is then a piecewise-linear interpolant.
  static VectorFieldH from_values(std::vector<FrameVector> values);

  int steps() const { return static_cast<int>(values_.size()) - 1; }
  int dim() const { return dim_; }
  const FrameVector& value(int k) const { return values_[k]; }
  // Difference quotient on interval [k, k+1].
  const FrameVector& derivative(int k) const { return derivatives_[k]; }
  const std::function<FrameVector(double)>& function() const { return h_; }
  double norm_squared() const;

private:
  int dim_ = 0;
  std::function<FrameVector(double)> h_;
  std::vector<FrameVector> values_;
  std::vector<FrameVector> derivatives_;
};

// X_k = tau_k H_k as ambient tangent vectors.
std::vector<AmbientVector> field_values(const Manifold& m, const VectorFieldH& h,
                                        const ManifoldPath& path);

} // namespace loopspace
