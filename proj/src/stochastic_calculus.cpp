#include "loopspace/stochastic_calculus.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace loopspace {

double ito_integral(const std::vector<FrameVector>& integrand,
                    const std::vector<FrameVector>& increments) {
  if (integrand.size() < increments.size()) throw std::invalid_argument("integrand too short");
  double s = 0.0;
  for (std::size_t k = 0; k < increments.size(); ++k) s += integrand[k].dot(increments[k]);
  return s;
}

double ito_integral(const std::vector<AlgebraElement>& integrand,
                    const std::vector<AlgebraElement>& increments) {
  if (integrand.size() < increments.size()) throw std::invalid_argument("integrand too short");
  double s = 0.0;
  for (std::size_t k = 0; k < increments.size(); ++k) s += integrand[k].dot(increments[k]);
  return s;
}

double stratonovich_integral(const std::vector<FrameVector>& integrand,
                             const std::vector<FrameVector>& increments) {
  if (integrand.size() != increments.size() + 1) throw std::invalid_argument("size mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < increments.size(); ++k) {
    s += 0.5 * (integrand[k] + integrand[k + 1]).dot(increments[k]);
  }
  return s;
}

double stratonovich_integral(const std::vector<double>& integrand,
                             const std::vector<double>& increments) {
  if (integrand.size() != increments.size() + 1) throw std::invalid_argument("size mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < increments.size(); ++k) {
    s += 0.5 * (integrand[k] + integrand[k + 1]) * increments[k];
  }
  return s;
}

double divergence_base(const Manifold& m, const VectorFieldH& h, const ManifoldPath& path,
                       bool include_ricci) {
  if (h.steps() != path.steps()) throw std::invalid_argument("grid mismatch");
  const double ric = include_ricci ? 0.5 * m.ricci_constant() : 0.0;
  double s = 0.0;
  for (int k = 0; k < path.steps(); ++k) {
    s += (h.derivative(k) + ric * h.value(k)).dot(path.antidevelopment[k]);
  }
  return s;
}

template <class Group>
double divergence_left(const VectorFieldH& k, const GroupPath<Group>& path) {
  if (k.steps() != path.steps()) throw std::invalid_argument("grid mismatch");
  double s = 0.0;
  for (int j = 0; j < path.steps(); ++j) {
    s += AlgebraElement(k.derivative(j)).dot(path.increments[j]);
  }
  return s;
}

template <class Group>
double divergence_right(const VectorFieldH& k, const GroupPath<Group>& path) {
  if (k.steps() != path.steps()) throw std::invalid_argument("grid mismatch");
  double s = 0.0;
  for (int j = 0; j < path.steps(); ++j) {
    const AlgebraElement kd = k.derivative(j);
    s += (Group::adjoint(path.points[j].matrix()) * kd).dot(path.increments[j]);
  }
  return s;
}

template double divergence_left<SU2>(const VectorFieldH&, const GroupPath<SU2>&);
template double divergence_left<SO3>(const VectorFieldH&, const GroupPath<SO3>&);
template double divergence_right<SU2>(const VectorFieldH&, const GroupPath<SU2>&);
template double divergence_right<SO3>(const VectorFieldH&, const GroupPath<SO3>&);

std::vector<Eigen::MatrixXd> transport_derivative(const Manifold& m, const VectorFieldH& h,
                                                  const ManifoldPath& path) {
  const int n = path.steps();
  std::vector<Eigen::MatrixXd> out(n + 1, Eigen::MatrixXd::Zero(m.dim(), m.dim()));
  if (m.flat()) return out;
  for (int k = 0; k < n; ++k) {
    const Eigen::VectorXd mid = 0.5 * (h.value(k) + h.value(k + 1));
    const Eigen::VectorXd dw = path.antidevelopment[k];
    out[k + 1] = out[k] + dw * mid.transpose() - mid * dw.transpose();
  }
  return out;
}

std::vector<AmbientVector> transport_derivative_of_increment(const Manifold& m,
                                                             const VectorFieldH& h,
                                                             const ManifoldPath& path) {
  std::vector<AmbientVector> out(path.steps());
  for (int k = 0; k < path.steps(); ++k) {
    out[k] = path.transport[k] * (m.frame() * h.derivative(k)) * path.dt();
  }
  return out;
}

double functional_derivative(const CylindricalFunctional& f,
                             const std::vector<Eigen::VectorXd>& points,
                             const std::vector<Eigen::VectorXd>& field) {
  const auto g = f.gradient(points);
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += g[i].dot(field[i]);
  return s;
}

MCReport make_report(const std::string& id, const std::vector<double>& lhs,
                     const std::vector<double>& rhs, double threshold) {
  const auto a = sample_stats(lhs);
  const auto b = sample_stats(rhs);
  MCReport r;
  r.id = id;
  r.lhs = a.mean;
  r.rhs = b.mean;
  r.samples = lhs.size();
  r.threshold = threshold;
  r.standard_error = std::sqrt(a.standard_error * a.standard_error +
                               b.standard_error * b.standard_error);
  const double diff = a.mean - b.mean;
  if (r.standard_error > 0.0) {
    r.z = diff / r.standard_error;
  } else {
    r.z = diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  r.pass = std::abs(r.z) <= threshold;
  return r;
}

MCReport ibp_check(const std::string& id, std::size_t samples, double threshold,
                   const std::function<void(std::size_t, double&, double&)>& sample) {
  std::vector<double> lhs(samples), rhs(samples);
  parallel_for(samples, [&](std::size_t i) { sample(i, lhs[i], rhs[i]); });
  return make_report(id, lhs, rhs, threshold);
}

double anticipative_stratonovich(const std::vector<FrameVector>& u_fine,
                                 const std::vector<FrameVector>& dw_fine, int coarse) {
  const int n = static_cast<int>(dw_fine.size());
  if (static_cast<int>(u_fine.size()) != n + 1) throw std::invalid_argument("size mismatch");
  if (coarse <= 0 || n % coarse != 0) throw std::invalid_argument("coarse grid must divide fine grid");
  const int r = n / coarse;
  double s = 0.0;
  for (int i = 0; i < coarse; ++i) {
    FrameVector avg = FrameVector::Zero(u_fine[0].size());
    FrameVector inc = FrameVector::Zero(u_fine[0].size());
    for (int j = i * r; j < (i + 1) * r; ++j) {
      avg += 0.5 * (u_fine[j] + u_fine[j + 1]);
      inc += dw_fine[j];
    }
    s += (avg / r).dot(inc);
  }
  return s;
}

double anticipative_stratonovich_group(const std::vector<AlgebraElement>& u_fine,
                                       const GroupPath<SU2>& path, int coarse) {
  std::vector<FrameVector> u(u_fine.size()), dw(path.increments.size());
  for (std::size_t k = 0; k < u_fine.size(); ++k) {
    u[k] = SU2::adjoint(path.points[k].matrix()) * u_fine[k];
  }
  for (std::size_t k = 0; k < dw.size(); ++k) dw[k] = path.increments[k];
  return anticipative_stratonovich(u, dw, coarse);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("need two points");
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

ConvergenceSweep sweep(const std::vector<int>& grids, std::size_t samples,
                       const std::function<std::vector<double>(std::size_t)>& integrals) {
  std::vector<std::vector<double>> per(samples);
  parallel_for(samples, [&](std::size_t i) { per[i] = integrals(i); });
  ConvergenceSweep out;
  out.grids = grids;
  std::vector<double> dt;
  for (std::size_t g = 0; g < grids.size(); ++g) {
    double sq = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
      const double d = per[i][2 * g] - per[i][2 * g + 1];
      sq += d * d;
    }
    out.differences.push_back(std::sqrt(sq / samples));
    dt.push_back(1.0 / grids[g]);
  }
  out.rate = loglog_slope(dt, out.differences);
  return out;
}

void check_grids(const std::vector<int>& grids, int fine_grid) {
  for (int g : grids) {
    if (g <= 0 || fine_grid % (2 * g) != 0) {
      throw std::invalid_argument("fine grid must be a multiple of every doubled grid");
    }
  }
}

} // namespace

ConvergenceSweep anticipative_self_convergence(const FlatIntegrand& u, int dim, int fine_grid,
                                               const std::vector<int>& grids,
                                               std::size_t samples, std::uint64_t seed) {
  check_grids(grids, fine_grid);
  return sweep(grids, samples, [&](std::size_t i) {
    Rng rng(seed, i);
    const double sdt = std::sqrt(1.0 / fine_grid);
    std::vector<FrameVector> w(fine_grid + 1, FrameVector::Zero(dim)), dw(fine_grid);
    for (int k = 0; k < fine_grid; ++k) {
      dw[k] = sdt * rng.normal_vector(dim);
      w[k + 1] = w[k] + dw[k];
    }
    const auto values = u(w);
    std::vector<double> out;
    for (int g : grids) {
      out.push_back(anticipative_stratonovich(values, dw, g));
      out.push_back(anticipative_stratonovich(values, dw, 2 * g));
    }
    return out;
  });
}

ConvergenceSweep anticipative_group_self_convergence(const GroupIntegrand& u, int fine_grid,
                                                     const std::vector<int>& grids,
                                                     std::size_t samples, std::uint64_t seed) {
  check_grids(grids, fine_grid);
  return sweep(grids, samples, [&](std::size_t i) {
    Rng rng(seed, i);
    const auto path = sample_brownian_motion<SU2>(fine_grid, rng);
    const auto values = u(path);
    std::vector<double> out;
    for (int g : grids) {
      out.push_back(anticipative_stratonovich_group(values, path, g));
      out.push_back(anticipative_stratonovich_group(values, path, 2 * g));
    }
    return out;
  });
}

ReductionCheck anticipative_reduction(const std::function<FrameVector(double)>& u, int dim,
                                      int grid, int refinement, std::size_t samples,
                                      std::uint64_t seed) {
  const int fine = grid * refinement;
  std::vector<FrameVector> u_fine(fine + 1), u_coarse(grid + 1);
  for (int k = 0; k <= fine; ++k) u_fine[k] = u(static_cast<double>(k) / fine);
  for (int k = 0; k <= grid; ++k) u_coarse[k] = u(static_cast<double>(k) / grid);
  std::vector<double> diff(samples), adapted(samples);
  parallel_for(samples, [&](std::size_t i) {
    Rng rng(seed, i);
    const double sdt = std::sqrt(1.0 / fine);
    std::vector<FrameVector> dw(fine), dw_coarse(grid, FrameVector::Zero(dim));
    for (int k = 0; k < fine; ++k) {
      dw[k] = sdt * rng.normal_vector(dim);
      dw_coarse[k / refinement] += dw[k];
    }
    adapted[i] = stratonovich_integral(u_coarse, dw_coarse);
    diff[i] = anticipative_stratonovich(u_fine, dw, grid) - adapted[i];
  });
  ReductionCheck r;
  double sq = 0.0;
  for (double d : diff) sq += d * d;
  r.rms_error = std::sqrt(sq / samples);
  r.adapted_standard_error = sample_stats(adapted).standard_error;
  r.pass = r.rms_error < 3.0 * r.adapted_standard_error;
  return r;
}

} // namespace loopspace
