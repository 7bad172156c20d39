#include "loopspace/forms.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "loopspace/ibp.hpp"

namespace loopspace {

const double kFormNormalization = 1.0 / (8.0 * std::numbers::pi * std::numbers::pi);

AlgebraPath pointwise_bracket(const AlgebraPath& x, const AlgebraPath& y) {
  return {[x, y](double s) { return AlgebraElement(SU2::bracket(x.value(s), y.value(s))); },
          [x, y](double s) {
            return AlgebraElement(SU2::bracket(x.derivative(s), y.value(s)) +
                                  SU2::bracket(x.value(s), y.derivative(s)));
          }};
}

double canonical_two_form(const AlgebraPath& x, const AlgebraPath& y, int grid) {
  if (grid < 1) throw std::invalid_argument("grid must be positive");
  double sum = 0.0;
  for (int k = 0; k <= grid; ++k) {
    const double s = static_cast<double>(k) / grid;
    const double w = (k == 0 || k == grid) ? 0.5 : 1.0;
    sum += w * (x.value(s).dot(y.derivative(s)) - y.value(s).dot(x.derivative(s)));
  }
  return kFormNormalization * sum / grid;
}

double canonical_two_form(const std::vector<AlgebraElement>& x,
                          const std::vector<AlgebraElement>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("grid size mismatch");
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    sum += 0.5 * (x[k] + x[k + 1]).dot(y[k + 1] - y[k]) -
           0.5 * (y[k] + y[k + 1]).dot(x[k + 1] - x[k]);
  }
  return kFormNormalization * sum;
}

double cocycle_residual(const AlgebraPath& x, const AlgebraPath& y, const AlgebraPath& z,
                        int grid) {
  return canonical_two_form(pointwise_bracket(x, y), z, grid) +
         canonical_two_form(pointwise_bracket(y, z), x, grid) +
         canonical_two_form(pointwise_bracket(z, x), y, grid);
}

// ---------------------------------------------------------------- fields

TotalTangent realize(const FieldGenerator& x, const BundleLoop& loop, const FormContext& ctx) {
  if (x.kind == FieldKind::vertical) return vertical_field(x.path, loop);
  return horizontal_field(x.path, loop, ctx.spec, ctx.connection, {nullptr, false}).tangent;
}

namespace {

template <class V>
std::vector<FrameVector> pinned(const std::vector<V>& v) {
  std::vector<FrameVector> out(v.begin(), v.end());
  out.front().setZero();
  out.back().setZero();
  return out;
}

} // namespace

std::vector<FieldGenerator> lie_bracket(const FieldGenerator& x, const FieldGenerator& y,
                                        const BundleLoop& loop, const FormContext& ctx) {
  if (x.kind != y.kind) return {};
  if (x.kind == FieldKind::vertical) {
    std::vector<FrameVector> v(x.path.steps() + 1);
    for (int k = 0; k <= x.path.steps(); ++k) {
      v[k] = SU2::bracket(AlgebraElement(x.path.value(k)), AlgebraElement(y.path.value(k)));
    }
    return {{FieldKind::vertical, VectorFieldH::from_values(pinned(v))}};
  }
  const BracketDecomposition d = bracket_horizontal(x.path, y.path, loop, ctx.spec, ctx.connection);
  return {{FieldKind::horizontal, VectorFieldH::from_values(pinned(d.h_hat))},
          {FieldKind::vertical, VectorFieldH::from_values(pinned(d.r_infinity))}};
}

double directional_derivative(const TotalForm& sigma, const std::vector<FieldGenerator>& fields,
                              const FieldGenerator& direction, const BundleLoop& loop,
                              const FormContext& ctx) {
  const TotalTangent d = realize(direction, loop, ctx);
  auto central = [&](double e) {
    const BundleLoop p = flow_total(loop, d, e, ctx.spec);
    const BundleLoop m = flow_total(loop, d, -e, ctx.spec);
    return (sigma.value(p, fields) - sigma.value(m, fields)) / (2.0 * e);
  };
  const double coarse = central(ctx.eps);
  const double fine = central(0.5 * ctx.eps);
  return (4.0 * fine - coarse) / 3.0;
}

double exterior_derivative(const TotalForm& sigma, const std::vector<FieldGenerator>& fields,
                           const BundleLoop& loop, const FormContext& ctx) {
  const int n = sigma.degree;
  if (static_cast<int>(fields.size()) != n + 1) {
    throw DegreeMismatchError("exterior derivative of a " + std::to_string(n) +
                              "-form needs " + std::to_string(n + 1) + " fields");
  }
  auto without = [&](std::initializer_list<int> skip) {
    std::vector<FieldGenerator> out;
    for (int i = 0; i <= n; ++i) {
      if (std::find(skip.begin(), skip.end(), i) == skip.end()) out.push_back(fields[i]);
    }
    return out;
  };
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;
    sum += sign * directional_derivative(sigma, without({i}), fields[i], loop, ctx);
  }
  for (int i = 0; i <= n; ++i) {
    for (int j = i + 1; j <= n; ++j) {
      const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
      const std::vector<FieldGenerator> rest = without({i, j});
      for (const FieldGenerator& b : lie_bracket(fields[i], fields[j], loop, ctx)) {
        std::vector<FieldGenerator> args{b};
        args.insert(args.end(), rest.begin(), rest.end());
        sum += sign * sigma.value(loop, args);
      }
    }
  }
  return sum;
}

namespace {

// Subsets of {0..n-1} of size p in lexicographic order with shuffle signs.
struct Shuffle {
  std::vector<int> first;
  std::vector<int> second;
  double sign;
};

std::vector<Shuffle> shuffles(int n, int p) {
  std::vector<Shuffle> out;
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + p, true);
  do {
    Shuffle s;
    int inversions = 0;
    int seen_second = 0;
    for (int i = 0; i < n; ++i) {
      if (pick[i]) {
        s.first.push_back(i);
        inversions += seen_second;
      } else {
        s.second.push_back(i);
        ++seen_second;
      }
    }
    s.sign = (inversions % 2 == 0) ? 1.0 : -1.0;
    out.push_back(std::move(s));
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return out;
}

template <class T>
std::vector<T> pick(const std::vector<T>& v, const std::vector<int>& idx) {
  std::vector<T> out;
  for (int i : idx) out.push_back(v[i]);
  return out;
}

std::vector<Eigen::VectorXd> total_points(const CylindricalFunctional& f, const BundleLoop& loop) {
  std::vector<Eigen::VectorXd> z;
  for (double t : f.times) {
    const int k = loop.base.index_of(t);
    z.push_back(flatten_total(loop.base.points[k], loop.point(k).matrix()));
  }
  return z;
}

double functional_value(const CylindricalFunctional& f, const BundleLoop& loop) {
  return f.value(total_points(f, loop));
}

} // namespace

TotalForm wedge(const TotalForm& a, const TotalForm& b) {
  const int n = a.degree + b.degree;
  const std::vector<Shuffle> sh = shuffles(n, a.degree);
  return {a.name + "^" + b.name, n,
          [a, b, sh](const BundleLoop& loop, const std::vector<FieldGenerator>& x) {
            double sum = 0.0;
            for (const Shuffle& s : sh) {
              sum += s.sign * a.value(loop, pick(x, s.first)) * b.value(loop, pick(x, s.second));
            }
            return sum;
          }};
}

TotalForm functional_form(const CylindricalFunctional& f) {
  return {f.name, 0, [f](const BundleLoop& loop, const std::vector<FieldGenerator>&) {
            return functional_value(f, loop);
          }};
}

TotalForm functional_differential(const CylindricalFunctional& f, const FormContext& ctx) {
  return {"d" + f.name, 1,
          [f, ctx](const BundleLoop& loop, const std::vector<FieldGenerator>& x) {
            const TotalTangent t = realize(x.at(0), loop, ctx);
            const std::vector<AlgebraElement> eta =
                partial_holonomy_derivative(loop.base, loop.transport, ctx.spec, t.base);
            std::vector<Eigen::VectorXd> dz;
            for (double s : f.times) {
              const int k = loop.base.index_of(s);
              dz.push_back(flatten_total(t.base[k], total_point_variation(loop, t, eta, k)));
            }
            return functional_derivative(f, total_points(f, loop), dz);
          }};
}

// ---------------------------------------------------------------- kernels

int kernel_size(const KernelForm& sigma, int vertical_slots) {
  int size = 1;
  for (int i = 0; i < sigma.degree - vertical_slots; ++i) size *= sigma.h_dim;
  for (int i = 0; i < vertical_slots; ++i) size *= sigma.v_dim;
  return size;
}

namespace {

Eigen::VectorXd kron(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a[i] * b;
  return out;
}

Eigen::VectorXd slot_derivative(const VectorFieldH& f, double u) {
  const int n = f.steps();
  const int k = std::clamp(static_cast<int>(u * n), 0, n - 1);
  return f.derivative(k);
}

void check_degree(const KernelForm& sigma, std::size_t h, std::size_t k) {
  if (static_cast<int>(h + k) != sigma.degree) {
    throw DegreeMismatchError(sigma.name + " has degree " + std::to_string(sigma.degree) +
                              ", got " + std::to_string(h + k) + " fields");
  }
}

double contract(const BoundKernel& kernel, const std::vector<VectorFieldH>& h,
                const std::vector<VectorFieldH>& k, int quadrature) {
  const int slots = static_cast<int>(h.size() + k.size());
  if (slots == 0) return kernel({}, {})[0];
  std::vector<int> idx(slots, 0);
  std::vector<double> s(h.size()), t(k.size());
  // Cache slot derivatives per node.
  std::vector<std::vector<Eigen::VectorXd>> d(slots);
  for (int i = 0; i < slots; ++i) {
    const VectorFieldH& f = i < static_cast<int>(h.size()) ? h[i] : k[i - h.size()];
    for (int q = 0; q < quadrature; ++q) d[i].push_back(slot_derivative(f, (q + 0.5) / quadrature));
  }
  double sum = 0.0;
  while (true) {
    Eigen::VectorXd w = d[0][idx[0]];
    for (int i = 1; i < slots; ++i) w = kron(w, d[i][idx[i]]);
    for (std::size_t i = 0; i < h.size(); ++i) s[i] = (idx[i] + 0.5) / quadrature;
    for (std::size_t i = 0; i < k.size(); ++i) t[i] = (idx[h.size() + i] + 0.5) / quadrature;
    sum += kernel(s, t).dot(w);
    int i = slots - 1;
    while (i >= 0 && ++idx[i] == quadrature) idx[i--] = 0;
    if (i < 0) break;
  }
  return sum * std::pow(1.0 / quadrature, slots);
}

} // namespace

double evaluate(const KernelForm& sigma, const BundleLoop& loop, const std::vector<VectorFieldH>& h,
                const std::vector<VectorFieldH>& k, int quadrature) {
  check_degree(sigma, h.size(), k.size());
  auto it = sigma.kernels.find(static_cast<int>(k.size()));
  if (it == sigma.kernels.end()) return 0.0;
  return contract(it->second(loop), h, k, quadrature);
}

Eigen::VectorXd kernel_value(const KernelForm& sigma, const BundleLoop& loop,
                             std::vector<double> s, std::vector<double> t,
                             const std::vector<int>& order) {
  check_degree(sigma, s.size(), t.size());
  const int m = static_cast<int>(t.size());
  auto it = sigma.kernels.find(m);
  if (it == sigma.kernels.end()) return Eigen::VectorXd::Zero(kernel_size(sigma, m));
  for (std::size_t r = 0; r < order.size(); ++r) {
    const int slot = order[r];
    double& x = slot < static_cast<int>(s.size()) ? s[slot] : t[slot - s.size()];
    x += 1e-9 * static_cast<double>(r);
  }
  return it->second(loop)(s, t);
}

TotalForm as_total_form(const KernelForm& sigma, int quadrature) {
  return {sigma.name, sigma.degree,
          [sigma, quadrature](const BundleLoop& loop, const std::vector<FieldGenerator>& x) {
            std::vector<VectorFieldH> h, k;
            int inversions = 0;
            for (const FieldGenerator& g : x) {
              if (g.kind == FieldKind::horizontal) {
                h.push_back(g.path);
                inversions += static_cast<int>(k.size());
              } else {
                k.push_back(g.path);
              }
            }
            const double sign = (inversions % 2 == 0) ? 1.0 : -1.0;
            return sign * evaluate(sigma, loop, h, k, quadrature);
          }};
}

KernelForm constant_form(double c) {
  KernelForm f;
  f.name = "constant";
  f.degree = 0;
  f.kernels[0] = [c](const BundleLoop&) -> BoundKernel {
    return [c](const std::vector<double>&, const std::vector<double>&) {
      return Eigen::VectorXd::Constant(1, c);
    };
  };
  f.derivative_kernels[0] = [](const BundleLoop&, const FieldGenerator&) -> BoundKernel {
    return [](const std::vector<double>&, const std::vector<double>&) {
      return Eigen::VectorXd::Zero(1);
    };
  };
  return f;
}

KernelForm zero_form(int degree, int h_dim, int v_dim) {
  KernelForm f;
  f.name = "zero";
  f.degree = degree;
  f.h_dim = h_dim;
  f.v_dim = v_dim;
  for (int m = 0; m <= degree; ++m) {
    const int size = kernel_size(f, m);
    f.derivative_kernels[m] = [size](const BundleLoop&, const FieldGenerator&) -> BoundKernel {
      return [size](const std::vector<double>&, const std::vector<double>&) {
        return Eigen::VectorXd::Zero(size);
      };
    };
  }
  return f;
}

KernelForm multiply(const CylindricalFunctional& f, const KernelForm& sigma) {
  KernelForm out = sigma;
  out.name = f.name + "*" + sigma.name;
  out.derivative_kernels.clear();
  for (auto& [m, binder] : out.kernels) {
    binder = [f, inner = binder](const BundleLoop& loop) -> BoundKernel {
      const double c = functional_value(f, loop);
      BoundKernel k = inner(loop);
      return [c, k](const std::vector<double>& s, const std::vector<double>& t) {
        return Eigen::VectorXd(c * k(s, t));
      };
    };
  }
  return out;
}

KernelForm wedge(const KernelForm& a, const KernelForm& b) {
  const bool same = a.h_dim == b.h_dim && a.v_dim == b.v_dim;
  if (!same && a.degree > 0 && b.degree > 0) {
    throw std::invalid_argument("wedge of forms with different slot dimensions");
  }
  KernelForm out;
  out.name = a.name + "^" + b.name;
  out.degree = a.degree + b.degree;
  // A 0-form has no slots, so the other factor fixes the dimensions.
  const KernelForm& shape = a.degree > 0 ? a : b;
  out.h_dim = shape.h_dim;
  out.v_dim = shape.v_dim;
  const int n = out.degree;
  const std::vector<Shuffle> sh = shuffles(n, a.degree);
  for (int m = 0; m <= n; ++m) {
    bool any = false;
    for (const Shuffle& s : sh) {
      int ma = 0;
      for (int i : s.first) ma += (i >= n - m);
      if (a.kernels.count(ma) && b.kernels.count(m - ma)) any = true;
    }
    if (!any) continue;
    out.kernels[m] = [a, b, sh, n, m, dims = std::make_pair(out.h_dim, out.v_dim)](
                         const BundleLoop& loop) -> BoundKernel {
      // Bind every kernel that can appear once per loop.
      std::map<int, BoundKernel> ka, kb;
      for (const auto& [j, f] : a.kernels) ka[j] = f(loop);
      for (const auto& [j, f] : b.kernels) kb[j] = f(loop);
      return [ka, kb, sh, n, m, dims](const std::vector<double>& s, const std::vector<double>& t) {
        const int h = n - m;
        std::vector<double> args(s);
        args.insert(args.end(), t.begin(), t.end());
        std::vector<int> dim(n);
        int total = 1;
        for (int i = 0; i < n; ++i) {
          dim[i] = i < h ? dims.first : dims.second;
          total *= dim[i];
        }
        Eigen::VectorXd out = Eigen::VectorXd::Zero(total);
        for (const Shuffle& sf : sh) {
          auto split = [&](const std::vector<int>& idx, std::vector<double>& hs,
                           std::vector<double>& vs) {
            for (int i : idx) (i < h ? hs : vs).push_back(args[i]);
          };
          std::vector<double> ah, av, bh, bv;
          split(sf.first, ah, av);
          split(sf.second, bh, bv);
          auto ia = ka.find(static_cast<int>(av.size()));
          auto ib = kb.find(static_cast<int>(bv.size()));
          if (ia == ka.end() || ib == kb.end()) continue;
          const Eigen::VectorXd va = ia->second(ah, av);
          const Eigen::VectorXd vb = ib->second(bh, bv);
          // Scatter the product into the global slot order.
          std::vector<int> digit(n, 0);
          for (int flat = 0; flat < total; ++flat) {
            int rem = flat;
            for (int i = n - 1; i >= 0; --i) {
              digit[i] = rem % dim[i];
              rem /= dim[i];
            }
            int fa = 0, fb = 0;
            for (int i : sf.first) fa = fa * dim[i] + digit[i];
            for (int i : sf.second) fb = fb * dim[i] + digit[i];
            out[flat] += sf.sign * va[fa] * vb[fb];
          }
        }
        return out;
      };
    };
  }
  return out;
}

double covariant_derivative(const KernelForm& sigma, const BundleLoop& loop,
                            const std::vector<VectorFieldH>& h,
                            const std::vector<VectorFieldH>& k, const FieldGenerator& direction,
                            const FormContext& ctx, int quadrature) {
  check_degree(sigma, h.size(), k.size());
  const int m = static_cast<int>(k.size());
  if (!sigma.kernels.count(m)) return 0.0;
  auto it = sigma.derivative_kernels.find(m);
  if (it != sigma.derivative_kernels.end()) {
    return contract(it->second(loop, direction), h, k, quadrature);
  }
  if (!sigma.finite_difference_fallback) {
    throw MissingDerivativeKernelError(sigma.name + " has no derivative kernel for " +
                                       std::to_string(m) + " vertical slots");
  }
  std::vector<FieldGenerator> fields;
  for (const auto& f : h) fields.push_back({FieldKind::horizontal, f});
  for (const auto& f : k) fields.push_back({FieldKind::vertical, f});
  return directional_derivative(as_total_form(sigma, quadrature), fields, direction, loop, ctx);
}

// ---------------------------------------------------------------- battery

namespace {

// Step index i with mid_{i-1} <= a < mid_i, the number of midpoints at or below a.
int steps_below(double a, int n) {
  return std::clamp(static_cast<int>(std::floor(a * n + 0.5)), 0, n);
}

// Tail sums T_i = sum_{k >= i} B_k of the holonomy increments against the
// frame directions (3 x dim each), and their mean over a in [0,1].
struct HolonomyTails {
  std::vector<Eigen::MatrixXd> tail;
  Eigen::MatrixXd mean;
};

HolonomyTails holonomy_tails(const BundleLoop& loop, const BundleSpec& spec) {
  const Manifold& man = spec.base();
  const int n = loop.base.steps();
  const int d = man.dim();
  const HolonomyCache cache = holonomy_cache(loop.base, loop.transport, spec);
  std::vector<Eigen::MatrixXd> b(n, Eigen::MatrixXd::Zero(3, d));
  for (int i = 0; i < d; ++i) {
    std::vector<AmbientVector> x(n + 1);
    for (int k = 0; k <= n; ++k) x[k] = loop.base.transport[k] * man.frame().col(i);
    const auto inc = holonomy_increments(loop.base, loop.transport, spec, x, &cache);
    for (int k = 0; k < n; ++k) b[k].col(i) = inc[k];
  }
  HolonomyTails h;
  h.tail.assign(n + 1, Eigen::MatrixXd::Zero(3, d));
  h.mean = Eigen::MatrixXd::Zero(3, d);
  for (int k = n - 1; k >= 0; --k) {
    h.tail[k] = h.tail[k + 1] + b[k];
    h.mean += (k + 0.5) / n * b[k];
  }
  return h;
}

AlgebraElement fiber_coordinate(const FiberElement& g) {
  const auto& m = g.matrix();
  return SU2::vee(0.5 * (m - m.adjoint()));
}

// Trapezoid weights on the uniform grid.
double trapezoid_weight(int k, int n) { return (k == 0 || k == n) ? 0.5 / n : 1.0 / n; }

// Kernel of K -> sum_k w_k <v_k, K_k>: tail sums over grid intervals.
BoundKernel vertical_pairing_kernel(const std::vector<AlgebraElement>& v, bool centered = true) {
  const int n = static_cast<int>(v.size()) - 1;
  auto tails = std::make_shared<std::vector<AlgebraElement>>(n + 1, AlgebraElement::Zero());
  for (int k = n - 1; k >= 0; --k) {
    (*tails)[k] = (*tails)[k + 1] + trapezoid_weight(k + 1, n) * v[k + 1];
  }
  AlgebraElement mean = AlgebraElement::Zero();
  if (centered) {
    for (int j = 0; j < n; ++j) mean += (*tails)[j] / n;
  }
  return [tails, mean, n](const std::vector<double>&, const std::vector<double>& t) {
    const int j = std::clamp(static_cast<int>(t[0] * n), 0, n - 1);
    return Eigen::VectorXd((*tails)[j] - mean);
  };
}

} // namespace

KernelForm deterministic_form(int h_dim) {
  KernelForm f;
  f.name = "deterministic";
  f.degree = 1;
  f.h_dim = h_dim;
  f.kernels[0] = [h_dim](const BundleLoop&) -> BoundKernel {
    return [h_dim](const std::vector<double>& s, const std::vector<double>&) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(h_dim);
      v[0] = s[0] * (1.0 - s[0]) - 1.0 / 6.0;
      return v;
    };
  };
  f.derivative_kernels[0] = [h_dim](const BundleLoop&, const FieldGenerator&) -> BoundKernel {
    return [h_dim](const std::vector<double>&, const std::vector<double>&) {
      return Eigen::VectorXd::Zero(h_dim);
    };
  };
  return f;
}

KernelForm holonomy_form(const BundleSpec& spec, int component) {
  if (component < 0 || component > 2) throw std::invalid_argument("component out of range");
  KernelForm f;
  f.name = "holonomy-" + std::to_string(component);
  f.degree = 1;
  f.h_dim = spec.base().dim();
  f.kernels[0] = [spec, component](const BundleLoop& loop) -> BoundKernel {
    auto h = std::make_shared<HolonomyTails>(holonomy_tails(loop, spec));
    const int n = loop.base.steps();
    return [h, n, component](const std::vector<double>& s, const std::vector<double>&) {
      const int i = steps_below(s[0], n);
      return Eigen::VectorXd(-(h->tail[i] - h->mean).row(component).transpose());
    };
  };
  return f;
}

KernelForm fiber_coordinate_form(const BundleSpec& spec, const InfinityConnection& conn) {
  KernelForm f;
  f.name = "fiber-coordinate";
  f.degree = 1;
  f.h_dim = spec.base().dim();
  f.kernels[0] = [spec, conn](const BundleLoop& loop) -> BoundKernel {
    auto h = std::make_shared<HolonomyTails>(holonomy_tails(loop, spec));
    const int n = loop.base.steps();
    // Y_k = Ad_{g_k^{-1}} phi_k xi and Ad_g v(g) = v(g), so the form is <w, xi>.
    AlgebraElement w = AlgebraElement::Zero();
    for (int k = 0; k <= n; ++k) {
      w += trapezoid_weight(k, n) * conn.phi(loop.base.time(k)) *
           fiber_coordinate(loop.fiber.points[k]);
    }
    return [h, n, w](const std::vector<double>& s, const std::vector<double>&) {
      const int i = steps_below(s[0], n);
      return Eigen::VectorXd(-(h->tail[i] - h->mean).transpose() * w);
    };
  };
  f.kernels[1] = [](const BundleLoop& loop) -> BoundKernel {
    std::vector<AlgebraElement> v;
    for (const auto& g : loop.fiber.points) v.push_back(fiber_coordinate(g));
    return vertical_pairing_kernel(v);
  };
  f.derivative_kernels[1] = [spec, conn](const BundleLoop& loop,
                                         const FieldGenerator& direction) -> BoundKernel {
    const TotalTangent y = realize(direction, loop, FormContext{spec, conn});
    std::vector<AlgebraElement> v;
    for (std::size_t k = 0; k < loop.fiber.points.size(); ++k) {
      v.push_back(SU2::vee(loop.fiber.points[k].matrix() * SU2::hat(y.fiber[k])));
    }
    return vertical_pairing_kernel(v);
  };
  return f;
}

KernelForm pullback_base(const KernelForm& sigma_base) {
  KernelForm f = sigma_base;
  f.name = "pi*" + sigma_base.name;
  for (int m = 1; m <= f.degree; ++m) {
    f.kernels.erase(m);
    f.derivative_kernels.erase(m);
  }
  return f;
}

KernelForm pullback_fiber(const KernelForm& sigma_group, const BundleSpec& spec,
                          const InfinityConnection& conn) {
  if (sigma_group.degree != 1) throw DegreeMismatchError("fiber pullback takes 1-forms");
  KernelForm f;
  f.name = "f*" + sigma_group.name;
  f.degree = 1;
  f.h_dim = spec.base().dim();
  f.v_dim = sigma_group.v_dim;
  auto it = sigma_group.kernels.find(1);
  if (it == sigma_group.kernels.end()) return f;
  const KernelBinder group = it->second;
  f.kernels[1] = group;
  if (auto d = sigma_group.derivative_kernels.find(1); d != sigma_group.derivative_kernels.end()) {
    f.derivative_kernels[1] = d->second;
  }
  f.kernels[0] = [group, spec, conn](const BundleLoop& loop) -> BoundKernel {
    auto h = std::make_shared<HolonomyTails>(holonomy_tails(loop, spec));
    const BoundKernel k = group(loop);
    const int n = loop.base.steps();
    // sum_j <sigma(t_j), Y_{j+1} - Y_j> = <u, xi>.
    auto coefficient = [&](int j) {
      return Eigen::Matrix3d(conn.phi(loop.base.time(j)) *
                             SU2::adjoint(loop.fiber.points[j].matrix()).transpose());
    };
    AlgebraElement u = AlgebraElement::Zero();
    for (int j = 0; j < n; ++j) {
      const AlgebraElement sigma = k({}, {(j + 0.5) / n});
      u += (coefficient(j + 1) - coefficient(j)).transpose() * sigma;
    }
    return [h, n, u](const std::vector<double>& s, const std::vector<double>&) {
      const int i = steps_below(s[0], n);
      return Eigen::VectorXd(-(h->tail[i] - h->mean).transpose() * u);
    };
  };
  return f;
}

KernelForm path_group_coordinate_form() {
  KernelForm f;
  f.name = "path-coordinate";
  f.degree = 1;
  f.kernels[1] = [](const BundleLoop& loop) -> BoundKernel {
    std::vector<AlgebraElement> v;
    for (const auto& g : loop.fiber.points) v.push_back(fiber_coordinate(g));
    return vertical_pairing_kernel(v, false);
  };
  return f;
}

KernelForm vertical_canonical_form(int h_dim) {
  KernelForm f;
  f.name = "canonical";
  f.degree = 2;
  f.h_dim = h_dim;
  f.kernels[2] = [](const BundleLoop&) -> BoundKernel {
    return [](const std::vector<double>&, const std::vector<double>& t) {
      const double d = t[1] - t[0];
      const double sgn = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
      const double c = kFormNormalization * (sgn - 2.0 * d);
      Eigen::VectorXd v = Eigen::VectorXd::Zero(9);
      v[0] = v[4] = v[8] = c;
      return v;
    };
  };
  f.derivative_kernels[2] = [](const BundleLoop&, const FieldGenerator&) -> BoundKernel {
    return [](const std::vector<double>&, const std::vector<double>&) {
      return Eigen::VectorXd::Zero(9);
    };
  };
  return f;
}

// ---------------------------------------------------------------- mu, nu

double mu_form(const ManifoldPath& base, const BundleTransport& t, const BundleSpec& spec,
               const std::vector<AmbientVector>& x, const std::vector<AmbientVector>& y) {
  const HolonomyCache cache = holonomy_cache(base, t, spec);
  const auto ax = holonomy_increments(base, t, spec, x, &cache);
  const auto ay = holonomy_increments(base, t, spec, y, &cache);
  AlgebraElement cx = AlgebraElement::Zero(), cy = AlgebraElement::Zero();
  double sum = 0.0;
  for (std::size_t k = 0; k < ax.size(); ++k) {
    sum += ax[k].dot(cy) - ay[k].dot(cx);
    cx += ax[k];
    cy += ay[k];
  }
  return kFormNormalization * sum;
}

AmbientThreeForm chern_simons_form(const BundleSpec& spec) {
  return [spec](const AmbientVector& p, const AmbientVector& u, const AmbientVector& v,
                const AmbientVector& w) {
    const AlgebraElement au = spec.connection(p, u), av = spec.connection(p, v),
                         aw = spec.connection(p, w);
    const double a_da = au.dot(spec.connection_differential(p, v, w)) -
                        av.dot(spec.connection_differential(p, u, w)) +
                        aw.dot(spec.connection_differential(p, u, v));
    // <A ^ [A ^ A]>(u, v, w) = 6 <Au, [Av, Aw]>.
    const double cubic = 6.0 * au.dot(SU2::bracket(av, aw));
    return kFormNormalization * (a_da + cubic / 3.0);
  };
}

double pontryagin_density(const BundleSpec& spec, const AmbientVector& p, const AmbientVector& u,
                          const AmbientVector& v, const AmbientVector& w, const AmbientVector& z) {
  auto f = [&](const AmbientVector& a, const AmbientVector& b) { return spec.curvature(p, a, b); };
  return kFormNormalization * 2.0 *
         (f(u, v).dot(f(w, z)) - f(u, w).dot(f(v, z)) + f(u, z).dot(f(v, w)));
}

double exterior_derivative_three_form(const AmbientThreeForm& nu, const AmbientVector& p,
                                      const AmbientVector& u, const AmbientVector& v,
                                      const AmbientVector& w, const AmbientVector& z, double h) {
  auto d = [&](const AmbientVector& dir, const AmbientVector& a, const AmbientVector& b,
               const AmbientVector& c) {
    const AmbientVector pp = p + h * dir, pm = p - h * dir;
    const AmbientVector pp2 = p + 2 * h * dir, pm2 = p - 2 * h * dir;
    return (8.0 * (nu(pp, a, b, c) - nu(pm, a, b, c)) - (nu(pp2, a, b, c) - nu(pm2, a, b, c))) /
           (12.0 * h);
  };
  return d(u, v, w, z) - d(v, u, w, z) + d(w, u, v, z) - d(z, u, v, w);
}

double transgression_tau_nu(const ManifoldPath& base, const AmbientThreeForm& nu,
                            const std::vector<AmbientVector>& x,
                            const std::vector<AmbientVector>& y) {
  double sum = 0.0;
  for (int k = 0; k < base.steps(); ++k) {
    const AmbientVector mid = 0.5 * (base.points[k] + base.points[k + 1]);
    sum += nu(mid, AmbientVector(base.points[k + 1] - base.points[k]),
              AmbientVector(0.5 * (x[k] + x[k + 1])), AmbientVector(0.5 * (y[k] + y[k + 1])));
  }
  return sum;
}

} // namespace loopspace
