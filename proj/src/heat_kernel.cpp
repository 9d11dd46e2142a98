#include "convexito/heat_kernel.hpp"

#include "convexito/errors.hpp"
#include "convexito/quadrature.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace cvx {

namespace {

constexpr double kTol = 1e-10;

void check_grid_size(int order, int d) {
  if (order < 2) throw ConfigError("quadrature order must be >= 2");
  if (std::pow(static_cast<double>(order), d) > 1e7) throw ConfigError("tensor quadrature grid too large");
}

// int_0^t p_s(r) ds in d dimensions via s = u^2.
double kernel_time_integral(double r, int d, double t) {
  if (r == 0.0 && d >= 2)
    throw NonIntegrableError("time integral of the heat kernel diverges at an atom in d >= 2");
  const double c = std::pow(2.0 * std::numbers::pi, -0.5 * d);
  auto g = [&](double u) {
    if (u <= 0.0) return d == 1 && r == 0.0 ? 2.0 * c : 0.0;
    return 2.0 * c * std::pow(u, 1 - d) * std::exp(-0.5 * r * r / (u * u));
  };
  return quad::adaptive(g, 0.0, std::sqrt(t), kTol);
}

}  // namespace

double heat_kernel_density(const KernelQuery& q) {
  if (!(q.s > 0.0)) throw std::domain_error("heat kernel: s must be > 0");
  if (q.x.size() != q.y.size()) throw ConfigError("heat kernel: x and y differ in dimension");
  const double d = static_cast<double>(q.x.size());
  const double r2 = (q.x - q.y).squaredNorm();
  return std::pow(2.0 * std::numbers::pi * q.s, -0.5 * d) * std::exp(-0.5 * r2 / q.s);
}

double semigroup_apply(const std::function<double(const Vec&)>& h, double s, const Vec& x, int order) {
  const int d = static_cast<int>(x.size());
  check_grid_size(order, d);
  if (s < 0.0) throw ConfigError("semigroup: s must be >= 0");
  if (s == 0.0) return h(x);
  const double scale = std::sqrt(s);
  const double v = quad::tensor_expectation(quad::gauss_hermite(order), d, [&](const Vec& z) {
    const Vec y = x + scale * z;
    return h(y);
  });
  if (!std::isfinite(v)) throw NonIntegrableError("semigroup quadrature overflowed (super-polynomial growth?)");
  return v;
}

SmoothedMeasure gaussian_smooth_measure_parts(const ScalarMeasure& mu, double T, const Vec& x, int order) {
  if (!(T > 0.0)) throw ConfigError("gaussian smoothing: T must be > 0");
  const int d = static_cast<int>(x.size());
  if (d != mu.dim) throw ConfigError("gaussian smoothing: x has wrong dimension");
  SmoothedMeasure out;
  if (mu.density) {
    check_grid_size(order, d);
    out.density = quad::tensor_expectation(quad::gauss_hermite(order), d, [&](const Vec& z) {
      const Vec y = x - z / T;
      return mu.density(y);
    });
  }
  // log-sum-exp over atoms
  std::vector<double> logs;
  for (const auto& a : mu.atoms) {
    if (a.weight <= 0.0) continue;
    const double r2 = (x - a.location).squaredNorm();
    logs.push_back(std::log(a.weight) + d * std::log(T) - 0.5 * d * std::log(2.0 * std::numbers::pi) -
                   0.5 * T * T * r2);
  }
  if (logs.empty()) {
    out.log_atoms = -std::numeric_limits<double>::infinity();
    return out;
  }
  double top = logs.front();
  for (double l : logs) top = std::max(top, l);
  double sum = 0.0;
  for (double l : logs) sum += std::exp(l - top);
  out.log_atoms = top + std::log(sum);
  out.atoms = std::exp(out.log_atoms);
  return out;
}

double gaussian_smooth_measure(const ScalarMeasure& mu, double T, const Vec& x, int order) {
  return gaussian_smooth_measure_parts(mu, T, x, order).value();
}

double expected_A_over_t(const ScalarMeasure& vA, const Vec& x, double t, int order) {
  if (!(t > 0.0)) throw ConfigError("expected_A_over_t: t must be > 0");
  const int d = static_cast<int>(x.size());
  if (d != vA.dim) throw ConfigError("expected_A_over_t: x has wrong dimension");
  double total = 0.0;
  if (vA.density) {
    auto density = vA.density;
    total += quad::adaptive([&](double s) { return semigroup_apply(density, s, x, order); }, 0.0, t, kTol);
  }
  for (const auto& a : vA.atoms) {
    if (a.weight == 0.0) continue;
    total += a.weight * kernel_time_integral((x - a.location).norm(), d, t);
  }
  return total / t;
}

double RepresentationResult::abs_diff() const { return std::abs(lhs - rhs); }

RepresentationResult representation_check(const ConvexFunction& f, const TestFunction& h, double t,
                                          const RepresentationOptions& opts) {
  const quad::Box& box = h.support_box();
  if (!f.has_hessian()) throw ConfigError("representation check needs a C^2 function with analytic Hessian");
  if (box.dim() != f.dim || h.dim != f.dim) throw ConfigError("representation check: dimension mismatch");
  if (t < 0.0) throw ConfigError("representation check: t must be >= 0");
  if (t == 0.0) return {0.0, 0.0};
  check_grid_size(opts.hermite_order, f.dim);

  auto hess = f.hessian_density;
  auto q = [hess](const Vec& y) { return 0.5 * hess(y).trace(); };
  const auto grid = quad::box_grid(box, opts.legendre_order);
  const auto& gh = quad::gauss_hermite(opts.hermite_order);

  // lhs: int h(x) int_0^t p_s q(x) ds dx
  double lhs = 0.0;
  for (std::size_t k = 0; k < grid.points.size(); ++k) {
    const Vec& x = grid.points[k];
    const double hx = h(x);
    if (hx == 0.0) continue;
    const double ea = quad::adaptive([&](double s) { return semigroup_apply(q, s, x, opts.hermite_order); }, 0.0,
                                     t, kTol);
    lhs += grid.weights[k] * hx * ea;
  }

  // rhs: int_0^t int q(z) p_s h(z) dz ds, with the Gaussian moved onto q so
  // the z-integral runs over the support of h.
  auto pair_at = [&](double s) {
    const double scale = std::sqrt(s);
    return quad::tensor_expectation(gh, f.dim, [&](const Vec& w) {
      double acc = 0.0;
      for (std::size_t k = 0; k < grid.points.size(); ++k) {
        const Vec& z = grid.points[k];
        const Vec shifted = z - scale * w;
        acc += grid.weights[k] * h(z) * q(shifted);
      }
      return acc;
    });
  };
  const double rhs = quad::adaptive(pair_at, 0.0, t, kTol);
  return {lhs, rhs};
}

}  // namespace cvx
