#pragma once

#include "convexito/linalg.hpp"

#include <array>
#include <functional>
#include <vector>

namespace cvx::quad {

/// Nodes and weights of a one-dimensional rule.
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int order() const { return static_cast<int>(nodes.size()); }
};

/// Probabilists' Gauss–Hermite rule normalized so that sum_i w_i g(z_i)
/// approximates E[g(Z)], Z ~ N(0, 1). Cached per order.
const Rule& gauss_hermite(int order);

/// Gauss–Legendre rule on [-1, 1]. Cached per order.
const Rule& gauss_legendre(int order);

/// Gauss–Legendre rule mapped to [a, b].
Rule gauss_legendre(int order, double a, double b);

/// E[g(Z)] for Z ~ N(0, I_d) by the d-fold tensor product of `rule`.
double tensor_expectation(const Rule& rule, int d, const std::function<double(const Vec&)>& g);

/// Axis-aligned box [lo, hi] with optional interior breakpoints per axis where
/// the integrand has a kink; each axis is split there and integrated piecewise.
struct Box {
  Vec lo;
  Vec hi;
  std::vector<std::vector<double>> breaks;

  int dim() const { return static_cast<int>(lo.size()); }
  double volume() const;
  bool contains(const Box& inner) const;
};

/// Tensor Gauss–Legendre integral of g over a box (order per axis per piece).
double integrate_box(const Box& box, int order, const std::function<double(const Vec&)>& g);

/// Tensor nodes with their weights over a box; used when the same grid is
/// integrated against many functions.
struct TensorGrid {
  std::vector<Vec> points;
  std::vector<double> weights;
};
TensorGrid box_grid(const Box& box, int order);

/// Adaptive Gauss–Kronrod integral of a scalar function on [a, b].
double adaptive(const std::function<double(double)>& f, double a, double b, double tol = 1e-10,
                double* error_estimate = nullptr);

}  // namespace cvx::quad
