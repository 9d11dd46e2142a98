#pragma once

#include "convexito/convex_model.hpp"
#include "convexito/linalg.hpp"
#include "convexito/test_function.hpp"

#include <functional>

namespace cvx {

struct KernelQuery {
  Vec x;
  Vec y;
  double s = 1.0;
};

/// p_s(x, y) = (2 pi s)^{-d/2} exp(-|x - y|^2 / 2s). Throws std::domain_error for s <= 0.
double heat_kernel_density(const KernelQuery& q);

/// p_s h(x) = E[h(x + W_s)] by tensor Gauss–Hermite. `order` nodes per axis;
/// order^d is capped at 1e7. Non-finite quadrature values throw NonIntegrableError.
double semigroup_apply(const std::function<double(const Vec&)>& h, double s, const Vec& x, int order = 32);

/// The two pieces of int psi_T(x - y) mu(dy), psi_T(z) = T^d psi(T z) with psi
/// the standard normal density.
struct SmoothedMeasure {
  double density = 0.0;  ///< E[q(x - Z / T)]
  double atoms = 0.0;    ///< sum_k w_k psi_T(x - y_k)
  /// log of `atoms`, computed without underflow (-inf when there are no atoms).
  double log_atoms = 0.0;

  double value() const { return density + atoms; }
};

SmoothedMeasure gaussian_smooth_measure_parts(const ScalarMeasure& mu, double T, const Vec& x, int order = 64);

double gaussian_smooth_measure(const ScalarMeasure& mu, double T, const Vec& x, int order = 64);

/// (1/t) int_0^t int p_s(x, y) vA(dy) ds. The density part is integrated in s
/// adaptively; atoms use s = u^2. An atom exactly at x in d >= 2 gives a
/// divergent integral and throws NonIntegrableError.
double expected_A_over_t(const ScalarMeasure& vA, const Vec& x, double t, int order = 32);

struct RepresentationOptions {
  int legendre_order = 32;  ///< per axis, over the support box of h
  int hermite_order = 32;   ///< per axis, for the Gaussian expectation
};

struct RepresentationResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_diff() const;
};

/// Both sides of int h(x) E^x[A_t] dx = int_0^t <vA, p_s h> ds for a C^2
/// function with analytic Hessian (vA = 1/2 Delta f dx). lhs integrates the
/// heat-smoothed Laplacian against h; rhs smooths h and pairs it with vA.
RepresentationResult representation_check(const ConvexFunction& f, const TestFunction& h, double t,
                                          const RepresentationOptions& opts = {});

}  // namespace cvx
