#pragma once

#include "convexito/linalg.hpp"
#include "convexito/quadrature.hpp"

#include <functional>
#include <optional>

namespace cvx {

/// Smooth compactly supported test function with analytic derivatives.
struct TestFunction {
  int dim = 1;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  std::function<Mat(const Vec&)> hessian;
  /// Closed support box; an absent or unbounded box is rejected by every
  /// quadrature that consumes the function.
  std::optional<quad::Box> support;
  /// int phi dx, when known in closed form.
  std::optional<double> mass;

  double operator()(const Vec& x) const { return value(x); }

  /// Returns the support box or throws ConfigError.
  const quad::Box& support_box() const;
};

/// phi(x) = amplitude * prod_k (1 - u_k^2)^power, u_k = (x_k - c_k) / w_k, on
/// the box c +- w. `power` >= 3 keeps phi in C^2.
TestFunction poly_bump(const Vec& center, const Vec& half_widths, double amplitude = 1.0, int power = 4);

/// Same bump scaled to unit mass.
TestFunction unit_mass_bump(const Vec& center, const Vec& half_widths, int power = 4);

}  // namespace cvx
