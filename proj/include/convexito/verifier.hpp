#pragma once

#include "convexito/convex_model.hpp"
#include "convexito/execution.hpp"
#include "convexito/quadrature.hpp"
#include "convexito/test_function.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cvx {

struct InequalityReport {
  std::string function_id;
  double param = 0.0;  ///< r or t
  double lhs = 0.0;
  double rhs = 0.0;
  double C = 0.0;
  double alpha = 0.0;
  double margin = 0.0;
  bool pass = true;
  // ingredients of the sup-by-expectation bound
  double s = 0.0;
  double L = 0.0;
  double G = 0.0;
  double G_std_error = 0.0;
};

/// Fills margin and pass (margin >= -1e-10 (1 + |rhs|)).
void finalize(InequalityReport& r);

/// alpha = d / (d + 1).
double sup_exponent(int d);

/// Frozen constant C(d) for d = 1, 2 (see calibrate_sup_constant).
double sup_constant(int d);

/// Supremum and Lipschitz constant of g over the closed ball B(0, r), d <= 2,
/// from a grid with `grid` points per axis (plus the boundary circle in d = 2)
/// and a local refinement around the best point.
struct BallScan {
  double sup = 0.0;
  double lipschitz = 0.0;
  double min = 0.0;
};
BallScan scan_ball(const std::function<double(const Vec&)>& g, int d, double r, int grid = 1001);

struct SupOptions {
  std::optional<double> C;  ///< defaults to sup_constant(d)
  std::int64_t n = 1000000;
  std::uint64_t seed = 1;
  int grid = 1001;
  std::string id;
  Execution exec = Execution::parallel;
};

/// Checks s <= C (r L)^alpha G^{1 - alpha} with s = sup_{B(r)} g,
/// L = Lip_{B(r)} g and G = E[g(W_{r^2})]. g must vanish at 0 and be >= 0 on
/// the scanned points; violations are ConfigErrors.
InequalityReport sup_expectation_bound(const std::function<double(const Vec&)>& g, double r, int d,
                                       const SupOptions& opts = {});

/// g(y) = |h(y) - h(0) - <p_h(0), y>|.
std::function<double(const Vec&)> affine_gap(const ConvexFunction& h);

/// Deterministic corpus of `count` convex functions in dimension d (1 or 2).
/// The first member is |x| (Euclidean norm in d = 2).
std::vector<ConvexFunction> sup_corpus(int d, int count = 50, std::uint64_t seed = 2024);

struct Calibration {
  double max_ratio = 0.0;
  double C = 0.0;  ///< 1.05 * max_ratio
  std::string worst_id;
  double worst_r = 0.0;
};

/// Max of s / ((rL)^alpha G^{1-alpha}) over the corpus and radii, times 1.05.
Calibration calibrate_sup_constant(int d, const std::vector<double>& radii = {1.0, 0.5, 0.25},
                                   const SupOptions& opts = {});

struct RecursionLevel {
  double r = 0.0;
  double s = 0.0;
  double s_double = 0.0;  ///< s(2r)
  double G = 0.0;
  double G_std_error = 0.0;
  double s_over_r2 = 0.0;
  double bound = 0.0;  ///< C_b (s(2r) + r^2)^alpha G^{1-alpha}
  bool bound_ok = true;
  bool dropped = false;
};

struct RecursionReport {
  bool bounded = true;
  bool all_bounds_hold = true;
  double C_bound = 0.0;
  double alpha = 0.0;
  std::vector<RecursionLevel> levels;
  std::vector<std::string> warnings;
};

struct RecursionOptions {
  std::int64_t n = 1000000;
  std::uint64_t seed = 1;
  int grid = 1001;
  Execution exec = Execution::parallel;
};

/// With g(y) = |f(x+y) - f(x) - <p,y> - 1/2 <Qy,y>| and r_k = r_max 2^-k,
/// k < levels, checks s(r) <= C_b (s(2r) + r^2)^alpha G(r)^{1-alpha} at
/// every level, where C_b = C(d) max(C_lip, (2 C_lip + 1) |Q|)^alpha, and
/// that s(r_k)/r_k^2 <= 2 s(r_0)/r_0^2 throughout. Levels whose G has a
/// standard error above G/3 are dropped with a warning.
RecursionReport dyadic_recursion_check(const ConvexFunction& f, const Vec& x, const Vec& p, const Mat& Q,
                                       double r_max, int levels, const RecursionOptions& opts = {});

struct TraceRevuzOptions {
  std::int64_t n = 200000;
  int steps = 64;
  double t = 0.05;
  std::uint64_t seed = 1;
  int order = 64;
  /// Box the starting points are drawn from; defaults to the support of phi
  /// widened by 6 sqrt(t).
  std::optional<quad::Box> covering;
  Execution exec = Execution::parallel;
};

struct TraceRevuzResult {
  double mc_side = 0.0;
  double mc_std_error = 0.0;
  double quad_side = 0.0;
};

/// mc_side: (1/t) E^m[(phi . A)_t] with starting points uniform on the
/// covering box (scaled by its volume) and the path integral by the
/// trapezoid rule. quad_side: 1/2 sum_i (f, d_i d_i phi).
TraceRevuzResult trace_revuz_compare(const ConvexFunction& f, const TestFunction& phi,
                                     const TraceRevuzOptions& opts = {});

}  // namespace cvx
