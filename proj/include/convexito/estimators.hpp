#pragma once

#include "convexito/brownian.hpp"
#include "convexito/convex_model.hpp"
#include "convexito/execution.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cvx {

/// Smallest time accepted by the estimators below.
inline constexpr double kMinTime = 1e-6;

/// (1/t) E[f(x + W_t) - f(x) - <p(x), W_t>]. Every sample gap must be
/// >= -1e-12 (scaled by the size of the values involved), otherwise the
/// subgradient oracle is wrong and an EstimationError is thrown.
MCEstimate trace_estimate(const ConvexFunction& f, const Vec& x, double t, std::int64_t n, std::uint64_t seed,
                          Execution exec = Execution::parallel);

/// (1/t)(E[f(x + S W_t)] - f(x)), with <p, S W_t> subtracted as a control
/// variate. Rejects S with condition number >= 1e8.
MCEstimate linear_map_trace(const ConvexFunction& f, const Vec& x, const Mat& S, double t, std::int64_t n,
                            std::uint64_t seed, Execution exec = Execution::parallel);

/// max |Q^S(y) - S^T Q(S y) S| over the sample points, where Q^S is the
/// analytic Hessian of the composed oracle x -> f(Sx).
double density_transform_check(const ConvexFunction& f, const Mat& S, const std::vector<Vec>& points);

/// (2/t) E[f(x + B_t v) - f(x) - <p, v> B_t] with a scalar Brownian B_t.
/// `v` must have unit norm to 1e-12.
MCEstimate directional_second_derivative(const ConvexFunction& f, const Vec& x, const Vec& v, double t,
                                         std::int64_t n, std::uint64_t seed, bool control_variate = true,
                                         Execution exec = Execution::parallel);

struct HessianEstimate {
  Mat matrix;
  Mat std_error;
  double t = 0.0;
  std::int64_t n = 0;
  std::uint64_t seed = 0;
};

/// Q from unit-direction probes q(v) = <Qv, v>: Q_ii = q(e_i) and
/// Q_ij = q((e_i + e_j)/sqrt2) - (q(e_i) + q(e_j))/2. All probes share the
/// same Brownian draw per sample, so the diagonal equals
/// directional_second_derivative with the same seed bit for bit.
HessianEstimate hessian_by_polarization(const ConvexFunction& f, const Vec& x, double t, std::int64_t n,
                                        std::uint64_t seed, Execution exec = Execution::parallel);

/// (1/t) E|f(x + W_t) - f(x) - <p, W_t> - 1/2 <Q W_t, W_t>|. Q defaults to the
/// analytic Hessian at x.
MCEstimate ito_residual(const ConvexFunction& f, const Vec& x, double t, std::int64_t n, std::uint64_t seed,
                        const std::optional<Mat>& Q = std::nullopt, Execution exec = Execution::parallel);

struct ResidualPoint {
  double t = 0.0;
  double value = 0.0;
  double std_error = 0.0;
};

struct ResidualCurve {
  std::string function_id;
  Vec x;
  std::vector<ResidualPoint> points;

  /// Times strictly decreasing, values finite; throws ConfigError otherwise.
  void validate() const;
};

/// ito_residual over a list of times. Every point reuses `seed`, so the
/// curve is built from common random numbers.
ResidualCurve residual_curve(const ConvexFunction& f, const Vec& x, const std::vector<double>& times,
                             std::int64_t n, std::uint64_t seed, const std::optional<Mat>& Q = std::nullopt,
                             Execution exec = Execution::parallel);

/// t_k = t_max 2^-k for all k with t_k >= t_min.
std::vector<double> dyadic_times(double t_max, double t_min);

enum class RateVerdict { decay, no_decay, identically_zero };

struct RateFit {
  RateVerdict verdict = RateVerdict::decay;
  double slope = 0.0;
  double intercept = 0.0;
  int points_used = 0;
};

/// Least squares of log(value) on log(t) over points with value > 3 stderr.
/// If no point survives the verdict is identically_zero; between 1 and 3
/// survivors is a ConfigError.
RateFit residual_rate_fit(const ResidualCurve& curve);

std::string to_string(RateVerdict v);

}  // namespace cvx
