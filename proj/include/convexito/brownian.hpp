#pragma once

#include "convexito/convex_model.hpp"
#include "convexito/execution.hpp"
#include "convexito/linalg.hpp"

#include <cstdint>
#include <algorithm>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace cvx {

/// Monte-Carlo result. `std_error` is the sample standard deviation over sqrt(n).
struct MCEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t n = 0;
  double t = 0.0;
  std::uint64_t seed = 0;
};

/// Discretization of one compensator estimate.
struct PathConfig {
  int steps = 1000;
  double t = 1.0;
  std::int64_t n = 100000;
  /// Mollification scale; 0 is allowed only for C^2 functions with an analytic Hessian.
  double eps = 1e-3;
  std::uint64_t seed = 1;

  void validate() const;
};

namespace mc {

/// Samples per independent substream. Fixed, so a result never depends on how
/// batches are spread over threads.
inline constexpr std::int64_t kBatchSize = 4096;

/// Independent normal stream for one batch, keyed by (seed, batch index).
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t batch);
  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  void fill_normal(Vec& z) {
    for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = normal_(engine_);
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Welford accumulator with Chan's pairwise merge; also tracks the extremes.
struct RunningStats {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();

  void push(double x) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
    min = std::min(min, x);
    max = std::max(max, x);
  }
  void merge(const RunningStats& o);
  double std_error() const;
};

/// Per-sample body: fills one value per output from the batch's stream.
using SampleBody = std::function<void(Stream&, std::span<double>)>;

/// Runs `n` samples in fixed-size batches and reduces the per-batch statistics
/// in batch order. Exceptions thrown by `body` are rethrown after the loop
/// (the one from the lowest batch index wins).
std::vector<RunningStats> accumulate(std::int64_t n, std::uint64_t seed, int outputs, const SampleBody& body,
                                     Execution exec = Execution::parallel, std::int64_t batch_size = kBatchSize);

MCEstimate to_estimate(const RunningStats& s, double t, std::uint64_t seed);

}  // namespace mc

/// n i.i.d. N(0, t I_d) vectors as the columns of a d x n matrix.
Eigen::MatrixXd sample_increments(int d, double t, std::int64_t n, std::uint64_t seed,
                                  Execution exec = Execution::parallel);

/// MC estimate of E[g(W_t)], W_t ~ N(0, t I_d). With `antithetic`, each draw
/// contributes (g(W) + g(-W)) / 2. Non-finite g values abort with an
/// EstimationError carrying the sample.
MCEstimate expect(const std::function<double(const Vec&)>& g, int d, double t, std::int64_t n,
                  std::uint64_t seed, bool antithetic = false, Execution exec = Execution::parallel);

/// x -> 1/2 Delta f_eps(x): analytic trace of the Hessian when the mollified
/// oracle has one, central differences with h = eps / 10 otherwise.
std::function<double(const Vec&)> half_laplacian(const ConvexFunction& f, double eps);

/// Time nodes s_k = t (k / steps)^2 used for the compensator quadrature.
std::vector<double> compensator_time_grid(double t, int steps);

/// MC estimate of A_t = 1/2 int_0^t Delta f_eps(W_s^x) ds along simulated
/// paths, trapezoid rule on the graded time grid.
MCEstimate compensator_path_estimate(const ConvexFunction& f, const Vec& x, const PathConfig& cfg,
                                     Execution exec = Execution::parallel);

struct MonotonicityReport {
  bool pass = true;
  /// Smallest single-step increment of the compensator over all paths.
  double min_increment = 0.0;
};

/// Checks that every simulated compensator increment is >= -1e-12.
MonotonicityReport compensator_monotonicity_check(const ConvexFunction& f, const Vec& x, const PathConfig& cfg,
                                                  Execution exec = Execution::parallel);

}  // namespace cvx
