#include "convexito/brownian.hpp"

#include "convexito/errors.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <string>

namespace cvx {

namespace {

// Paths per substream for the compensator kernel.
constexpr std::int64_t kPathBatch = 256;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

void PathConfig::validate() const {
  if (steps < 1) throw ConfigError("path config: steps must be >= 1");
  if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("path config: t must be positive");
  if (n < 1) throw ConfigError("path config: n must be >= 1");
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw ConfigError("path config: eps must be >= 0");
}

namespace mc {

Stream::Stream(std::uint64_t seed, std::uint64_t batch)
    : engine_(splitmix64(seed ^ splitmix64(batch + 0x632be59bd9b4e019ULL))) {}

void RunningStats::merge(const RunningStats& o) {
  if (o.n == 0) return;
  min = std::min(min, o.min);
  max = std::max(max, o.max);
  if (n == 0) {
    *this = o;
    return;
  }
  const double na = static_cast<double>(n), nb = static_cast<double>(o.n);
  const double delta = o.mean - mean;
  const double total = na + nb;
  mean += delta * nb / total;
  m2 += o.m2 + delta * delta * na * nb / total;
  n += o.n;
}

double RunningStats::std_error() const {
  if (n < 2) return 0.0;
  const double var = std::max(0.0, m2 / static_cast<double>(n - 1));
  return std::sqrt(var / static_cast<double>(n));
}

std::vector<RunningStats> accumulate(std::int64_t n, std::uint64_t seed, int outputs, const SampleBody& body,
                                     Execution exec, std::int64_t batch_size) {
  if (outputs < 1) throw ConfigError("accumulate: need at least one output");
  if (batch_size < 1) throw ConfigError("accumulate: batch size must be >= 1");
  if (n <= 0) return std::vector<RunningStats>(outputs);
  const std::int64_t batches = (n + batch_size - 1) / batch_size;
  std::vector<std::vector<RunningStats>> per_batch(batches, std::vector<RunningStats>(outputs));
  std::vector<std::exception_ptr> errors(batches);

  auto run_batch = [&](std::int64_t b) {
    try {
      Stream stream(seed, static_cast<std::uint64_t>(b));
      std::vector<double> values(outputs);
      const std::int64_t end = std::min(n, (b + 1) * batch_size);
      for (std::int64_t i = b * batch_size; i < end; ++i) {
        body(stream, values);
        for (int k = 0; k < outputs; ++k) per_batch[b][k].push(values[k]);
      }
    } catch (...) {
      errors[b] = std::current_exception();
    }
  };

  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(default_thread_count())
    for (std::int64_t b = 0; b < batches; ++b) run_batch(b);
  } else {
    for (std::int64_t b = 0; b < batches; ++b) run_batch(b);
  }

  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<RunningStats> total(outputs);
  for (const auto& batch : per_batch)
    for (int k = 0; k < outputs; ++k) total[k].merge(batch[k]);
  return total;
}

MCEstimate to_estimate(const RunningStats& s, double t, std::uint64_t seed) {
  return {s.mean, s.std_error(), s.n, t, seed};
}

}  // namespace mc

Eigen::MatrixXd sample_increments(int d, double t, std::int64_t n, std::uint64_t seed, Execution exec) {
  if (d < 1 || d > kMaxDim) throw ConfigError("sample_increments: dimension out of range");
  if (!(t > 0.0)) throw ConfigError("sample_increments: t must be positive");
  if (n < 0) throw ConfigError("sample_increments: n must be >= 0");
  Eigen::MatrixXd out(d, n);
  const double scale = std::sqrt(t);
  const std::int64_t batches = (n + mc::kBatchSize - 1) / mc::kBatchSize;
  auto fill = [&](std::int64_t b) {
    mc::Stream stream(seed, static_cast<std::uint64_t>(b));
    const std::int64_t end = std::min(n, (b + 1) * mc::kBatchSize);
    for (std::int64_t i = b * mc::kBatchSize; i < end; ++i)
      for (int k = 0; k < d; ++k) out(k, i) = scale * stream.normal();
  };
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static) num_threads(default_thread_count())
    for (std::int64_t b = 0; b < batches; ++b) fill(b);
  } else {
    for (std::int64_t b = 0; b < batches; ++b) fill(b);
  }
  return out;
}

MCEstimate expect(const std::function<double(const Vec&)>& g, int d, double t, std::int64_t n, std::uint64_t seed,
                  bool antithetic, Execution exec) {
  if (d < 1 || d > kMaxDim) throw ConfigError("expect: dimension out of range");
  if (!(t > 0.0)) throw ConfigError("expect: t must be positive");
  const double scale = std::sqrt(t);
  auto checked = [&g](const Vec& w) {
    const double v = g(w);
    if (!std::isfinite(v)) throw EstimationError("non-finite functional value", to_std(w));
    return v;
  };
  const auto stats = mc::accumulate(
      n, seed, 1,
      [&](mc::Stream& s, std::span<double> out) {
        Vec z(d);
        s.fill_normal(z);
        const Vec w = scale * z;
        out[0] = antithetic ? 0.5 * (checked(w) + checked(-w)) : checked(w);
      },
      exec);
  return mc::to_estimate(stats[0], t, seed);
}

std::function<double(const Vec&)> half_laplacian(const ConvexFunction& f, double eps) {
  if (eps == 0.0) {
    if (!f.smooth || !f.has_hessian())
      throw ConfigError("compensator: eps = 0 needs a C^2 function with an analytic Hessian (Laplacian undefined)");
    auto hess = f.hessian_density;
    return [hess](const Vec& y) { return 0.5 * hess(y).trace(); };
  }
  const ConvexFunction g = mollify(f, eps);
  if (g.has_hessian()) {
    auto hess = g.hessian_density;
    return [hess](const Vec& y) { return 0.5 * hess(y).trace(); };
  }
  const double h = eps / 10.0;
  auto eval = g.eval;
  const int d = g.dim;
  return [eval, h, d](const Vec& y) {
    const double center = eval(y);
    double lap = 0.0;
    Vec p = y;
    for (int k = 0; k < d; ++k) {
      p(k) = y(k) + h;
      const double up = eval(p);
      p(k) = y(k) - h;
      const double down = eval(p);
      p(k) = y(k);
      lap += (up - 2.0 * center + down) / (h * h);
    }
    return 0.5 * lap;
  };
}

std::vector<double> compensator_time_grid(double t, int steps) {
  std::vector<double> s(steps + 1);
  for (int k = 0; k <= steps; ++k) {
    const double u = static_cast<double>(k) / steps;
    s[k] = t * u * u;
  }
  s[steps] = t;
  return s;
}

namespace {

// Output 0: the trapezoid compensator of one path; output 1: its smallest step.
std::vector<mc::RunningStats> run_paths(const ConvexFunction& f, const Vec& x, const PathConfig& cfg,
                                        Execution exec) {
  cfg.validate();
  if (x.size() != f.dim) throw ConfigError("compensator: start point has wrong dimension");
  const auto lap = half_laplacian(f, cfg.eps);
  const auto grid = compensator_time_grid(cfg.t, cfg.steps);
  const int d = f.dim;
  const double h0 = lap(x);
  return mc::accumulate(
      cfg.n, cfg.seed, 2,
      [&](mc::Stream& s, std::span<double> out) {
        Vec w = x;
        Vec z(d);
        double prev = h0, area = 0.0, lowest = std::numeric_limits<double>::infinity();
        for (int k = 1; k <= cfg.steps; ++k) {
          const double ds = grid[k] - grid[k - 1];
          s.fill_normal(z);
          w += std::sqrt(ds) * z;
          const double cur = lap(w);
          if (!std::isfinite(cur)) throw EstimationError("non-finite Laplacian on path", to_std(w));
          const double inc = 0.5 * (prev + cur) * ds;
          lowest = std::min(lowest, inc);
          area += inc;
          prev = cur;
        }
        out[0] = area;
        out[1] = lowest;
      },
      exec, kPathBatch);
}

}  // namespace

MCEstimate compensator_path_estimate(const ConvexFunction& f, const Vec& x, const PathConfig& cfg, Execution exec) {
  return mc::to_estimate(run_paths(f, x, cfg, exec)[0], cfg.t, cfg.seed);
}

MonotonicityReport compensator_monotonicity_check(const ConvexFunction& f, const Vec& x, const PathConfig& cfg,
                                                  Execution exec) {
  const auto stats = run_paths(f, x, cfg, exec);
  return {stats[1].min >= -1e-12, stats[1].min};
}

}  // namespace cvx
