#include "convexito/estimators.hpp"

#include "convexito/errors.hpp"

#include <cmath>
#include <numbers>

namespace cvx {

namespace {

void check_common(const ConvexFunction& f, const Vec& x, double t, std::int64_t n) {
  if (x.size() != f.dim) throw ConfigError("estimator: x has wrong dimension");
  if (!(t >= kMinTime) || !std::isfinite(t)) throw ConfigError("estimator: t must be finite and >= 1e-6");
  if (n < 1) throw ConfigError("estimator: n must be >= 1");
}

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

double checked(const ConvexFunction& f, const Vec& y) {
  const double v = f(y);
  if (!std::isfinite(v)) throw EstimationError("non-finite function value", to_std(y));
  return v;
}

}  // namespace

MCEstimate trace_estimate(const ConvexFunction& f, const Vec& x, double t, std::int64_t n, std::uint64_t seed,
                          Execution exec) {
  check_common(f, x, t, n);
  const int d = f.dim;
  const double fx = f(x);
  const Vec p = f.subgradient(x);
  const double scale = std::sqrt(t);
  const auto stats = mc::accumulate(
      n, seed, 1,
      [&](mc::Stream& s, std::span<double> out) {
        Vec z(d);
        s.fill_normal(z);
        const Vec w = scale * z;
        const double fy = checked(f, x + w);
        const double gap = fy - fx - p.dot(w);
        if (gap < -1e-12 * (1.0 + std::abs(fy) + std::abs(fx)))
          throw EstimationError("negative subgradient gap " + std::to_string(gap) + "; subgradient oracle is wrong",
                                to_std(w));
        out[0] = gap / t;
      },
      exec);
  return mc::to_estimate(stats[0], t, seed);
}

MCEstimate linear_map_trace(const ConvexFunction& f, const Vec& x, const Mat& S, double t, std::int64_t n,
                            std::uint64_t seed, Execution exec) {
  check_common(f, x, t, n);
  const int d = f.dim;
  if (S.rows() != d || S.cols() != d) throw ConfigError("linear_map_trace: S must be d x d");
  if (!(condition_number(S) < 1e8)) throw ConfigError("linear_map_trace: S is singular or ill-conditioned");
  const double fx = f(x);
  const Vec p = f.subgradient(x);
  const double scale = std::sqrt(t);
  const auto stats = mc::accumulate(
      n, seed, 1,
      [&](mc::Stream& s, std::span<double> out) {
        Vec z(d);
        s.fill_normal(z);
        const Vec w = scale * (S * z);
        out[0] = (checked(f, x + w) - fx - p.dot(w)) / t;
      },
      exec);
  return mc::to_estimate(stats[0], t, seed);
}

double density_transform_check(const ConvexFunction& f, const Mat& S, const std::vector<Vec>& points) {
  if (!f.has_hessian()) throw ConfigError("density_transform_check: function has no analytic Hessian");
  const ConvexFunction g = compose_linear(f, S);
  if (!g.has_hessian()) throw ConfigError("density_transform_check: composed oracle has no analytic Hessian");
  double worst = 0.0;
  for (const Vec& y : points) {
    if (y.size() != f.dim) throw ConfigError("density_transform_check: point has wrong dimension");
    const Mat lhs = g.hessian_density(y);
    const Mat rhs = S.transpose() * f.hessian_density(S * y) * S;
    worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  return worst;
}

namespace {

void check_unit(const Vec& v, int d) {
  if (v.size() != d) throw ConfigError("direction has wrong dimension");
  if (std::abs(v.norm() - 1.0) > 1e-12) throw ConfigError("direction must be a unit vector (|v| = 1 +- 1e-12)");
}

// (2/t)(f(x + b v) - f(x) - <p, v> b) for one scalar draw b.
struct Probe {
  Vec v;
  double slope = 0.0;  // <p, v>, or 0 without the control variate

  double operator()(const ConvexFunction& f, const Vec& x, double fx, double b, double t) const {
    const Vec y = x + b * v;
    return 2.0 * (checked(f, y) - fx - slope * b) / t;
  }
};

}  // namespace

MCEstimate directional_second_derivative(const ConvexFunction& f, const Vec& x, const Vec& v, double t,
                                         std::int64_t n, std::uint64_t seed, bool control_variate,
                                         Execution exec) {
  check_common(f, x, t, n);
  check_unit(v, f.dim);
  const double fx = f(x);
  const Probe probe{v, control_variate ? f.subgradient(x).dot(v) : 0.0};
  const double scale = std::sqrt(t);
  const auto stats = mc::accumulate(
      n, seed, 1, [&](mc::Stream& s, std::span<double> out) { out[0] = probe(f, x, fx, scale * s.normal(), t); },
      exec);
  return mc::to_estimate(stats[0], t, seed);
}

HessianEstimate hessian_by_polarization(const ConvexFunction& f, const Vec& x, double t, std::int64_t n,
                                        std::uint64_t seed, Execution exec) {
  check_common(f, x, t, n);
  const int d = f.dim;
  const double fx = f(x);
  const Vec p = f.subgradient(x);
  std::vector<Probe> probes;
  for (int i = 0; i < d; ++i) probes.push_back({unit(d, i), p(i)});
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const Vec u = (unit(d, i) + unit(d, j)) / std::numbers::sqrt2;
      probes.push_back({u, p.dot(u)});
      pairs.emplace_back(i, j);
    }
  const double scale = std::sqrt(t);
  const int outputs = static_cast<int>(probes.size());
  const auto stats = mc::accumulate(
      n, seed, outputs,
      [&](mc::Stream& s, std::span<double> out) {
        const double b = scale * s.normal();
        for (int i = 0; i < d; ++i) out[i] = probes[i](f, x, fx, b, t);
        for (std::size_t k = 0; k < pairs.size(); ++k) {
          const auto [i, j] = pairs[k];
          out[d + k] = probes[d + k](f, x, fx, b, t) - 0.5 * (out[i] + out[j]);
        }
      },
      exec);
  HessianEstimate h;
  h.matrix = Mat::Zero(d, d);
  h.std_error = Mat::Zero(d, d);
  h.t = t;
  h.n = n;
  h.seed = seed;
  for (int i = 0; i < d; ++i) {
    h.matrix(i, i) = stats[i].mean;
    h.std_error(i, i) = stats[i].std_error();
  }
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [i, j] = pairs[k];
    h.matrix(i, j) = h.matrix(j, i) = stats[d + k].mean;
    h.std_error(i, j) = h.std_error(j, i) = stats[d + k].std_error();
  }
  return h;
}

MCEstimate ito_residual(const ConvexFunction& f, const Vec& x, double t, std::int64_t n, std::uint64_t seed,
                        const std::optional<Mat>& Q, Execution exec) {
  check_common(f, x, t, n);
  const int d = f.dim;
  Mat q;
  if (Q) {
    q = *Q;
  } else if (f.has_hessian()) {
    q = f.hessian_density(x);
  } else {
    throw ConfigError("ito_residual: '" + f.id +
                      "' has no analytic Hessian; estimate one with hessian_by_polarization and pass it as Q");
  }
  if (q.rows() != d || q.cols() != d) throw ConfigError("ito_residual: Q has wrong shape");
  const double fx = f(x);
  const Vec p = f.subgradient(x);
  const double scale = std::sqrt(t);
  const auto stats = mc::accumulate(
      n, seed, 1,
      [&](mc::Stream& s, std::span<double> out) {
        Vec z(d);
        s.fill_normal(z);
        const Vec w = scale * z;
        const double r = checked(f, x + w) - fx - p.dot(w) - 0.5 * w.dot(q * w);
        out[0] = std::abs(r) / t;
      },
      exec);
  return mc::to_estimate(stats[0], t, seed);
}

void ResidualCurve::validate() const {
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (!std::isfinite(points[k].value) || !std::isfinite(points[k].std_error))
      throw ConfigError("residual curve: non-finite value");
    if (k > 0 && !(points[k].t < points[k - 1].t)) throw ConfigError("residual curve: times must strictly decrease");
  }
}

ResidualCurve residual_curve(const ConvexFunction& f, const Vec& x, const std::vector<double>& times,
                             std::int64_t n, std::uint64_t seed, const std::optional<Mat>& Q, Execution exec) {
  ResidualCurve c{f.id, x, {}};
  for (double t : times) {
    const auto e = ito_residual(f, x, t, n, seed, Q, exec);
    c.points.push_back({t, e.mean, e.std_error});
  }
  c.validate();
  return c;
}

std::vector<double> dyadic_times(double t_max, double t_min) {
  if (!(t_max > 0.0) || !(t_min > 0.0) || t_min > t_max) throw ConfigError("dyadic_times: need 0 < t_min <= t_max");
  std::vector<double> out;
  for (double t = t_max; t >= t_min * (1.0 - 1e-12); t *= 0.5) out.push_back(t);
  return out;
}

RateFit residual_rate_fit(const ResidualCurve& curve) {
  curve.validate();
  std::vector<double> lx, ly;
  for (const auto& pt : curve.points) {
    if (pt.value > 3.0 * pt.std_error && pt.value > 0.0) {
      lx.push_back(std::log(pt.t));
      ly.push_back(std::log(pt.value));
    }
  }
  RateFit fit;
  fit.points_used = static_cast<int>(lx.size());
  if (lx.empty()) {
    fit.verdict = RateVerdict::identically_zero;
    return fit;
  }
  if (lx.size() < 4)
    throw ConfigError("residual_rate_fit: need >= 4 points clearly above zero, got " + std::to_string(lx.size()));
  const double m = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    mx += lx[k];
    my += ly[k];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sxx += (lx[k] - mx) * (lx[k] - mx);
    sxy += (lx[k] - mx) * (ly[k] - my);
  }
  if (sxx == 0.0) throw ConfigError("residual_rate_fit: all times are equal");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.verdict = fit.slope > 0.0 ? RateVerdict::decay : RateVerdict::no_decay;
  return fit;
}

std::string to_string(RateVerdict v) {
  switch (v) {
    case RateVerdict::decay:
      return "decay";
    case RateVerdict::no_decay:
      return "no_decay";
    case RateVerdict::identically_zero:
      return "identically_zero";
  }
  return "unknown";
}

}  // namespace cvx
