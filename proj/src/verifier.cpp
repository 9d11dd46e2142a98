#include "convexito/verifier.hpp"

#include "convexito/brownian.hpp"
#include "convexito/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace cvx {

namespace {

// Calibrated once with calibrate_sup_constant (default options), rounded up.
constexpr double kSupConstant1 = 1.6448;
constexpr double kSupConstant2 = 1.3997;

double pow_or_zero(double base, double e) { return base <= 0.0 ? 0.0 : std::pow(base, e); }

}  // namespace

void finalize(InequalityReport& r) {
  r.margin = r.rhs - r.lhs;
  r.pass = r.margin >= -1e-10 * (1.0 + std::abs(r.rhs));
}

double sup_exponent(int d) { return static_cast<double>(d) / (d + 1.0); }

double sup_constant(int d) {
  if (d == 1) return kSupConstant1;
  if (d == 2) return kSupConstant2;
  throw ConfigError("sup constant is calibrated for d = 1, 2 only");
}

BallScan scan_ball(const std::function<double(const Vec&)>& g, int d, double r, int grid) {
  if (d != 1 && d != 2) throw ConfigError("scan_ball: d must be 1 or 2");
  if (!(r > 0.0)) throw ConfigError("scan_ball: r must be > 0");
  if (grid < 3) throw ConfigError("scan_ball: grid must be >= 3");
  const int m = grid % 2 == 1 ? grid : grid + 1;  // keeps 0 on the grid
  const double h = 2.0 * r / (m - 1);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  BallScan out;
  out.sup = -std::numeric_limits<double>::infinity();
  out.min = std::numeric_limits<double>::infinity();
  Vec best;
  auto record = [&](const Vec& y, double v) {
    if (!std::isfinite(v)) throw ConfigError("scan_ball: non-finite value");
    out.min = std::min(out.min, v);
    if (v > out.sup) {
      out.sup = v;
      best = y;
    }
  };

  if (d == 1) {
    std::vector<double> vals(m);
#pragma omp parallel for schedule(static) num_threads(default_thread_count())
    for (int k = 0; k < m; ++k) vals[k] = g(from_values({-r + k * h}));
    for (int k = 0; k < m; ++k) {
      record(from_values({-r + k * h}), vals[k]);
      if (k > 0) out.lipschitz = std::max(out.lipschitz, std::abs(vals[k] - vals[k - 1]) / h);
    }
  } else {
    std::vector<double> vals(static_cast<std::size_t>(m) * m, nan);
    auto point = [&](int i, int j) { return from_values({-r + i * h, -r + j * h}); };
#pragma omp parallel for schedule(static) num_threads(default_thread_count())
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        const Vec y = point(i, j);
        if (y.norm() <= r) vals[static_cast<std::size_t>(i) * m + j] = g(y);
      }
    auto at = [&](int i, int j) { return vals[static_cast<std::size_t>(i) * m + j]; };
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        const double v = at(i, j);
        if (std::isnan(v)) continue;
        record(point(i, j), v);
        if (i + 1 < m && j + 1 < m && !std::isnan(at(i + 1, j)) && !std::isnan(at(i, j + 1))) {
          const double qx = (at(i + 1, j) - v) / h, qy = (at(i, j + 1) - v) / h;
          out.lipschitz = std::max(out.lipschitz, std::hypot(qx, qy));
        }
      }
    const int nc = 4 * m;
    std::vector<double> ring(nc);
#pragma omp parallel for schedule(static) num_threads(default_thread_count())
    for (int k = 0; k < nc; ++k) {
      const double a = 2.0 * std::numbers::pi * k / nc;
      ring[k] = g(from_values({r * std::cos(a), r * std::sin(a)}));
    }
    const double chord = 2.0 * r * std::sin(std::numbers::pi / nc);
    for (int k = 0; k < nc; ++k) {
      const double a = 2.0 * std::numbers::pi * k / nc;
      record(from_values({r * std::cos(a), r * std::sin(a)}), ring[k]);
      out.lipschitz = std::max(out.lipschitz, std::abs(ring[k] - ring[(k + 1) % nc]) / chord);
    }
  }

  // local refinement around the best grid point
  const int fine = 41;
  const double fh = 2.0 * h / (fine - 1);
  if (d == 1) {
    for (int k = 0; k < fine; ++k) {
      const Vec y = from_values({std::clamp(best(0) - h + k * fh, -r, r)});
      record(y, g(y));
    }
  } else {
    const Vec c = best;
    for (int i = 0; i < fine; ++i)
      for (int j = 0; j < fine; ++j) {
        Vec y = c + from_values({-h + i * fh, -h + j * fh});
        if (y.norm() > r) y *= r / y.norm();
        record(y, g(y));
      }
  }
  return out;
}

InequalityReport sup_expectation_bound(const std::function<double(const Vec&)>& g, double r, int d,
                                       const SupOptions& opts) {
  const Vec origin = Vec::Zero(d);
  const double g0 = g(origin);
  if (std::abs(g0) > 1e-12) throw ConfigError("sup_expectation_bound: g(0) must be 0");
  const BallScan scan = scan_ball(g, d, r, opts.grid);
  if (scan.min < -1e-12 * (1.0 + scan.sup)) throw ConfigError("sup_expectation_bound: g is negative on B(r)");
  const auto G = expect(g, d, r * r, opts.n, opts.seed, false, opts.exec);
  InequalityReport rep;
  rep.function_id = opts.id;
  rep.param = r;
  rep.alpha = sup_exponent(d);
  rep.C = opts.C ? *opts.C : sup_constant(d);
  rep.s = scan.sup;
  rep.L = scan.lipschitz;
  rep.G = G.mean;
  rep.G_std_error = G.std_error;
  rep.lhs = scan.sup;
  rep.rhs = rep.C * pow_or_zero(r * scan.lipschitz, rep.alpha) * pow_or_zero(G.mean, 1.0 - rep.alpha);
  finalize(rep);
  return rep;
}

std::function<double(const Vec&)> affine_gap(const ConvexFunction& h) {
  const Vec origin = Vec::Zero(h.dim);
  const double h0 = h(origin);
  const Vec p = h.subgradient(origin);
  auto eval = h.eval;
  return [eval, h0, p](const Vec& y) { return std::abs(eval(y) - h0 - p.dot(y)); };
}

std::vector<ConvexFunction> sup_corpus(int d, int count, std::uint64_t seed) {
  if (d != 1 && d != 2) throw ConfigError("sup_corpus: d must be 1 or 2");
  if (count < 1) throw ConfigError("sup_corpus: count must be >= 1");
  std::mt19937_64 rng(seed + static_cast<std::uint64_t>(d));
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  auto direction = [&] {
    Vec v(d);
    for (int k = 0; k < d; ++k) v(k) = normal(rng);
    return Vec(v / v.norm());
  };
  auto piece = [&](PieceKind kind) {
    Piece p;
    p.kind = kind;
    p.scale = 0.5 + 1.5 * uni(rng);
    p.direction = direction();
    p.shift = 2.0 * uni(rng) - 1.0;
    return p;
  };

  std::vector<ConvexFunction> out;
  auto add = [&](const CorpusSpec& spec) {
    out.push_back(make_corpus_function(spec, "g" + std::to_string(d) + "_" + std::to_string(out.size()) + "_" +
                                                 family_name(spec)));
  };
  add(AbsNormSpec{d});
  add(QuadraticSpec{identity(d), Vec::Zero(d), 0.0});
  {
    SumOfPiecesSpec s{d, {}};
    Piece p;
    p.kind = PieceKind::power4;
    p.direction = unit(d, 0);
    s.pieces.push_back(p);
    add(s);
  }
  while (static_cast<int>(out.size()) < count) {
    switch (out.size() % 5) {
      case 0: {
        Mat B(d, d);
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) B(i, j) = normal(rng);
        Vec b(d);
        for (int k = 0; k < d; ++k) b(k) = normal(rng);
        add(QuadraticSpec{B * B.transpose(), b, normal(rng)});
        break;
      }
      case 1: {
        SumOfPiecesSpec s{d, {}};
        const int k = 1 + static_cast<int>(3 * uni(rng));
        for (int i = 0; i < k; ++i) s.pieces.push_back(piece(PieceKind::abs));
        add(s);
        break;
      }
      case 2: {
        MaxAffineSpec m;
        const int k = 3 + static_cast<int>(4 * uni(rng));
        for (int i = 0; i < k; ++i) {
          m.slopes.push_back(2.0 * direction() * uni(rng));
          m.offsets.push_back(uni(rng) - 0.5);
        }
        add(m);
        break;
      }
      case 3: {
        SumOfPiecesSpec s{d, {piece(PieceKind::relu), piece(PieceKind::square)}};
        add(s);
        break;
      }
      default: {
        SumOfPiecesSpec s{d, {piece(PieceKind::power4), piece(PieceKind::abs)}};
        s.pieces[0].scale *= 0.25;
        add(s);
        break;
      }
    }
  }
  return out;
}

Calibration calibrate_sup_constant(int d, const std::vector<double>& radii, const SupOptions& opts) {
  Calibration cal;
  const double alpha = sup_exponent(d);
  for (const auto& h : sup_corpus(d)) {
    const auto g = affine_gap(h);
    for (double r : radii) {
      SupOptions o = opts;
      o.C = 1.0;
      o.id = h.id;
      const auto rep = sup_expectation_bound(g, r, d, o);
      const double denom = pow_or_zero(r * rep.L, alpha) * pow_or_zero(rep.G, 1.0 - alpha);
      if (rep.s <= 0.0) continue;
      const double ratio = denom > 0.0 ? rep.s / denom : std::numeric_limits<double>::infinity();
      if (ratio > cal.max_ratio) {
        cal.max_ratio = ratio;
        cal.worst_id = h.id;
        cal.worst_r = r;
      }
    }
  }
  cal.C = 1.05 * cal.max_ratio;
  return cal;
}

RecursionReport dyadic_recursion_check(const ConvexFunction& f, const Vec& x, const Vec& p, const Mat& Q,
                                       double r_max, int levels, const RecursionOptions& opts) {
  const int d = f.dim;
  if (levels < 4) throw ConfigError("dyadic_recursion_check: levels must be >= 4");
  if (!(r_max > 0.0)) throw ConfigError("dyadic_recursion_check: r_max must be > 0");
  if (x.size() != d || p.size() != d || Q.rows() != d || Q.cols() != d)
    throw ConfigError("dyadic_recursion_check: x, p, Q have inconsistent dimensions");
  if (d > 2) throw ConfigError("dyadic_recursion_check: d must be 1 or 2");

  const double fx = f(x);
  auto eval = f.eval;
  const Vec x0 = x, p0 = p;
  const Mat Q0 = Q;
  auto g = [eval, x0, fx, p0, Q0](const Vec& y) {
    return std::abs(eval(x0 + y) - fx - p0.dot(y) - 0.5 * y.dot(Q0 * y));
  };

  RecursionReport rep;
  rep.alpha = sup_exponent(d);
  const double c_lip = lipschitz_constant_factor(d);
  const double K = std::max(c_lip, (2.0 * c_lip + 1.0) * max_abs_eigenvalue(Q));
  rep.C_bound = sup_constant(d) * std::pow(K, rep.alpha);

  double s_prev = scan_ball(g, d, 2.0 * r_max, opts.grid).sup;
  double ratio0 = 0.0;
  for (int k = 0; k < levels; ++k) {
    RecursionLevel lv;
    lv.r = r_max * std::ldexp(1.0, -k);
    lv.s = scan_ball(g, d, lv.r, opts.grid).sup;
    lv.s_double = s_prev;
    s_prev = lv.s;
    const auto G = expect(g, d, lv.r * lv.r, opts.n, opts.seed, false, opts.exec);
    lv.G = G.mean;
    lv.G_std_error = G.std_error;
    lv.s_over_r2 = lv.s / (lv.r * lv.r);
    lv.bound = rep.C_bound * pow_or_zero(lv.s_double + lv.r * lv.r, rep.alpha) * pow_or_zero(lv.G, 1.0 - rep.alpha);
    lv.bound_ok = lv.s <= lv.bound + 1e-10 * (1.0 + lv.bound);
    if (lv.G > 0.0 && lv.G_std_error > lv.G / 3.0) {
      lv.dropped = true;
      rep.warnings.push_back("level r = " + std::to_string(lv.r) + " dropped: stderr of G exceeds G/3");
    } else if (!lv.bound_ok) {
      rep.all_bounds_hold = false;
    }
    if (k == 0) ratio0 = lv.s_over_r2;
    if (lv.s_over_r2 > 2.0 * ratio0 + 1e-12) rep.bounded = false;
    rep.levels.push_back(lv);
  }
  return rep;
}

TraceRevuzResult trace_revuz_compare(const ConvexFunction& f, const TestFunction& phi, const TraceRevuzOptions& opts) {
  const quad::Box& support = phi.support_box();
  const int d = f.dim;
  if (!f.has_hessian()) throw ConfigError("trace_revuz_compare: f needs an analytic Hessian (mollify it first)");
  if (phi.dim != d || support.dim() != d) throw ConfigError("trace_revuz_compare: dimension mismatch");
  if (!(opts.t > 0.0) || opts.steps < 1 || opts.n < 2) throw ConfigError("trace_revuz_compare: bad options");
  quad::Box cover;
  if (opts.covering) {
    cover = *opts.covering;
    if (cover.dim() != d || !cover.contains(support))
      throw ConfigError("trace_revuz_compare: support of phi is not inside the covering box");
  } else {
    const double margin = 6.0 * std::sqrt(opts.t);
    cover.lo = support.lo.array() - margin;
    cover.hi = support.hi.array() + margin;
  }

  TraceRevuzResult out;
  for (int i = 0; i < d; ++i) out.quad_side += 0.5 * second_derivative_pairing(f, phi, i, i, opts.order);

  auto hess = f.hessian_density;
  auto weight = [&](const Vec& y) {
    const double v = phi(y);
    return v == 0.0 ? 0.0 : v * 0.5 * hess(y).trace();
  };
  const double volume = cover.volume();
  const double dt = opts.t / opts.steps;
  const double sdt = std::sqrt(dt);
  const Vec span = cover.hi - cover.lo;
  const auto stats = mc::accumulate(
      opts.n, opts.seed, 1,
      [&](mc::Stream& s, std::span<double> res) {
        Vec w(d), z(d);
        for (int k = 0; k < d; ++k) w(k) = cover.lo(k) + s.uniform() * span(k);
        double prev = weight(w), area = 0.0;
        for (int k = 0; k < opts.steps; ++k) {
          s.fill_normal(z);
          w += sdt * z;
          const double cur = weight(w);
          area += 0.5 * (prev + cur) * dt;
          prev = cur;
        }
        res[0] = volume * area / opts.t;
      },
      opts.exec, 256);
  out.mc_side = stats[0].mean;
  out.mc_std_error = stats[0].std_error();
  return out;
}

}  // namespace cvx
