#include "convexito/convex_model.hpp"

#include "convexito/errors.hpp"
#include "convexito/test_function.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace cvx {

namespace {

constexpr double kTieTol = 1e-12;

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

// ---------------------------------------------------------------------------
// Ridge pieces

struct PhiValue {
  double v, d1, d2;
};

PhiValue piece_phi(PieceKind kind, double u, double sigma) {
  if (sigma > 0.0) {
    const double z = u / sigma;
    switch (kind) {
      case PieceKind::abs:
        return {u * std::erf(z / std::numbers::sqrt2) + 2.0 * sigma * normal_pdf(z),
                std::erf(z / std::numbers::sqrt2), 2.0 * normal_pdf(z) / sigma};
      case PieceKind::relu:
        return {u * normal_cdf(z) + sigma * normal_pdf(z), normal_cdf(z), normal_pdf(z) / sigma};
      case PieceKind::square:
        return {0.5 * (u * u + sigma * sigma), u, 1.0};
      case PieceKind::power4: {
        const double s2 = sigma * sigma;
        return {u * u * u * u + 6.0 * u * u * s2 + 3.0 * s2 * s2, 4.0 * u * u * u + 12.0 * u * s2,
                12.0 * u * u + 12.0 * s2};
      }
    }
  }
  switch (kind) {
    case PieceKind::abs:
      return {std::abs(u), u > 0 ? 1.0 : (u < 0 ? -1.0 : 0.0), 0.0};
    case PieceKind::relu:
      return {std::max(0.0, u), u > 0 ? 1.0 : 0.0, 0.0};
    case PieceKind::square:
      return {0.5 * u * u, u, 1.0};
    case PieceKind::power4:
      return {u * u * u * u, 4.0 * u * u * u, 12.0 * u * u};
  }
  return {0.0, 0.0, 0.0};
}

bool has_kink(const Piece& p) {
  return p.smoothing == 0.0 && (p.kind == PieceKind::abs || p.kind == PieceKind::relu);
}

// Least-norm point of g0 + sum_k lambda_k v_k with lambda_k in [lo_k, 1]:
// exact coordinate descent on a box-constrained convex quadratic.
Vec least_norm_box(const Vec& g0, const std::vector<Vec>& dirs, const std::vector<double>& lo) {
  const std::size_t m = dirs.size();
  std::vector<double> lambda(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) lambda[k] = std::clamp(0.0, lo[k], 1.0);
  Vec r = g0;
  for (std::size_t k = 0; k < m; ++k) r += lambda[k] * dirs[k];
  for (int sweep = 0; sweep < 10000; ++sweep) {
    double change = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double nn = dirs[k].squaredNorm();
      if (nn == 0.0) continue;
      const Vec rest = r - lambda[k] * dirs[k];
      const double next = std::clamp(-rest.dot(dirs[k]) / nn, lo[k], 1.0);
      change = std::max(change, std::abs(next - lambda[k]));
      r = rest + next * dirs[k];
      lambda[k] = next;
    }
    if (change < 1e-15) break;
  }
  return r;
}

// Least-norm point in the convex hull of pts (Caratheodory enumeration of
// affine-hull minimizers over subsets of size <= d + 1).
Vec least_norm_in_hull(const std::vector<Vec>& pts) {
  const int m = static_cast<int>(pts.size());
  const int d = static_cast<int>(pts.front().size());
  if (m == 1) return pts.front();
  Vec best = pts.front();
  double best_norm = best.squaredNorm();
  for (const Vec& p : pts)
    if (p.squaredNorm() < best_norm) {
      best = p;
      best_norm = p.squaredNorm();
    }
  const int max_size = std::min(m, d + 1);
  std::vector<int> subset;
  // Enumerate subsets of size 2..max_size via bitmasks (m is small).
  const int limit = std::min(m, 20);
  for (unsigned mask = 1; mask < (1u << limit); ++mask) {
    const int size = std::popcount(mask);
    if (size < 2 || size > max_size) continue;
    subset.clear();
    for (int i = 0; i < limit; ++i)
      if (mask & (1u << i)) subset.push_back(i);
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(size + 1, size + 1);
    for (int a = 0; a < size; ++a) {
      for (int b = 0; b < size; ++b) kkt(a, b) = pts[subset[a]].dot(pts[subset[b]]);
      kkt(a, size) = 1.0;
      kkt(size, a) = 1.0;
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(size + 1);
    rhs(size) = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    if (sol.head(size).minCoeff() < -1e-14) continue;
    Vec p = Vec::Zero(d);
    for (int a = 0; a < size; ++a) p += std::max(0.0, sol(a)) * pts[subset[a]];
    if (p.squaredNorm() < best_norm) {
      best = p;
      best_norm = p.squaredNorm();
    }
  }
  return best;
}

// Growth contribution of scale * phi(<a,x> - s) on the working ball.
void piece_growth(const Piece& p, Growth& g) {
  const double an = p.direction.norm();
  const double s = std::abs(p.shift) + 2.0 * p.smoothing;
  const double R = kGrowthRadius;
  const double m = an * R + s;
  switch (p.kind) {
    case PieceKind::abs:
    case PieceKind::relu:
      g.A += p.scale * an;
      g.B += p.scale * s;
      break;
    case PieceKind::square:
      g.A += p.scale * 0.5 * m * an;
      g.B += p.scale * 0.5 * m * s;
      break;
    case PieceKind::power4:
      g.A += p.scale * m * m * m * an;
      g.B += p.scale * m * m * m * s;
      break;
  }
}

std::optional<int> single_axis(const Vec& a) {
  int axis = -1;
  for (int k = 0; k < a.size(); ++k) {
    if (a(k) != 0.0) {
      if (axis >= 0) return std::nullopt;
      axis = k;
    }
  }
  if (axis < 0) return std::nullopt;
  return axis;
}

ConvexFunction make_pieces(const SumOfPiecesSpec& spec) {
  const int d = spec.dim;
  require(d >= 1 && d <= kMaxDim, "sum_of_pieces: dimension out of range");
  require(!spec.pieces.empty(), "sum_of_pieces: no pieces");
  for (const Piece& p : spec.pieces) {
    require(p.direction.size() == d, "sum_of_pieces: piece direction has wrong dimension");
    require(p.scale >= 0.0 && std::isfinite(p.scale), "sum_of_pieces: scale must be finite and >= 0");
    require(p.smoothing >= 0.0, "sum_of_pieces: smoothing must be >= 0");
    require(std::isfinite(p.shift) && p.direction.allFinite(), "sum_of_pieces: non-finite parameters");
  }
  const auto pieces = spec.pieces;

  ConvexFunction f;
  f.dim = d;
  f.eval = [pieces](const Vec& x) {
    double v = 0.0;
    for (const Piece& p : pieces) v += p.scale * piece_phi(p.kind, p.direction.dot(x) - p.shift, p.smoothing).v;
    return v;
  };
  f.subgradient = [pieces, d](const Vec& x) {
    Vec g0 = Vec::Zero(d);
    std::vector<Vec> dirs;
    std::vector<double> lo;
    for (const Piece& p : pieces) {
      const double u = p.direction.dot(x) - p.shift;
      if (has_kink(p) && std::abs(u) <= kTieTol * (1.0 + std::abs(p.shift))) {
        dirs.push_back(p.scale * p.direction);
        lo.push_back(p.kind == PieceKind::abs ? -1.0 : 0.0);
        continue;
      }
      g0 += p.scale * piece_phi(p.kind, u, p.smoothing).d1 * p.direction;
    }
    if (dirs.empty()) return g0;
    return least_norm_box(g0, dirs, lo);
  };
  f.hessian_density = [pieces, d](const Vec& x) {
    Mat h = Mat::Zero(d, d);
    for (const Piece& p : pieces) {
      const double c = p.scale * piece_phi(p.kind, p.direction.dot(x) - p.shift, p.smoothing).d2;
      if (c != 0.0) h += c * p.direction * p.direction.transpose();
    }
    return h;
  };

  bool kinked = false;
  f.kinks.assign(d, {});
  for (const Piece& p : pieces) {
    piece_growth(p, f.growth);
    if (!has_kink(p)) continue;
    kinked = true;
    if (auto axis = single_axis(p.direction)) f.kinks[*axis].push_back(p.shift / p.direction(*axis));
  }
  f.smooth = !kinked;

  if (!kinked || d == 1) {
    SecondDerivativeMeasure mu;
    mu.dim = d;
    mu.density = f.hessian_density;
    if (d == 1) {
      for (const Piece& p : pieces) {
        if (!has_kink(p) || p.direction(0) == 0.0 || p.scale == 0.0) continue;
        const double loc = p.shift / p.direction(0);
        const double w = (p.kind == PieceKind::abs ? 2.0 : 1.0) * p.scale * std::abs(p.direction(0));
        auto same = std::find_if(mu.atoms.begin(), mu.atoms.end(),
                                 [loc](const Atom& a) { return a.location(0) == loc; });
        if (same != mu.atoms.end()) {
          same->weight(0, 0) += w;
        } else {
          Mat wm(1, 1);
          wm(0, 0) = w;
          mu.atoms.push_back({from_values({loc}), wm});
        }
      }
    }
    f.measure = std::move(mu);
  }
  return f;
}

ConvexFunction make_quadratic(const QuadraticSpec& spec) {
  const int d = static_cast<int>(spec.A.rows());
  require(d >= 1 && d <= kMaxDim && spec.A.cols() == d, "quadratic: A must be square with 1 <= d <= 8");
  require(spec.b.size() == d, "quadratic: b has wrong dimension");
  require(spec.A.allFinite() && spec.b.allFinite() && std::isfinite(spec.c), "quadratic: non-finite entries");
  require(is_psd(spec.A, 1e-10), "quadratic: A is not symmetric positive semidefinite");
  const Mat A = 0.5 * (spec.A + spec.A.transpose());
  const Vec b = spec.b;
  const double c = spec.c;

  ConvexFunction f;
  f.dim = d;
  f.eval = [A, b, c](const Vec& x) { return 0.5 * x.dot(A * x) + b.dot(x) + c; };
  f.subgradient = [A, b](const Vec& x) -> Vec { return A * x + b; };
  f.hessian_density = [A](const Vec&) { return A; };
  f.measure = SecondDerivativeMeasure{d, f.hessian_density, {}};
  f.growth = {0.5 * max_abs_eigenvalue(A) * kGrowthRadius + b.norm(), std::abs(c)};
  f.smooth = true;
  f.kinks.assign(d, {});
  return f;
}

ConvexFunction make_abs_norm(const AbsNormSpec& spec) {
  const int d = spec.dim;
  require(d >= 1 && d <= kMaxDim, "abs_norm: dimension out of range");
  ConvexFunction f;
  f.dim = d;
  f.eval = [](const Vec& x) { return x.norm(); };
  f.subgradient = [d](const Vec& x) -> Vec {
    const double r = x.norm();
    if (r == 0.0) return Vec::Zero(d);
    return x / r;
  };
  // (I - u u^T) / r away from the origin; the origin is a null set and gets 0.
  f.hessian_density = [d](const Vec& x) -> Mat {
    if (d == 1) return Mat::Zero(1, 1);
    const double r = x.norm();
    if (r == 0.0) return Mat::Zero(d, d);
    const Vec u = x / r;
    return (Mat::Identity(d, d) - u * u.transpose()) / r;
  };
  SecondDerivativeMeasure mu{d, f.hessian_density, {}};
  if (d == 1) {
    Mat w(1, 1);
    w(0, 0) = 2.0;
    mu.atoms.push_back({Vec::Zero(1), w});
  }
  f.measure = std::move(mu);
  f.growth = {1.0, 0.0};
  f.smooth = false;
  f.kinks.assign(d, {0.0});
  return f;
}

ConvexFunction make_max_affine(const MaxAffineSpec& spec) {
  require(!spec.slopes.empty(), "max_affine: no pieces");
  require(spec.slopes.size() == spec.offsets.size(), "max_affine: slopes/offsets size mismatch");
  const int d = static_cast<int>(spec.slopes.front().size());
  require(d >= 1 && d <= kMaxDim, "max_affine: dimension out of range");
  for (const Vec& a : spec.slopes) require(a.size() == d && a.allFinite(), "max_affine: bad slope");
  for (double b : spec.offsets) require(std::isfinite(b), "max_affine: non-finite offset");
  const auto slopes = spec.slopes;
  const auto offsets = spec.offsets;

  ConvexFunction f;
  f.dim = d;
  f.eval = [slopes, offsets](const Vec& x) {
    double v = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < slopes.size(); ++k) v = std::max(v, slopes[k].dot(x) + offsets[k]);
    return v;
  };
  f.subgradient = [slopes, offsets](const Vec& x) -> Vec {
    std::vector<double> vals(slopes.size());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < slopes.size(); ++k) {
      vals[k] = slopes[k].dot(x) + offsets[k];
      top = std::max(top, vals[k]);
    }
    std::vector<Vec> active;
    for (std::size_t k = 0; k < slopes.size(); ++k)
      if (vals[k] >= top - kTieTol * (1.0 + std::abs(top))) active.push_back(slopes[k]);
    return least_norm_in_hull(active);
  };
  f.hessian_density = [d](const Vec&) -> Mat { return Mat::Zero(d, d); };

  bool all_same = true;
  for (const Vec& a : slopes) all_same = all_same && (a - slopes.front()).cwiseAbs().maxCoeff() == 0.0;
  if (all_same) f.measure = SecondDerivativeMeasure{d, f.hessian_density, {}};

  double amax = 0.0, bmax = 0.0;
  for (std::size_t k = 0; k < slopes.size(); ++k) {
    amax = std::max(amax, slopes[k].norm());
    bmax = std::max(bmax, std::abs(offsets[k]));
  }
  f.growth = {amax, bmax};
  f.smooth = all_same;
  f.kinks.assign(d, {});
  if (d == 1) {
    for (std::size_t i = 0; i < slopes.size(); ++i)
      for (std::size_t j = i + 1; j < slopes.size(); ++j)
        if (slopes[i](0) != slopes[j](0))
          f.kinks[0].push_back((offsets[j] - offsets[i]) / (slopes[i](0) - slopes[j](0)));
  }
  return f;
}

SumOfPiecesSpec power4_as_pieces() {
  Piece p;
  p.kind = PieceKind::power4;
  p.direction = from_values({1.0});
  return {1, {p}};
}

}  // namespace

// ---------------------------------------------------------------------------

void SecondDerivativeMeasure::validate() const {
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    require(atoms[i].location.size() == dim, "measure: atom location has wrong dimension");
    require(is_psd(atoms[i].weight, 1e-10), "measure: atom weight is not symmetric PSD");
    for (std::size_t j = i + 1; j < atoms.size(); ++j)
      require(atoms[i].location != atoms[j].location, "measure: duplicate atom location");
  }
}

ScalarMeasure trace_view(const SecondDerivativeMeasure& mu) {
  ScalarMeasure s;
  s.dim = mu.dim;
  auto density = mu.density;
  s.density = [density](const Vec& y) { return density(y).trace(); };
  for (const Atom& a : mu.atoms) s.atoms.push_back({a.location, a.weight.trace()});
  return s;
}

ScalarMeasure revuz_view(const SecondDerivativeMeasure& mu) {
  ScalarMeasure s = trace_view(mu);
  auto tr = s.density;
  s.density = [tr](const Vec& y) { return 0.5 * tr(y); };
  for (ScalarAtom& a : s.atoms) a.weight *= 0.5;
  return s;
}

int spec_dim(const CorpusSpec& spec) {
  return std::visit(
      [](const auto& s) -> int {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, QuadraticSpec>) return static_cast<int>(s.A.rows());
        else if constexpr (std::is_same_v<T, AbsNormSpec>) return s.dim;
        else if constexpr (std::is_same_v<T, MaxAffineSpec>)
          return s.slopes.empty() ? 0 : static_cast<int>(s.slopes.front().size());
        else if constexpr (std::is_same_v<T, Power4Spec>) return 1;
        else return s.dim;
      },
      spec);
}

std::string family_name(const CorpusSpec& spec) {
  static const char* names[] = {"quadratic", "abs_norm", "max_affine", "power4_1d", "sum_of_pieces"};
  return names[spec.index()];
}

ConvexFunction make_corpus_function(const CorpusSpec& spec, std::string id) {
  ConvexFunction f = std::visit(
      [](const auto& s) -> ConvexFunction {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, QuadraticSpec>) return make_quadratic(s);
        else if constexpr (std::is_same_v<T, AbsNormSpec>) return make_abs_norm(s);
        else if constexpr (std::is_same_v<T, MaxAffineSpec>) return make_max_affine(s);
        else if constexpr (std::is_same_v<T, Power4Spec>) return make_pieces(power4_as_pieces());
        else return make_pieces(s);
      },
      spec);
  f.id = id.empty() ? family_name(spec) : std::move(id);
  f.descriptor = spec;
  return f;
}

Vec subgradient(const ConvexFunction& f, const Vec& x) { return f.subgradient(x); }

ConvexFunction mollify(const ConvexFunction& f, double eps, const MollifyOptions& opts) {
  require(eps > 0.0 && std::isfinite(eps), "mollify: eps must be positive");
  require(opts.hermite_order >= 2, "mollify: quadrature order must be >= 2");
  std::ostringstream name;
  name << f.id << "@eps=" << eps;

  if (opts.prefer_closed_form && f.descriptor) {
    std::optional<CorpusSpec> smoothed;
    auto smooth_pieces = [eps](SumOfPiecesSpec s) {
      for (Piece& p : s.pieces) {
        const double add = eps * p.direction.norm();
        p.smoothing = std::sqrt(p.smoothing * p.smoothing + add * add);
      }
      return s;
    };
    if (const auto* q = std::get_if<QuadraticSpec>(&*f.descriptor)) {
      QuadraticSpec s = *q;
      s.c += 0.5 * eps * eps * q->A.trace();
      smoothed = s;
    } else if (std::holds_alternative<Power4Spec>(*f.descriptor)) {
      smoothed = smooth_pieces(power4_as_pieces());
    } else if (const auto* a = std::get_if<AbsNormSpec>(&*f.descriptor); a && a->dim == 1) {
      Piece p;
      p.kind = PieceKind::abs;
      p.direction = from_values({1.0});
      smoothed = smooth_pieces({1, {p}});
    } else if (const auto* s = std::get_if<SumOfPiecesSpec>(&*f.descriptor)) {
      smoothed = smooth_pieces(*s);
    }
    if (smoothed) return make_corpus_function(*smoothed, name.str());
  }

  require(f.dim <= 3, "mollify: quadrature mollification supports d <= 3");
  const quad::Rule& rule = quad::gauss_hermite(opts.hermite_order);
  const int d = f.dim;
  auto eval = f.eval;
  auto sub = f.subgradient;

  ConvexFunction g;
  g.id = name.str();
  g.dim = d;
  g.eval = [eval, &rule, d, eps](const Vec& x) {
    return quad::tensor_expectation(rule, d, [&](const Vec& z) { return eval(x + eps * z); });
  };
  g.subgradient = [sub, &rule, d, eps](const Vec& x) -> Vec {
    Vec out(d);
    for (int k = 0; k < d; ++k)
      out(k) = quad::tensor_expectation(rule, d, [&](const Vec& z) { return sub(x + eps * z)(k); });
    return out;
  };
  g.growth = {f.growth.A, f.growth.B + f.growth.A * eps * std::sqrt(static_cast<double>(d))};
  g.smooth = true;
  g.kinks.assign(d, {});
  return g;
}

ConvexFunction extend_from_ball(const ConvexFunction& f_ball, int grid) {
  require(grid >= 1, "extend_from_ball: grid resolution must be >= 1");
  const int d = f_ball.dim;
  auto inner = f_ball.eval;

  // Max over x = a u (a on an M-point grid of [-1, 1)) with y = u on the
  // boundary: for convex f the chord slope grows with both endpoints, so the
  // best y on the ray is the exit point and the best x approaches it.
  auto chord_sup = [inner](const Vec& u, double r, int m) {
    const double fy = inner(u);
    double best = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < m; ++k) {
      const double a = -1.0 + 2.0 * k / m;
      const double fx = inner(a * u);
      best = std::max(best, fx + (r - a) * (fy - fx) / (1.0 - a));
    }
    return best;
  };
  auto eval = [inner, chord_sup, grid](const Vec& z) {
    const double r = z.norm();
    if (!std::isfinite(r)) throw ConfigError("extend_from_ball: point has infinite norm");
    if (r <= 1.0) return inner(z);
    const Vec u = z / r;
    // The grid error is linear in the spacing; one Richardson step removes it.
    return 2.0 * chord_sup(u, r, 2 * grid) - chord_sup(u, r, grid);
  };

  ConvexFunction g;
  g.id = f_ball.id + "|ball-extension";
  g.dim = d;
  g.eval = eval;
  auto inner_sub = f_ball.subgradient;
  g.subgradient = [eval, inner_sub, d](const Vec& z) -> Vec {
    const double r = z.norm();
    if (r < 1.0) return inner_sub(z);
    // Central differences outside the ball.
    const double h = 1e-6 * (1.0 + r);
    Vec out(d);
    for (int k = 0; k < d; ++k) {
      Vec zp = z, zm = z;
      zp(k) += h;
      zm(k) -= h;
      out(k) = (eval(zp) - eval(zm)) / (2.0 * h);
    }
    return out;
  };
  g.smooth = false;
  g.kinks.assign(d, {});

  // Growth from sampled boundary directions: the extension is affine-like
  // along rays outside the ball.
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  double slope = 0.0, sup_ball = 0.0;
  const int dirs = d == 1 ? 2 : 128;
  for (int k = 0; k < dirs; ++k) {
    Vec u(d);
    if (d == 1) {
      u(0) = k == 0 ? 1.0 : -1.0;
    } else {
      for (int i = 0; i < d; ++i) u(i) = normal(rng);
      u.normalize();
    }
    slope = std::max(slope, std::abs(eval(2.0 * u) - eval(u)));
    for (double a : {-1.0, -0.5, 0.0, 0.5, 1.0}) sup_ball = std::max(sup_ball, std::abs(inner(a * u)));
  }
  g.growth = {slope, sup_ball + slope};
  return g;
}

double lipschitz_on_ball(const ConvexFunction& f, const Vec& center, double r, int samples) {
  require(r > 0.0 && std::isfinite(r), "lipschitz_on_ball: radius must be positive");
  const int d = f.dim;
  require(center.size() == d, "lipschitz_on_ball: center has wrong dimension");
  static constexpr int primes[kMaxDim] = {2, 3, 5, 7, 11, 13, 17, 19};
  auto radical_inverse = [](int i, int base) {
    double inv = 1.0 / base, f = inv, v = 0.0;
    while (i > 0) {
      v += f * (i % base);
      i /= base;
      f *= inv;
    }
    return v;
  };
  double sup = std::abs(f(center));
  for (int k = 0; k < d; ++k) {
    sup = std::max(sup, std::abs(f(center + 2.0 * r * unit(d, k))));
    sup = std::max(sup, std::abs(f(center - 2.0 * r * unit(d, k))));
  }
  for (int i = 1; i <= samples; ++i) {
    Vec p(d);
    for (int k = 0; k < d; ++k) p(k) = 2.0 * radical_inverse(i, primes[k]) - 1.0;
    if (p.squaredNorm() > 1.0) continue;
    sup = std::max(sup, std::abs(f(center + 2.0 * r * p)));
  }
  return lipschitz_constant_factor(d) / r * sup;
}

double second_derivative_pairing(const ConvexFunction& f, const TestFunction& phi, int i, int j, int order) {
  require(phi.dim == f.dim, "pairing: test function dimension mismatch");
  require(i >= 0 && i < f.dim && j >= 0 && j < f.dim, "pairing: index out of range");
  quad::Box box = phi.support_box();
  box.breaks = f.kinks;
  auto eval = f.eval;
  auto hess = phi.hessian;
  return quad::integrate_box(box, order, [&](const Vec& x) { return eval(x) * hess(x)(i, j); });
}

ConvexFunction compose_linear(const ConvexFunction& f, const Mat& S) {
  require(f.descriptor.has_value(), "compose_linear: function has no analytic descriptor");
  require(S.rows() == f.dim && S.cols() == f.dim, "compose_linear: S has wrong shape");
  const Mat St = S.transpose();
  CorpusSpec out = std::visit(
      [&](const auto& s) -> CorpusSpec {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, QuadraticSpec>) {
          return QuadraticSpec{St * s.A * S, St * s.b, s.c};
        } else if constexpr (std::is_same_v<T, AbsNormSpec>) {
          require((St * S - Mat::Identity(f.dim, f.dim)).cwiseAbs().maxCoeff() <= 1e-12,
                  "compose_linear: ||Sx|| is outside the corpus unless S is orthogonal");
          return s;
        } else if constexpr (std::is_same_v<T, MaxAffineSpec>) {
          MaxAffineSpec m = s;
          for (Vec& a : m.slopes) a = St * a;
          return m;
        } else if constexpr (std::is_same_v<T, Power4Spec>) {
          SumOfPiecesSpec p = power4_as_pieces();
          p.pieces[0].direction = St * p.pieces[0].direction;
          return p;
        } else {
          SumOfPiecesSpec p = s;
          for (Piece& piece : p.pieces) piece.direction = St * piece.direction;
          return p;
        }
      },
      *f.descriptor);
  return make_corpus_function(out, f.id + "*S");
}

std::vector<InvariantCheck> check_invariants(const ConvexFunction& f, std::uint64_t seed, int samples) {
  const int d = f.dim;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double scales[] = {0.1, 1.0, 3.0};
  auto draw = [&]() {
    Vec x(d);
    const double s = scales[static_cast<int>(uni(rng) * 3) % 3];
    for (int k = 0; k < d; ++k) x(k) = s * normal(rng);
    return x;
  };

  InvariantCheck midpoint{"midpoint_convexity", -std::numeric_limits<double>::infinity(), true};
  InvariantCheck subgrad{"subgradient_inequality", -std::numeric_limits<double>::infinity(), true};
  InvariantCheck growth{"growth_bound", -std::numeric_limits<double>::infinity(), true};
  InvariantCheck psd{"hessian_psd", -std::numeric_limits<double>::infinity(), true};

  for (int i = 0; i < samples; ++i) {
    const Vec x = draw();
    const Vec y = draw();
    const double fx = f(x), fy = f(y);
    const double mid = f(0.5 * (x + y)) - 0.5 * (fx + fy) - 1e-12 * (1.0 + std::abs(fx) + std::abs(fy));
    midpoint.worst = std::max(midpoint.worst, mid);
    const double gap = fx + f.subgradient(x).dot(y - x) - fy -
                       1e-12 * (1.0 + (y - x).norm() + std::abs(fx) + std::abs(fy));
    subgrad.worst = std::max(subgrad.worst, gap);

    // Growth on radii log-uniform in [1e-3, 1e3].
    Vec dir(d);
    for (int k = 0; k < d; ++k) dir(k) = normal(rng);
    dir.normalize();
    const Vec z = std::pow(10.0, -3.0 + 6.0 * uni(rng)) * dir;
    const double bound = f.growth.A * z.norm() + f.growth.B;
    growth.worst = std::max(growth.worst, std::abs(f(z)) - bound - 1e-12 * (1.0 + bound));

    if (f.has_hessian()) {
      const Mat q = f.hessian_density(x);
      psd.worst = std::max(psd.worst, -min_eigenvalue(q) - 1e-10 * (1.0 + q.cwiseAbs().maxCoeff()));
    }
  }
  std::vector<InvariantCheck> out{midpoint, subgrad, growth};
  if (f.has_hessian()) out.push_back(psd);
  for (InvariantCheck& c : out) c.pass = c.worst <= 0.0;
  return out;
}

}  // namespace cvx
