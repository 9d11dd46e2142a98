#include "convexito/cone_grid.hpp"

#include "convexito/brownian.hpp"
#include "convexito/errors.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <optional>

namespace cvx {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMaxCones = 1e6;
constexpr double kMemberTol = 1e-12;

Vec polar(double theta, double phi) {
  return from_values({std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)});
}

// Solid angle of the spherical triangle abc.
double triangle_area(const Vec& a, const Vec& b, const Vec& c) {
  const Eigen::Vector3d A = a.head<3>(), B = b.head<3>(), C = c.head<3>();
  const double num = std::abs(A.dot(B.cross(C)));
  const double den = 1.0 + A.dot(B) + B.dot(C) + C.dot(A);
  return 2.0 * std::atan2(num, den);
}

void add_simplex(ConeGrid& g, int cone, std::vector<int> slots) {
  const int k = static_cast<int>(slots.size());
  Mat m(g.d, k);
  for (int c = 0; c < k; ++c) m.col(c) = g.edge_directions[g.cones[cone][slots[c]]];
  if (std::abs(m.determinant()) < 1e-14) return;  // repeated pole corner
  g.simplices[cone].push_back({std::move(slots), m.inverse()});
}

// alpha for y in cone i, or nothing if y is outside (beyond tolerance).
std::optional<std::vector<double>> weights_in(const ConeGrid& g, int i, const Vec& y) {
  const auto& corners = g.cones[i];
  const double ny2 = y.squaredNorm();
  const double tol = kMemberTol * std::sqrt(ny2);
  for (const auto& s : g.simplices[i]) {
    const Vec beta = s.inverse * y;
    if (beta.minCoeff() < -tol) continue;
    std::vector<double> alpha(corners.size(), 0.0);
    for (std::size_t c = 0; c < s.slots.size(); ++c) {
      const Vec& e = g.edge_directions[corners[s.slots[c]]];
      alpha[s.slots[c]] = std::max(0.0, beta(c)) * e.dot(y) / ny2;
    }
    return alpha;
  }
  return std::nullopt;
}

ConeGrid build_circle(double epsilon) {
  const double n = std::ceil(kTwoPi / epsilon - 1e-12);
  if (n > kMaxCones) throw ConfigError("cone grid: epsilon too small (more than 1e6 cones)");
  ConeGrid g;
  g.d = 2;
  g.epsilon = epsilon;
  g.sectors = static_cast<int>(std::max(n, 3.0));
  const int N = g.sectors;
  for (int k = 0; k < N; ++k) {
    const double a = kTwoPi * k / N;
    g.edge_directions.push_back(from_values({std::cos(a), std::sin(a)}));
  }
  g.simplices.resize(N);
  for (int k = 0; k < N; ++k) {
    g.cones.push_back({k, (k + 1) % N});
    g.cell_area.push_back(kTwoPi / N);
    add_simplex(g, k, {0, 1});
  }
  return g;
}

ConeGrid sphere_grid(int bands, double epsilon) {
  ConeGrid g;
  g.d = 3;
  g.epsilon = epsilon;
  g.bands = bands;
  g.sectors = 2 * bands;
  const double dt = std::numbers::pi / bands, dp = kTwoPi / g.sectors;
  // vertex ids: 0 = north pole, then rings 1..bands-1, last = south pole
  g.edge_directions.push_back(from_values({0.0, 0.0, 1.0}));
  for (int i = 1; i < bands; ++i)
    for (int j = 0; j < g.sectors; ++j) g.edge_directions.push_back(polar(i * dt, j * dp));
  g.edge_directions.push_back(from_values({0.0, 0.0, -1.0}));
  const int south = static_cast<int>(g.edge_directions.size()) - 1;
  auto vid = [&](int i, int j) {
    if (i == 0) return 0;
    if (i == bands) return south;
    return 1 + (i - 1) * g.sectors + ((j % g.sectors) + g.sectors) % g.sectors;
  };
  g.simplices.resize(static_cast<std::size_t>(bands) * g.sectors);
  for (int i = 0; i < bands; ++i)
    for (int j = 0; j < g.sectors; ++j) {
      const int c = static_cast<int>(g.cones.size());
      g.cones.push_back({vid(i, j), vid(i, j + 1), vid(i + 1, j + 1), vid(i + 1, j)});
      const auto& v = g.cones.back();
      const auto& E = g.edge_directions;
      double area = 0.0;
      if (v[0] != v[1]) area += triangle_area(E[v[0]], E[v[1]], E[v[2]]);
      if (v[2] != v[3]) area += triangle_area(E[v[0]], E[v[2]], E[v[3]]);
      g.cell_area.push_back(area);
      add_simplex(g, c, {0, 1, 2});
      add_simplex(g, c, {0, 2, 3});
    }
  return g;
}

ConeGrid build_sphere(double epsilon) {
  for (int bands = 2;; ++bands) {
    if (2.0 * bands * bands > kMaxCones) throw ConfigError("cone grid: epsilon too small (more than 1e6 cones)");
    ConeGrid g = sphere_grid(bands, epsilon);
    if (g.max_cell_area() <= epsilon) return g;
  }
}

int locate_circle(const ConeGrid& g, const Vec& y) {
  const int N = g.sectors;
  const double step = kTwoPi / N;
  double theta = std::atan2(y(1), y(0));
  if (theta < 0.0) theta += kTwoPi;
  const double pos = theta / step;
  const double nearest = std::round(pos);
  if (std::abs(pos - nearest) * step <= kMemberTol) {
    // on the edge ray `nearest`, shared by cones nearest - 1 and nearest
    const int e = static_cast<int>(nearest) % N;
    return std::min(e, (e - 1 + N) % N);
  }
  return std::min(static_cast<int>(std::floor(pos)), N - 1);
}

int locate_sphere(const ConeGrid& g, const Vec& y) {
  const double r = y.norm();
  const double theta = std::acos(std::clamp(y(2) / r, -1.0, 1.0));
  double phi = std::atan2(y(1), y(0));
  if (phi < 0.0) phi += kTwoPi;
  const int bi = std::min(static_cast<int>(theta / (std::numbers::pi / g.bands)), g.bands - 1);
  const int bj = std::min(static_cast<int>(phi / (kTwoPi / g.sectors)), g.sectors - 1);
  int best = -1;
  for (int i = std::max(0, bi - 1); i <= std::min(g.bands - 1, bi + 1); ++i)
    for (int dj = -1; dj <= 1; ++dj) {
      const int j = ((bj + dj) % g.sectors + g.sectors) % g.sectors;
      const int c = i * g.sectors + j;
      if ((best < 0 || c < best) && weights_in(g, c, y)) best = c;
    }
  if (best < 0) throw GeometryError("locate_cone: direction not covered by any candidate cone");
  return best;
}

}  // namespace

double ConeGrid::max_cell_area() const {
  return cell_area.empty() ? 0.0 : *std::max_element(cell_area.begin(), cell_area.end());
}

ConeGrid build_grid(int d, double epsilon) {
  if (d != 2 && d != 3) throw ConfigError("cone grid: d must be 2 or 3");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("cone grid: epsilon must be in (0, 1)");
  return d == 2 ? build_circle(epsilon) : build_sphere(epsilon);
}

int locate_cone(const ConeGrid& grid, const Vec& y) {
  if (y.size() != grid.d) throw ConfigError("locate_cone: wrong dimension");
  if (y.norm() == 0.0 || !y.allFinite()) throw ConfigError("locate_cone: y = 0 has no direction");
  return grid.d == 2 ? locate_circle(grid, y) : locate_sphere(grid, y);
}

std::vector<Vec> tangent_projections(const ConeGrid& grid, int i, const Vec& y) {
  if (i < 0 || i >= grid.N()) throw ConfigError("tangent_projections: cone index out of range");
  if (y.size() != grid.d || y.norm() == 0.0) throw ConfigError("tangent_projections: need nonzero y in R^d");
  const double ny2 = y.squaredNorm();
  std::vector<Vec> out;
  for (int e : grid.cones[i]) {
    const Vec& dir = grid.edge_directions[e];
    const double c = dir.dot(y);
    if (!(c > 0.0)) throw GeometryError("tangent_projections: edge ray is not within 90 degrees of y");
    out.push_back((ny2 / c) * dir);
  }
  return out;
}

std::vector<double> barycentric_weights(const ConeGrid& grid, int i, const Vec& y) {
  if (i < 0 || i >= grid.N()) throw ConfigError("barycentric_weights: cone index out of range");
  if (y.size() != grid.d || y.norm() == 0.0) throw ConfigError("barycentric_weights: need nonzero y in R^d");
  auto w = weights_in(grid, i, y);
  if (!w) throw GeometryError("barycentric_weights: y has no nonnegative representation in cone " + std::to_string(i));
  return *w;
}

DistortionBound distortion_bound(const ConeGrid& grid, const Mat& Q, int per_cone) {
  if (Q.rows() != grid.d || Q.cols() != grid.d || !is_psd(Q))
    throw ConfigError("distortion_bound: Q must be a symmetric PSD d x d matrix");
  if (min_eigenvalue(Q) < 1.0 - 1e-10) throw ConfigError("distortion_bound: need Q >= I (add |x|^2/2 to f)");
  if (per_cone < 1) throw ConfigError("distortion_bound: per_cone must be >= 1");
  DistortionBound out;
  auto visit = [&](int i, Vec y) {
    y.normalize();
    const double qy = y.dot(Q * y);
    for (const Vec& T : tangent_projections(grid, i, y)) {
      out.norm_part = std::max(out.norm_part, T.norm() - 1.0);
      out.quad_part = std::max(out.quad_part, std::abs(T.dot(Q * T) - qy) / qy);
    }
  };
  for (int i = 0; i < grid.N(); ++i) {
    const auto& c = grid.cones[i];
    const auto& E = grid.edge_directions;
    Vec centre = Vec::Zero(grid.d);
    for (int e : c) {
      visit(i, E[e]);
      centre += E[e];
    }
    visit(i, centre);
    if (grid.d == 2) {
      for (int k = 1; k < per_cone; ++k) {
        const double u = static_cast<double>(k) / per_cone;
        visit(i, (1.0 - u) * E[c[0]] + u * E[c[1]]);
      }
    } else {
      // bilinear patch over the four corners, sqrt(per_cone)^2 points
      const int m = std::max(2, static_cast<int>(std::sqrt(static_cast<double>(per_cone))));
      for (int a = 0; a <= m; ++a)
        for (int b = 0; b <= m; ++b) {
          const double u = static_cast<double>(a) / m, v = static_cast<double>(b) / m;
          const Vec top = (1.0 - u) * E[c[0]] + u * E[c[1]];
          const Vec bottom = (1.0 - u) * E[c[3]] + u * E[c[2]];
          visit(i, (1.0 - v) * top + v * bottom);
        }
    }
  }
  out.a = 1.01 * std::max(out.norm_part, out.quad_part);
  return out;
}

std::vector<CapArea> cap_area_estimate(const ConeGrid& grid, std::int64_t n, std::uint64_t seed, Execution exec) {
  if (n < 2) throw ConfigError("cap_area_estimate: n must be >= 2");
  std::vector<int> cell(static_cast<std::size_t>(n));
  const int d = grid.d;
  const std::int64_t batches = (n + mc::kBatchSize - 1) / mc::kBatchSize;
  std::vector<std::exception_ptr> errors(batches);
  auto run = [&](std::int64_t b) {
    try {
      mc::Stream s(seed, static_cast<std::uint64_t>(b));
      const std::int64_t end = std::min(n, (b + 1) * mc::kBatchSize);
      Vec z(d);
      for (std::int64_t k = b * mc::kBatchSize; k < end; ++k) {
        do s.fill_normal(z);
        while (z.norm() == 0.0);
        cell[k] = locate_cone(grid, z);
      }
    } catch (...) {
      errors[b] = std::current_exception();
    }
  };
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(default_thread_count())
    for (std::int64_t b = 0; b < batches; ++b) run(b);
  } else {
    for (std::int64_t b = 0; b < batches; ++b) run(b);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<std::int64_t> counts(grid.N(), 0);
  for (int c : cell) ++counts[c];
  const double total = d == 2 ? kTwoPi : 4.0 * std::numbers::pi;
  std::vector<CapArea> out;
  for (auto c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(n);
    out.push_back({total * p, total * std::sqrt(p * (1.0 - p) / static_cast<double>(n))});
  }
  return out;
}

}  // namespace cvx
