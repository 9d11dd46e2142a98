#include "convexito/quadrature.hpp"

#include "convexito/errors.hpp"
#include "convexito/execution.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <mutex>
#include <numeric>

namespace cvx {

namespace {
int g_thread_override = 0;
}

int default_thread_count() {
  if (g_thread_override > 0) return g_thread_override;
  if (const char* env = std::getenv("CONVEXITO_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return omp_get_max_threads();
}

void set_thread_count(int n) { g_thread_override = n > 0 ? n : 0; }

}  // namespace cvx

namespace cvx::quad {

namespace {

// Golub–Welsch: eigen-decomposition of the symmetric Jacobi matrix with zero
// diagonal and the given off-diagonal recurrence coefficients.
Rule golub_welsch(int order, const std::function<double(int)>& offdiag, double mass) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    jacobi(k, k - 1) = offdiag(k);
    jacobi(k - 1, k) = offdiag(k);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  Rule r;
  r.nodes.resize(order);
  r.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    r.nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    r.weights[i] = mass * v0 * v0;
  }
  // Symmetrize: both families are even, so pair node i with node n-1-i.
  for (int i = 0; i < order / 2; ++i) {
    const int j = order - 1 - i;
    const double x = 0.5 * (r.nodes[j] - r.nodes[i]);
    const double w = 0.5 * (r.weights[i] + r.weights[j]);
    r.nodes[i] = -x;
    r.nodes[j] = x;
    r.weights[i] = w;
    r.weights[j] = w;
  }
  if (order % 2 == 1) r.nodes[order / 2] = 0.0;
  const double total = std::accumulate(r.weights.begin(), r.weights.end(), 0.0);
  for (double& w : r.weights) w *= mass / total;
  return r;
}

const Rule& cached(std::map<int, Rule>& cache, std::mutex& mu, int order,
                   const std::function<Rule(int)>& make) {
  std::lock_guard lock(mu);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, make(order)).first;
  return it->second;
}

}  // namespace

const Rule& gauss_hermite(int order) {
  if (order < 1) throw ConfigError("Gauss-Hermite order must be >= 1");
  static std::map<int, Rule> cache;
  static std::mutex mu;
  return cached(cache, mu, order, [](int n) {
    return golub_welsch(n, [](int k) { return std::sqrt(static_cast<double>(k)); }, 1.0);
  });
}

const Rule& gauss_legendre(int order) {
  if (order < 1) throw ConfigError("Gauss-Legendre order must be >= 1");
  static std::map<int, Rule> cache;
  static std::mutex mu;
  return cached(cache, mu, order, [](int n) {
    return golub_welsch(
        n,
        [](int k) {
          const double kk = k;
          return kk / std::sqrt(4.0 * kk * kk - 1.0);
        },
        2.0);
  });
}

Rule gauss_legendre(int order, double a, double b) {
  const Rule& unit = gauss_legendre(order);
  Rule r = unit;
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (int i = 0; i < r.order(); ++i) {
    r.nodes[i] = mid + half * unit.nodes[i];
    r.weights[i] = half * unit.weights[i];
  }
  return r;
}

double tensor_expectation(const Rule& rule, int d, const std::function<double(const Vec&)>& g) {
  const int m = rule.order();
  std::array<int, kMaxDim> idx{};
  Vec z(d);
  double sum = 0.0;
  while (true) {
    double w = 1.0;
    for (int k = 0; k < d; ++k) {
      z(k) = rule.nodes[idx[k]];
      w *= rule.weights[idx[k]];
    }
    sum += w * g(z);
    int k = 0;
    while (k < d && ++idx[k] == m) idx[k++] = 0;
    if (k == d) break;
  }
  return sum;
}

double Box::volume() const {
  double v = 1.0;
  for (int k = 0; k < dim(); ++k) v *= hi(k) - lo(k);
  return v;
}

bool Box::contains(const Box& inner) const {
  if (inner.dim() != dim()) return false;
  for (int k = 0; k < dim(); ++k)
    if (inner.lo(k) < lo(k) || inner.hi(k) > hi(k)) return false;
  return true;
}

TensorGrid box_grid(const Box& box, int order) {
  const int d = box.dim();
  if (d < 1 || d > 3) throw ConfigError("box quadrature supports 1 <= d <= 3");
  std::vector<Rule> axes(d);
  for (int k = 0; k < d; ++k) {
    if (!std::isfinite(box.lo(k)) || !std::isfinite(box.hi(k)) || !(box.hi(k) > box.lo(k)))
      throw ConfigError("quadrature box must be bounded and non-degenerate");
    std::vector<double> cuts{box.lo(k)};
    if (k < static_cast<int>(box.breaks.size()))
      for (double b : box.breaks[k])
        if (b > box.lo(k) && b < box.hi(k)) cuts.push_back(b);
    cuts.push_back(box.hi(k));
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
      Rule piece = gauss_legendre(order, cuts[p], cuts[p + 1]);
      axes[k].nodes.insert(axes[k].nodes.end(), piece.nodes.begin(), piece.nodes.end());
      axes[k].weights.insert(axes[k].weights.end(), piece.weights.begin(), piece.weights.end());
    }
  }
  TensorGrid grid;
  std::array<int, 3> idx{};
  while (true) {
    Vec x(d);
    double w = 1.0;
    for (int k = 0; k < d; ++k) {
      x(k) = axes[k].nodes[idx[k]];
      w *= axes[k].weights[idx[k]];
    }
    grid.points.push_back(x);
    grid.weights.push_back(w);
    int k = 0;
    while (k < d && ++idx[k] == axes[k].order()) idx[k++] = 0;
    if (k == d) break;
  }
  return grid;
}

double integrate_box(const Box& box, int order, const std::function<double(const Vec&)>& g) {
  const TensorGrid grid = box_grid(box, order);
  const auto n = static_cast<std::ptrdiff_t>(grid.points.size());
  std::vector<double> terms(grid.points.size());
#pragma omp parallel for schedule(static) num_threads(default_thread_count())
  for (std::ptrdiff_t i = 0; i < n; ++i) terms[i] = grid.weights[i] * g(grid.points[i]);
  return std::accumulate(terms.begin(), terms.end(), 0.0);
}

double adaptive(const std::function<double(double)>& f, double a, double b, double tol,
                double* error_estimate) {
  if (a == b) {
    if (error_estimate) *error_estimate = 0.0;
    return 0.0;
  }
  double err = 0.0;
  const double v =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 20, tol, &err);
  if (error_estimate) *error_estimate = err;
  return v;
}

}  // namespace cvx::quad
