// Acceptance run: one PASS/FAIL line per criterion. Each criterion also
// returns its data as CSV so the whole run can be repeated and compared.
#include "convexito/brownian.hpp"
#include "convexito/cone_grid.hpp"
#include "convexito/corpus.hpp"
#include "convexito/estimators.hpp"
#include "convexito/heat_kernel.hpp"
#include "convexito/report.hpp"
#include "convexito/test_function.hpp"
#include "convexito/verifier.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace cvx;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  std::string data;  // CSV
};

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

std::string fmt(double v) { return format_number(v); }

std::string csv(const Table& t) {
  std::ostringstream os;
  t.write_csv(os);
  return os.str();
}

const Registry& registry() {
  static const Registry r = Registry::builtin();
  return r;
}

constexpr std::uint64_t kSeed = 20240601;
constexpr std::int64_t kN = 1000000;

Outcome quadratic_exactness() {
  std::mt19937_64 rng(kSeed);
  std::normal_distribution<double> normal;
  Table tab({"d", "t", "value", "stderr"});
  Outcome o;
  double worst = 0.0;
  for (int d = 1; d <= 3; ++d) {
    Mat B(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) B(i, j) = normal(rng);
    Vec b(d), x(d);
    for (int i = 0; i < d; ++i) {
      b(i) = normal(rng);
      x(i) = normal(rng);
    }
    const auto f = make_corpus_function(QuadraticSpec{B * B.transpose(), b, normal(rng)}, "q");
    for (double t : {1.0, 0.01}) {
      const auto e = ito_residual(f, x, t, kN, kSeed);
      tab.add_row({std::to_string(d), fmt(t), fmt(e.mean), fmt(e.std_error)});
      worst = std::max(worst, std::abs(e.mean));
      o.pass = o.pass && std::abs(e.mean) <= 1e-12;
    }
  }
  o.detail = "max residual " + fmt(worst) + " (limit 1e-12)";
  o.data = csv(tab);
  return o;
}

Outcome trace_limit() {
  const auto f = registry().get("power4_1d");
  Table tab({"t", "value", "stderr", "expected"});
  Outcome o;
  for (double t : {0.01, 0.001}) {
    const auto e = trace_estimate(f, from_values({1.0}), t, kN, kSeed);
    const double expected = (6.0 * t + 3.0 * t * t) / t;
    tab.add_row({fmt(t), fmt(e.mean), fmt(e.std_error), fmt(expected)});
    o.pass = o.pass && std::abs(e.mean - expected) <= 3.0 * e.std_error;
    o.detail += "t=" + fmt(t) + ": " + fmt(e.mean) + " +- " + fmt(e.std_error) + " vs " + fmt(expected) + "; ";
  }
  o.data = csv(tab);
  return o;
}

MCEstimate abs_compensator(double t) {
  PathConfig cfg;
  cfg.t = t;
  cfg.eps = 1e-3;
  cfg.steps = 1000;
  cfg.n = 100000;
  cfg.seed = kSeed;
  return compensator_path_estimate(registry().get("abs_1d"), from_values({0.0}), cfg);
}

Outcome compensator_closed_form() {
  const auto e = abs_compensator(1.0);
  const double target = std::sqrt(2.0 / std::numbers::pi);
  Outcome o;
  o.pass = std::abs(e.mean - target) <= 0.02 * target;
  o.detail = fmt(e.mean) + " +- " + fmt(e.std_error) + " vs sqrt(2/pi) = " + fmt(target) + " (2%)";
  Table tab({"t", "value", "stderr"});
  tab.add_row({"1", fmt(e.mean), fmt(e.std_error)});
  o.data = csv(tab);
  return o;
}

Outcome representation_identity() {
  const auto f = registry().get("quadratic_identity_d1");
  const auto h = unit_mass_bump(from_values({0.2}), from_values({0.9}));
  Table tab({"t", "lhs", "rhs"});
  Outcome o;
  for (double t : {0.1, 1.0}) {
    const auto r = representation_check(f, h, t);
    tab.add_row({fmt(t), fmt(r.lhs), fmt(r.rhs)});
    o.pass = o.pass && r.abs_diff() <= 1e-6 && std::abs(r.lhs - t / 2) <= 1e-6 && std::abs(r.rhs - t / 2) <= 1e-6;
    o.detail += "t=" + fmt(t) + ": |lhs-rhs| = " + fmt(r.abs_diff()) + ", lhs - t/2 = " + fmt(r.lhs - t / 2) + "; ";
  }
  o.data = csv(tab);
  return o;
}

Outcome expected_compensator() {
  const auto f = registry().get("abs_1d");
  const ScalarMeasure vA = revuz_view(*f.measure);
  Table tab({"t", "quadrature", "closed_form", "path_mean", "path_stderr"});
  Outcome o;
  for (double t : {0.1, 1.0}) {
    const double q = expected_A_over_t(vA, from_values({0.0}), t);
    const double exact = std::sqrt(2.0 / (std::numbers::pi * t));
    const auto e = abs_compensator(t);
    const double path = e.mean / t, path_err = e.std_error / t;
    tab.add_row({fmt(t), fmt(q), fmt(exact), fmt(path), fmt(path_err)});
    const bool ok_q = std::abs(q - exact) <= 1e-6;
    const bool ok_p = std::abs(path - q) <= 3.0 * path_err + 0.02 * q;
    o.pass = o.pass && ok_q && ok_p;
    o.detail += "t=" + fmt(t) + ": quad " + fmt(q) + " exact " + fmt(exact) + " paths " + fmt(path) + "; ";
  }
  o.data = csv(tab);
  return o;
}

Outcome gaussian_smoothing() {
  ScalarMeasure mu;
  mu.dim = 1;
  mu.density = [](const Vec&) { return 1.0; };
  mu.atoms.push_back({from_values({0.0}), 1.0});
  const Vec x = from_values({0.5});
  Table tab({"k", "value", "log_deviation"});
  Outcome o;
  double prev = std::numeric_limits<double>::infinity(), last_dev = 0.0;
  for (int k = 4; k <= 10; ++k) {
    const auto p = gaussian_smooth_measure_parts(mu, std::ldexp(1.0, k), x);
    // value - 1 is the atom term once the Lebesgue part is 1 to rounding;
    // compared in log space since it drops below one ulp of 1 after k = 5
    const double dens_err = std::abs(p.density - 1.0);
    const double log_dev = p.log_atoms;
    tab.add_row({std::to_string(k), fmt(p.value()), fmt(log_dev)});
    o.pass = o.pass && dens_err <= 4e-16 && log_dev < prev;
    prev = log_dev;
    last_dev = std::abs(p.value() - 1.0);
  }
  o.pass = o.pass && last_dev < 1e-8 && prev < std::log(1e-8);
  o.detail = "log deviation at k=10: " + fmt(prev) + ", |value-1| = " + fmt(last_dev);
  o.data = csv(tab);
  return o;
}

Outcome revuz_trace() {
  const std::vector<std::string> ids = {"quadratic_identity_d1", "power4_1d", "quadratic_aniso_d2", "quartic_ridge_d2",
                                        "smooth_ridge_d2"};
  Table tab({"function", "mc", "stderr", "quad"});
  Outcome o;
  for (const auto& id : ids) {
    const auto f = registry().get(id);
    const Vec c = f.dim == 1 ? from_values({0.3}) : from_values({0.3, -0.2});
    const auto phi = poly_bump(c, Vec::Constant(f.dim, 0.8));
    TraceRevuzOptions opts;
    opts.seed = kSeed;
    opts.n = kN;
    opts.steps = 16;
    const auto r = trace_revuz_compare(f, phi, opts);
    tab.add_row({id, fmt(r.mc_side), fmt(r.mc_std_error), fmt(r.quad_side)});
    const bool ok = std::abs(r.mc_side - r.quad_side) <= 3.0 * r.mc_std_error + 1e-5;
    o.pass = o.pass && ok;
    o.detail += id + (ok ? " ok; " : " MISMATCH; ");
  }
  o.data = csv(tab);
  return o;
}

Outcome chain_rule() {
  const auto f = registry().get("quadratic_identity_d2");
  const Vec x = from_values({0.4, -1.1});
  const double a = 0.7310;
  Mat R(2, 2);
  R << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  const auto e1 = linear_map_trace(f, x, 2.0 * identity(2), 0.01, kN, kSeed);
  const auto e2 = linear_map_trace(f, x, R, 0.01, kN, kSeed);
  Outcome o;
  o.pass = std::abs(e1.mean - 4.0) <= 3.0 * e1.std_error && std::abs(e2.mean - 1.0) <= 3.0 * e2.std_error;
  o.detail = "S=2I: " + fmt(e1.mean) + " +- " + fmt(e1.std_error) + "; rotation: " + fmt(e2.mean) + " +- " +
             fmt(e2.std_error);
  Table tab({"S", "value", "stderr"});
  tab.add_row({"2I", fmt(e1.mean), fmt(e1.std_error)});
  tab.add_row({"rotation", fmt(e2.mean), fmt(e2.std_error)});
  o.data = csv(tab);
  return o;
}

Outcome directional() {
  const auto f = registry().get("abs_x1_half_x2sq_d2");
  const Vec x = from_values({1.0, 0.0});
  const auto e2 = directional_second_derivative(f, x, unit(2, 1), 0.01, kN, kSeed);
  const auto e1 = directional_second_derivative(f, x, unit(2, 0), 0.01, kN, kSeed);
  Outcome o;
  o.pass = std::abs(e2.mean - 1.0) <= 3.0 * e2.std_error && std::abs(e1.mean) <= 3.0 * e1.std_error + 1e-6;
  o.detail = "e2: " + fmt(e2.mean) + " +- " + fmt(e2.std_error) + "; e1: " + fmt(e1.mean) + " +- " + fmt(e1.std_error);
  Table tab({"direction", "value", "stderr"});
  tab.add_row({"e1", fmt(e1.mean), fmt(e1.std_error)});
  tab.add_row({"e2", fmt(e2.mean), fmt(e2.std_error)});
  o.data = csv(tab);
  return o;
}

Outcome residual_decay() {
  const auto f = registry().get("power4_1d");
  const auto curve = residual_curve(f, from_values({1.0}), dyadic_times(0.1, 1e-4), kN, kSeed);
  const auto fit = residual_rate_fit(curve);
  Outcome o;
  o.pass = fit.verdict == RateVerdict::decay && fit.slope >= 0.35 && fit.slope <= 0.65;
  o.detail = "slope " + fmt(fit.slope) + " over " + std::to_string(fit.points_used) + " points";
  Table tab({"t", "value", "stderr"});
  for (const auto& p : curve.points) tab.add_row({fmt(p.t), fmt(p.value), fmt(p.std_error)});
  o.data = csv(tab);
  return o;
}

Outcome cone_geometry() {
  Table tab({"k", "N", "norm_part", "closed_form", "a"});
  Outcome o;
  double prev_a = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(kSeed);
  std::normal_distribution<double> normal;
  int bad_partition = 0;
  for (int k = 2; k <= 7; ++k) {
    const auto grid = build_grid(2, std::ldexp(1.0, -k));
    double total = 0.0;
    for (double a : grid.cell_area) total += a;
    if (std::abs(total - 2.0 * std::numbers::pi) > 1e-12) ++bad_partition;
    for (int s = 0; s < 100000; ++s) {
      const Vec y = from_values({normal(rng), normal(rng)}) * std::exp(normal(rng));
      if (y.norm() == 0.0) continue;
      const int i = locate_cone(grid, y);
      // exhaustive membership: the located cone must be the lowest containing one
      int lowest = -1;
      for (int c = 0; c < grid.N() && lowest < 0; ++c) {
        const Vec beta = grid.simplices[c][0].inverse * y;
        if (beta.minCoeff() >= -1e-12 * y.norm()) lowest = c;
      }
      const auto alpha = barycentric_weights(grid, i, y);
      const auto T = tangent_projections(grid, i, y);
      Vec rec = Vec::Zero(2);
      double sum = 0.0;
      for (std::size_t j = 0; j < alpha.size(); ++j) {
        rec += alpha[j] * T[j];
        sum += alpha[j];
        if (alpha[j] < 0.0) ++bad_partition;
      }
      if (lowest != i || std::abs(sum - 1.0) > 1e-12 || (rec - y).norm() > 1e-10 * y.norm()) ++bad_partition;
    }
    const auto b = distortion_bound(grid, identity(2));
    const double closed = 1.0 / std::cos(2.0 * std::numbers::pi / grid.N()) - 1.0;
    tab.add_row({std::to_string(k), std::to_string(grid.N()), fmt(b.norm_part), fmt(closed), fmt(b.a)});
    o.pass = o.pass && std::abs(b.norm_part - closed) <= 0.01 * closed && b.a < prev_a && b.a < std::ldexp(1.0, 2 - k);
    prev_a = b.a;
  }
  o.pass = o.pass && bad_partition == 0;
  o.detail = "partition violations " + std::to_string(bad_partition) + ", a(eps_7) = " + fmt(prev_a);
  o.data = csv(tab);
  return o;
}

Outcome sup_by_expectation() {
  Table tab({"d", "function", "r", "lhs", "rhs"});
  Outcome o;
  int failures = 0;
  double abs_ratio = 0.0;
  for (int d : {1, 2}) {
    for (const auto& h : sup_corpus(d)) {
      const auto g = affine_gap(h);
      for (double r : {1.0, 0.5, 0.25}) {
        SupOptions opts;
        opts.id = h.id;
        const auto rep = sup_expectation_bound(g, r, d, opts);
        tab.add_row({std::to_string(d), h.id, fmt(r), fmt(rep.lhs), fmt(rep.rhs)});
        if (!rep.pass) ++failures;
        if (d == 1 && h.id.find("abs_norm") != std::string::npos && r == 1.0)
          abs_ratio = rep.s / (std::pow(r * rep.L, rep.alpha) * std::pow(rep.G, 1.0 - rep.alpha));
      }
    }
  }
  o.pass = failures == 0 && abs_ratio >= 1.11 && sup_constant(1) >= abs_ratio && sup_constant(1) >= 1.12;
  o.detail = std::to_string(failures) + " failures; |x| ratio " + fmt(abs_ratio) + " (exact (2/pi)^(-1/4) = 1.1195), C(1) = " +
             fmt(sup_constant(1)) + ", C(2) = " + fmt(sup_constant(2));
  o.data = csv(tab);
  return o;
}

Outcome recursion() {
  const auto f = registry().get("power4_1d");
  RecursionOptions opts;
  opts.seed = kSeed;
  const auto rep =
      dyadic_recursion_check(f, from_values({1.0}), from_values({4.0}), Mat::Constant(1, 1, 12.0), 0.5, 8, opts);
  Table tab({"r", "s_over_r2", "analytic", "G", "bound"});
  Outcome o;
  o.pass = rep.bounded && rep.all_bounds_hold;
  double worst = 0.0;
  for (std::size_t k = 0; k < rep.levels.size(); ++k) {
    const auto& lv = rep.levels[k];
    const double analytic = 4.0 * lv.r + lv.r * lv.r;
    worst = std::max(worst, std::abs(lv.s_over_r2 - analytic));
    o.pass = o.pass && !lv.dropped && lv.bound_ok;
    if (k > 1) o.pass = o.pass && lv.s_over_r2 <= rep.levels[k - 1].s_over_r2;
    tab.add_row({fmt(lv.r), fmt(lv.s_over_r2), fmt(analytic), fmt(lv.G), fmt(lv.bound)});
  }
  o.pass = o.pass && worst <= 1e-6;
  o.detail = "max |s/r^2 - (4r + r^2)| = " + fmt(worst) + ", levels " + std::to_string(rep.levels.size());
  o.data = csv(tab);
  return o;
}

Outcome extension() {
  const auto ball = make_corpus_function(QuadraticSpec{Mat::Constant(1, 1, 2.0), Vec::Zero(1), 0.0}, "x2");
  const auto g = extend_from_ball(ball);
  const double at2 = g(from_values({2.0}));
  std::mt19937_64 rng(kSeed);
  std::uniform_real_distribution<double> uni(-4.0, 4.0);
  int violations = 0;
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const double a = uni(rng), b = uni(rng);
    const double gap = g(from_values({0.5 * (a + b)})) - 0.5 * (g(from_values({a})) + g(from_values({b})));
    worst = std::max(worst, gap);
    if (gap > 1e-9 * (1.0 + std::abs(g(from_values({a}))) + std::abs(g(from_values({b}))))) ++violations;
  }
  Outcome o;
  o.pass = std::abs(at2 - 3.0) <= 1e-6 && violations == 0;
  o.detail = "extension at 2 = " + fmt(at2) + ", midpoint violations " + std::to_string(violations) +
             " (worst gap " + fmt(worst) + ")";
  Table tab({"z", "value"});
  tab.add_row({"2", fmt(at2)});
  o.data = csv(tab);
  return o;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "quadratic exactness of the Ito residual", quadratic_exactness},
      {2, "trace limit for x^4", trace_limit},
      {3, "compensator of |x| vs E|W_1|", compensator_closed_form},
      {4, "representation identity", representation_identity},
      {5, "expected compensator formula", expected_compensator},
      {6, "Gaussian smoothing of delta_0 + Lebesgue", gaussian_smoothing},
      {7, "Revuz measure vs half trace", revuz_trace},
      {8, "chain rule", chain_rule},
      {9, "directional second derivative", directional},
      {10, "Ito residual decay rate", residual_decay},
      {11, "cone geometry", cone_geometry},
      {12, "sup-by-expectation bound", sup_by_expectation},
      {13, "dyadic recursion", recursion},
      {14, "extension from the ball", extension},
  };

  bool all = true;
  std::vector<std::string> first;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
    all = all && o.pass;
    first.push_back(o.data);
  }

  // 15: the same run again must give identical data
  int differing = 0;
  std::string which;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    std::string again;
    try {
      again = criteria[k].run().data;
    } catch (const std::exception&) {
      again = "<exception>";
    }
    if (again != first[k]) {
      ++differing;
      which += " " + std::to_string(criteria[k].id);
    }
  }
  const bool det = differing == 0;
  std::printf("%s 15 determinism: %s\n", det ? "PASS" : "FAIL",
              det ? "all 14 criteria reproduced bit-identical CSV data" : ("differs in" + which).c_str());
  all = all && det;
  return all ? 0 : 1;
}
