#include "convexito/brownian.hpp"
#include "convexito/corpus.hpp"
#include "convexito/errors.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

using namespace cvx;
using Catch::Approx;

namespace {

const Registry& reg() {
  static const Registry r = Registry::builtin();
  return r;
}

double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
double Phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("increments have the right moments") {
  const auto w = sample_increments(1, 4.0, 1000000, 3);
  CHECK(std::abs(w.mean()) < 3.0 * 2.0 / 1000.0);

  const auto v = sample_increments(2, 1.0, 1000000, 4);
  const Eigen::MatrixXd cov = v * v.transpose() / static_cast<double>(v.cols());
  CHECK((cov - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.01);
  CHECK(sample_increments(3, 1.0, 0, 1).cols() == 0);
}

TEST_CASE("same seed gives identical batches, serial equals parallel") {
  const auto a = sample_increments(2, 0.5, 10000, 9, Execution::serial);
  const auto b = sample_increments(2, 0.5, 10000, 9, Execution::parallel);
  CHECK(a == b);
  CHECK(a != sample_increments(2, 0.5, 10000, 10));

  auto g = [](const Vec& w) { return w.squaredNorm(); };
  const auto s = expect(g, 3, 2.0, 50000, 5, false, Execution::serial);
  const auto p = expect(g, 3, 2.0, 50000, 5, false, Execution::parallel);
  CHECK(s.mean == p.mean);
  CHECK(s.std_error == p.std_error);
}

TEST_CASE("expect reproduces Gaussian moments") {
  const auto e = expect([](const Vec& w) { return w.squaredNorm(); }, 3, 2.0, 200000, 1);
  CHECK(std::abs(e.mean - 6.0) <= 3.0 * e.std_error);

  const Vec p = from_values({1.0, -2.0});
  const auto lin = expect([&](const Vec& w) { return p.dot(w); }, 2, 1.0, 200000, 2);
  CHECK(std::abs(lin.mean) <= 3.0 * lin.std_error);
  // antithetic pairs cancel odd functionals exactly
  const auto anti = expect([&](const Vec& w) { return p.dot(w); }, 2, 1.0, 1000, 2, true);
  CHECK(std::abs(anti.mean) < 1e-15);

  const double t = 0.01;
  const double exact = 2.0 * (std::sqrt(t) * phi(1.0 / std::sqrt(t)) - Phi(-1.0 / std::sqrt(t)));
  const auto fold = expect([](const Vec& w) { return std::abs(1.0 + w(0)) - 1.0 - w(0); }, 1, t, 200000, 3);
  CHECK(std::abs(fold.mean - exact) <= 3.0 * fold.std_error + 1e-15);
}

TEST_CASE("non-finite functional aborts with the sample") {
  try {
    expect([](const Vec& w) { return w(0) > 1.0 ? std::nan("") : 0.0; }, 1, 1.0, 1000, 1);
    FAIL("expected EstimationError");
  } catch (const EstimationError& e) {
    REQUIRE(e.sample().size() == 1);
    CHECK(e.sample()[0] > 1.0);
  }
}

TEST_CASE("compensator of smooth and affine functions") {
  PathConfig cfg;
  cfg.t = 1.0;
  cfg.steps = 50;
  cfg.n = 20000;
  cfg.eps = 0.0;
  const auto q = compensator_path_estimate(reg().get("quadratic_identity_d2"), from_values({0.4, 1.0}), cfg);
  CHECK(std::abs(q.mean - 1.0) <= 3.0 * q.std_error + 1e-12);

  const auto a = compensator_path_estimate(reg().get("affine_d2"), from_values({0.4, 1.0}), cfg);
  CHECK(std::abs(a.mean) <= 1e-12);
}

TEST_CASE("compensator of |x| matches E|W_1|") {
  PathConfig cfg;
  cfg.t = 1.0;
  cfg.steps = 1000;
  cfg.n = 100000;
  cfg.eps = 1e-3;
  const auto e = compensator_path_estimate(reg().get("abs_1d"), from_values({0.0}), cfg);
  CHECK(e.mean == Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(0.02));
}

TEST_CASE("eps = 0 is rejected for non-smooth functions") {
  PathConfig cfg;
  cfg.eps = 0.0;
  cfg.n = 10;
  CHECK_THROWS_AS(compensator_path_estimate(reg().get("abs_1d"), from_values({0.0}), cfg), ConfigError);
  cfg.steps = 0;
  CHECK_THROWS_AS(compensator_path_estimate(reg().get("quadratic_identity_d1"), from_values({0.0}), cfg),
                  ConfigError);
}

TEST_CASE("compensator increments are non-negative") {
  PathConfig cfg;
  cfg.t = 1.0;
  cfg.steps = 100;
  cfg.n = 2000;
  cfg.eps = 0.0;
  const auto q = compensator_monotonicity_check(reg().get("quadratic_identity_d2"), Vec::Zero(2), cfg);
  CHECK(q.pass);
  // smallest step of the graded grid is the first one
  const auto grid = compensator_time_grid(cfg.t, cfg.steps);
  CHECK(q.min_increment == Approx((grid[1] - grid[0]) * 1.0).epsilon(1e-12));

  cfg.eps = 0.05;
  const auto m = compensator_monotonicity_check(reg().get("abs_1d"), from_values({0.0}), cfg);
  CHECK(m.pass);
  // f_eps'' > 0 but underflows to 0 far from the kink
  CHECK(m.min_increment >= 0.0);

  const auto a = compensator_monotonicity_check(reg().get("affine_d2"), Vec::Zero(2), cfg);
  CHECK(a.pass);
  CHECK(a.min_increment == 0.0);
}

TEST_CASE("path kernels agree between serial and parallel") {
  PathConfig cfg;
  cfg.steps = 64;
  cfg.n = 3000;
  cfg.eps = 0.01;
  const auto f = reg().get("norm_d2");
  const auto s = compensator_path_estimate(f, from_values({0.1, 0.0}), cfg, Execution::serial);
  const auto p = compensator_path_estimate(f, from_values({0.1, 0.0}), cfg, Execution::parallel);
  CHECK(s.mean == p.mean);
  CHECK(s.std_error == p.std_error);
}

TEST_CASE("running stats merge matches a single pass") {
  mc::RunningStats all, left, right;
  for (int k = 0; k < 100; ++k) {
    const double v = std::sin(k * 0.7) * 3.0 + k * 0.01;
    all.push(v);
    (k < 37 ? left : right).push(v);
  }
  left.merge(right);
  CHECK(left.n == all.n);
  CHECK(left.mean == Approx(all.mean).epsilon(1e-14));
  CHECK(left.m2 == Approx(all.m2).epsilon(1e-12));
  CHECK(left.min == all.min);
  CHECK(left.max == all.max);
}
