#include "convexito/corpus.hpp"
#include "convexito/errors.hpp"
#include "convexito/estimators.hpp"

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

constexpr std::int64_t kN = 200000;

bool within(const MCEstimate& e, double expected, double slack = 0.0) {
  return std::abs(e.mean - expected) <= 3.0 * e.std_error + slack;
}

double folded_tail(double t) {
  // 2 (sqrt(t) phi(1/sqrt t) - Phi(-1/sqrt t)) / t
  const double z = 1.0 / std::sqrt(t);
  const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return 2.0 * (std::sqrt(t) * phi - 0.5 * std::erfc(z / std::sqrt(2.0))) / t;
}

Mat rotation(double a) {
  Mat R(2, 2);
  R << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return R;
}

}  // namespace

TEST_CASE("trace estimate examples") {
  const auto q = reg().get("quadratic_identity_d2");
  for (double t : {1.0, 0.01}) CHECK(within(trace_estimate(q, from_values({0.5, -1.0}), t, kN, 1), 1.0));
  CHECK(within(trace_estimate(reg().get("power4_1d"), from_values({1.0}), 0.01, kN, 2), 6.03));
  const auto a = trace_estimate(reg().get("abs_1d"), from_values({1.0}), 0.01, kN, 3);
  INFO(a.mean << " +- " << a.std_error);
  CHECK(within(a, folded_tail(0.01), 1e-12));
}

TEST_CASE("trace estimate aborts on a wrong subgradient") {
  auto f = reg().get("abs_1d");
  f.subgradient = [](const Vec& x) -> Vec { return 3.0 * x; };
  try {
    trace_estimate(f, from_values({1.0}), 0.1, 1000, 1);
    FAIL("expected EstimationError");
  } catch (const EstimationError& e) {
    CHECK(e.sample().size() == 1);
  }
  CHECK_THROWS_AS(trace_estimate(reg().get("abs_1d"), from_values({1.0}), 0.0, 10, 1), ConfigError);
  CHECK_THROWS_AS(trace_estimate(reg().get("abs_1d"), from_values({1.0, 0.0}), 0.1, 10, 1), ConfigError);
}

TEST_CASE("serial and parallel trace estimates are bit-identical") {
  const auto f = reg().get("smooth_ridge_d2");
  const auto s = trace_estimate(f, from_values({0.2, 0.1}), 0.05, 30000, 8, Execution::serial);
  const auto p = trace_estimate(f, from_values({0.2, 0.1}), 0.05, 30000, 8, Execution::parallel);
  CHECK(s.mean == p.mean);
  CHECK(s.std_error == p.std_error);
}

TEST_CASE("linear map trace") {
  const auto q = reg().get("quadratic_identity_d2");
  CHECK(within(linear_map_trace(q, Vec::Zero(2), 2.0 * identity(2), 0.01, kN, 4), 4.0));
  CHECK(within(linear_map_trace(q, from_values({1.0, 1.0}), rotation(0.7), 0.01, kN, 5), 1.0));

  const auto f = reg().get("quadratic_d3");
  Mat S(3, 3);
  S << 1.0, 0.2, -0.4, 0.3, 0.9, 0.1, -0.2, 0.5, 1.3;
  const Mat A = f.hessian_density(Vec::Zero(3));
  const double expected = 0.5 * (S.transpose() * A * S).trace();
  CHECK(within(linear_map_trace(f, from_values({0.1, 0.0, -0.2}), S, 0.1, kN, 6), expected));

  Mat sing = Mat::Zero(2, 2);
  sing(0, 0) = 1.0;
  CHECK_THROWS_AS(linear_map_trace(q, Vec::Zero(2), sing, 0.1, 100, 1), ConfigError);
}

TEST_CASE("density transform law") {
  const std::vector<Vec> pts = {from_values({0.0, 0.0}), from_values({1.0, -0.5}), from_values({-2.0, 0.3})};
  Mat S(2, 2);
  S << 1.0, 2.0, 0.0, 1.0;
  CHECK(density_transform_check(reg().get("quadratic_aniso_d2"), S, pts) < 1e-12);
  CHECK(density_transform_check(reg().get("quadratic_aniso_d2"), identity(2), pts) == 0.0);
  Mat P(2, 2);
  P << 0.0, 1.0, 1.0, 0.0;
  CHECK(density_transform_check(reg().get("quartic_ridge_d2"), P, pts) <= 1e-12);
}

TEST_CASE("directional second derivative") {
  CHECK(within(directional_second_derivative(reg().get("quadratic_identity_d2"), from_values({0.3, 0.3}),
                                             unit(2, 0), 0.1, kN, 1),
               1.0));
  const auto f = reg().get("abs_x1_half_x2sq_d2");
  const Vec x = from_values({1.0, 0.0});
  CHECK(within(directional_second_derivative(f, x, unit(2, 1), 0.01, kN, 2), 1.0));
  CHECK(within(directional_second_derivative(f, x, unit(2, 0), 0.01, kN, 3), 0.0, 1e-6));

  const auto g = reg().get("quadratic_aniso_d2");
  const Vec v = from_values({0.6, -0.8});
  const Mat A = g.hessian_density(Vec::Zero(2));
  CHECK(within(directional_second_derivative(g, x, v, 0.1, kN, 4), v.dot(A * v)));
  CHECK_THROWS_AS(directional_second_derivative(g, x, from_values({1.0, 1.0}), 0.1, 10, 1), ConfigError);
}

TEST_CASE("Hessian by polarization") {
  const auto g = reg().get("quadratic_aniso_d2");
  const auto H = hessian_by_polarization(g, from_values({0.2, 0.4}), 0.05, kN, 7);
  const Mat A = g.hessian_density(Vec::Zero(2));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(std::abs(H.matrix(i, j) - A(i, j)) <= 3.0 * H.std_error(i, j) + 1e-12);

  const auto I = hessian_by_polarization(reg().get("quadratic_identity_d3"), Vec::Zero(3), 0.05, 50000, 1);
  CHECK((I.matrix - identity(3)).cwiseAbs().maxCoeff() <= 3.0 * I.std_error.maxCoeff() + 1e-12);

  const auto Z = hessian_by_polarization(reg().get("affine_d2"), Vec::Zero(2), 0.05, 50000, 1);
  CHECK(Z.matrix.cwiseAbs().maxCoeff() <= 1e-12);

  // diagonal shares the draws of the directional estimator
  const auto f = reg().get("smooth_ridge_d2");
  const auto P = hessian_by_polarization(f, from_values({0.1, 0.2}), 0.02, 20000, 3);
  for (int i = 0; i < 2; ++i) {
    const auto d = directional_second_derivative(f, from_values({0.1, 0.2}), unit(2, i), 0.02, 20000, 3);
    CHECK(P.matrix(i, i) == d.mean);
  }
}

TEST_CASE("Ito residual") {
  const auto q = reg().get("quadratic_d3");
  for (double t : {1.0, 0.01}) CHECK(ito_residual(q, from_values({0.5, 0.1, -1.0}), t, 20000, 1).mean <= 1e-12);

  const auto r = ito_residual(reg().get("power4_1d"), from_values({1.0}), 0.01, kN, 2);
  // (1/t) E|4W^3 + W^4| at t = 0.01, high-precision quadrature value
  CHECK(within(r, 0.638307648642292));

  const auto a = ito_residual(reg().get("abs_1d"), from_values({1.0}), 1e-4, kN, 3);
  CHECK(within(a, 0.0, 1e-12));

  auto no_q = reg().get("abs_1d");
  no_q.hessian_density = nullptr;
  try {
    ito_residual(no_q, from_values({1.0}), 0.1, 10, 1);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("hessian_by_polarization") != std::string::npos);
  }
  CHECK_NOTHROW(ito_residual(no_q, from_values({1.0}), 0.1, 10, 1, Mat::Zero(1, 1)));
}

TEST_CASE("residual curve rate") {
  const auto c = residual_curve(reg().get("power4_1d"), from_values({1.0}), dyadic_times(0.1, 1e-4), kN, 5);
  CHECK(c.points.size() == 10);
  const auto fit = residual_rate_fit(c);
  CHECK(fit.verdict == RateVerdict::decay);
  CHECK(fit.slope == Approx(0.5).margin(0.15));

  const auto z = residual_rate_fit(residual_curve(reg().get("quadratic_identity_d2"), Vec::Zero(2),
                                                  {0.1, 0.01, 0.001}, 10000, 1));
  CHECK(z.verdict == RateVerdict::identically_zero);
  CHECK(to_string(z.verdict) == "identically_zero");

  ResidualCurve syn;
  syn.function_id = "synthetic";
  syn.x = Vec::Zero(1);
  for (double t : dyadic_times(1.0, 1e-3)) syn.points.push_back({t, t, 0.0});
  const auto s = residual_rate_fit(syn);
  CHECK(s.slope == Approx(1.0).margin(1e-9));
  CHECK(s.points_used == 10);
}

TEST_CASE("residual curve validation") {
  ResidualCurve c;
  c.x = Vec::Zero(1);
  c.points = {{0.1, 1.0, 0.0}, {0.1, 0.5, 0.0}};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.points = {{0.1, 1.0, 0.0}, {0.05, std::nan(""), 0.0}};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.points = {{0.1, 1.0, 0.0}, {0.05, 0.5, 0.0}};
  CHECK_THROWS_AS(residual_rate_fit(c), ConfigError);  // too few points to fit
}

TEST_CASE("common random numbers across the curve") {
  const auto f = reg().get("power4_1d");
  const auto c = residual_curve(f, from_values({1.0}), {0.1, 0.01}, 5000, 9);
  CHECK(c.points[1].value == ito_residual(f, from_values({1.0}), 0.01, 5000, 9).mean);
}
