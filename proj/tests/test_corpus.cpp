#include "convexito/corpus.hpp"
#include "convexito/errors.hpp"

#include <catch_amalgamated.hpp>

#include <sstream>

using namespace cvx;

TEST_CASE("builtin registry holds the documented ids") {
  const auto reg = Registry::builtin();
  for (const char* id : {"quadratic_identity_d1", "quadratic_identity_d2", "quadratic_identity_d3", "abs_1d",
                         "norm_d2", "power4_1d", "relu_1d", "max_affine_d2", "abs_x1_half_x2sq_d2",
                         "quartic_ridge_d2", "smooth_ridge_d2", "affine_d2"})
    CHECK(reg.contains(id));
  CHECK(reg.get("power4_1d")(from_values({2.0})) == 16.0);
}

TEST_CASE("unknown ids list the registry") {
  const auto reg = Registry::builtin();
  try {
    reg.get("nope");
    FAIL("expected an exception");
  } catch (const UnknownFunctionError& e) {
    CHECK(std::string(e.what()).find("abs_1d") != std::string::npos);
    CHECK(!e.known_ids().empty());
  }
}

TEST_CASE("INI corpus files add functions") {
  std::istringstream in(R"([my_quad]
family = quadratic
A = 2, 0; 0, 1
b = 1, 0
c = 3

[my_ridge]
family = sum_of_pieces
dim = 2
piece1 = kind=abs scale=2 dir=1,0 shift=0.5
piece2 = kind=square scale=1 dir=0,1
)");
  auto reg = Registry::builtin();
  reg.load_ini(in);
  const auto q = reg.get("my_quad");
  CHECK(q(from_values({1.0, 2.0})) == Catch::Approx(1.0 + 2.0 + 1.0 + 3.0));
  const auto r = reg.get("my_ridge");
  CHECK(r(from_values({1.5, 1.0})) == Catch::Approx(2.0 + 0.5));
}

TEST_CASE("malformed descriptors are rejected") {
  auto reg = Registry::builtin();
  std::istringstream bad_family("[x]\nfamily = cubic\n");
  CHECK_THROWS_AS(reg.load_ini(bad_family), ConfigError);
  std::istringstream not_psd("[x]\nfamily = quadratic\nA = 1, 0; 0, -1\n");
  CHECK_THROWS_AS(reg.load_ini(not_psd), ConfigError);
  std::istringstream bad_number("[x]\nfamily = quadratic\nA = 1, zz\n");
  CHECK_THROWS_AS(reg.load_ini(bad_number), ConfigError);
  CHECK_THROWS_AS(reg.load_ini_file("/nonexistent/corpus.ini"), ConfigError);
}
