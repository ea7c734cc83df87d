#include <cmath>
#include <vector>

#include "doctest.h"
#include "slr/errors.hpp"
#include "slr/oracles.hpp"

using namespace slr;

TEST_SUITE("oracles") {

TEST_CASE("polynomial evaluation") {
  // 2 x0^2 x1 - 3 x1 + 0.5
  auto f = make_polynomial_oracle({2.0, -3.0, 0.5},
                                  {{2, 1}, {0, 1}, {0, 0}});
  CHECK(f->arity() == 2);
  std::vector<double> x{2.0, 3.0};
  CHECK(f->eval(x) == doctest::Approx(2.0 * 4.0 * 3.0 - 9.0 + 0.5));
  CHECK(f->registry_name() == "polynomial");
}

TEST_CASE("sum of sines evaluation") {
  std::vector<SineTerm> terms{{2.0, {1.0, 0.5}, 0.25}, {-0.5, {3.0, 0.0}, 0.0}};
  auto f = make_sum_of_sines_oracle(terms);
  CHECK(f->arity() == 2);
  std::vector<double> x{0.7, -0.2};
  const double expect =
      2.0 * std::sin(0.7 - 0.1 + 0.25) - 0.5 * std::sin(2.1);
  CHECK(f->eval(x) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("registry round trip rebuilds equivalent oracles") {
  auto& reg = OracleRegistry::global();
  for (const char* name : {"polynomial", "sum-of-sines", "gas-pipe",
                           "bilevel-phi", "bilevel-quadratic"}) {
    CHECK(reg.contains(name));
  }

  auto f = make_polynomial_oracle({1.5, -2.0}, {{3}, {1}});
  auto g = reg.create(f->registry_name(), f->params_json());
  REQUIRE(g != nullptr);
  for (double t : {-1.0, -0.3, 0.0, 0.8, 2.0}) {
    std::vector<double> x{t};
    CHECK(f->eval(x) == doctest::Approx(g->eval(x)).epsilon(1e-14));
  }

  std::vector<SineTerm> terms{{0.7, {2.0, -1.0}, 1.1}};
  auto s = make_sum_of_sines_oracle(terms);
  auto s2 = reg.create(s->registry_name(), s->params_json());
  std::vector<double> x{0.4, 0.9};
  CHECK(s->eval(x) == doctest::Approx(s2->eval(x)).epsilon(1e-14));
}

TEST_CASE("unknown registry name throws") {
  auto& reg = OracleRegistry::global();
  CHECK(!reg.contains("no-such-oracle"));
  CHECK_THROWS_AS(reg.create("no-such-oracle", "{}"), Error);
}

}  // TEST_SUITE
