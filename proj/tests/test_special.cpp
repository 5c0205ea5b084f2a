#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gefit/quadrature.hpp"
#include "gefit/special.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("digamma matches reference values") {
  CHECK_THAT(gefit::digamma(1.0), WithinRel(-0.57721566490153286, 1e-13));
  CHECK_THAT(gefit::digamma(2.5), WithinRel(0.70315664064524319, 1e-13));
  CHECK_THAT(gefit::digamma(0.1), WithinRel(-10.423754940411077, 1e-13));
  CHECK_THAT(gefit::digamma(7.3), WithinRel(1.9178203356379861, 1e-13));
  CHECK_THAT(gefit::digamma(42.0), WithinRel(3.7257176179372822, 1e-13));
  CHECK_THROWS_AS(gefit::digamma(0.0), std::domain_error);
  CHECK_THROWS_AS(gefit::digamma(-2.0), std::domain_error);
}

TEST_CASE("log1mexp is continuous and accurate across the branch") {
  for (double t : {1e-8, 0.1, 0.6, 0.7, 0.75, 3.0, 40.0}) {
    const double naive = std::log1p(-std::exp(-t));
    CHECK_THAT(gefit::log1mexp(t), WithinRel(naive, 1e-12));
  }
  // near zero the direct form loses all digits; expm1 keeps them
  CHECK_THAT(gefit::log1mexp(1e-12), WithinRel(std::log(1e-12), 1e-9));
}

TEST_CASE("Gauss-Legendre 64 rule") {
  const auto& r = gefit::quad::gauss64_rule();
  double wsum = 0.0;
  for (double w : r.weight) wsum += w;
  CHECK_THAT(wsum, WithinAbs(2.0, 1e-14));

  // exact through polynomial degree 127
  const double p127 = gefit::quad::gauss64([](double x) { return std::pow(x, 127.0); },
                                           0.0, 1.0);
  CHECK_THAT(p127, WithinRel(1.0 / 128.0, 1e-13));

  const double ex = gefit::quad::gauss64([](double x) { return std::exp(x); },
                                         0.0, 1.0);
  CHECK_THAT(ex, WithinRel(std::exp(1.0) - 1.0, 1e-15));
}

TEST_CASE("graded panels handle endpoint singularities") {
  const double lg = gefit::quad::graded_toward_zero(
      [](double x) { return std::log(x); }, 1.0);
  CHECK_THAT(lg, WithinAbs(-1.0, 1e-13));

  const double sq = gefit::quad::graded_toward_zero(
      [](double x) { return 1.0 / std::sqrt(x); }, 1.0);
  CHECK_THAT(sq, WithinRel(2.0, 1e-13));

  const double cube = gefit::quad::graded_toward_zero(
      [](double x) { return std::pow(x, 0.2); }, 2.0);
  CHECK_THAT(cube, WithinRel(std::pow(2.0, 1.2) / 1.2, 1e-13));
}
