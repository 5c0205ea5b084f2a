#pragma once

#include <cmath>
#include <stdexcept>

namespace gefit {

inline constexpr double kEulerGamma = 0.57721566490153286;

/// Digamma function for x > 0: recurrence up to x >= 10, then the
/// asymptotic (Bernoulli) series. Accurate to ~1e-14 over the range
/// used here.
inline double digamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw std::domain_error("digamma: requires finite x > 0");
  }
  double acc = 0.0;
  while (x < 10.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // ln x - 1/(2x) - 1/(12x^2) + 1/(120x^4) - 1/(252x^6) + 1/(240x^8)
  //      - 1/(132x^10) + 691/(32760x^12)
  const double series =
      std::log(x) - 0.5 * inv -
      inv2 * (1.0 / 12.0 -
              inv2 * (1.0 / 120.0 -
                      inv2 * (1.0 / 252.0 -
                              inv2 * (1.0 / 240.0 -
                                      inv2 * (1.0 / 132.0 -
                                              inv2 * (691.0 / 32760.0))))));
  return acc + series;
}

/// log(1 - exp(-t)) for t > 0 without cancellation on either side.
inline double log1mexp(double t) {
  return (t > 0.6931471805599453) ? std::log1p(-std::exp(-t))
                                  : std::log(-std::expm1(-t));
}

}  // namespace gefit
