#pragma once

#include <array>
#include <cmath>
#include <limits>

namespace gefit::quad {

struct GaussRule {
  std::array<double, 64> node;
  std::array<double, 64> weight;
};

/// 64-point Gauss-Legendre rule on [-1, 1]; nodes by Newton iteration on the
/// Legendre recurrence, computed once.
inline const GaussRule& gauss64_rule() {
  static const GaussRule rule = [] {
    GaussRule r{};
    constexpr int n = 64;
    for (int i = 0; i < (n + 1) / 2; ++i) {
      double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      double deriv = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0;
        double p1 = 0.0;
        for (int j = 0; j < n; ++j) {
          const double p2 = p1;
          p1 = p0;
          p0 = ((2 * j + 1) * x * p1 - j * p2) / (j + 1);
        }
        deriv = n * (x * p0 - p1) / (x * x - 1.0);
        const double dx = p0 / deriv;
        x -= dx;
        if (std::abs(dx) < 1e-15) break;
      }
      r.node[i] = -x;
      r.node[n - 1 - i] = x;
      const double w = 2.0 / ((1.0 - x * x) * deriv * deriv);
      r.weight[i] = w;
      r.weight[n - 1 - i] = w;
    }
    return r;
  }();
  return rule;
}

/// Single-panel 64-point Gauss-Legendre on (lo, hi).
template <class F>
double gauss64(F&& f, double lo, double hi) {
  const GaussRule& r = gauss64_rule();
  const double h = 0.5 * (hi - lo);
  const double c = 0.5 * (hi + lo);
  double acc = 0.0;
  for (int i = 0; i < 64; ++i) {
    acc += r.weight[i] * f(c + h * r.node[i]);
  }
  return acc * h;
}

/// Integral of f over (0, width] with panels shrinking geometrically toward
/// zero. Handles integrable endpoint singularities and branch points at the
/// origin; the caller passes the offset from the singular endpoint so the
/// small coordinate is never formed by subtraction. Panels accumulate from
/// the wide end and stop once two consecutive contributions fall below the
/// rounding floor of the running sum.
template <class F>
double graded_toward_zero(F&& f, double width, int max_panels = 200) {
  constexpr double kRatio = 0.15;
  double acc = 0.0;
  double hi = width;
  int quiet = 0;
  for (int j = 0; j < max_panels && hi > 1e-306; ++j) {
    const double lo = hi * kRatio;
    const double part = gauss64(f, lo, hi);
    acc += part;
    if (j > 0 && std::abs(part) <=
                     0.25 * std::numeric_limits<double>::epsilon() * std::abs(acc)) {
      if (++quiet >= 2) break;
    } else {
      quiet = 0;
    }
    hi = lo;
  }
  return acc;
}

}  // namespace gefit::quad
