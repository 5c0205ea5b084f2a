#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "gefit/censoring.hpp"
#include "gefit/ge.hpp"
#include "gefit/quadrature.hpp"

namespace gefit {

/// Raised when a truncated expectation is requested on an interval or tail
/// whose probability mass is numerically zero (< 1e-300). Callers weighting
/// terms by zero counts must skip the call instead.
struct EmptyIntervalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline constexpr double kMinMass = 1e-300;

// All truncated moments are integrated in the cdf domain v = F(u): the
// conditional law of V given an interval is uniform, so conditional means
// become plain averages of g(quantile(v)). The only delicate points are the
// branch point of v^(1/alpha) at v = 0 and the loss of resolution of v near
// 1; the former is handled by panels graded toward the nearby endpoint, the
// latter by switching to the survival coordinate xi = 1 - v.

// time at cdf position v, from log v
inline double time_from_logv(const GeParams& p, double logv) {
  return -std::log(-std::expm1(logv / p.alpha)) / p.lambda;
}

// t * exp(-lambda t) / (1 - exp(-lambda t)) at cdf position v
inline double time_ratio_from_logv(const GeParams& p, double logv) {
  const double log_y = logv / p.alpha;
  const double y = std::exp(log_y);
  if (y < 1e-280) return 1.0 / p.lambda;  // limit of the ratio as t -> 0
  const double one_minus_y = -std::expm1(log_y);
  const double t = -std::log(one_minus_y) / p.lambda;
  return t * one_minus_y / y;
}

// weighted mean of f over one Gauss-Legendre panel (exact unit weight sum)
template <class F>
double panel_mean(F&& f, double lo, double hi) {
  const quad::GaussRule& r = quad::gauss64_rule();
  const double h = 0.5 * (hi - lo);
  const double c = 0.5 * (hi + lo);
  double num = 0.0;
  for (int i = 0; i < 64; ++i) num += r.weight[i] * f(c + h * r.node[i]);
  return num / 2.0;
}

// mean of f(offset) over offset in (0, width], panels graded toward zero;
// numerator and weight mass accumulate together so the result stays a convex
// combination of node values even when the panel loop terminates early
template <class F>
double graded_mean(F&& f, double width, int max_panels = 200) {
  const quad::GaussRule& r = quad::gauss64_rule();
  constexpr double kRatio = 0.15;
  double num = 0.0;
  double den = 0.0;
  double hi = width;
  int quiet = 0;
  for (int j = 0; j < max_panels && hi > 1e-306; ++j) {
    const double lo = hi * kRatio;
    const double h = 0.5 * (hi - lo);
    const double c = 0.5 * (hi + lo);
    double part = 0.0;
    for (int i = 0; i < 64; ++i) part += r.weight[i] * f(c + h * r.node[i]);
    num += part * h;
    den += 2.0 * h;
    if (j > 0 && std::abs(part * h) <= 1e-17 * std::abs(num)) {
      if (++quiet >= 2) break;
    } else {
      quiet = 0;
    }
    hi = lo;
  }
  return num / den;
}

// conditional mean of g(quantile(v)) over (a, b], g selected by Integrand
template <class Integrand>
double interval_mean(const GeParams& p, double a, double b, Integrand&& g) {
  if (!(a >= 0.0) || !(b > a)) {
    throw std::invalid_argument("interval expectation: requires 0 <= a < b");
  }
  const double va = cdf(p, a);
  const double vb = cdf(p, b);
  if (!(vb - va >= kMinMass)) {
    throw EmptyIntervalError("empty interval: no probability mass in (" +
                             std::to_string(a) + ", " + std::to_string(b) + "]");
  }
  if (0.5 * (va + vb) <= 0.5) {
    // body: integrate in v directly; grade toward va if the branch point at
    // v = 0 sits close to the panel
    const double width = vb - va;
    if (va < width / 16.0) {
      return graded_mean([&](double d) { return g(p, std::log(va + d)); },
                         width);
    }
    return panel_mean([&](double v) { return g(p, std::log(v)); }, va, vb);
  }
  // tail side: integrate in xi = 1 - v, where log v = log1p(-xi) is exact
  const double xa = survival(p, a);
  const double xb = survival(p, b);
  if (va < (xa - xb) / 16.0) {
    return graded_mean(
        [&](double d) { return g(p, std::log1p(-(xa - d))); }, xa - xb);
  }
  return panel_mean([&](double xi) { return g(p, std::log1p(-xi)); }, xb, xa);
}

}  // namespace detail

/// E[T | T in (a, b]] at the given parameters (the failures' conditional
/// mean). Gauss-Legendre in the cdf domain.
inline double truncated_mean(const GeParams& p, double a, double b) {
  return detail::interval_mean(p, a, b, detail::time_from_logv);
}

/// E[T exp(-lambda T)/(1 - exp(-lambda T)) | T in (a, b]].
inline double truncated_mean_time_ratio(const GeParams& p, double a, double b) {
  return detail::interval_mean(p, a, b, detail::time_ratio_from_logv);
}

/// E[log(1 - exp(-lambda T)) | T in (a, b]], in closed form: with
/// w = 1 - exp(-lambda t) the antiderivative of log(w) d(w^alpha) is
/// G(w) = w^alpha (log w - 1/alpha).
inline double truncated_mean_logw(const GeParams& p, double a, double b) {
  if (!(a >= 0.0) || !(b > a)) {
    throw std::invalid_argument("truncated_mean_logw: requires 0 <= a < b");
  }
  const double va = cdf(p, a);
  const double vb = cdf(p, b);
  const double mass = vb - va;
  if (!(mass >= detail::kMinMass)) {
    throw EmptyIntervalError("empty interval: no probability mass in (" +
                             std::to_string(a) + ", " + std::to_string(b) + "]");
  }
  auto G = [&](double t) {
    if (t <= 0.0) return 0.0;
    const double lw = log_w(p, t);
    return std::exp(p.alpha * lw) * (lw - 1.0 / p.alpha);
  };
  return (G(b) - G(a)) / mass;
}

/// E[T | T >= a]. Written as a + integral of the survival function over the
/// tail; the quantile substitution maps that onto the finite cdf domain
/// (F(a), 1), where the integrand (1 - v) / f(quantile(v)) is regular at
/// v = 1. Graded panels take over when F(a) is small enough that the branch
/// point at v = 0 crowds the panel.
inline double tail_mean(const GeParams& p, double a) {
  if (!(a >= 0.0)) throw std::invalid_argument("tail_mean: requires a >= 0");
  const double sa = survival(p, a);
  if (!(sa >= detail::kMinMass)) {
    throw EmptyIntervalError("empty tail: no probability mass beyond " +
                             std::to_string(a));
  }
  const double w = cdf(p, a);
  auto surv_over_density = [&](double xi, double logv) {
    // (1 - v) / f(quantile(v)) with f = alpha lambda y^(alpha-1) (1 - y)
    const double log_y = logv / p.alpha;
    const double one_minus_y = -std::expm1(log_y);
    const double density =
        p.alpha * p.lambda * std::exp((p.alpha - 1.0) * log_y) * one_minus_y;
    return xi / density;
  };
  double integral;
  if (w >= sa / 16.0) {
    integral = quad::gauss64(
        [&](double xi) { return surv_over_density(xi, std::log1p(-xi)); }, 0.0,
        sa);
  } else {
    integral = quad::graded_toward_zero(
        [&](double d) {
          const double xi = sa - d;
          const double logv = d < 0.5 * sa ? std::log(w + d) : std::log1p(-xi);
          return surv_over_density(xi, logv);
        },
        sa);
  }
  return a + integral / sa;
}

/// E[log(1 - exp(-lambda T)) | T >= a], closed form. The numerator is
/// arranged as -S/alpha - w^alpha log w to avoid cancellation deep in the
/// tail where both -1/alpha and G(w) coincide.
inline double tail_mean_logw(const GeParams& p, double a) {
  if (!(a >= 0.0)) {
    throw std::invalid_argument("tail_mean_logw: requires a >= 0");
  }
  if (a == 0.0) return -1.0 / p.alpha;
  const double sa = survival(p, a);
  if (!(sa >= detail::kMinMass)) {
    throw EmptyIntervalError("empty tail: no probability mass beyond " +
                             std::to_string(a));
  }
  const double lw = log_w(p, a);
  const double numerator = -sa / p.alpha - std::exp(p.alpha * lw) * lw;
  return numerator / sa;
}

/// E[T exp(-lambda T)/(1 - exp(-lambda T)) | T >= a]. The integrand behaves
/// like xi log xi at v = 1, so the upper half is always graded toward v = 1.
inline double tail_mean_time_ratio(const GeParams& p, double a) {
  if (!(a >= 0.0)) {
    throw std::invalid_argument("tail_mean_time_ratio: requires a >= 0");
  }
  const double sa = survival(p, a);
  if (!(sa >= detail::kMinMass)) {
    throw EmptyIntervalError("empty tail: no probability mass beyond " +
                             std::to_string(a));
  }
  const double w = cdf(p, a);
  const double half = 0.5 * sa;
  const double upper = quad::graded_toward_zero(
      [&](double xi) {
        return detail::time_ratio_from_logv(p, std::log1p(-xi));
      },
      half);
  auto lower_integrand = [&](double d) {
    return detail::time_ratio_from_logv(p, std::log(w + d));
  };
  const double lower = (w >= half / 16.0)
                           ? quad::gauss64(lower_integrand, 0.0, half)
                           : quad::graded_toward_zero(lower_integrand, half);
  return (upper + lower) / sa;
}

/// The four conditional expectations of one inspection interval: the mean
/// time and mean log-transform for failures inside (t_{i-1}, t_i], and for
/// survivors withdrawn at t_i (conditioned on T >= t_i).
struct IntervalExpectations {
  std::size_t index;        // 0-based interval index
  double mean_time_in;      // E[T | T in (t_{i-1}, t_i]]
  double mean_logw_in;      // E[log(1 - e^{-lambda T}) | ...], < 0
  double mean_time_beyond;  // E[T | T >= t_i]
  double mean_logw_beyond;  // E[log(1 - e^{-lambda T}) | T >= t_i], < 0
};

inline std::vector<IntervalExpectations> expectation_table(
    const GeParams& p, const InspectionSchedule& schedule) {
  std::vector<IntervalExpectations> rows;
  rows.reserve(schedule.size());
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const double lo = schedule.lower(i);
    const double hi = schedule.upper(i);
    try {
      rows.push_back({i, truncated_mean(p, lo, hi),
                      truncated_mean_logw(p, lo, hi), tail_mean(p, hi),
                      tail_mean_logw(p, hi)});
    } catch (const EmptyIntervalError& e) {
      throw EmptyIntervalError(std::string(e.what()) + " (interval " +
                               std::to_string(i + 1) + ")");
    }
  }
  return rows;
}

}  // namespace gefit
