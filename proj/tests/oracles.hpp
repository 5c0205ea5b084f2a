#pragma once

// Test-only oracles, kept independent of the library's expectation engine:
// adaptive composite Gauss-Legendre, rejection-sampled conditioned Monte
// Carlo means, a grid+refine likelihood maximizer, and stencil derivatives.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gefit/gefit.hpp"

namespace oracles {

namespace detail {

template <class F>
double adaptive_rec(F& f, double lo, double hi, double whole, double rel_tol,
                    int depth) {
  const double mid = 0.5 * (lo + hi);
  const double left = gefit::quad::gauss64(f, lo, mid);
  const double right = gefit::quad::gauss64(f, mid, hi);
  const double both = left + right;
  if (depth <= 0 ||
      std::abs(both - whole) <= rel_tol * std::abs(both) + 1e-300) {
    return both;
  }
  return adaptive_rec(f, lo, mid, left, rel_tol, depth - 1) +
         adaptive_rec(f, mid, hi, right, rel_tol, depth - 1);
}

}  // namespace detail

/// Adaptive bisected Gauss-Legendre; handles integrable endpoint
/// singularities by grading automatically.
template <class F>
double adaptive_gl(F&& f, double lo, double hi, double rel_tol = 1e-13,
                   int depth = 52) {
  const double whole = gefit::quad::gauss64(f, lo, hi);
  return detail::adaptive_rec(f, lo, hi, whole, rel_tol, depth);
}

struct McMean {
  double mean;
  double stderr_;
  long long accepted;
};

/// Mean of GE draws conditioned on (a, b] (b = +inf for the tail), by
/// rejection from plain inverse-transform samples.
inline McMean conditioned_mc_mean(const gefit::GeParams& p, double a, double b,
                                  long long total_draws, std::uint64_t seed) {
  gefit::RngStream rng(seed);
  double sum = 0.0, sumsq = 0.0;
  long long kept = 0;
  for (long long i = 0; i < total_draws; ++i) {
    const double t = gefit::quantile(p, rng.uniform01());
    if (t > a && t <= b) {
      sum += t;
      sumsq += t * t;
      ++kept;
    }
  }
  if (kept < 100) throw std::runtime_error("conditioned_mc_mean: too few hits");
  const double m = sum / kept;
  const double var = sumsq / kept - m * m;
  return {m, std::sqrt(var / kept), kept};
}

/// Grid search over (log alpha, log lambda) followed by shrinking local
/// refinement; independent of the Newton path in fit_ml.
inline std::pair<double, double> grid_ml(const gefit::IntervalDataset& data,
                                         const gefit::InspectionSchedule& sched,
                                         double alpha_lo = 0.1,
                                         double alpha_hi = 10.0,
                                         double lambda_lo = 0.001,
                                         double lambda_hi = 1.0) {
  auto ll = [&](double u, double v) {
    return gefit::log_likelihood(gefit::GeParams(std::exp(u), std::exp(v)),
                                 data, sched);
  };
  const double ulo = std::log(alpha_lo), uhi = std::log(alpha_hi);
  const double vlo = std::log(lambda_lo), vhi = std::log(lambda_hi);
  double best_u = 0, best_v = 0, best = -1e308;
  const int n0 = 80;
  for (int i = 0; i <= n0; ++i) {
    for (int j = 0; j <= n0; ++j) {
      const double u = ulo + (uhi - ulo) * i / n0;
      const double v = vlo + (vhi - vlo) * j / n0;
      const double val = ll(u, v);
      if (val > best) {
        best = val;
        best_u = u;
        best_v = v;
      }
    }
  }
  double span_u = (uhi - ulo) / n0;
  double span_v = (vhi - vlo) / n0;
  for (int round = 0; round < 18; ++round) {
    double cu = best_u, cv = best_v;
    for (int i = -4; i <= 4; ++i) {
      for (int j = -4; j <= 4; ++j) {
        const double u = cu + span_u * i / 4.0;
        const double v = cv + span_v * j / 4.0;
        const double val = ll(u, v);
        if (val > best) {
          best = val;
          best_u = u;
          best_v = v;
        }
      }
    }
    span_u *= 0.4;
    span_v *= 0.4;
  }
  return {std::exp(best_u), std::exp(best_v)};
}

/// Five-point central stencil, O(h^4) truncation.
inline double stencil5(const std::function<double(double)>& f, double x,
                       double h) {
  return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) /
         (12 * h);
}

}  // namespace oracles
