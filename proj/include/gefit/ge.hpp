#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "gefit/rng.hpp"
#include "gefit/special.hpp"

namespace gefit {

/// Shape/rate parameter pair of the generalized exponential distribution,
/// cdf (1 - exp(-lambda x))^alpha on x >= 0.
struct GeParams {
  double alpha;
  double lambda;

  GeParams(double a, double l) : alpha(a), lambda(l) {
    if (!std::isfinite(a) || !(a > 0.0) || !std::isfinite(l) || !(l > 0.0)) {
      throw std::invalid_argument(
          "GeParams: alpha and lambda must be positive and finite");
    }
  }
};

/// log(1 - exp(-lambda x)) for x > 0; the transform whose conditional means
/// drive the shape update.
inline double log_w(const GeParams& p, double x) {
  return log1mexp(p.lambda * x);
}

inline double cdf(const GeParams& p, double x) {
  if (x <= 0.0) return 0.0;
  return std::exp(p.alpha * log_w(p, x));
}

inline double survival(const GeParams& p, double x) {
  if (x <= 0.0) return 1.0;
  return -std::expm1(p.alpha * log_w(p, x));
}

inline double log_pdf(const GeParams& p, double x) {
  if (!(x > 0.0)) throw std::domain_error("log_pdf: requires x > 0");
  return std::log(p.alpha) + std::log(p.lambda) +
         (p.alpha - 1.0) * log_w(p, x) - p.lambda * x;
}

inline double pdf(const GeParams& p, double x) {
  return std::exp(log_pdf(p, x));
}

/// Inverse cdf: -log(1 - v^(1/alpha)) / lambda for v in (0, 1).
inline double quantile(const GeParams& p, double v) {
  if (!(v > 0.0) || !(v < 1.0)) {
    throw std::domain_error("quantile: requires v in (0, 1)");
  }
  const double log_y = std::log(v) / p.alpha;          // log v^(1/alpha)
  return -std::log(-std::expm1(log_y)) / p.lambda;
}

/// E[T] = (digamma(alpha + 1) - digamma(1)) / lambda.
inline double mean(const GeParams& p) {
  return (digamma(p.alpha + 1.0) + kEulerGamma) / p.lambda;
}

/// Inverse-transform sampling; deterministic for a given stream state.
inline std::vector<double> sample(const GeParams& p, RngStream& rng,
                                  std::size_t count) {
  if (count == 0) throw std::invalid_argument("sample: count must be >= 1");
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(quantile(p, rng.uniform01()));
  }
  return out;
}

}  // namespace gefit
