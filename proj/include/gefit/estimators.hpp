#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gefit/censoring.hpp"
#include "gefit/estep.hpp"
#include "gefit/ge.hpp"

#include "json.hpp"

namespace gefit {

/// Shared fitting configuration: the starting point, the stopping tolerance
/// max(|d alpha|, |d lambda|) <= tol, and the iteration cap.
struct EmConfig {
  GeParams start{1.0, 0.5};
  double tol = 1e-6;
  int max_iter = 101;
};

struct FitResult {
  std::string method;
  GeParams params;
  int iterations = 0;
  bool converged = false;
  double loglik = 0.0;
  std::vector<std::pair<double, double>> trace;  // (alpha, lambda) per iterate
  std::string note;                              // diagnostic when not converged
};

namespace detail {

inline void check_lengths(const IntervalDataset& data,
                          const InspectionSchedule& schedule) {
  if (data.size() != schedule.size()) {
    throw std::invalid_argument("dataset and schedule lengths differ");
  }
}

inline void check_config(const EmConfig& config) {
  if (!(config.tol > 0.0) || config.max_iter < 1) {
    throw std::invalid_argument("EmConfig: tol > 0 and max_iter >= 1 required");
  }
}

}  // namespace detail

/// Observed-data log-likelihood: sum x_i log[F(t_i) - F(t_{i-1})] +
/// r_i log[1 - F(t_i)]. Zero-count terms contribute nothing even when their
/// log argument underflows; a positive count on zero mass yields -inf (the
/// impossible-data signal).
inline double log_likelihood(const GeParams& p, const IntervalDataset& data,
                             const InspectionSchedule& schedule) {
  detail::check_lengths(data, schedule);
  double ll = 0.0;
  double surv_prev = 1.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double surv = survival(p, schedule.upper(i));
    const double mass = surv_prev - surv;
    if (data.failures[i] > 0) {
      if (!(mass > 0.0)) return -std::numeric_limits<double>::infinity();
      ll += static_cast<double>(data.failures[i]) * std::log(mass);
    }
    if (data.removals[i] > 0) {
      if (!(surv > 0.0)) return -std::numeric_limits<double>::infinity();
      ll += static_cast<double>(data.removals[i]) * std::log(surv);
    }
    surv_prev = surv;
  }
  return ll;
}

namespace detail {

struct ScoreEval {
  double ll;
  double d_log_alpha;
  double d_log_lambda;
};

/// Log-likelihood with its analytic gradient in (log alpha, log lambda).
inline ScoreEval loglik_with_gradient(const GeParams& p,
                                      const IntervalDataset& data,
                                      const InspectionSchedule& schedule) {
  check_lengths(data, schedule);
  double ll = 0.0, ga = 0.0, gl = 0.0;
  double surv_prev = 1.0, dFa_prev = 0.0, dFl_prev = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double t = schedule.upper(i);
    const double lw = log_w(p, t);
    const double F = std::exp(p.alpha * lw);
    const double surv = -std::expm1(p.alpha * lw);
    const double dFa = F * lw;  // dF/d alpha
    const double dFl =
        p.alpha * std::exp((p.alpha - 1.0) * lw) * std::exp(-p.lambda * t) * t;
    if (data.failures[i] > 0) {
      const double mass = surv_prev - surv;
      if (!(mass > 0.0)) {
        return {-std::numeric_limits<double>::infinity(), 0.0, 0.0};
      }
      const double c = static_cast<double>(data.failures[i]);
      ll += c * std::log(mass);
      ga += c * (dFa - dFa_prev) / mass;
      gl += c * (dFl - dFl_prev) / mass;
    }
    if (data.removals[i] > 0) {
      if (!(surv > 0.0)) {
        return {-std::numeric_limits<double>::infinity(), 0.0, 0.0};
      }
      const double c = static_cast<double>(data.removals[i]);
      ll += c * std::log(surv);
      ga -= c * dFa / surv;
      gl -= c * dFl / surv;
    }
    surv_prev = surv;
    dFa_prev = dFa;
    dFl_prev = dFl;
  }
  return {ll, ga * p.alpha, gl * p.lambda};
}

struct EstepSums {
  double time;      // sum x_i E[T | interval] + r_i E[T | tail]
  double logw;      // same for E[log(1 - e^{-lambda T})], < 0
  double n;
};

inline EstepSums estep_sums(const GeParams& theta_t, const IntervalDataset& data,
                            const InspectionSchedule& schedule) {
  check_lengths(data, schedule);
  EstepSums s{0.0, 0.0, static_cast<double>(data.n)};
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double lo = schedule.lower(i);
    const double hi = schedule.upper(i);
    if (data.failures[i] > 0) {
      const double c = static_cast<double>(data.failures[i]);
      s.time += c * truncated_mean(theta_t, lo, hi);
      s.logw += c * truncated_mean_logw(theta_t, lo, hi);
    }
    if (data.removals[i] > 0) {
      const double c = static_cast<double>(data.removals[i]);
      s.time += c * tail_mean(theta_t, hi);
      s.logw += c * tail_mean_logw(theta_t, hi);
    }
  }
  return s;
}

// the extra sum of the reconstructed competitor update:
// sum x_i E[T e^{-lambda T}/(1 - e^{-lambda T}) | interval] + tail analogue
inline double time_ratio_sum(const GeParams& theta_t, const IntervalDataset& data,
                             const InspectionSchedule& schedule) {
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.failures[i] > 0) {
      s += static_cast<double>(data.failures[i]) *
           truncated_mean_time_ratio(theta_t, schedule.lower(i),
                                     schedule.upper(i));
    }
    if (data.removals[i] > 0) {
      s += static_cast<double>(data.removals[i]) *
           tail_mean_time_ratio(theta_t, schedule.upper(i));
    }
  }
  return s;
}

}  // namespace detail

/// One EM update: alpha <- -n / sum(x E_logw_in + r E_logw_beyond) and
/// lambda <- n / sum(x E_time_in + r E_time_beyond), expectations at theta_t.
/// Both outputs are strictly positive: the log-transform means are negative
/// and the time means positive.
inline GeParams em_step(const GeParams& theta_t, const IntervalDataset& data,
                        const InspectionSchedule& schedule) {
  const detail::EstepSums s = detail::estep_sums(theta_t, data, schedule);
  if (!(s.logw < 0.0) || !(s.time > 0.0)) {
    throw std::runtime_error("em_step: expectation sums lost their sign");
  }
  return GeParams(-s.n / s.logw, s.n / s.time);
}

namespace detail {

/// The reconstructed competitor update: same alpha update; the lambda
/// denominator keeps the (alpha - 1) term of the expected complete-data
/// score and can fail to be positive, in which case nothing is returned.
inline std::optional<GeParams> chen_step(const GeParams& theta_t,
                                         const IntervalDataset& data,
                                         const InspectionSchedule& schedule) {
  const EstepSums s = estep_sums(theta_t, data, schedule);
  if (!(s.logw < 0.0) || !(s.time > 0.0)) {
    throw std::runtime_error("chen_step: expectation sums lost their sign");
  }
  const double ratio = time_ratio_sum(theta_t, data, schedule);
  const double denom = s.time - (theta_t.alpha - 1.0) * ratio;
  if (!(denom > 0.0)) return std::nullopt;
  return GeParams(-s.n / s.logw, s.n / denom);
}

template <class Step>
FitResult iterate_em(const char* method, const IntervalDataset& data,
                     const InspectionSchedule& schedule, const EmConfig& config,
                     Step&& step) {
  check_config(config);
  FitResult res{method, config.start};
  res.trace.emplace_back(config.start.alpha, config.start.lambda);
  GeParams theta = config.start;
  for (int t = 0; t < config.max_iter; ++t) {
    std::optional<GeParams> next = step(theta);
    if (!next) {
      res.note = "rate update denominator not positive at iteration " +
                 std::to_string(t + 1);
      break;
    }
    const double delta =
        std::max(std::abs(next->alpha - theta.alpha),
                 std::abs(next->lambda - theta.lambda));
    theta = *next;
    res.trace.emplace_back(theta.alpha, theta.lambda);
    ++res.iterations;
    if (delta <= config.tol) {
      res.converged = true;
      break;
    }
  }
  res.params = theta;
  res.loglik = log_likelihood(theta, data, schedule);
  if (!res.converged && res.note.empty()) {
    res.note = "stopping criterion not met within max_iter";
  }
  return res;
}

}  // namespace detail

/// Iterates em_step from config.start until max(|d alpha|, |d lambda|) <= tol
/// or the iteration cap is reached.
inline FitResult fit_em(const IntervalDataset& data,
                        const InspectionSchedule& schedule,
                        const EmConfig& config = {}) {
  return detail::iterate_em("em", data, schedule, config,
                            [&](const GeParams& th) {
                              return std::optional<GeParams>(
                                  em_step(th, data, schedule));
                            });
}

/// Same loop with the reconstructed competitor update. A non-positive rate
/// denominator ends the fit with converged = false and a diagnostic note.
inline FitResult fit_em_chen(const IntervalDataset& data,
                             const InspectionSchedule& schedule,
                             const EmConfig& config = {}) {
  return detail::iterate_em("em-chen", data, schedule, config,
                            [&](const GeParams& th) {
                              return detail::chen_step(th, data, schedule);
                            });
}

/// Conditional expectation of the complete-data log-likelihood given the
/// observed counts, expectations held at theta_t, additive constant dropped:
/// n(log alpha + log lambda) - lambda * S_time + (alpha - 1) * S_logw.
inline double q_value(const GeParams& theta, const GeParams& theta_t,
                      const IntervalDataset& data,
                      const InspectionSchedule& schedule) {
  const detail::EstepSums s = detail::estep_sums(theta_t, data, schedule);
  return s.n * (std::log(theta.alpha) + std::log(theta.lambda)) -
         theta.lambda * s.time + (theta.alpha - 1.0) * s.logw;
}

namespace detail {

struct Point2 {
  double u, v;  // log alpha, log lambda
};

/// Maximizes f on [lo, hi] by golden-section search.
template <class F>
double golden_max(F&& f, double lo, double hi, int iters) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters; ++i) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

/// Maximum likelihood by Newton-Raphson on (log alpha, log lambda), analytic
/// gradient and finite-difference Hessian, warm-started from five EM steps.
/// The curvature is floored to keep every step an ascent direction; close to
/// the optimum, where likelihood differences fall below rounding noise, the
/// line search switches to the gradient norm. Replications the Newton loop
/// cannot finish are retried from a profile-likelihood (golden section)
/// maximizer before giving up.
inline FitResult fit_ml(const IntervalDataset& data,
                        const InspectionSchedule& schedule,
                        const EmConfig& config = {}) {
  detail::check_config(config);
  bool any_failure = false;
  for (std::size_t i = 0; i < data.size(); ++i) {
    any_failure = any_failure || data.failures[i] > 0;
  }
  if (!any_failure) {
    throw std::invalid_argument("fit_ml: needs at least one observed failure");
  }

  FitResult res{"ml", config.start};
  res.trace.emplace_back(config.start.alpha, config.start.lambda);
  GeParams warm = config.start;
  for (int k = 0; k < 5; ++k) {
    try {
      warm = em_step(warm, data, schedule);
    } catch (const EmptyIntervalError&) {
      break;
    }
    res.trace.emplace_back(warm.alpha, warm.lambda);
    ++res.iterations;
  }

  constexpr double kGradTol = 1e-8;
  constexpr double kFdStep = 1e-5;
  auto eval = [&](double u, double v) {
    return detail::loglik_with_gradient(GeParams(std::exp(u), std::exp(v)),
                                        data, schedule);
  };
  auto grad_norm = [](const detail::ScoreEval& s) {
    return std::hypot(s.d_log_alpha, s.d_log_lambda);
  };

  detail::Point2 pt{std::log(warm.alpha), std::log(warm.lambda)};
  bool converged = false;

  auto newton_loop = [&](detail::Point2 p0, int budget) {
    detail::ScoreEval cur = eval(p0.u, p0.v);
    for (int it = 0; it < budget; ++it) {
      const double gn = grad_norm(cur);
      if (!std::isfinite(cur.ll)) break;
      if (gn < kGradTol) {
        converged = true;
        break;
      }
      // FD Hessian of the analytic gradient
      const detail::ScoreEval pu = eval(p0.u + kFdStep, p0.v);
      const detail::ScoreEval mu = eval(p0.u - kFdStep, p0.v);
      const detail::ScoreEval pv = eval(p0.u, p0.v + kFdStep);
      const detail::ScoreEval mv = eval(p0.u, p0.v - kFdStep);
      const double h11 = (pu.d_log_alpha - mu.d_log_alpha) / (2 * kFdStep);
      const double h22 = (pv.d_log_lambda - mv.d_log_lambda) / (2 * kFdStep);
      const double h12 = 0.5 * ((pv.d_log_alpha - mv.d_log_alpha) +
                                (pu.d_log_lambda - mu.d_log_lambda)) /
                         (2 * kFdStep);
      // floor the eigenvalues of -H so the solve gives an ascent direction
      double a11 = -h11, a12 = -h12, a22 = -h22;
      const double tr = a11 + a22;
      const double det = a11 * a22 - a12 * a12;
      const double disc = std::sqrt(std::max(0.25 * tr * tr - det, 0.0));
      const double lmin = 0.5 * tr - disc;
      const double lmax = 0.5 * tr + disc;
      const double floor_ev =
          std::max(1e-8, 1e-6 * std::max(std::abs(lmin), std::abs(lmax)));
      if (lmin < floor_ev) {
        const double shift = floor_ev - lmin;
        a11 += shift;
        a22 += shift;
      }
      const double det2 = a11 * a22 - a12 * a12;
      double su = (a22 * cur.d_log_alpha - a12 * cur.d_log_lambda) / det2;
      double sv = (a11 * cur.d_log_lambda - a12 * cur.d_log_alpha) / det2;
      const double sn = std::hypot(su, sv);
      if (sn > 1.5) {
        su *= 1.5 / sn;
        sv *= 1.5 / sn;
      }
      bool moved = false;
      if (gn < 1e-4) {
        // endgame: likelihood differences are below rounding noise, so
        // backtrack on the gradient norm instead
        double t = 1.0;
        for (int k = 0; k < 30; ++k) {
          const detail::ScoreEval trial = eval(p0.u + t * su, p0.v + t * sv);
          if (std::isfinite(trial.ll) && grad_norm(trial) < gn) {
            p0 = {p0.u + t * su, p0.v + t * sv};
            cur = trial;
            moved = true;
            break;
          }
          t *= 0.5;
        }
      } else {
        const double slope = cur.d_log_alpha * su + cur.d_log_lambda * sv;
        double t = 1.0;
        for (int k = 0; k < 50; ++k) {
          const detail::ScoreEval trial = eval(p0.u + t * su, p0.v + t * sv);
          if (std::isfinite(trial.ll) && trial.ll >= cur.ll + 1e-4 * t * slope) {
            p0 = {p0.u + t * su, p0.v + t * sv};
            cur = trial;
            moved = true;
            break;
          }
          t *= 0.5;
        }
        if (!moved) {
          // steepest-ascent fallback with halving
          const double du = cur.d_log_alpha / gn;
          const double dv = cur.d_log_lambda / gn;
          double t = 0.25;
          for (int k = 0; k < 60; ++k) {
            const detail::ScoreEval trial = eval(p0.u + t * du, p0.v + t * dv);
            if (std::isfinite(trial.ll) && trial.ll > cur.ll) {
              p0 = {p0.u + t * du, p0.v + t * dv};
              cur = trial;
              moved = true;
              break;
            }
            t *= 0.5;
          }
        }
      }
      if (!moved) break;  // stalled
      res.trace.emplace_back(std::exp(p0.u), std::exp(p0.v));
      ++res.iterations;
    }
    if (!converged && grad_norm(cur) < kGradTol && std::isfinite(cur.ll)) {
      converged = true;
    }
    return p0;
  };

  pt = newton_loop(pt, config.max_iter);
  if (!converged) {
    // profile-likelihood restart around the warm start
    auto ll_at = [&](double u, double v) { return eval(u, v).ll; };
    const double uc = std::log(warm.alpha);
    const double vc = std::log(warm.lambda);
    auto profile = [&](double u) {
      const double vbest = detail::golden_max(
          [&](double v) { return ll_at(u, v); }, vc - 7.0, vc + 7.0, 50);
      return ll_at(u, vbest);
    };
    const double ub = detail::golden_max(profile, uc - 5.0, uc + 7.0, 50);
    const double vb = detail::golden_max(
        [&](double v) { return ll_at(ub, v); }, vc - 7.0, vc + 7.0, 60);
    res.trace.emplace_back(std::exp(ub), std::exp(vb));
    ++res.iterations;
    pt = newton_loop({ub, vb}, 80);
  }

  res.params = GeParams(std::exp(pt.u), std::exp(pt.v));
  res.converged = converged;
  res.loglik = log_likelihood(res.params, data, schedule);
  if (!converged) res.note = "score norm above tolerance at final iterate";
  return res;
}

/// JSON form: {method, alpha, lambda, iterations, converged, loglik,
/// trace: [[alpha, lambda], ...]}.
inline nlohmann::json to_json(const FitResult& r) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& [a, l] : r.trace) {
    trace.push_back({a, l});
  }
  return nlohmann::json{{"method", r.method},      {"alpha", r.params.alpha},
                        {"lambda", r.params.lambda}, {"iterations", r.iterations},
                        {"converged", r.converged}, {"loglik", r.loglik},
                        {"trace", std::move(trace)}};
}

}  // namespace gefit
