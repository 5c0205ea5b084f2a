#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gefit/ge.hpp"
#include "gefit/rng.hpp"

namespace gefit {

/// Pre-determined inspection times t_1 < ... < t_m, with t_0 = 0 implicit.
struct InspectionSchedule {
  std::vector<double> times;

  explicit InspectionSchedule(std::vector<double> t) : times(std::move(t)) {
    if (times.empty()) {
      throw std::invalid_argument("InspectionSchedule: needs at least one time");
    }
    double prev = 0.0;
    for (double ti : times) {
      if (!std::isfinite(ti) || !(ti > prev)) {
        throw std::invalid_argument(
            "InspectionSchedule: times must be finite, positive, strictly "
            "increasing");
      }
      prev = ti;
    }
  }

  std::size_t size() const { return times.size(); }
  double lower(std::size_t i) const { return i == 0 ? 0.0 : times[i - 1]; }
  double upper(std::size_t i) const { return times[i]; }
};

/// Removal percentages p_i applied to the survivors at each inspection;
/// p_m = 1 terminates the test.
struct RemovalPlan {
  std::vector<double> percentages;

  explicit RemovalPlan(std::vector<double> p) : percentages(std::move(p)) {
    if (percentages.empty()) {
      throw std::invalid_argument("RemovalPlan: needs at least one entry");
    }
    for (double pi : percentages) {
      if (!std::isfinite(pi) || pi < 0.0 || pi > 1.0) {
        throw std::invalid_argument("RemovalPlan: entries must lie in [0, 1]");
      }
    }
    if (percentages.back() != 1.0) {
      throw std::invalid_argument("RemovalPlan: final entry must be 1");
    }
  }

  std::size_t size() const { return percentages.size(); }
};

/// Observed counts of one progressively type-I interval-censored sample:
/// failures x_i in (t_{i-1}, t_i] and removals r_i at t_i, with
/// sum(x_i + r_i) = n.
struct IntervalDataset {
  std::vector<std::int64_t> failures;
  std::vector<std::int64_t> removals;
  std::int64_t n;

  IntervalDataset(std::vector<std::int64_t> x, std::vector<std::int64_t> r)
      : failures(std::move(x)), removals(std::move(r)), n(0) {
    if (failures.empty() || failures.size() != removals.size()) {
      throw std::invalid_argument(
          "IntervalDataset: failure/removal lists must be non-empty and equal "
          "length");
    }
    for (std::size_t i = 0; i < failures.size(); ++i) {
      if (failures[i] < 0 || removals[i] < 0) {
        throw std::invalid_argument("IntervalDataset: counts must be >= 0");
      }
      n += failures[i] + removals[i];
    }
    if (n <= 0) {
      throw std::invalid_argument("IntervalDataset: total count must be > 0");
    }
  }

  std::size_t size() const { return failures.size(); }
};

/// Sequential conditional-binomial generation. Survivors thin by the
/// conditional interval probability q_i = 1 - S(t_i)/S(t_{i-1}); then
/// floor(p_i * survivors) are withdrawn. The final p_m = 1 removes everyone,
/// so the accounting identity holds by construction.
inline IntervalDataset generate(std::int64_t n, const GeParams& params,
                                const InspectionSchedule& schedule,
                                const RemovalPlan& plan, RngStream& rng) {
  if (n <= 0) throw std::invalid_argument("generate: n must be positive");
  if (plan.size() != schedule.size()) {
    throw std::invalid_argument("generate: plan and schedule lengths differ");
  }
  const std::size_t m = schedule.size();
  std::vector<std::int64_t> x(m, 0), r(m, 0);
  std::int64_t alive = n;
  double surv_prev = 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double surv = survival(params, schedule.upper(i));
    double q = surv_prev > 0.0 ? 1.0 - surv / surv_prev : 1.0;
    if (q < -1e-12 || q > 1.0 + 1e-12) {
      throw std::logic_error("generate: conditional probability out of range");
    }
    q = std::min(std::max(q, 0.0), 1.0);
    x[i] = rng.binomial(static_cast<int>(alive), q);
    alive -= x[i];
    r[i] = static_cast<std::int64_t>(
        std::floor(plan.percentages[i] * static_cast<double>(alive)));
    alive -= r[i];
    surv_prev = surv;
  }
  if (alive != 0) {
    throw std::logic_error("generate: survivors remain after termination");
  }
  return IntervalDataset(std::move(x), std::move(r));
}

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline constexpr const char* kDatasetCsvHeader =
    "interval,t_lower,t_upper,failures,removals";

/// One row per interval: index (1-based), bounds, counts.
inline std::string to_csv(const IntervalDataset& data,
                          const InspectionSchedule& schedule) {
  if (data.size() != schedule.size()) {
    throw std::invalid_argument("to_csv: dataset/schedule length mismatch");
  }
  std::string out = kDatasetCsvHeader;
  out += '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out += std::to_string(i + 1);
    out += ',';
    out += detail::format_double(schedule.lower(i));
    out += ',';
    out += detail::format_double(schedule.upper(i));
    out += ',';
    out += std::to_string(data.failures[i]);
    out += ',';
    out += std::to_string(data.removals[i]);
    out += '\n';
  }
  return out;
}

/// Parses and validates a dataset CSV: exact header, contiguous 1-based
/// interval numbering, t_lower_1 = 0, contiguous interval bounds, and
/// non-negative counts summing to a positive n.
inline std::pair<IntervalDataset, InspectionSchedule> dataset_from_csv(
    std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kDatasetCsvHeader) {
    throw std::runtime_error("dataset csv: bad or missing header");
  }
  std::vector<double> times;
  std::vector<std::int64_t> x, r;
  double prev_upper = 0.0;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    std::istringstream ls(line);
    std::string field;
    auto next = [&]() {
      if (!std::getline(ls, field, ',')) {
        throw std::runtime_error("dataset csv: short row " + std::to_string(row));
      }
      return field;
    };
    const long idx = std::stol(next());
    const double lo = std::stod(next());
    const double hi = std::stod(next());
    const long long xi = std::stoll(next());
    const long long ri = std::stoll(next());
    if (std::getline(ls, field, ',')) {
      throw std::runtime_error("dataset csv: extra fields in row " +
                               std::to_string(row));
    }
    if (idx != static_cast<long>(row)) {
      throw std::runtime_error("dataset csv: interval numbering broken");
    }
    if (lo != prev_upper) {
      throw std::runtime_error("dataset csv: intervals not contiguous");
    }
    if (!(hi > lo)) {
      throw std::runtime_error("dataset csv: bounds not increasing");
    }
    if (xi < 0 || ri < 0) {
      throw std::runtime_error("dataset csv: negative count");
    }
    times.push_back(hi);
    x.push_back(xi);
    r.push_back(ri);
    prev_upper = hi;
  }
  if (times.empty()) throw std::runtime_error("dataset csv: no rows");
  return {IntervalDataset(std::move(x), std::move(r)),
          InspectionSchedule(std::move(times))};
}

inline std::pair<IntervalDataset, InspectionSchedule> dataset_from_csv_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  return dataset_from_csv(in);
}

}  // namespace gefit
