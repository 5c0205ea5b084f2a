#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "gefit/censoring.hpp"
#include "gefit/estimators.hpp"
#include "gefit/ge.hpp"
#include "gefit/rng.hpp"

#include "json.hpp"

namespace gefit {

struct NamedPlan {
  std::string name;
  RemovalPlan plan;
};

/// A full simulation-study definition. Replication k of plan j draws its
/// random stream from (seed, j, k), so results do not depend on how work is
/// spread over threads.
struct StudyConfig {
  GeParams true_params;
  std::int64_t n;
  InspectionSchedule schedule;
  std::vector<NamedPlan> plans;
  int replications;
  EmConfig em;
  std::uint64_t seed;

  void validate() const {
    if (n <= 0) throw std::invalid_argument("StudyConfig: n must be positive");
    if (replications < 1) {
      throw std::invalid_argument("StudyConfig: replications must be >= 1");
    }
    if (plans.empty()) {
      throw std::invalid_argument("StudyConfig: needs at least one plan");
    }
    for (std::size_t i = 0; i < plans.size(); ++i) {
      if (plans[i].plan.size() != schedule.size()) {
        throw std::invalid_argument("StudyConfig: plan length != schedule");
      }
      for (std::size_t j = i + 1; j < plans.size(); ++j) {
        if (plans[i].name == plans[j].name) {
          throw std::invalid_argument("StudyConfig: plan names must be unique");
        }
      }
    }
    detail::check_config(em);
  }
};

inline constexpr std::array<const char*, 3> kEstimators = {"em", "ml",
                                                           "em-chen"};

struct RepRecord {
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double lambda = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool converged = false;
};

/// Bias/MSE cell for one (plan, estimator, both parameters): statistics over
/// converged replications; failures are counted, not averaged in.
struct CellSummary {
  double bias_alpha = std::numeric_limits<double>::quiet_NaN();
  double mse_alpha = std::numeric_limits<double>::quiet_NaN();
  double se_alpha = std::numeric_limits<double>::quiet_NaN();
  double bias_lambda = std::numeric_limits<double>::quiet_NaN();
  double mse_lambda = std::numeric_limits<double>::quiet_NaN();
  double se_lambda = std::numeric_limits<double>::quiet_NaN();
  double mean_iterations = std::numeric_limits<double>::quiet_NaN();
  double convergence_rate = 0.0;
  int excluded = 0;
};

struct PlanResult {
  std::string plan;
  // reps[e][k] for estimator e in kEstimators order
  std::array<std::vector<RepRecord>, 3> reps;
  std::array<CellSummary, 3> cells;
};

struct StudySummary {
  std::vector<PlanResult> plans;
};

namespace detail {

inline CellSummary summarize_cell(const std::vector<RepRecord>& reps,
                                  const GeParams& truth) {
  CellSummary c;
  std::vector<const RepRecord*> ok;
  ok.reserve(reps.size());
  for (const RepRecord& r : reps) {
    if (r.converged && std::isfinite(r.alpha) && std::isfinite(r.lambda)) {
      ok.push_back(&r);
    }
  }
  c.excluded = static_cast<int>(reps.size() - ok.size());
  c.convergence_rate =
      reps.empty() ? 0.0 : static_cast<double>(ok.size()) / reps.size();
  if (ok.empty()) return c;
  const double m = static_cast<double>(ok.size());
  double ma = 0.0, ml = 0.0, it = 0.0;
  for (const RepRecord* r : ok) {
    ma += r->alpha;
    ml += r->lambda;
    it += r->iterations;
  }
  ma /= m;
  ml /= m;
  c.mean_iterations = it / m;
  double va = 0.0, vl = 0.0, qa = 0.0, ql = 0.0;
  for (const RepRecord* r : ok) {
    va += (r->alpha - ma) * (r->alpha - ma);
    vl += (r->lambda - ml) * (r->lambda - ml);
    qa += (r->alpha - truth.alpha) * (r->alpha - truth.alpha);
    ql += (r->lambda - truth.lambda) * (r->lambda - truth.lambda);
  }
  va /= m;
  vl /= m;
  c.bias_alpha = ma - truth.alpha;
  c.bias_lambda = ml - truth.lambda;
  c.mse_alpha = qa / m;
  c.mse_lambda = ql / m;
  c.se_alpha = std::sqrt(va / m);
  c.se_lambda = std::sqrt(vl / m);
  return c;
}

inline RepRecord record_of(const FitResult& f) {
  return {f.params.alpha, f.params.lambda, f.iterations, f.converged};
}

inline void atomic_write(const std::filesystem::path& path,
                         const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace detail

/// Runs the study: per plan and replication, one dataset is generated from
/// the replication's own stream and all three estimators fit it. Replication
/// order is fixed; threads only partition the work, so the output is
/// identical at any thread count.
inline StudySummary run_study(const StudyConfig& config, int threads = 1) {
  config.validate();
  StudySummary out;
  out.plans.resize(config.plans.size());
  const int R = config.replications;
  for (std::size_t pi = 0; pi < config.plans.size(); ++pi) {
    PlanResult& pr = out.plans[pi];
    pr.plan = config.plans[pi].name;
    for (auto& v : pr.reps) v.resize(R);
    auto run_range = [&, pi](int k_begin, int k_end) {
      for (int k = k_begin; k < k_end; ++k) {
        RngStream rng = RngStream::derive(config.seed, pi, k);
        const IntervalDataset data = generate(
            config.n, config.true_params, config.schedule,
            config.plans[pi].plan, rng);
        auto safe_fit = [&](auto&& fit) {
          try {
            return detail::record_of(fit());
          } catch (const std::exception&) {
            return RepRecord{};  // failed fit: excluded, NaN estimates
          }
        };
        pr.reps[0][k] = safe_fit(
            [&] { return fit_em(data, config.schedule, config.em); });
        pr.reps[1][k] = safe_fit(
            [&] { return fit_ml(data, config.schedule, config.em); });
        pr.reps[2][k] = safe_fit(
            [&] { return fit_em_chen(data, config.schedule, config.em); });
      }
    };
    const int nthreads = std::max(1, threads);
    if (nthreads == 1 || R < 2 * nthreads) {
      run_range(0, R);
    } else {
      std::vector<std::thread> pool;
      const int chunk = (R + nthreads - 1) / nthreads;
      for (int t = 0; t < nthreads; ++t) {
        const int lo = t * chunk;
        const int hi = std::min(R, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back(run_range, lo, hi);
      }
      for (auto& th : pool) th.join();
    }
    for (int e = 0; e < 3; ++e) {
      pr.cells[e] = detail::summarize_cell(pr.reps[e], config.true_params);
    }
  }
  return out;
}

/// Summary CSV: one row per (scenario, estimator) in study order.
inline std::string summary_to_csv(const StudySummary& s) {
  std::string out =
      "scenario,estimator,bias_alpha,mse_alpha,bias_lambda,mse_lambda,"
      "mean_iterations,convergence_rate,excluded\n";
  for (const PlanResult& pr : s.plans) {
    for (int e = 0; e < 3; ++e) {
      const CellSummary& c = pr.cells[e];
      out += pr.plan;
      out += ',';
      out += kEstimators[e];
      for (double v : {c.bias_alpha, c.mse_alpha, c.bias_lambda, c.mse_lambda,
                       c.mean_iterations, c.convergence_rate}) {
        out += ',';
        out += detail::format_double(v);
      }
      out += ',';
      out += std::to_string(c.excluded);
      out += '\n';
    }
  }
  return out;
}

/// Per-replication estimate traces, one file per (plan, estimator).
inline std::string trace_to_csv(const std::vector<RepRecord>& reps) {
  std::string out = "replication,alpha_hat,lambda_hat,iterations,converged\n";
  for (std::size_t k = 0; k < reps.size(); ++k) {
    out += std::to_string(k + 1);
    out += ',';
    out += detail::format_double(reps[k].alpha);
    out += ',';
    out += detail::format_double(reps[k].lambda);
    out += ',';
    out += std::to_string(reps[k].iterations);
    out += ',';
    out += reps[k].converged ? '1' : '0';
    out += '\n';
  }
  return out;
}

/// Writes summary.csv and trace_<plan>_<estimator>.csv under out_dir.
inline void write_study_outputs(const StudySummary& s,
                                const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  detail::atomic_write(out_dir / "summary.csv", summary_to_csv(s));
  for (const PlanResult& pr : s.plans) {
    for (int e = 0; e < 3; ++e) {
      const std::string name =
          "trace_" + pr.plan + "_" + kEstimators[e] + ".csv";
      detail::atomic_write(out_dir / name, trace_to_csv(pr.reps[e]));
    }
  }
}

/// The published study configuration: n = 112 draws from (alpha, lambda) =
/// (1.5, 0.06), nine inspection times ending at 60.5, four removal plans,
/// 1000 replications, start (1, 0.5), tolerance 1e-6.
inline StudyConfig paper_config() {
  return StudyConfig{
      GeParams(1.5, 0.06),
      112,
      InspectionSchedule({5.5, 10.5, 15.5, 20.5, 25.5, 30.5, 40.5, 50.5, 60.5}),
      {{"p1", RemovalPlan({0.25, 0.25, 0.25, 0.25, 0.5, 0.5, 0.5, 0.5, 1.0})},
       {"p2", RemovalPlan({0.5, 0.5, 0.5, 0.5, 0.25, 0.25, 0.25, 0.25, 1.0})},
       {"p3", RemovalPlan({0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0})},
       {"p4", RemovalPlan({0.25, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0})}},
      1000,
      EmConfig{GeParams(1.0, 0.5), 1e-6, 101},
      1};
}

/// JSON study-config schema; see README for an example.
inline StudyConfig study_config_from_json(const nlohmann::json& j) {
  std::vector<NamedPlan> plans;
  for (const auto& pj : j.at("plans")) {
    plans.push_back(NamedPlan{pj.at("name").get<std::string>(),
                              RemovalPlan(pj.at("removals")
                                              .get<std::vector<double>>())});
  }
  EmConfig em;
  em.start = GeParams(j.value("start_alpha", 1.0), j.value("start_lambda", 0.5));
  em.tol = j.value("tol", 1e-6);
  em.max_iter = j.value("max_iter", 101);
  StudyConfig cfg{
      GeParams(j.at("alpha").get<double>(), j.at("lambda").get<double>()),
      j.at("n").get<std::int64_t>(),
      InspectionSchedule(j.at("times").get<std::vector<double>>()),
      std::move(plans),
      j.at("replications").get<int>(),
      em,
      j.at("seed").get<std::uint64_t>()};
  cfg.validate();
  return cfg;
}

inline nlohmann::json study_config_to_json(const StudyConfig& cfg) {
  nlohmann::json plans = nlohmann::json::array();
  for (const NamedPlan& p : cfg.plans) {
    plans.push_back({{"name", p.name}, {"removals", p.plan.percentages}});
  }
  return nlohmann::json{{"alpha", cfg.true_params.alpha},
                        {"lambda", cfg.true_params.lambda},
                        {"n", cfg.n},
                        {"times", cfg.schedule.times},
                        {"plans", std::move(plans)},
                        {"replications", cfg.replications},
                        {"start_alpha", cfg.em.start.alpha},
                        {"start_lambda", cfg.em.start.lambda},
                        {"tol", cfg.em.tol},
                        {"max_iter", cfg.em.max_iter},
                        {"seed", cfg.seed}};
}

}  // namespace gefit
