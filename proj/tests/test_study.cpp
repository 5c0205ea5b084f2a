#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gefit/study.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using gefit::GeParams;
using gefit::StudyConfig;

namespace {

StudyConfig small_config(int replications) {
  StudyConfig cfg = gefit::paper_config();
  cfg.replications = replications;
  cfg.seed = 31337;
  return cfg;
}

}  // namespace

TEST_CASE("paper_config returns the published settings") {
  const StudyConfig cfg = gefit::paper_config();
  CHECK(cfg.true_params.alpha == 1.5);
  CHECK(cfg.true_params.lambda == 0.06);
  CHECK(cfg.n == 112);
  REQUIRE(cfg.schedule.size() == 9);
  CHECK(cfg.schedule.times.front() == 5.5);
  CHECK(cfg.schedule.times.back() == 60.5);
  REQUIRE(cfg.plans.size() == 4);
  for (const auto& plan : cfg.plans) {
    CHECK(plan.plan.percentages.back() == 1.0);
  }
  int nonzero_before_last = 0;
  const auto& p4 = cfg.plans[3].plan.percentages;
  for (std::size_t i = 0; i + 1 < p4.size(); ++i) {
    nonzero_before_last += p4[i] != 0.0;
  }
  CHECK(nonzero_before_last == 1);
  CHECK(cfg.replications == 1000);
  CHECK(cfg.em.start.alpha == 1.0);
  CHECK(cfg.em.start.lambda == 0.5);
  CHECK(cfg.em.tol == 1e-6);
  CHECK(cfg.em.max_iter == 101);
}

TEST_CASE("study output is independent of the thread count") {
  const StudyConfig cfg = small_config(12);
  const gefit::StudySummary s1 = gefit::run_study(cfg, 1);
  const gefit::StudySummary s4 = gefit::run_study(cfg, 4);
  CHECK(gefit::summary_to_csv(s1) == gefit::summary_to_csv(s4));
  for (std::size_t pi = 0; pi < s1.plans.size(); ++pi) {
    for (int e = 0; e < 3; ++e) {
      CHECK(gefit::trace_to_csv(s1.plans[pi].reps[e]) ==
            gefit::trace_to_csv(s4.plans[pi].reps[e]));
    }
  }
}

TEST_CASE("single replication: bias and mse collapse to one sample") {
  StudyConfig cfg = small_config(1);
  cfg.plans = {cfg.plans[2]};  // no early removals; em always converges
  const gefit::StudySummary s = gefit::run_study(cfg, 1);
  const auto& cell = s.plans[0].cells[0];
  REQUIRE(cell.excluded == 0);
  CHECK(cell.mse_alpha == cell.bias_alpha * cell.bias_alpha);
  CHECK(cell.mse_lambda == cell.bias_lambda * cell.bias_lambda);
  CHECK(cell.se_alpha == 0.0);
}

TEST_CASE("mse equals variance plus squared bias per cell") {
  StudyConfig cfg = small_config(40);
  cfg.plans = {cfg.plans[2]};
  const gefit::StudySummary s = gefit::run_study(cfg, 2);
  for (int e = 0; e < 2; ++e) {  // em and ml cells
    const auto& cell = s.plans[0].cells[e];
    const auto& reps = s.plans[0].reps[e];
    double mean = 0.0;
    int m = 0;
    for (const auto& r : reps) {
      if (r.converged) {
        mean += r.alpha;
        ++m;
      }
    }
    REQUIRE(m > 0);
    mean /= m;
    double var = 0.0;
    for (const auto& r : reps) {
      if (r.converged) var += (r.alpha - mean) * (r.alpha - mean);
    }
    var /= m;
    CHECK_THAT(cell.mse_alpha,
               WithinRel(var + cell.bias_alpha * cell.bias_alpha, 1e-12));
  }
}

TEST_CASE("first update of the two em variants shares alpha per replication") {
  const StudyConfig cfg = small_config(30);
  for (std::size_t pi = 0; pi < cfg.plans.size(); ++pi) {
    for (int k = 0; k < cfg.replications; ++k) {
      gefit::RngStream rng = gefit::RngStream::derive(cfg.seed, pi, k);
      const gefit::IntervalDataset data =
          gefit::generate(cfg.n, cfg.true_params, cfg.schedule,
                          cfg.plans[pi].plan, rng);
      const GeParams em = gefit::em_step(cfg.em.start, data, cfg.schedule);
      const auto chen =
          gefit::detail::chen_step(cfg.em.start, data, cfg.schedule);
      REQUIRE(chen.has_value());
      CHECK_THAT(chen->alpha, WithinRel(em.alpha, 1e-12));
    }
    break;  // one plan suffices here; the acceptance suite sweeps all four
  }
}

TEST_CASE("study config json round-trips") {
  const StudyConfig cfg = gefit::paper_config();
  const nlohmann::json j = gefit::study_config_to_json(cfg);
  const StudyConfig back = gefit::study_config_from_json(j);
  CHECK(back.true_params.alpha == cfg.true_params.alpha);
  CHECK(back.true_params.lambda == cfg.true_params.lambda);
  CHECK(back.n == cfg.n);
  CHECK(back.schedule.times == cfg.schedule.times);
  REQUIRE(back.plans.size() == cfg.plans.size());
  for (std::size_t i = 0; i < cfg.plans.size(); ++i) {
    CHECK(back.plans[i].name == cfg.plans[i].name);
    CHECK(back.plans[i].plan.percentages == cfg.plans[i].plan.percentages);
  }
  CHECK(back.replications == cfg.replications);
  CHECK(back.seed == cfg.seed);
  CHECK(back.em.tol == cfg.em.tol);
  CHECK(back.em.max_iter == cfg.em.max_iter);
}

TEST_CASE("study config validation rejects duplicate plan names") {
  StudyConfig cfg = gefit::paper_config();
  cfg.plans[1].name = cfg.plans[0].name;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("summary csv carries the documented columns") {
  const StudyConfig cfg = small_config(2);
  const gefit::StudySummary s = gefit::run_study(cfg, 1);
  const std::string csv = gefit::summary_to_csv(s);
  CHECK(csv.rfind("scenario,estimator,bias_alpha,mse_alpha,bias_lambda,"
                  "mse_lambda,mean_iterations,convergence_rate,excluded\n",
                  0) == 0);
  // 4 plans x 3 estimators data rows
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);
}
