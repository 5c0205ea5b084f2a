// Command-line front end: dataset generation, fitting, expectation-table
// inspection, and simulation studies.
//
// Exit codes: 0 success, 1 I/O failure, 2 invalid flags or malformed input,
// 3 fit did not converge (result still printed), 4 impossible data.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gefit/gefit.hpp"

namespace {

int run_generate(double alpha, double lambda, std::int64_t n,
                 const std::vector<double>& times,
                 const std::vector<double>& plan, std::uint64_t seed,
                 const std::string& out_path) {
  const gefit::GeParams params(alpha, lambda);
  const gefit::InspectionSchedule schedule(times);
  const gefit::RemovalPlan removal(plan);
  gefit::RngStream rng(seed);
  const gefit::IntervalDataset data =
      gefit::generate(n, params, schedule, removal, rng);
  gefit::detail::atomic_write(out_path, gefit::to_csv(data, schedule));
  std::int64_t sx = 0, sr = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    sx += data.failures[i];
    sr += data.removals[i];
  }
  std::cout << "n = " << data.n << " = " << sx << " + " << sr << "\n";
  return 0;
}

int run_fit(const std::string& data_path, const std::string& method,
            const std::vector<double>& times_check, double start_alpha,
            double start_lambda, double tol, int max_iter) {
  auto [data, schedule] = gefit::dataset_from_csv_file(data_path);
  if (!times_check.empty() && times_check != schedule.times) {
    std::cerr << "error: --times does not match the dataset schedule\n";
    return 2;
  }
  gefit::EmConfig config{gefit::GeParams(start_alpha, start_lambda), tol,
                         max_iter};
  gefit::FitResult result{"", config.start};
  try {
    if (method == "em") {
      result = gefit::fit_em(data, schedule, config);
    } else if (method == "ml") {
      result = gefit::fit_ml(data, schedule, config);
    } else {
      result = gefit::fit_em_chen(data, schedule, config);
    }
  } catch (const gefit::EmptyIntervalError& e) {
    std::cerr << "error: impossible data: " << e.what() << "\n";
    return 4;
  }
  std::cout << gefit::to_json(result).dump(2) << "\n";
  if (std::isinf(result.loglik) && result.loglik < 0) return 4;
  return result.converged ? 0 : 3;
}

int run_estep(double alpha, double lambda, const std::vector<double>& times) {
  const gefit::GeParams params(alpha, lambda);
  const gefit::InspectionSchedule schedule(times);
  const auto rows = gefit::expectation_table(params, schedule);
  std::cout << "interval,t_lower,t_upper,mean_time_in,mean_logw_in,"
               "mean_time_beyond,mean_logw_beyond\n";
  for (const auto& r : rows) {
    std::cout << (r.index + 1) << ','
              << gefit::detail::format_double(schedule.lower(r.index)) << ','
              << gefit::detail::format_double(schedule.upper(r.index)) << ','
              << gefit::detail::format_double(r.mean_time_in) << ','
              << gefit::detail::format_double(r.mean_logw_in) << ','
              << gefit::detail::format_double(r.mean_time_beyond) << ','
              << gefit::detail::format_double(r.mean_logw_beyond) << '\n';
  }
  return 0;
}

int run_study_config(const gefit::StudyConfig& config,
                     const std::string& out_dir, int threads) {
  const gefit::StudySummary summary = gefit::run_study(config, threads);
  gefit::write_study_outputs(summary, out_dir);
  std::cout << "wrote " << (std::filesystem::path(out_dir) / "summary.csv").string()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "generalized exponential lifetimes under progressive type-I interval "
      "censoring: generation, fitting, and simulation studies"};
  app.require_subcommand(1);

  // generate
  double g_alpha = 0, g_lambda = 0;
  std::int64_t g_n = 0;
  std::vector<double> g_times, g_plan;
  std::uint64_t g_seed = 0;
  std::string g_out;
  CLI::App* generate = app.add_subcommand("generate",
                                          "simulate one censored dataset");
  generate->add_option("--alpha", g_alpha, "shape parameter")->required();
  generate->add_option("--lambda", g_lambda, "rate parameter")->required();
  generate->add_option("--n", g_n, "sample size")->required();
  generate->add_option("--times", g_times, "inspection times, comma separated")
      ->required()
      ->delimiter(',');
  generate->add_option("--plan", g_plan, "removal percentages, last must be 1")
      ->required()
      ->delimiter(',');
  generate->add_option("--seed", g_seed, "random seed")->required();
  generate->add_option("--out", g_out, "output CSV path")->required();

  // fit
  std::string f_data, f_method;
  std::vector<double> f_times;
  double f_sa = 1.0, f_sl = 0.5, f_tol = 1e-6;
  int f_maxit = 101;
  CLI::App* fit = app.add_subcommand("fit", "fit one dataset");
  fit->add_option("--data", f_data, "dataset CSV")->required();
  fit->add_option("--method", f_method, "em | ml | em-chen")
      ->required()
      ->check(CLI::IsMember({"em", "ml", "em-chen"}));
  fit->add_option("--times", f_times,
                  "optional schedule cross-check, comma separated")
      ->delimiter(',');
  fit->add_option("--start-alpha", f_sa, "starting shape");
  fit->add_option("--start-lambda", f_sl, "starting rate");
  fit->add_option("--tol", f_tol, "stopping tolerance");
  fit->add_option("--max-iter", f_maxit, "iteration cap");

  // estep
  double e_alpha = 0, e_lambda = 0;
  std::vector<double> e_times;
  CLI::App* estep = app.add_subcommand(
      "estep", "print the conditional-expectation table as CSV");
  estep->add_option("--alpha", e_alpha, "shape parameter")->required();
  estep->add_option("--lambda", e_lambda, "rate parameter")->required();
  estep->add_option("--times", e_times, "inspection times, comma separated")
      ->required()
      ->delimiter(',');

  // study
  std::string s_config, s_out;
  int s_threads = 1;
  CLI::App* study = app.add_subcommand("study", "run a study from a JSON config");
  study->add_option("--config", s_config, "StudyConfig JSON file")->required();
  study->add_option("--out-dir", s_out, "output directory")->required();
  study->add_option("--threads", s_threads, "worker threads");

  // paper-study
  std::uint64_t p_seed = 1;
  std::string p_out;
  int p_reps = -1, p_threads = 1;
  CLI::App* paper = app.add_subcommand(
      "paper-study", "run the built-in reference study configuration");
  paper->add_option("--seed", p_seed, "random seed")->required();
  paper->add_option("--out-dir", p_out, "output directory")->required();
  paper->add_option("--replications", p_reps, "override replication count");
  paper->add_option("--threads", p_threads, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*generate) {
      return run_generate(g_alpha, g_lambda, g_n, g_times, g_plan, g_seed,
                          g_out);
    }
    if (*fit) {
      return run_fit(f_data, f_method, f_times, f_sa, f_sl, f_tol, f_maxit);
    }
    if (*estep) {
      return run_estep(e_alpha, e_lambda, e_times);
    }
    if (*study) {
      std::ifstream in(s_config);
      if (!in) {
        std::cerr << "error: cannot open config: " << s_config << "\n";
        return 1;
      }
      nlohmann::json j;
      in >> j;
      return run_study_config(gefit::study_config_from_json(j), s_out,
                              s_threads);
    }
    if (*paper) {
      gefit::StudyConfig config = gefit::paper_config();
      config.seed = p_seed;
      if (p_reps > 0) config.replications = p_reps;
      return run_study_config(config, p_out, p_threads);
    }
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: bad config: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
