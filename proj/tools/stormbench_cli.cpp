// Command-line driver: seeded experiment runs, T-grid sweeps, and the
// randomized inequality suite. Exit codes: 0 success, 1 invalid config,
// 2 all runs diverged / verification failed, 3 I/O error.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stormbench/stormbench.hpp"

namespace {

using namespace stormbench;

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory: " + dir);
}

int count_ok(const std::vector<ResultRow>& rows) {
  int ok = 0;
  for (const auto& r : rows)
    if (r.status == RunStatus::Ok) ++ok;
  return ok;
}

std::string traj_name(const ExperimentConfig& cfg, const Problem& p,
                      std::int64_t T, int rep) {
  char name[128];
  std::snprintf(name, sizeof(name), "traj_%s_%s_T%lld_rep%d.csv",
                to_string(cfg.algorithm), std::string(p.name()).c_str(),
                static_cast<long long>(T), rep);
  return name;
}

int cmd_run(const std::string& config_path, const std::string& out_dir) {
  const ExperimentConfig cfg = parse_config_file(config_path);
  if (cfg.T < 1) throw ConfigError("run: config needs run.T");
  ensure_dir(out_dir);
  const Problem p = make_problem(cfg);
  std::vector<ResultRow> rows;
  for (int rep = 0; rep < cfg.repetitions; ++rep) {
    SingleRun r = run_single(cfg, p, cfg.T, 0, rep, run_options_for(cfg, cfg.T));
    std::printf("rep %d: status=%s metric=%s oracle_calls=%llu\n", rep,
                to_string(r.row.status),
                r.row.stationarity_metric
                    ? std::to_string(*r.row.stationarity_metric).c_str()
                    : "-",
                static_cast<unsigned long long>(r.row.oracle_calls));
    if (cfg.dump_trajectories)
      write_trajectory(r.outcome.records,
                       join_path(out_dir, traj_name(cfg, p, cfg.T, rep)));
    rows.push_back(std::move(r.row));
  }
  write_results(rows, join_path(out_dir, "results.csv"));
  if (count_ok(rows) == 0) {
    std::fprintf(stderr, "all %zu repetitions ended without Ok status\n",
                 rows.size());
    return 2;
  }
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir) {
  const ExperimentConfig cfg = parse_config_file(config_path);
  if (cfg.t_grid.empty()) throw ConfigError("sweep: config needs run.t_grid");
  ensure_dir(out_dir);
  const SweepResult res = run_sweep(cfg);
  write_results(res.rows, join_path(out_dir, "results.csv"));

  std::string fit_csv =
      "T,oracle_calls,ok_reps,mean_metric,mean_metric_sq,stderr_metric,"
      "median_metric\n";
  for (const SweepCell& c : res.cells) {
    char line[256];
    std::snprintf(line, sizeof(line), "%lld,%llu,%d,%.17g,%.17g,%.17g,%.17g\n",
                  static_cast<long long>(c.T),
                  static_cast<unsigned long long>(c.oracle_calls), c.ok_reps,
                  c.mean_metric, c.mean_metric_sq, c.stderr_metric,
                  c.median_metric);
    fit_csv += line;
  }
  write_text_file(join_path(out_dir, "sweep_cells.csv"), fit_csv);

  for (const SweepCell& c : res.cells) {
    std::printf("T=%-8lld ok=%d/%d  metric=%.6g +- %.2g  metric^2=%.6g",
                static_cast<long long>(c.T), c.ok_reps, cfg.repetitions,
                c.mean_metric, c.stderr_metric, c.mean_metric_sq);
    if (cfg.show_median) std::printf("  median=%.6g", c.median_metric);
    std::printf("\n");
  }
  if (res.fit && res.fit_sq) {
    std::printf("log-log fit (metric):   slope=%+.4f  intercept=%+.4f  R^2=%.4f\n",
                res.fit->slope, res.fit->intercept, res.fit->r_squared);
    std::printf("log-log fit (metric^2): slope=%+.4f  intercept=%+.4f  R^2=%.4f\n",
                res.fit_sq->slope, res.fit_sq->intercept, res.fit_sq->r_squared);
  } else {
    std::printf("fit unavailable (diverged cells or too few grid points)\n");
  }
  if (cfg.dump_trajectories) {
    const Problem p = make_problem(cfg);
    for (std::size_t gi = 0; gi < cfg.t_grid.size(); ++gi) {
      const std::int64_t T = cfg.t_grid[gi];
      for (int rep = 0; rep < cfg.repetitions; ++rep) {
        const RunOutcome out = run_repetition(cfg, p, T, static_cast<int>(gi),
                                              rep, run_options_for(cfg, T));
        write_trajectory(out.records,
                         join_path(out_dir, traj_name(cfg, p, T, rep)));
      }
    }
  }
  if (count_ok(res.rows) == 0) {
    std::fprintf(stderr, "all sweep runs ended without Ok status\n");
    return 2;
  }
  return 0;
}

int cmd_verify_lemmas(int cases, std::uint64_t seed, const std::string& out_dir) {
  ensure_dir(out_dir);
  const std::vector<LemmaSuiteRow> rows = run_lemma_suite(cases, seed);
  std::string csv = "lemma,cases,violations,worst_margin\n";
  bool all_ok = true;
  std::printf("%-22s %8s %10s %14s\n", "lemma", "cases", "violations",
              "worst_margin");
  for (const LemmaSuiteRow& r : rows) {
    std::printf("%-22s %8d %10d %14.6g  %s\n", r.lemma.c_str(), r.cases,
                r.violations, r.worst_margin,
                r.violations == 0 ? "PASS" : "FAIL");
    char line[160];
    std::snprintf(line, sizeof(line), "%s,%d,%d,%.17g\n", r.lemma.c_str(),
                  r.cases, r.violations, r.worst_margin);
    csv += line;
    if (r.violations != 0) all_ok = false;
  }
  write_text_file(join_path(out_dir, "lemma_margins.csv"), csv);
  return all_ok ? 0 : 2;
}

int cmd_list_problems() {
  std::printf(
      "noisy_quadratic   f(x;xi) = 1/2 ||x - xi||^2, xi ~ N(0, (sigma^2/d) I).\n"
      "                  L = 1, variance bound = sigma^2 exactly; G, B only\n"
      "                  hold locally (declared +inf).\n"
      "                  config: problem.dim, problem.sigma\n"
      "sigmoid_well      f(x;xi) = sum_j phi(x_j - xi_j), phi(z) = z^2/(1+z^2),\n"
      "                  xi_j ~ U[-w, w], w = (sigma/2) sqrt(3/d). Non-convex;\n"
      "                  L = 2, G = sqrt(d) 3sqrt(3)/8, B = d, all global.\n"
      "                  config: problem.dim, problem.sigma\n"
      "phase_retrieval   f(x;i) = (<a_i,x>^2 - b_i)^2 / 4, i uniform over n\n"
      "                  components generated from problem.data_seed. L, G, B\n"
      "                  and the variance bound are declared on the ball\n"
      "                  ||x|| <= region_radius only.\n"
      "                  config: problem.dim, problem.n, problem.data_seed\n"
      "                  [, problem.batch]\n"
      "rosenbrock        chained Rosenbrock, deterministic (sigma = 0). L is\n"
      "                  declared on |x_j| <= 3; G, B are +inf.\n"
      "                  config: problem.dim\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stormbench: adaptive momentum optimizers on a synthetic suite"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".";
  int cases = 1000;
  std::uint64_t seed = 1;

  CLI::App* run = app.add_subcommand("run", "run one experiment config");
  run->add_option("--config", config_path, "config file")->required();
  run->add_option("--out", out_dir, "output directory");

  CLI::App* sweep = app.add_subcommand("sweep", "run a T-grid sweep");
  sweep->add_option("--config", config_path, "config file")->required();
  sweep->add_option("--out", out_dir, "output directory")->required();

  CLI::App* lemmas =
      app.add_subcommand("verify-lemmas", "randomized inequality suite");
  lemmas->add_option("--cases", cases, "cases per lemma");
  lemmas->add_option("--seed", seed, "suite seed");
  lemmas->add_option("--out", out_dir, "output directory");

  CLI::App* list = app.add_subcommand("list-problems", "describe the suite");

  try {
    app.parse(argc, argv);
    if (run->parsed()) return cmd_run(config_path, out_dir);
    if (sweep->parsed()) return cmd_sweep(config_path, out_dir);
    if (lemmas->parsed()) return cmd_verify_lemmas(cases, seed, out_dir);
    if (list->parsed()) return cmd_list_problems();
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 3;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
