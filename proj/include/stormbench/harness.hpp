#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "stormbench/runner.hpp"

namespace stormbench {

struct ResultRow {
  std::string config_hash;
  std::string algorithm;
  std::string problem;
  int dim = 0;
  double sigma = 0.0;
  std::int64_t T = 0;
  int repetition = 0;
  std::uint64_t seed = 0;
  RunStatus status = RunStatus::Ok;
  std::optional<double> stationarity_metric;
  std::optional<double> grad_norm_at_output;
  std::optional<std::int64_t> output_index;
  std::uint64_t oracle_calls = 0;
  std::int64_t wall_ms = 0;  // recorded, excluded from determinism guarantees
};

struct SingleRun {
  ResultRow row;
  RunOutcome outcome;
};

// One (config, grid cell, repetition) run with its result row. Everything in
// the row except wall_ms is a pure function of the arguments.
inline SingleRun run_single(const ExperimentConfig& cfg, const Problem& p,
                            std::int64_t T, int grid_index, int repetition,
                            const RunOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  SingleRun r;
  r.outcome = run_repetition(cfg, p, T, grid_index, repetition, opts);
  const auto t1 = std::chrono::steady_clock::now();

  r.row.config_hash = config_hash(cfg);
  r.row.algorithm = to_string(cfg.algorithm);
  r.row.problem = std::string(p.name());
  r.row.dim = p.dim();
  r.row.sigma = p.sigma();
  r.row.T = T;
  r.row.repetition = repetition;
  r.row.seed = RepStreams(cfg.master_seed, grid_index, repetition).base;
  r.row.status = r.outcome.status;
  if (r.outcome.status == RunStatus::Ok) {
    r.row.stationarity_metric = r.outcome.metric;
    r.row.grad_norm_at_output = r.outcome.grad_norm_at_output;
    r.row.output_index = r.outcome.output_index;
  }
  r.row.oracle_calls = r.outcome.oracle_calls;
  r.row.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0)
                      .count();
  return r;
}

inline SingleRun run_single(const ExperimentConfig& cfg, int repetition) {
  if (cfg.T < 1) throw ConfigError("run_single: config has no run.T");
  const Problem p = make_problem(cfg);
  return run_single(cfg, p, cfg.T, /*grid_index=*/0, repetition,
                    run_options_for(cfg, cfg.T));
}

// ---------------------------------------------------------------------------
// Sweeps over a T grid
// ---------------------------------------------------------------------------

struct SweepCell {
  std::int64_t T = 0;
  int ok_reps = 0;
  double mean_metric = 0.0;
  double mean_metric_sq = 0.0;  // mean over reps of (1/T) sum ||gbar_t||^2
  double stderr_metric = 0.0;
  double median_metric = 0.0;  // for heavy-tail inspection; fits use the mean
  std::uint64_t oracle_calls = 0;  // per repetition (2T+1 two-point, T otherwise)
};

struct SweepResult {
  std::vector<ResultRow> rows;
  std::vector<SweepCell> cells;
  // Log-log fits over grid cells with every repetition Ok, after burn-in.
  // `fit` regresses the mean metric (r_squared is shared by any power of the
  // metric); `fit_sq` regresses the mean squared metric.
  std::optional<RateFit> fit;
  std::optional<RateFit> fit_sq;
  // False when some grid cell has no Ok repetition at all; cells with partial
  // divergence still average over their Ok repetitions (see ok_reps).
  bool all_cells_valid = false;
  InvariantCounters counters;  // aggregated over every run of the sweep
};

// Sweep plumbing with an injectable per-repetition runner so the aggregation
// and fitting can be exercised with planted metrics. The callable receives
// (T, grid_index, repetition) and returns the per-run result.
template <class RepFn>
SweepResult run_sweep_with(const ExperimentConfig& cfg, RepFn&& run_rep) {
  if (cfg.t_grid.empty()) throw ConfigError("run_sweep: config has no run.t_grid");
  SweepResult result;
  bool all_valid = true;
  for (std::size_t gi = 0; gi < cfg.t_grid.size(); ++gi) {
    const std::int64_t T = cfg.t_grid[gi];
    SweepCell cell;
    cell.T = T;
    std::vector<double> metrics;
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
      SingleRun r = run_rep(T, static_cast<int>(gi), rep);
      if (r.row.status == RunStatus::Ok && r.row.stationarity_metric)
        metrics.push_back(*r.row.stationarity_metric);
      result.counters.absorb(r.outcome.counters);
      cell.oracle_calls = std::max(cell.oracle_calls, r.row.oracle_calls);
      result.rows.push_back(std::move(r.row));
    }
    cell.ok_reps = static_cast<int>(metrics.size());
    if (!metrics.empty()) {
      double s = 0.0, s2 = 0.0;
      for (double m : metrics) {
        s += m;
        s2 += m * m;
      }
      const double n = static_cast<double>(metrics.size());
      cell.mean_metric = s / n;
      cell.mean_metric_sq = s2 / n;
      if (metrics.size() > 1) {
        double var = 0.0;
        for (double m : metrics) var += (m - cell.mean_metric) * (m - cell.mean_metric);
        var /= (n - 1.0);
        cell.stderr_metric = std::sqrt(var / n);
      }
      std::sort(metrics.begin(), metrics.end());
      const std::size_t mid = metrics.size() / 2;
      cell.median_metric = metrics.size() % 2 == 1
                               ? metrics[mid]
                               : 0.5 * (metrics[mid - 1] + metrics[mid]);
    }
    if (cell.ok_reps == 0) all_valid = false;
    result.cells.push_back(cell);
  }
  result.all_cells_valid = all_valid;

  if (all_valid && result.cells.size() >=
                       static_cast<std::size_t>(cfg.burn_in) + 4) {
    std::vector<std::pair<double, double>> grid, grid_sq;
    for (const SweepCell& c : result.cells) {
      grid.emplace_back(static_cast<double>(c.T), c.mean_metric);
      grid_sq.emplace_back(static_cast<double>(c.T), c.mean_metric_sq);
    }
    result.fit = fit_rate(grid, cfg.burn_in);
    result.fit_sq = fit_rate(grid_sq, cfg.burn_in);
  }

  std::sort(result.rows.begin(), result.rows.end(),
            [](const ResultRow& a, const ResultRow& b) {
              return std::tie(a.algorithm, a.problem, a.T, a.repetition) <
                     std::tie(b.algorithm, b.problem, b.T, b.repetition);
            });
  return result;
}

inline SweepResult run_sweep(const ExperimentConfig& cfg) {
  const Problem p = make_problem(cfg);
  return run_sweep_with(cfg, [&](std::int64_t T, int grid_index, int rep) {
    return run_single(cfg, p, T, grid_index, rep, run_options_for(cfg, T));
  });
}

// ---------------------------------------------------------------------------
// CSV persistence. Fixed column order, %.17g floats (round-trip exact),
// deterministic row order; rows with a non-Ok status keep their metric cells
// empty rather than carrying fabricated numbers.
// ---------------------------------------------------------------------------

inline constexpr const char* kResultsHeader =
    "config_hash,algorithm,problem,dim,sigma,T,repetition,seed,status,"
    "stationarity_metric,grad_norm_at_output,output_index,oracle_calls,"
    "wall_ms";

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

}  // namespace detail

inline std::string results_to_csv(std::vector<ResultRow> rows) {
  std::sort(rows.begin(), rows.end(),
            [](const ResultRow& a, const ResultRow& b) {
              return std::tie(a.algorithm, a.problem, a.T, a.repetition) <
                     std::tie(b.algorithm, b.problem, b.T, b.repetition);
            });
  std::string out(kResultsHeader);
  out.push_back('\n');
  char buf[64];
  for (const ResultRow& r : rows) {
    out += r.config_hash;
    out.push_back(',');
    out += r.algorithm;
    out.push_back(',');
    out += r.problem;
    out.push_back(',');
    std::snprintf(buf, sizeof(buf), "%d,", r.dim);
    out += buf;
    out += detail::fmt_double(r.sigma);
    out.push_back(',');
    std::snprintf(buf, sizeof(buf), "%lld,%d,%llu,",
                  static_cast<long long>(r.T), r.repetition,
                  static_cast<unsigned long long>(r.seed));
    out += buf;
    out += to_string(r.status);
    out.push_back(',');
    if (r.stationarity_metric) out += detail::fmt_double(*r.stationarity_metric);
    out.push_back(',');
    if (r.grad_norm_at_output) out += detail::fmt_double(*r.grad_norm_at_output);
    out.push_back(',');
    if (r.output_index) {
      std::snprintf(buf, sizeof(buf), "%lld",
                    static_cast<long long>(*r.output_index));
      out += buf;
    }
    out.push_back(',');
    std::snprintf(buf, sizeof(buf), "%llu,%lld",
                  static_cast<unsigned long long>(r.oracle_calls),
                  static_cast<long long>(r.wall_ms));
    out += buf;
    out.push_back('\n');
  }
  return out;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << text;
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

inline void write_results(const std::vector<ResultRow>& rows,
                          const std::string& path) {
  write_text_file(path, results_to_csv(rows));
}

inline std::string trajectory_to_csv(const std::vector<TrajectoryRecord>& recs) {
  std::string out = "t,eta,a,norm_d_sq,norm_exact_grad_sq,norm_eps_sq\n";
  char buf[32];
  for (const TrajectoryRecord& r : recs) {
    std::snprintf(buf, sizeof(buf), "%lld,", static_cast<long long>(r.t));
    out += buf;
    out += detail::fmt_double(r.eta);
    out.push_back(',');
    out += detail::fmt_double(r.a);
    out.push_back(',');
    out += detail::fmt_double(r.norm_d_sq);
    out.push_back(',');
    out += detail::fmt_double(r.norm_exact_grad_sq);
    out.push_back(',');
    out += detail::fmt_double(r.norm_eps_sq);
    out.push_back('\n');
  }
  return out;
}

inline void write_trajectory(const std::vector<TrajectoryRecord>& recs,
                             const std::string& path) {
  write_text_file(path, trajectory_to_csv(recs));
}

}  // namespace stormbench
