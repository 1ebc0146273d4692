#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <variant>
#include <vector>

#include "stormbench/config.hpp"
#include "stormbench/diagnostics.hpp"
#include "stormbench/optimizers.hpp"

namespace stormbench {

struct RunOptions {
  int log_stride = 1;
  bool retain = false;      // keep full per-step probes (memory ~ T * dim)
  bool check_z = true;      // drift-bound accounting at logged steps
  bool with_f_gap = false;  // costs one exact value per logged step
};

// Along-trajectory schedule invariants, counted every step. All of these are
// theorems for the adaptive schedules, so any nonzero count is a bug.
struct InvariantCounters {
  std::int64_t a_range_violations = 0;     // a_{t+1} not in (0, 1]
  std::int64_t a_monotone_violations = 0;  // a increased
  std::int64_t eta_monotone_violations = 0;
  std::int64_t z_bound_violations = 0;     // ||Z_t|| > 2 L eta_{t-1} ||d_{t-1}||
  std::int64_t z_checked = 0;
  std::int64_t steps = 0;

  void absorb(const InvariantCounters& c) {
    a_range_violations += c.a_range_violations;
    a_monotone_violations += c.a_monotone_violations;
    eta_monotone_violations += c.eta_monotone_violations;
    z_bound_violations += c.z_bound_violations;
    z_checked += c.z_checked;
    steps += c.steps;
  }
};

struct RunOutcome {
  RunStatus status = RunStatus::Ok;
  std::int64_t fail_step = -1;
  std::vector<TrajectoryRecord> records;
  RetainedTrajectory retained;
  InvariantCounters counters;
  std::uint64_t oracle_calls = 0;
  std::int64_t output_index = -1;  // selected t in [1, T]
  Vec output_point;
  double grad_norm_at_output = std::numeric_limits<double>::quiet_NaN();
  double metric = std::numeric_limits<double>::quiet_NaN();
  double a_after_last = std::numeric_limits<double>::quiet_NaN();  // a_{T+1}
};

// Child streams for one repetition: sampling, x0 and output selection are
// separated so that consuming more of one never shifts another.
struct RepStreams {
  RepStreams(std::uint64_t master_seed, int grid_index, int repetition)
      : base(derive_seed(master_seed, static_cast<std::uint64_t>(grid_index),
                         static_cast<std::uint64_t>(repetition))),
        sample(derive_seed(base, 1)),
        x0(derive_seed(base, 2)),
        select(derive_seed(base, 3)) {}
  std::uint64_t base;
  RngStream sample;
  SplitMix64 x0;
  SplitMix64 select;
};

inline Vec make_x0(const ExperimentConfig& cfg, SplitMix64& gen) {
  if (cfg.x0_kind == X0Kind::Constant) return Vec(cfg.dim, cfg.x0_scale);
  Vec x(cfg.dim);
  fill_normal(gen, x);
  for (double& v : x) v *= cfg.x0_scale;
  return x;
}

inline AnyOptimizer make_optimizer(const ExperimentConfig& cfg, const Problem& p,
                                   Vec x0, RngStream& sample) {
  switch (cfg.algorithm) {
    case Algorithm::StormPlus:
      return AnyOptimizer{std::in_place_type<StormPlus>, p, std::move(x0),
                          StormPlusSchedule(cfg.lr_scale), sample};
    case Algorithm::SimplifiedStormPlus:
      return AnyOptimizer{std::in_place_type<SimplifiedStormPlus>, p,
                          std::move(x0),
                          SimplifiedStormPlusSchedule(cfg.lr_scale), sample};
    case Algorithm::Storm:
      return AnyOptimizer{std::in_place_type<Storm>, p, std::move(x0),
                          StormSchedule(cfg.theta, cfg.w, cfg.c, cfg.l_hint),
                          sample};
    case Algorithm::Sgd:
      return AnyOptimizer{std::in_place_type<SgdMomentum>, p, std::move(x0),
                          cfg.lr, cfg.momentum};
    case Algorithm::AdaGrad:
      return AnyOptimizer{std::in_place_type<AdaGrad>, p, std::move(x0),
                          cfg.lr, cfg.adagrad_eps};
    case Algorithm::Adam:
      return AnyOptimizer{std::in_place_type<Adam>, p, std::move(x0), cfg.lr,
                          cfg.beta1, cfg.beta2, cfg.eps};
  }
  throw ConfigError("unknown algorithm");
}

namespace detail {

template <class Opt>
RunOutcome run_loop(const Problem& p, Opt& opt, std::int64_t T,
                    RngStream& sample, SplitMix64& select_gen,
                    const RunOptions& opts) {
  RunOutcome out;
  constexpr bool kTwoPoint = Opt::two_point();
  const int stride = std::max(1, opts.log_stride);

  if (opt.status() != RunStatus::Ok) {
    out.status = opt.status();
    out.fail_step = 1;
    out.oracle_calls = opt.oracle_calls();
    return out;
  }

  // The output iterate is chosen uniformly from {x_1, ..., x_T}; drawing the
  // index from its own stream up front lets the loop keep only one snapshot.
  const std::int64_t out_t =
      1 + static_cast<std::int64_t>(select_index(static_cast<std::size_t>(T),
                                                 select_gen));
  const double min_value = opts.with_f_gap ? p.min_value() : 0.0;

  out.records.reserve(static_cast<std::size_t>((T + stride - 1) / stride));

  Vec prev_x;
  Vec prev_gbar;
  bool prev_gbar_valid = false;
  double prev_eta = 0.0, prev_d_norm = 0.0;
  double last_a_next = 1.0, last_eta = 0.0;

  if constexpr (kTwoPoint) {
    // Post-init schedule state: a_2 must already sit in (0, 1] (a_1 = 1).
    last_a_next = opt.a_next();
    last_eta = opt.eta();
    if (!(last_a_next > 0.0 && last_a_next <= 1.0))
      ++out.counters.a_range_violations;
  }

  for (std::int64_t t = 1; t <= T; ++t) {
    const Vec& x_t = opt.iterate();
    if (t == out_t) {
      out.output_point = x_t;
      out.output_index = t;
    }
    const bool logged = ((t - 1) % stride) == 0;

    Vec gbar;
    if (logged || opts.retain) gbar = p.exact_grad(x_t);

    if constexpr (kTwoPoint) {
      if (logged || opts.retain) {
        TrajectoryRecord rec;
        rec.t = t;
        rec.eta = opt.eta();
        rec.a = opt.a_used();
        rec.norm_d_sq = norm_sq(opt.momentum());
        rec.norm_exact_grad_sq = norm_sq(gbar);
        rec.norm_eps_sq = norm_sq(sub(opt.momentum(), gbar));
        if (opts.with_f_gap) rec.f_gap = p.exact_value(x_t) - min_value;

        if (t >= 2 && opts.check_z) {
          if (!prev_gbar_valid) prev_gbar = p.exact_grad(prev_x);
          double z_sq = 0.0;
          const Vec& g = opt.last_g();
          const Vec& gt = opt.last_g_tilde();
          for (std::size_t j = 0; j < g.size(); ++j) {
            const double z = (g[j] - gt[j]) - (gbar[j] - prev_gbar[j]);
            z_sq += z * z;
          }
          rec.norm_z_sq = z_sq;
          if (std::isfinite(p.smoothness())) {
            const double cap = 2.0 * p.smoothness() * prev_eta * prev_d_norm;
            ++out.counters.z_checked;
            // Hair of slack for the float subtractions on either side.
            if (std::sqrt(z_sq) > cap * (1.0 + 1e-9) + 1e-300)
              ++out.counters.z_bound_violations;
          }
        }
        if (logged) out.records.push_back(rec);

        if (opts.retain) {
          RetainedStep rs;
          rs.a = opt.a_used();
          rs.eta_prev = prev_eta;
          rs.eta = opt.eta();
          rs.d = opt.momentum();
          rs.g = opt.last_g();
          if (t >= 2) rs.g_tilde_prev = opt.last_g_tilde();
          rs.exact_grad = gbar;
          rs.f_value = p.exact_value(x_t);
          out.retained.steps.push_back(std::move(rs));
        }
      }

      prev_x = x_t;
      prev_gbar = std::move(gbar);
      prev_gbar_valid = !prev_gbar.empty();
      prev_eta = opt.eta();
      prev_d_norm = norm(opt.momentum());

      opt.step(p, sample);
      ++out.counters.steps;

      const double a_next = opt.a_next();
      const double eta = opt.eta();
      if (!(a_next > 0.0 && a_next <= 1.0)) ++out.counters.a_range_violations;
      if (a_next > last_a_next) ++out.counters.a_monotone_violations;
      if (eta > last_eta) ++out.counters.eta_monotone_violations;
      last_a_next = a_next;
      last_eta = eta;
    } else {
      // Baselines: the step's gradient is drawn inside step(), so the d/eps
      // fields are completed right after it with that gradient.
      double f_gap_val = 0.0;
      if (logged && opts.with_f_gap) f_gap_val = p.exact_value(x_t) - min_value;
      opt.step(p, sample);
      ++out.counters.steps;
      if (logged) {
        TrajectoryRecord rec;
        rec.t = t;
        rec.eta = opt.eta();
        rec.a = 1.0;
        rec.norm_exact_grad_sq = norm_sq(gbar);
        rec.norm_d_sq = norm_sq(opt.last_g());
        rec.norm_eps_sq = norm_sq(sub(opt.last_g(), gbar));
        if (opts.with_f_gap) rec.f_gap = f_gap_val;
        out.records.push_back(rec);
      }
    }

    if (opt.status() == RunStatus::DivergenceDetected) {
      out.status = RunStatus::DivergenceDetected;
      out.fail_step = t;
      break;
    }
  }

  out.oracle_calls = opt.oracle_calls();
  if constexpr (kTwoPoint) out.a_after_last = opt.a_used();

  if (out.status == RunStatus::Ok) {
    out.metric = stationarity_metric(out.records);
    out.grad_norm_at_output = norm(p.exact_grad(out.output_point));
  }
  return out;
}

}  // namespace detail

// One repetition of one experiment cell: a pure function of
// (config, grid_index, repetition).
inline RunOutcome run_repetition(const ExperimentConfig& cfg, const Problem& p,
                                 std::int64_t T, int grid_index,
                                 int repetition, const RunOptions& opts) {
  RepStreams streams(cfg.master_seed, grid_index, repetition);
  AnyOptimizer opt = make_optimizer(cfg, p, make_x0(cfg, streams.x0),
                                    streams.sample);
  return std::visit(
      [&](auto& o) {
        return detail::run_loop(p, o, T, streams.sample, streams.select, opts);
      },
      opt);
}

inline RunOptions run_options_for(const ExperimentConfig& cfg, std::int64_t T) {
  RunOptions opts;
  opts.log_stride = effective_log_stride(cfg, T);
  return opts;
}

}  // namespace stormbench
