#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "stormbench/vec.hpp"

namespace stormbench {

// Per-step observables of a trajectory. eps_t = d_t - grad f(x_t) is the
// momentum error; Z_t = (g_t - g~_{t-1}) - (grad f(x_t) - grad f(x_{t-1}))
// is the smoothness-controlled drift term, recorded when the previous step
// is retained.
struct TrajectoryRecord {
  std::int64_t t = 0;
  double eta = 0.0;
  double a = 0.0;
  double norm_d_sq = 0.0;
  double norm_exact_grad_sq = 0.0;
  double norm_eps_sq = 0.0;
  std::optional<double> norm_z_sq;
  std::optional<double> f_gap;
};

// sqrt((1/T) sum_t ||grad f(x_t)||^2): an upper proxy, via Jensen, for the
// expected gradient norm at a uniformly selected output. Uses the exact
// gradient (diagnostics-only oracle access); a noisy estimate would add a
// variance bias.
inline double stationarity_metric(const std::vector<TrajectoryRecord>& traj) {
  if (traj.empty())
    throw std::invalid_argument("stationarity_metric: empty trajectory");
  double s = 0.0;
  for (const auto& r : traj) s += r.norm_exact_grad_sq;
  return std::sqrt(s / static_cast<double>(traj.size()));
}

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<std::pair<double, double>> grid;  // (T, metric) actually fitted
};

// OLS of log(metric) on log(T) after dropping the first burn_in points.
inline RateFit fit_rate(const std::vector<std::pair<double, double>>& grid,
                        int burn_in = 0) {
  if (burn_in < 0) throw std::invalid_argument("fit_rate: negative burn_in");
  if (grid.size() < static_cast<std::size_t>(burn_in) + 4)
    throw std::invalid_argument("fit_rate: need >= 4 grid points after burn-in");
  RateFit fit;
  double last_t = 0.0;
  for (std::size_t i = static_cast<std::size_t>(burn_in); i < grid.size(); ++i) {
    const auto& [T, m] = grid[i];
    if (!(T > last_t))
      throw std::invalid_argument("fit_rate: grid must be strictly increasing");
    last_t = T;
    if (!(m > 0.0))
      throw std::invalid_argument("fit_rate: metric must be positive");
    fit.grid.emplace_back(T, m);
  }

  const double n = static_cast<double>(fit.grid.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [T, m] : fit.grid) {
    sx += std::log(T);
    sy += std::log(m);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [T, m] : fit.grid) {
    const double dx = std::log(T) - mx;
    const double dy = std::log(m) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  const double ss_res = syy - fit.slope * sxy;  // can round slightly negative
  fit.r_squared =
      (syy > 0.0) ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  return fit;
}

// Full per-step retention for the algebraic identity checks. Step t holds
// the quantities with their algorithm-time indices:
//   d_t, g_t (fresh gradient at x_t), g~_{t-1} (same sample at x_{t-1},
//   empty at t=1), exact gradient at x_t, a_t, eta_{t-1}, f(x_t) when kept.
struct RetainedStep {
  double a = 1.0;
  double eta_prev = 0.0;
  double eta = 0.0;
  Vec d;
  Vec g;
  Vec g_tilde_prev;
  Vec exact_grad;
  double f_value = 0.0;
};

struct RetainedTrajectory {
  std::vector<RetainedStep> steps;
};

struct RecursionReport {
  double max_abs_deviation = 0.0;
  double max_eps_norm = 0.0;
  std::int64_t worst_step = 0;
  std::int64_t steps_checked = 0;
};

// Recomputes the error dynamics
//   eps_t = (1 - a_t) eps_{t-1} + a_t (g_t - gbar_t) + (1 - a_t) Z_t
// from retained values and reports the worst deviation from the directly
// computed eps_t = d_t - gbar_t. Both sides are measured, not estimated, so
// anything beyond rounding indicates a broken update path.
inline RecursionReport verify_error_recursion(const RetainedTrajectory& traj) {
  if (traj.steps.size() < 2)
    throw std::invalid_argument("verify_error_recursion: need >= 2 steps");
  RecursionReport rep;
  const std::size_t dim = traj.steps.front().d.size();
  Vec eps_prev = sub(traj.steps[0].d, traj.steps[0].exact_grad);
  rep.max_eps_norm = norm(eps_prev);
  for (std::size_t k = 1; k < traj.steps.size(); ++k) {
    const RetainedStep& s = traj.steps[k];
    const RetainedStep& sp = traj.steps[k - 1];
    if (s.g.size() != dim || s.g_tilde_prev.size() != dim ||
        s.exact_grad.size() != dim)
      throw std::invalid_argument("verify_error_recursion: missing retained values");
    const Vec eps = sub(s.d, s.exact_grad);
    const double ca = 1.0 - s.a;
    double dev_sq = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double z = (s.g[j] - s.g_tilde_prev[j]) -
                       (s.exact_grad[j] - sp.exact_grad[j]);
      const double rhs = ca * eps_prev[j] +
                         s.a * (s.g[j] - s.exact_grad[j]) + ca * z;
      const double dv = eps[j] - rhs;
      dev_sq += dv * dv;
    }
    const double dev = std::sqrt(dev_sq);
    if (dev > rep.max_abs_deviation) {
      rep.max_abs_deviation = dev;
      rep.worst_step = static_cast<std::int64_t>(k + 1);
    }
    rep.max_eps_norm = std::max(rep.max_eps_norm, norm(eps));
    eps_prev = eps;
    ++rep.steps_checked;
  }
  return rep;
}

// ||Z_t|| for retained step t (t >= 2, algorithm indexing; k is 0-based).
inline double z_norm(const RetainedTrajectory& traj, std::size_t k) {
  if (k == 0 || k >= traj.steps.size())
    throw std::invalid_argument("z_norm: step out of range");
  const RetainedStep& s = traj.steps[k];
  const RetainedStep& sp = traj.steps[k - 1];
  double z_sq = 0.0;
  for (std::size_t j = 0; j < s.g.size(); ++j) {
    const double z =
        (s.g[j] - s.g_tilde_prev[j]) - (s.exact_grad[j] - sp.exact_grad[j]);
    z_sq += z * z;
  }
  return std::sqrt(z_sq);
}

}  // namespace stormbench
