#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "stormbench/rng.hpp"

namespace stormbench {

// Numerical checks of the inequality toolbox behind the adaptive schedules.
// Every check computes both sides directly; the inequalities are theorems on
// their stated preconditions, so a single failure beyond rounding tolerance
// means the implementation (ours or the caller's sequence) is wrong.

struct SequenceCase {
  std::vector<double> values;
  double p = 0.5;     // exponent in (0,1) where applicable
  double b0 = 1.0;    // shift for the delayed variant
  double bmax = 1.0;  // upper bound on values where required
};

struct CheckResult {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

// lhs <= rhs up to rounding: all quantities here are O(1)-conditioned sums
// of positive terms, so a hair of relative slack absorbs pow/accumulation
// noise without masking real violations.
inline bool leq_with_tolerance(double lhs, double rhs) {
  return lhs <= rhs * (1.0 + 1e-12) + 1e-300;
}

// sum_i b_i / (sum_{j<=i} b_j)^p  <=  (1/(1-p)) (sum_i b_i)^{1-p}
// for b_1 > 0, b_i >= 0, p in (0,1).
inline CheckResult check_technical_1(const SequenceCase& c) {
  if (!(c.p > 0.0 && c.p < 1.0))
    throw std::invalid_argument("check_technical_1: p must be in (0,1)");
  if (c.values.empty() || !(c.values.front() > 0.0))
    throw std::invalid_argument("check_technical_1: b_1 must be > 0");
  CheckResult r;
  double prefix = 0.0;
  for (double b : c.values) {
    if (b < 0.0)
      throw std::invalid_argument("check_technical_1: values must be >= 0");
    prefix += b;
    r.lhs += b / std::pow(prefix, c.p);
  }
  r.rhs = std::pow(prefix, 1.0 - c.p) / (1.0 - c.p);
  r.holds = leq_with_tolerance(r.lhs, r.rhs);
  return r;
}

// sum_i a_i / (1 + sum_{j<=i} a_j)^{4/3}  <=  12  for a_i >= 0.
// The statement in the source also assumes a_i <= a_max, but the bound does
// not depend on it, so unbounded non-negative sequences are accepted here.
inline CheckResult check_const_sum(const std::vector<double>& values) {
  CheckResult r;
  double prefix = 0.0;
  for (double a : values) {
    if (a < 0.0)
      throw std::invalid_argument("check_const_sum: values must be >= 0");
    prefix += a;
    r.lhs += a / std::pow(1.0 + prefix, 4.0 / 3.0);
  }
  r.rhs = 12.0;
  r.holds = leq_with_tolerance(r.lhs, r.rhs);
  return r;
}

// sum_i a_i / (1 + sum_{j<i} a_j)^{4/3}  <=  12 + 2 a_max
// for a_i in [0, a_max].
inline CheckResult check_const_sum_delayed(const SequenceCase& c) {
  if (!(c.bmax > 0.0))
    throw std::invalid_argument("check_const_sum_delayed: a_max must be > 0");
  CheckResult r;
  double prefix = 0.0;
  for (double a : c.values) {
    if (a < 0.0 || a > c.bmax)
      throw std::invalid_argument(
          "check_const_sum_delayed: values must be in [0, a_max]");
    r.lhs += a / std::pow(1.0 + prefix, 4.0 / 3.0);
    prefix += a;
  }
  r.rhs = 12.0 + 2.0 * c.bmax;
  r.holds = leq_with_tolerance(r.lhs, r.rhs);
  return r;
}

// sum_i b_i / (b_0 + sum_{j<i} b_j)^p
//   <=  b/b_0^p + (2/(1-p)) (b_0 + sum_i b_i)^{1-p}
// for b_i in (0, b], b_0 > 0, p in (0,1).
inline CheckResult check_shifted_technical_1(const SequenceCase& c) {
  if (!(c.p > 0.0 && c.p < 1.0))
    throw std::invalid_argument("check_shifted_technical_1: p must be in (0,1)");
  if (!(c.b0 > 0.0))
    throw std::invalid_argument("check_shifted_technical_1: b0 must be > 0");
  if (!(c.bmax > 0.0))
    throw std::invalid_argument("check_shifted_technical_1: b must be > 0");
  CheckResult r;
  double prefix = 0.0;
  for (double b : c.values) {
    if (!(b > 0.0) || b > c.bmax)
      throw std::invalid_argument(
          "check_shifted_technical_1: values must be in (0, b]");
    r.lhs += b / std::pow(c.b0 + prefix, c.p);
    prefix += b;
  }
  r.rhs = c.bmax / std::pow(c.b0, c.p) +
          2.0 / (1.0 - c.p) * std::pow(c.b0 + prefix, 1.0 - c.p);
  r.holds = leq_with_tolerance(r.lhs, r.rhs);
  return r;
}

struct MomentumGapReport {
  double beta = 1.0;           // min(1, 1/G^4)
  std::int64_t tau_star = 0;   // last t with a_t >= beta
  double inv_a_cap = 0.0;      // (1/beta^{3/2} + G^2)^{2/3}
  double max_gap_after = 0.0;  // max 1/a_{t+1} - 1/a_t over t > tau_star
  double max_inv_a_early = 0.0;
  bool holds = false;
};

// Reconstructs a_t = (1 + sum_{i<t} ||g_i||^2)^{-2/3} from a sequence of
// squared gradient norms bounded by G^2 and checks the two-phase momentum
// bound: before the stopping time tau* the inverse momentum stays below
// (1/beta^{3/2} + G^2)^{2/3}; after it, consecutive inverse gaps are <= 2/3.
inline MomentumGapReport check_momentum_gap(const std::vector<double>& gnorm_sq,
                                            double G) {
  if (!(G > 0.0))
    throw std::invalid_argument("check_momentum_gap: G must be > 0");
  const double g_cap = G * G;
  for (double v : gnorm_sq) {
    if (v < 0.0 || v > g_cap * (1.0 + 1e-12))
      throw std::invalid_argument(
          "check_momentum_gap: ||g||^2 outside [0, G^2]");
  }
  const std::int64_t n = static_cast<std::int64_t>(gnorm_sq.size());
  if (n == 0) throw std::invalid_argument("check_momentum_gap: empty sequence");

  // a_t for t = 1..n+1; a_1 = 1.
  std::vector<double> a(static_cast<std::size_t>(n) + 1);
  double prefix = 0.0;
  a[0] = 1.0;
  for (std::int64_t t = 1; t <= n; ++t) {
    prefix += gnorm_sq[static_cast<std::size_t>(t - 1)];
    a[static_cast<std::size_t>(t)] = std::pow(1.0 + prefix, -2.0 / 3.0);
  }

  MomentumGapReport rep;
  rep.beta = std::min(1.0, 1.0 / (g_cap * g_cap));
  rep.inv_a_cap =
      std::pow(std::pow(1.0 / rep.beta, 1.5) + g_cap, 2.0 / 3.0);
  rep.tau_star = 1;  // a_1 = 1 >= beta always
  for (std::int64_t t = 1; t <= n; ++t) {
    if (a[static_cast<std::size_t>(t - 1)] >= rep.beta) rep.tau_star = t;
  }

  bool ok = true;
  for (std::int64_t t = 1; t <= n; ++t) {
    const double inv_next = 1.0 / a[static_cast<std::size_t>(t)];
    if (t <= rep.tau_star) {
      rep.max_inv_a_early = std::max(rep.max_inv_a_early, inv_next);
      if (!leq_with_tolerance(inv_next, rep.inv_a_cap)) ok = false;
    } else {
      const double gap = inv_next - 1.0 / a[static_cast<std::size_t>(t - 1)];
      rep.max_gap_after = std::max(rep.max_gap_after, gap);
      if (!leq_with_tolerance(gap, 2.0 / 3.0)) ok = false;
    }
  }
  rep.holds = ok;
  return rep;
}

// Trajectory-coupled bound (harvested runs only; a synthetic sequence cannot
// satisfy the coupling between gradients, errors and momenta):
//   sum ||gbar_t||^2 <= sum ||eps_t||^2
//                       + 2 B a_{T+1}^{-1/3} (sum ||d_t||^2)^{1/3}
//                       + (3/2) L (sum ||d_t||^2)^{2/3}
// valid for runs with lr_scale = 1 and finite declared B, L.
inline CheckResult check_sum_grad_bound(double sum_gbar_sq, double sum_eps_sq,
                                        double sum_d_sq, double a_T_plus_1,
                                        double B, double L) {
  if (!(a_T_plus_1 > 0.0) || !(B > 0.0) || !(L > 0.0) ||
      !std::isfinite(B) || !std::isfinite(L))
    throw std::invalid_argument("check_sum_grad_bound: invalid constants");
  CheckResult r;
  r.lhs = sum_gbar_sq;
  r.rhs = sum_eps_sq +
          2.0 * B * std::pow(a_T_plus_1, -1.0 / 3.0) * std::cbrt(sum_d_sq) +
          1.5 * L * std::pow(sum_d_sq, 2.0 / 3.0);
  r.holds = leq_with_tolerance(r.lhs, r.rhs);
  return r;
}

// ---------------------------------------------------------------------------
// Randomized suite
// ---------------------------------------------------------------------------

struct LemmaSuiteRow {
  std::string lemma;
  int cases = 0;
  int violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();  // min (rhs-lhs)/rhs
};

namespace detail {

inline double log_uniform(SplitMix64& gen, double lo, double hi) {
  return lo * std::exp(uniform01(gen) * std::log(hi / lo));
}

inline std::size_t random_case_size(SplitMix64& gen) {
  // log-uniform over [1, 1e4]
  return static_cast<std::size_t>(log_uniform(gen, 1.0, 1.0e4));
}

inline void track(LemmaSuiteRow& row, double lhs, double rhs, bool holds) {
  ++row.cases;
  if (!holds) ++row.violations;
  const double margin = (rhs - lhs) / std::max(std::abs(rhs), 1e-300);
  row.worst_margin = std::min(row.worst_margin, margin);
}

}  // namespace detail

// Runs cases_per_lemma randomized cases per inequality, with sizes in
// [1, 1e4] and values log-uniform over [1e-6, 1e3] subject to each lemma's
// preconditions. Returns one row per lemma with violation counts and the
// smallest observed relative margin.
inline std::vector<LemmaSuiteRow> run_lemma_suite(int cases_per_lemma,
                                                  std::uint64_t seed) {
  if (cases_per_lemma < 1)
    throw std::invalid_argument("run_lemma_suite: cases_per_lemma must be >= 1");
  LemmaSuiteRow technical{"technical_1"};
  LemmaSuiteRow const_sum{"const_sum"};
  LemmaSuiteRow delayed{"const_sum_delayed"};
  LemmaSuiteRow shifted{"shifted_technical_1"};
  LemmaSuiteRow gap{"momentum_gap"};

  SplitMix64 gen(derive_seed(seed, 0x6c656d6dull));
  for (int k = 0; k < cases_per_lemma; ++k) {
    // technical_1: b_1 > 0, occasional zero tail entries
    {
      SequenceCase c;
      c.p = uniform_in(gen, 0.05, 0.95);
      c.values.resize(detail::random_case_size(gen));
      for (std::size_t i = 0; i < c.values.size(); ++i) {
        const bool zero = i > 0 && uniform01(gen) < 0.1;
        c.values[i] = zero ? 0.0 : detail::log_uniform(gen, 1e-6, 1e3);
      }
      const CheckResult r = check_technical_1(c);
      detail::track(technical, r.lhs, r.rhs, r.holds);
    }
    // const_sum: non-negative, occasional zeros
    {
      std::vector<double> values(detail::random_case_size(gen));
      for (double& v : values)
        v = uniform01(gen) < 0.1 ? 0.0 : detail::log_uniform(gen, 1e-6, 1e3);
      const CheckResult r = check_const_sum(values);
      detail::track(const_sum, r.lhs, r.rhs, r.holds);
    }
    // const_sum_delayed: values in [0, a_max]
    {
      SequenceCase c;
      c.bmax = detail::log_uniform(gen, 1e-6, 1e3);
      c.values.resize(detail::random_case_size(gen));
      for (double& v : c.values) v = uniform01(gen) * c.bmax;
      const CheckResult r = check_const_sum_delayed(c);
      detail::track(delayed, r.lhs, r.rhs, r.holds);
    }
    // shifted_technical_1: values in (0, b], b0 > 0
    {
      SequenceCase c;
      c.p = uniform_in(gen, 0.05, 0.95);
      c.b0 = detail::log_uniform(gen, 1e-6, 1e3);
      c.values.resize(detail::random_case_size(gen));
      double vmax = 0.0;
      for (double& v : c.values) {
        v = detail::log_uniform(gen, 1e-6, 1e3);
        vmax = std::max(vmax, v);
      }
      c.bmax = vmax * uniform_in(gen, 1.0, 2.0);
      const CheckResult r = check_shifted_technical_1(c);
      detail::track(shifted, r.lhs, r.rhs, r.holds);
    }
    // momentum_gap: ||g_t||^2 in [0, G^2]
    {
      std::vector<double> gsq(detail::random_case_size(gen));
      double vmax = 0.0;
      for (double& v : gsq) {
        v = uniform01(gen) < 0.1 ? 0.0 : detail::log_uniform(gen, 1e-6, 1e3);
        vmax = std::max(vmax, v);
      }
      const double G = std::sqrt(std::max(vmax, 1e-6) * uniform_in(gen, 1.0, 2.0));
      const MomentumGapReport r = check_momentum_gap(gsq, G);
      // Aggregate margin across both phases of the bound.
      const double m1 = (r.inv_a_cap - r.max_inv_a_early) / r.inv_a_cap;
      const double m2 = (2.0 / 3.0 - r.max_gap_after) / (2.0 / 3.0);
      detail::track(gap, std::max(r.max_inv_a_early, 0.0), r.inv_a_cap,
                    r.holds);
      gap.worst_margin = std::min({gap.worst_margin, m1, m2});
    }
  }
  return {technical, const_sum, delayed, shifted, gap};
}

}  // namespace stormbench
