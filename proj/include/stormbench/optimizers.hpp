#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <variant>

#include "stormbench/problems.hpp"
#include "stormbench/rng.hpp"
#include "stormbench/vec.hpp"

namespace stormbench {

enum class RunStatus { Ok, StationaryAtInit, DivergenceDetected };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Ok: return "Ok";
    case RunStatus::StationaryAtInit: return "StationaryAtInit";
    case RunStatus::DivergenceDetected: return "DivergenceDetected";
  }
  return "?";
}

// d_new = g_new + (1 - a)(d_prev - g_tilde). Kept as a free function so the
// recursion-consistency checks can replay the exact same float operations.
inline Vec corrected_momentum(const Vec& g_new, double a, const Vec& d_prev,
                              const Vec& g_tilde) {
  Vec d(g_new.size());
  const double c = 1.0 - a;
  for (std::size_t j = 0; j < d.size(); ++j)
    d[j] = g_new[j] + c * (d_prev[j] - g_tilde[j]);
  return d;
}

// ---------------------------------------------------------------------------
// Learning-rate / momentum schedules for the corrected-momentum template.
//
// A schedule owns the running accumulators and exposes, at any time,
//   eta()    -- the step size for the next position update (eta_t), and
//   a_next() -- the momentum weight for the next d update (a_{t+1}).
// init() absorbs ||g_1||^2 = ||d_1||^2 and returns false when the step-size
// denominator is exactly zero; absorb() advances the accumulators after a
// new (g, d) pair, in the fixed order: g-sum, then a_{t+2}, then d-sum,
// then eta. Reordering changes the algorithm.
// ---------------------------------------------------------------------------

// Parameter-free adaptive schedule:
//   a_{t+1} = (1 + sum_{i<=t} ||g_i||^2)^{-2/3}
//   eta_t   = lr_scale * (sum_{i<=t} ||d_i||^2 / a_{i+1})^{-1/3}
struct StormPlusSchedule {
  explicit StormPlusSchedule(double lr_scale_in = 1.0) : lr_scale(lr_scale_in) {
    if (!(lr_scale > 0.0))
      throw std::invalid_argument("storm_plus: lr_scale must be > 0");
  }

  bool init(double g_sq, double d_sq) {
    sum_g_sq = g_sq;
    a_next_ = std::pow(1.0 + sum_g_sq, -2.0 / 3.0);
    sum_d_over_a = d_sq / a_next_;
    if (sum_d_over_a == 0.0) return false;
    eta_ = lr_scale * std::pow(sum_d_over_a, -1.0 / 3.0);
    return true;
  }

  void absorb(double g_sq, double d_sq) {
    sum_g_sq += g_sq;
    a_next_ = std::pow(1.0 + sum_g_sq, -2.0 / 3.0);
    sum_d_over_a += d_sq / a_next_;
    eta_ = lr_scale * std::pow(sum_d_over_a, -1.0 / 3.0);
  }

  double eta() const { return eta_; }
  double a_next() const { return a_next_; }

  double lr_scale;
  double sum_g_sq = 0.0;
  double sum_d_over_a = 0.0;
  double a_next_ = 1.0;
  double eta_ = 0.0;
};

// Non-adaptive momentum a_1 = 1, a_{t+1} = 1/t^{2/3}; same eta expression.
struct SimplifiedStormPlusSchedule {
  explicit SimplifiedStormPlusSchedule(double lr_scale_in = 1.0)
      : lr_scale(lr_scale_in) {
    if (!(lr_scale > 0.0))
      throw std::invalid_argument("simplified_storm_plus: lr_scale must be > 0");
  }

  bool init(double /*g_sq*/, double d_sq) {
    steps = 1;
    a_next_ = 1.0;  // a_2 = 1/1^{2/3}
    sum_d_over_a = d_sq / a_next_;
    if (sum_d_over_a == 0.0) return false;
    eta_ = lr_scale * std::pow(sum_d_over_a, -1.0 / 3.0);
    return true;
  }

  void absorb(double /*g_sq*/, double d_sq) {
    ++steps;
    a_next_ = std::pow(static_cast<double>(steps), -2.0 / 3.0);
    sum_d_over_a += d_sq / a_next_;
    eta_ = lr_scale * std::pow(sum_d_over_a, -1.0 / 3.0);
  }

  double eta() const { return eta_; }
  double a_next() const { return a_next_; }

  double lr_scale;
  std::int64_t steps = 0;  // t; a_next = 1/t^{2/3}
  double sum_d_over_a = 0.0;
  double a_next_ = 1.0;
  double eta_ = 0.0;
};

// Original schedule: eta_t = theta / (w + sum_{i<=t} ||g_i||^2)^{1/3} and
// a_{t+1} = min(1, c L^2 eta_t^2). Needs theta, w, c and a smoothness hint;
// there are no safe defaults, callers must supply all of them.
struct StormSchedule {
  StormSchedule(double theta_in, double w_in, double c_in, double l_hint_in)
      : theta(theta_in), w(w_in), c(c_in), l_hint(l_hint_in) {
    if (!(theta > 0.0) || !(w > 0.0) || !(c > 0.0) || !(l_hint > 0.0))
      throw std::invalid_argument("storm: theta, w, c, l_hint must be > 0");
  }

  double eta0() const { return theta / std::cbrt(w); }

  bool init(double g_sq, double /*d_sq*/) {
    sum_g_sq = g_sq;
    recompute();
    return true;  // w > 0 keeps the denominator positive
  }

  void absorb(double g_sq, double /*d_sq*/) {
    sum_g_sq += g_sq;
    recompute();
  }

  double eta() const { return eta_; }
  double a_next() const { return a_next_; }

  double theta, w, c, l_hint;
  double sum_g_sq = 0.0;
  double a_next_ = 1.0;
  double eta_ = 0.0;

 private:
  void recompute() {
    eta_ = theta / std::cbrt(w + sum_g_sq);
    a_next_ = std::min(1.0, c * l_hint * l_hint * eta_ * eta_);
  }
};

// ---------------------------------------------------------------------------
// Corrected-momentum optimizer template (the STORM update family).
//
//   x_{t+1} = x_t - eta_t d_t
//   d_{t+1} = g_{t+1} + (1 - a_{t+1})(d_t - g~_t)
//
// where g_{t+1} and g~_t are evaluated with the *same* fresh sample at the
// new and old points. Two oracle calls per step, one at init.
// ---------------------------------------------------------------------------
template <class Schedule>
class RecursiveMomentum {
 public:
  RecursiveMomentum(const Problem& p, Vec x1, Schedule schedule,
                    RngStream& stream)
      : x_(std::move(x1)), schedule_(std::move(schedule)) {
    const SampleToken tok = p.draw_sample(stream);
    g_last_ = p.stoch_grad(x_, tok);
    ++oracle_calls_;
    d_ = g_last_;
    a_used_ = 1.0;  // d_1 = g_1
    t_ = 1;
    if (!schedule_.init(norm_sq(g_last_), norm_sq(d_)))
      status_ = RunStatus::StationaryAtInit;
    else if (!all_finite(x_) || !all_finite(d_))
      status_ = RunStatus::DivergenceDetected;
  }

  void step(const Problem& p, RngStream& stream) {
    if (status_ != RunStatus::Ok) return;  // zero-denominator or diverged
    const double eta_t = schedule_.eta();
    Vec x_new(x_.size());
    for (std::size_t j = 0; j < x_.size(); ++j)
      x_new[j] = x_[j] - eta_t * d_[j];

    const SampleToken tok = p.draw_sample(stream);
    Vec g_new = p.stoch_grad(x_new, tok);
    g_tilde_last_ = p.stoch_grad(x_, tok);
    oracle_calls_ += 2;

    const double a = schedule_.a_next();
    d_ = corrected_momentum(g_new, a, d_, g_tilde_last_);
    x_ = std::move(x_new);
    a_used_ = a;
    schedule_.absorb(norm_sq(g_new), norm_sq(d_));
    g_last_ = std::move(g_new);
    ++t_;
    if (!all_finite(x_) || !all_finite(d_))
      status_ = RunStatus::DivergenceDetected;
  }

  const Vec& iterate() const { return x_; }
  const Vec& momentum() const { return d_; }
  const Vec& last_g() const { return g_last_; }              // g_t at x_t
  const Vec& last_g_tilde() const { return g_tilde_last_; }  // g~_{t-1}
  double eta() const { return schedule_.eta(); }             // eta_t
  double a_next() const { return schedule_.a_next(); }       // a_{t+1}
  double a_used() const { return a_used_; }                  // a_t (formed d_t)
  std::int64_t t() const { return t_; }
  RunStatus status() const { return status_; }
  std::uint64_t oracle_calls() const { return oracle_calls_; }
  const Schedule& schedule() const { return schedule_; }

  static constexpr bool two_point() { return true; }

 private:
  Vec x_, d_;
  Vec g_last_, g_tilde_last_;
  Schedule schedule_;
  double a_used_ = 1.0;
  std::int64_t t_ = 0;
  std::uint64_t oracle_calls_ = 0;
  RunStatus status_ = RunStatus::Ok;
};

using StormPlus = RecursiveMomentum<StormPlusSchedule>;
using SimplifiedStormPlus = RecursiveMomentum<SimplifiedStormPlusSchedule>;
using Storm = RecursiveMomentum<StormSchedule>;

// ---------------------------------------------------------------------------
// Baselines: textbook updates, one fresh stochastic gradient per step.
// apply() is split out so unit tests can drive crafted gradient sequences.
// ---------------------------------------------------------------------------
class SgdMomentum {
 public:
  SgdMomentum(const Problem& /*p*/, Vec x1, double lr, double momentum)
      : x_(std::move(x1)), buf_(x_.size(), 0.0), lr_(lr), mu_(momentum) {
    if (!(lr > 0.0)) throw std::invalid_argument("sgd: lr must be > 0");
    if (mu_ < 0.0 || mu_ >= 1.0)
      throw std::invalid_argument("sgd: momentum must be in [0, 1)");
  }

  void apply(const Vec& g) {
    require_same_dim(g, x_, "sgd.apply");
    for (std::size_t j = 0; j < x_.size(); ++j) {
      buf_[j] = mu_ * buf_[j] + g[j];
      x_[j] -= lr_ * buf_[j];
    }
    ++t_;
    if (!all_finite(x_)) status_ = RunStatus::DivergenceDetected;
  }

  void step(const Problem& p, RngStream& stream) {
    const SampleToken tok = p.draw_sample(stream);
    g_last_ = p.stoch_grad(x_, tok);
    ++oracle_calls_;
    apply(g_last_);
  }

  const Vec& iterate() const { return x_; }
  const Vec& last_g() const { return g_last_; }
  double eta() const { return lr_; }
  std::int64_t t() const { return t_ + 1; }
  RunStatus status() const { return status_; }
  std::uint64_t oracle_calls() const { return oracle_calls_; }

  static constexpr bool two_point() { return false; }

 private:
  Vec x_, buf_, g_last_;
  double lr_, mu_;
  std::int64_t t_ = 0;
  std::uint64_t oracle_calls_ = 0;
  RunStatus status_ = RunStatus::Ok;
};

class AdaGrad {
 public:
  AdaGrad(const Problem& /*p*/, Vec x1, double lr, double eps = 1e-10)
      : x_(std::move(x1)), acc_(x_.size(), 0.0), lr_(lr), eps_(eps) {
    if (!(lr > 0.0)) throw std::invalid_argument("adagrad: lr must be > 0");
    if (eps < 0.0) throw std::invalid_argument("adagrad: eps must be >= 0");
  }

  void apply(const Vec& g) {
    require_same_dim(g, x_, "adagrad.apply");
    for (std::size_t j = 0; j < x_.size(); ++j) {
      acc_[j] += g[j] * g[j];
      if (acc_[j] > 0.0) x_[j] -= lr_ * g[j] / (std::sqrt(acc_[j]) + eps_);
    }
    ++t_;
    if (!all_finite(x_)) status_ = RunStatus::DivergenceDetected;
  }

  void step(const Problem& p, RngStream& stream) {
    const SampleToken tok = p.draw_sample(stream);
    g_last_ = p.stoch_grad(x_, tok);
    ++oracle_calls_;
    apply(g_last_);
  }

  const Vec& iterate() const { return x_; }
  const Vec& last_g() const { return g_last_; }
  const Vec& accumulator() const { return acc_; }
  double eta() const { return lr_; }
  std::int64_t t() const { return t_ + 1; }
  RunStatus status() const { return status_; }
  std::uint64_t oracle_calls() const { return oracle_calls_; }

  static constexpr bool two_point() { return false; }

 private:
  Vec x_, acc_, g_last_;
  double lr_, eps_;
  std::int64_t t_ = 0;
  std::uint64_t oracle_calls_ = 0;
  RunStatus status_ = RunStatus::Ok;
};

class Adam {
 public:
  Adam(const Problem& /*p*/, Vec x1, double lr, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8)
      : x_(std::move(x1)),
        m_(x_.size(), 0.0),
        v_(x_.size(), 0.0),
        lr_(lr),
        b1_(beta1),
        b2_(beta2),
        eps_(eps) {
    if (!(lr > 0.0)) throw std::invalid_argument("adam: lr must be > 0");
    if (b1_ < 0.0 || b1_ >= 1.0 || b2_ < 0.0 || b2_ >= 1.0)
      throw std::invalid_argument("adam: betas must be in [0, 1)");
    if (eps < 0.0) throw std::invalid_argument("adam: eps must be >= 0");
  }

  void apply(const Vec& g) {
    require_same_dim(g, x_, "adam.apply");
    b1t_ *= b1_;
    b2t_ *= b2_;
    const double c1 = 1.0 / (1.0 - b1t_);
    const double c2 = 1.0 / (1.0 - b2t_);
    for (std::size_t j = 0; j < x_.size(); ++j) {
      m_[j] = b1_ * m_[j] + (1.0 - b1_) * g[j];
      v_[j] = b2_ * v_[j] + (1.0 - b2_) * g[j] * g[j];
      const double denom = std::sqrt(v_[j] * c2) + eps_;
      if (denom > 0.0) x_[j] -= lr_ * (m_[j] * c1) / denom;
    }
    ++t_;
    if (!all_finite(x_)) status_ = RunStatus::DivergenceDetected;
  }

  void step(const Problem& p, RngStream& stream) {
    const SampleToken tok = p.draw_sample(stream);
    g_last_ = p.stoch_grad(x_, tok);
    ++oracle_calls_;
    apply(g_last_);
  }

  const Vec& iterate() const { return x_; }
  const Vec& last_g() const { return g_last_; }
  double eta() const { return lr_; }
  std::int64_t t() const { return t_ + 1; }
  RunStatus status() const { return status_; }
  std::uint64_t oracle_calls() const { return oracle_calls_; }

  static constexpr bool two_point() { return false; }

 private:
  Vec x_, m_, v_, g_last_;
  double lr_, b1_, b2_, eps_;
  double b1t_ = 1.0, b2t_ = 1.0;
  std::int64_t t_ = 0;
  std::uint64_t oracle_calls_ = 0;
  RunStatus status_ = RunStatus::Ok;
};

using AnyOptimizer =
    std::variant<StormPlus, SimplifiedStormPlus, Storm, SgdMomentum, AdaGrad,
                 Adam>;

// Uniform output index over {0, ..., n-1}.
inline std::size_t select_index(std::size_t n, SplitMix64& gen) {
  if (n == 0) throw std::invalid_argument("select_index: empty trajectory");
  return static_cast<std::size_t>(uniform_index(gen, n));
}

// Uniformly random iterate from a stored trajectory; also reports the index.
inline std::pair<Vec, std::size_t> select_output(const std::vector<Vec>& traj,
                                                 SplitMix64& gen) {
  const std::size_t idx = select_index(traj.size(), gen);
  return {traj[idx], idx};
}

}  // namespace stormbench
