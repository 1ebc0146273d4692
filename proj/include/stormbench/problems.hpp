#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stormbench/rng.hpp"
#include "stormbench/vec.hpp"

namespace stormbench {

enum class ProblemKind {
  NoisyQuadratic,
  SigmoidWell,
  FiniteSumPhaseRetrieval,
  DeterministicRosenbrock,
};

// One realized sample xi. The realization itself is stored (noise vector or
// component indices), so evaluating the gradient twice with the same token --
// at two different points -- is bitwise reproducible by construction.
// Optimizers treat the payload as opaque.
struct SampleToken {
  Vec noise;                           // per-coordinate shift realization
  std::vector<std::uint32_t> indices;  // finite-sum component draws
  std::uint64_t draw_index = 0;
};

namespace detail {

// phi(z) = z^2 / (1 + z^2), a bounded even well with phi(0)=0, phi(inf)=1.
inline double sigmoid_phi(double z) {
  const double z2 = z * z;
  return z2 / (1.0 + z2);
}

// phi'(z) = 2z / (1+z^2)^2.  |phi'| peaks at z^2 = 1/3 with value 3*sqrt(3)/8.
inline double sigmoid_phi_prime(double z) {
  const double q = 1.0 + z * z;
  return 2.0 * z / (q * q);
}

inline constexpr double kSigmoidPhiPrimeMax = 0.64951905283832899;  // 3*sqrt(3)/8
inline constexpr double kSigmoidPhiSmoothness = 2.0;                // max |phi''|, at z=0

}  // namespace detail

// Stochastic first-order oracle over a synthetic problem suite.
//
// Every instance declares the constants (L, G, B, sigma) of the assumptions
// it satisfies:
//   - sigma: E||grad f(x;xi) - grad f(x)||^2 <= sigma^2
//   - L:     x -> grad f(x;xi) is L-Lipschitz for every fixed sample
//   - G:     ||grad f(x;xi)||^2 <= G^2 for every sample (may be +inf)
//   - B:     |f(x) - f(y)| <= B (may be +inf)
// Constants marked +inf hold only locally; where a finite constant is only
// valid on a bounded region the region radius is declared alongside and
// test points must stay inside it.
class Problem {
 public:
  // f(x;xi) = 1/2 ||x - xi||^2 with xi ~ N(0, (sigma^2/d) I), so that
  // E||grad f(x;xi) - grad f(x)||^2 = sigma^2 exactly. Exact gradient is x.
  // Values and gradients are globally unbounded: G = B = +inf.
  static Problem noisy_quadratic(int dim, double sigma) {
    Problem p(ProblemKind::NoisyQuadratic, dim);
    p.require(sigma >= 0.0, "noisy_quadratic: sigma must be >= 0");
    p.sigma_ = sigma;
    p.noise_scale_ = sigma / std::sqrt(static_cast<double>(dim));
    p.smoothness_ = 1.0;
    p.value_offset_ = 0.5 * sigma * sigma;  // E f at the minimizer x = 0
    return p;
  }

  // f(x;xi) = sum_j phi(x_j - xi_j), phi(z) = z^2/(1+z^2), with coordinate
  // shifts xi_j ~ U[-w, w]. Non-convex with a unique stationary point at 0,
  // and every assumption holds globally with finite constants:
  //   L = 2,  G = sqrt(d) * 3*sqrt(3)/8,  B = d.
  // The half-width w = (sigma/2) * sqrt(3/d) makes the gradient variance at
  // most sigma^2 (phi' is 2-Lipschitz, so Var per coordinate <= 4 w^2 / 3).
  static Problem sigmoid_well(int dim, double sigma) {
    Problem p(ProblemKind::SigmoidWell, dim);
    p.require(sigma >= 0.0, "sigmoid_well: sigma must be >= 0");
    p.sigma_ = sigma;
    p.noise_scale_ = 0.5 * sigma * std::sqrt(3.0 / static_cast<double>(dim));
    p.smoothness_ = detail::kSigmoidPhiSmoothness;
    p.grad_bound_ =
        std::sqrt(static_cast<double>(dim)) * detail::kSigmoidPhiPrimeMax;
    p.value_range_ = static_cast<double>(dim);
    return p;
  }

  // f(x;i) = (<a_i,x>^2 - b_i)^2 / 4 over n components drawn uniformly with
  // replacement (a token may carry a batch of indices; the gradient is the
  // batch average). Data is generated from data_seed: a_i ~ N(0, I/d),
  // b_i = <a_i, x_star>^2 for a planted x_star ~ N(0, I), so min f = 0.
  // L, G, B and the variance bound hold only on ||x|| <= region_radius;
  // the declared constants are worst-case over that ball.
  static Problem phase_retrieval(int dim, int n, std::uint64_t data_seed,
                                 int batch = 1) {
    Problem p(ProblemKind::FiniteSumPhaseRetrieval, dim);
    p.require(n >= 1, "phase_retrieval: n must be >= 1");
    p.require(batch >= 1, "phase_retrieval: batch must be >= 1");
    p.num_components_ = n;
    p.batch_ = batch;

    SplitMix64 gen(derive_seed(data_seed, 0x70686173ull));  // data stream
    p.pr_signal_.resize(dim);
    fill_normal(gen, p.pr_signal_);
    const double coord_scale = 1.0 / std::sqrt(static_cast<double>(dim));
    p.pr_rows_.resize(static_cast<std::size_t>(n) * dim);
    Vec row(dim);
    p.pr_targets_.resize(n);
    for (int i = 0; i < n; ++i) {
      fill_normal(gen, row);
      double ip = 0.0;
      for (int j = 0; j < dim; ++j) {
        const double v = row[j] * coord_scale;
        p.pr_rows_[static_cast<std::size_t>(i) * dim + j] = v;
        ip += v * p.pr_signal_[j];
      }
      p.pr_targets_[i] = ip * ip;
    }

    // Regional constants over ||x|| <= R, R = 2 max(1, ||x_star||):
    //   ||H_i(x)||   <= (3 ||a_i||^2 R^2 + b_i) ||a_i||^2
    //   ||g_i(x)||   <= (||a_i||^2 R^2 + b_i) ||a_i||^2 R
    //   f_i(x)       <= (||a_i||^2 R^2 + b_i)^2 / 4
    const double R = 2.0 * std::max(1.0, norm(p.pr_signal_));
    p.region_radius_ = R;
    double worst_l = 0.0, worst_g = 0.0, worst_b = 0.0;
    for (int i = 0; i < n; ++i) {
      double a_sq = 0.0;
      for (int j = 0; j < dim; ++j) {
        const double v = p.pr_rows_[static_cast<std::size_t>(i) * dim + j];
        a_sq += v * v;
      }
      const double m = a_sq * R * R + p.pr_targets_[i];
      worst_l = std::max(worst_l, (3.0 * a_sq * R * R + p.pr_targets_[i]) * a_sq);
      worst_g = std::max(worst_g, m * a_sq * R);
      worst_b = std::max(worst_b, m * m / 4.0);
    }
    p.smoothness_ = worst_l;
    p.grad_bound_ = worst_g;
    p.value_range_ = worst_b;
    p.sigma_ = worst_g;  // Var <= E||g_i||^2 <= G^2 on the region
    return p;
  }

  // Chained Rosenbrock, the deterministic sanity case: sigma = 0 and the
  // stochastic oracle returns the exact gradient. Smoothness is declared on
  // the box |x_j| <= region_radius (row-sum bound on the Hessian); G and B
  // are +inf.
  static Problem rosenbrock(int dim) {
    Problem p(ProblemKind::DeterministicRosenbrock, dim);
    p.require(dim >= 2, "rosenbrock: dim must be >= 2");
    const double R = 3.0;
    p.region_radius_ = R;
    p.smoothness_ = 1200.0 * R * R + 400.0 * R + 202.0 + 800.0 * R;
    return p;
  }

  ProblemKind kind() const { return kind_; }
  int dim() const { return dim_; }
  int num_components() const { return num_components_; }
  int batch() const { return batch_; }
  double sigma() const { return sigma_; }
  double smoothness() const { return smoothness_; }
  double grad_bound() const { return grad_bound_; }
  double value_range() const { return value_range_; }
  double region_radius() const { return region_radius_; }

  std::string_view name() const {
    switch (kind_) {
      case ProblemKind::NoisyQuadratic: return "noisy_quadratic";
      case ProblemKind::SigmoidWell: return "sigmoid_well";
      case ProblemKind::FiniteSumPhaseRetrieval: return "phase_retrieval";
      case ProblemKind::DeterministicRosenbrock: return "rosenbrock";
    }
    return "unknown";
  }

  // Fresh i.i.d. sample. Advances the stream by a fixed amount per draw for
  // a given problem shape, independent of the realized values.
  SampleToken draw_sample(RngStream& stream) const {
    SampleToken tok;
    tok.draw_index = stream.draws++;
    switch (kind_) {
      case ProblemKind::NoisyQuadratic:
      case ProblemKind::SigmoidWell: {
        tok.noise.resize(dim_);
        if (kind_ == ProblemKind::NoisyQuadratic) {
          fill_normal(stream.gen, tok.noise);
          for (double& v : tok.noise) v *= noise_scale_;
        } else {
          for (double& v : tok.noise)
            v = uniform_in(stream.gen, -noise_scale_, noise_scale_);
        }
        break;
      }
      case ProblemKind::FiniteSumPhaseRetrieval: {
        tok.indices.resize(batch_);
        for (auto& ix : tok.indices) {
          ix = static_cast<std::uint32_t>(uniform_index(
              stream.gen, static_cast<std::uint64_t>(num_components_)));
        }
        break;
      }
      case ProblemKind::DeterministicRosenbrock:
        break;  // no randomness
    }
    return tok;
  }

  // grad f(x; xi). Pure in (x, token): same token, same point => identical
  // bits. With sigma = 0 this coincides bitwise with exact_grad.
  Vec stoch_grad(const Vec& x, const SampleToken& tok) const {
    check_dim(x);
    switch (kind_) {
      case ProblemKind::NoisyQuadratic: {
        return sub(x, tok.noise);
      }
      case ProblemKind::SigmoidWell: {
        Vec g(dim_);
        for (int j = 0; j < dim_; ++j)
          g[j] = detail::sigmoid_phi_prime(x[j] - tok.noise[j]);
        return g;
      }
      case ProblemKind::FiniteSumPhaseRetrieval: {
        Vec g(dim_, 0.0);
        const double inv_batch = 1.0 / static_cast<double>(tok.indices.size());
        for (std::uint32_t i : tok.indices) add_component_grad(x, i, inv_batch, g);
        return g;
      }
      case ProblemKind::DeterministicRosenbrock:
        return rosenbrock_grad(x);
    }
    throw std::logic_error("unreachable");
  }

  // grad f(x) = E grad f(x;xi), in closed form or as the full finite sum.
  Vec exact_grad(const Vec& x) const {
    check_dim(x);
    switch (kind_) {
      case ProblemKind::NoisyQuadratic:
        return x;
      case ProblemKind::SigmoidWell: {
        Vec g(dim_);
        const double w = noise_scale_;
        for (int j = 0; j < dim_; ++j) {
          // E phi'(x - xi) over xi ~ U[-w,w] = (phi(x+w) - phi(x-w)) / 2w
          g[j] = (w == 0.0) ? detail::sigmoid_phi_prime(x[j])
                            : (detail::sigmoid_phi(x[j] + w) -
                               detail::sigmoid_phi(x[j] - w)) /
                                  (2.0 * w);
        }
        return g;
      }
      case ProblemKind::FiniteSumPhaseRetrieval: {
        Vec g(dim_, 0.0);
        const double inv_n = 1.0 / static_cast<double>(num_components_);
        for (int i = 0; i < num_components_; ++i)
          add_component_grad(x, static_cast<std::uint32_t>(i), inv_n, g);
        return g;
      }
      case ProblemKind::DeterministicRosenbrock:
        return rosenbrock_grad(x);
    }
    throw std::logic_error("unreachable");
  }

  // f(x) = E f(x;xi).
  double exact_value(const Vec& x) const {
    check_dim(x);
    switch (kind_) {
      case ProblemKind::NoisyQuadratic:
        return 0.5 * norm_sq(x) + value_offset_;
      case ProblemKind::SigmoidWell: {
        const double w = noise_scale_;
        double f = 0.0;
        for (int j = 0; j < dim_; ++j) {
          if (w == 0.0) {
            f += detail::sigmoid_phi(x[j]);
          } else {
            // (1/2w) int_{x-w}^{x+w} phi = 1 - (atan(x+w) - atan(x-w)) / 2w
            f += 1.0 - (std::atan(x[j] + w) - std::atan(x[j] - w)) / (2.0 * w);
          }
        }
        return f;
      }
      case ProblemKind::FiniteSumPhaseRetrieval: {
        double f = 0.0;
        for (int i = 0; i < num_components_; ++i) {
          const double ip = component_inner(x, static_cast<std::uint32_t>(i));
          const double r = ip * ip - pr_targets_[i];
          f += r * r / 4.0;
        }
        return f / static_cast<double>(num_components_);
      }
      case ProblemKind::DeterministicRosenbrock: {
        double f = 0.0;
        for (int j = 0; j + 1 < dim_; ++j) {
          const double u = x[j + 1] - x[j] * x[j];
          const double v = 1.0 - x[j];
          f += 100.0 * u * u + v * v;
        }
        return f;
      }
    }
    throw std::logic_error("unreachable");
  }

  // Global minimizer (diagnostics only; every suite problem has one known).
  Vec minimizer() const {
    switch (kind_) {
      case ProblemKind::NoisyQuadratic:
      case ProblemKind::SigmoidWell:
        return Vec(dim_, 0.0);
      case ProblemKind::FiniteSumPhaseRetrieval:
        return pr_signal_;
      case ProblemKind::DeterministicRosenbrock:
        return Vec(dim_, 1.0);
    }
    throw std::logic_error("unreachable");
  }

  double min_value() const { return exact_value(minimizer()); }

 private:
  Problem(ProblemKind kind, int dim) : kind_(kind), dim_(dim) {
    require(dim >= 1, "problem: dim must be >= 1");
  }

  static void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
  }

  void check_dim(const Vec& x) const {
    if (static_cast<int>(x.size()) != dim_)
      throw std::invalid_argument("problem: point dimension mismatch");
  }

  double component_inner(const Vec& x, std::uint32_t i) const {
    const double* row = &pr_rows_[static_cast<std::size_t>(i) * dim_];
    double ip = 0.0;
    for (int j = 0; j < dim_; ++j) ip += row[j] * x[j];
    return ip;
  }

  void add_component_grad(const Vec& x, std::uint32_t i, double weight,
                          Vec& g) const {
    const double ip = component_inner(x, i);
    const double r = ip * ip - pr_targets_[i];
    const double c = weight * r * ip;
    const double* row = &pr_rows_[static_cast<std::size_t>(i) * dim_];
    for (int j = 0; j < dim_; ++j) g[j] += c * row[j];
  }

  Vec rosenbrock_grad(const Vec& x) const {
    Vec g(dim_, 0.0);
    for (int j = 0; j + 1 < dim_; ++j) {
      const double u = x[j + 1] - x[j] * x[j];
      g[j] += -400.0 * x[j] * u - 2.0 * (1.0 - x[j]);
      g[j + 1] += 200.0 * u;
    }
    return g;
  }

  ProblemKind kind_;
  int dim_;
  double sigma_ = 0.0;
  double noise_scale_ = 0.0;  // coordinate std (quadratic) or half-width (well)
  double value_offset_ = 0.0;
  double smoothness_ = 0.0;
  double grad_bound_ = std::numeric_limits<double>::infinity();
  double value_range_ = std::numeric_limits<double>::infinity();
  double region_radius_ = std::numeric_limits<double>::infinity();

  int num_components_ = 0;
  int batch_ = 1;
  Vec pr_rows_;     // n x d, row-major
  Vec pr_targets_;  // b_i
  Vec pr_signal_;   // planted x_star
};

}  // namespace stormbench
