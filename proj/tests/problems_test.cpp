#include "stormbench/problems.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "stormbench/rng.hpp"
#include "stormbench/vec.hpp"

namespace stormbench {
namespace {

// Points where each problem's declared constants are valid.
Vec region_point(const Problem& p, SplitMix64& gen) {
  Vec x(p.dim());
  fill_normal(gen, x);
  switch (p.kind()) {
    case ProblemKind::NoisyQuadratic:
    case ProblemKind::SigmoidWell:
      for (double& v : x) v *= 2.0;
      return x;
    case ProblemKind::FiniteSumPhaseRetrieval: {
      const double r = p.region_radius() * std::pow(uniform01(gen), 0.5);
      const double n = norm(x);
      for (double& v : x) v *= r / std::max(n, 1e-12);
      return x;
    }
    case ProblemKind::DeterministicRosenbrock:
      for (double& v : x) v = uniform_in(gen, -2.5, 2.5);
      return x;
  }
  return x;
}

std::vector<Problem> suite() {
  std::vector<Problem> ps;
  ps.push_back(Problem::noisy_quadratic(3, 1.3));
  ps.push_back(Problem::sigmoid_well(3, 0.8));
  ps.push_back(Problem::phase_retrieval(4, 12, /*data_seed=*/7));
  ps.push_back(Problem::rosenbrock(2));
  return ps;
}

TEST(NoisyQuadratic, GradientExamples) {
  const Problem p = Problem::noisy_quadratic(2, 1.0);
  SampleToken tok;
  tok.noise = {0.0, 0.0};
  EXPECT_EQ(p.stoch_grad({1.0, 0.0}, tok), (Vec{1.0, 0.0}));
  EXPECT_EQ(p.exact_grad({2.0, -1.0}), (Vec{2.0, -1.0}));

  const Problem p0 = Problem::noisy_quadratic(2, 0.0);
  EXPECT_DOUBLE_EQ(p0.exact_value({0.0, 0.0}), 0.0);
}

TEST(NoisyQuadratic, ZeroSigmaTokenIsZeroNoise) {
  const Problem p = Problem::noisy_quadratic(4, 0.0);
  RngStream stream(3);
  const SampleToken tok = p.draw_sample(stream);
  EXPECT_EQ(tok.draw_index, 0u);
  for (double v : tok.noise) EXPECT_EQ(v, 0.0);
  const Vec x{0.3, -0.7, 1.1, 0.0};
  EXPECT_EQ(p.stoch_grad(x, tok), p.exact_grad(x));
}

TEST(SigmoidWell, PhiPrimeMatchesCentralDifference) {
  for (double z : {0.0, 0.2, -0.7, 1.0, 3.5, -10.0}) {
    const double h = 1e-6;
    const double fd =
        (detail::sigmoid_phi(z + h) - detail::sigmoid_phi(z - h)) / (2 * h);
    EXPECT_NEAR(detail::sigmoid_phi_prime(z), fd, 1e-9);
  }
}

TEST(SigmoidWell, GradientAtCenterIsZero) {
  const Problem p = Problem::sigmoid_well(3, 1.0);
  SampleToken tok;
  tok.noise = {0.0, 0.0, 0.0};
  const Vec g = p.stoch_grad({0.0, 0.0, 0.0}, tok);
  for (double v : g) EXPECT_EQ(v, 0.0);
}

TEST(SigmoidWell, ValueAtCenterNoiselessIsZero) {
  const Problem p = Problem::sigmoid_well(5, 0.0);
  EXPECT_DOUBLE_EQ(p.exact_value(Vec(5, 0.0)), 0.0);
}

// The declared per-sample gradient bound is sqrt(d) * max|phi'|; the
// analytic maximizer z^2 = 1/3 is cross-checked by grid search.
TEST(SigmoidWell, GradBoundMatchesGridSearch) {
  double grid_max = 0.0;
  for (double z = 0.0; z <= 10.0; z += 1e-4)
    grid_max = std::max(grid_max, std::abs(detail::sigmoid_phi_prime(z)));
  EXPECT_NEAR(grid_max, detail::kSigmoidPhiPrimeMax, 1e-6);
  EXPECT_NEAR(std::abs(detail::sigmoid_phi_prime(1.0 / std::sqrt(3.0))),
              detail::kSigmoidPhiPrimeMax, 1e-15);

  const Problem p = Problem::sigmoid_well(9, 1.0);
  EXPECT_DOUBLE_EQ(p.grad_bound(), 3.0 * detail::kSigmoidPhiPrimeMax);
}

TEST(SigmoidWell, StochGradBoundHolds) {
  const Problem p = Problem::sigmoid_well(4, 1.5);
  RngStream stream(17);
  SplitMix64 xgen(18);
  Vec x(4);
  const double G = p.grad_bound();
  for (int i = 0; i < 1000000; ++i) {
    if (i % 100 == 0) {
      fill_normal(xgen, x);
      for (double& v : x) v *= 3.0;
    }
    const SampleToken tok = p.draw_sample(stream);
    ASSERT_LE(norm(p.stoch_grad(x, tok)), G);
  }
}

TEST(PhaseRetrieval, SingleComponentEqualsExact) {
  const Problem p = Problem::phase_retrieval(3, /*n=*/1, /*data_seed=*/11);
  SampleToken tok;
  tok.indices = {0};
  const Vec x{0.4, -0.2, 0.9};
  EXPECT_EQ(p.stoch_grad(x, tok), p.exact_grad(x));
}

TEST(PhaseRetrieval, PlantedSignalIsZeroValue) {
  const Problem p = Problem::phase_retrieval(5, 20, 123);
  EXPECT_NEAR(p.exact_value(p.minimizer()), 0.0, 1e-20);
  EXPECT_NEAR(norm(p.exact_grad(p.minimizer())), 0.0, 1e-12);
}

TEST(PhaseRetrieval, DataIsSeedDeterministic) {
  const Problem a = Problem::phase_retrieval(4, 8, 99);
  const Problem b = Problem::phase_retrieval(4, 8, 99);
  const Problem c = Problem::phase_retrieval(4, 8, 100);
  const Vec x{1.0, -0.5, 0.25, 2.0};
  EXPECT_EQ(a.exact_value(x), b.exact_value(x));
  EXPECT_NE(a.exact_value(x), c.exact_value(x));
}

TEST(Rosenbrock, KnownValues) {
  const Problem p = Problem::rosenbrock(2);
  EXPECT_DOUBLE_EQ(p.exact_value({1.0, 1.0}), 0.0);
  EXPECT_EQ(p.exact_grad({1.0, 1.0}), (Vec{0.0, 0.0}));
  EXPECT_DOUBLE_EQ(p.exact_value({0.0, 0.0}), 1.0);
  EXPECT_DOUBLE_EQ(p.exact_value({-1.2, 1.0}), 24.2);
}

TEST(Rosenbrock, StochasticOracleIsExact) {
  const Problem p = Problem::rosenbrock(4);
  RngStream stream(5);
  const SampleToken tok = p.draw_sample(stream);
  const Vec x{0.1, -1.4, 2.0, 0.6};
  EXPECT_EQ(p.stoch_grad(x, tok), p.exact_grad(x));
}

TEST(Oracle, DimensionMismatchThrows) {
  const Problem p = Problem::sigmoid_well(3, 1.0);
  RngStream stream(1);
  const SampleToken tok = p.draw_sample(stream);
  EXPECT_THROW(p.stoch_grad({1.0}, tok), std::invalid_argument);
  EXPECT_THROW(p.exact_grad({1.0, 2.0}), std::invalid_argument);
  EXPECT_THROW(p.exact_value(Vec(5, 0.0)), std::invalid_argument);
}

TEST(Oracle, TokensAreDeterministicAndReusable) {
  for (const Problem& p : suite()) {
    RngStream s1(derive_seed(42, 1));
    RngStream s2(derive_seed(42, 1));
    SplitMix64 xgen(9);
    Vec x(p.dim()), y(p.dim());
    fill_normal(xgen, x);
    fill_normal(xgen, y);
    for (int i = 0; i < 50; ++i) {
      const SampleToken a = p.draw_sample(s1);
      const SampleToken b = p.draw_sample(s2);
      EXPECT_EQ(a.draw_index, static_cast<std::uint64_t>(i));
      EXPECT_EQ(a.noise, b.noise);
      EXPECT_EQ(a.indices, b.indices);
      // Same token, same point: bitwise-identical gradients, at both points.
      EXPECT_EQ(p.stoch_grad(x, a), p.stoch_grad(x, b));
      EXPECT_EQ(p.stoch_grad(y, a), p.stoch_grad(y, b));
    }
  }
}

TEST(Oracle, ZeroSigmaMatchesExactBitwise) {
  for (Problem p : {Problem::noisy_quadratic(4, 0.0),
                    Problem::sigmoid_well(4, 0.0), Problem::rosenbrock(4)}) {
    RngStream stream(77);
    SplitMix64 xgen(78);
    Vec x(p.dim());
    for (int i = 0; i < 20; ++i) {
      fill_normal(xgen, x);
      const SampleToken tok = p.draw_sample(stream);
      EXPECT_EQ(p.stoch_grad(x, tok), p.exact_grad(x));
    }
  }
}

// Mean of 1e5 stochastic gradients matches the exact gradient within four
// standard errors, per coordinate, at 10 random points.
TEST(Oracle, Unbiasedness) {
  for (const Problem& p : suite()) {
    if (p.kind() == ProblemKind::DeterministicRosenbrock) continue;
    RngStream stream(derive_seed(2024, 5));
    SplitMix64 xgen(55);
    const int n_tokens = 100000;
    for (int pt = 0; pt < 10; ++pt) {
      const Vec x = region_point(p, xgen);
      const Vec exact = p.exact_grad(x);
      Vec mean(p.dim(), 0.0), msq(p.dim(), 0.0);
      for (int k = 0; k < n_tokens; ++k) {
        const SampleToken tok = p.draw_sample(stream);
        const Vec g = p.stoch_grad(x, tok);
        for (int j = 0; j < p.dim(); ++j) {
          mean[j] += g[j];
          msq[j] += g[j] * g[j];
        }
      }
      for (int j = 0; j < p.dim(); ++j) {
        mean[j] /= n_tokens;
        const double var =
            std::max(0.0, msq[j] / n_tokens - mean[j] * mean[j]);
        const double se = std::sqrt(var / n_tokens);
        EXPECT_NEAR(mean[j], exact[j], 4.0 * se + 1e-12)
            << p.name() << " point " << pt << " coord " << j;
      }
    }
  }
}

// ||g(x;xi) - g(y;xi)|| <= L ||x - y|| for fixed samples, inside the region
// where L is declared.
TEST(Oracle, PerSampleSmoothness) {
  for (const Problem& p : suite()) {
    RngStream stream(derive_seed(2024, 6));
    SplitMix64 xgen(66);
    for (int k = 0; k < 100; ++k) {
      const Vec x = region_point(p, xgen);
      const Vec y = region_point(p, xgen);
      const SampleToken tok = p.draw_sample(stream);
      const double lhs = norm(sub(p.stoch_grad(x, tok), p.stoch_grad(y, tok)));
      const double rhs = p.smoothness() * norm(sub(x, y));
      EXPECT_LE(lhs, rhs * (1.0 + 1e-9) + 1e-300) << p.name() << " case " << k;
    }
  }
}

// Empirical E||g - gbar||^2 <= declared sigma^2 (5% margin) at 10 points.
TEST(Oracle, VarianceBound) {
  for (const Problem& p : suite()) {
    RngStream stream(derive_seed(2024, 7));
    SplitMix64 xgen(88);
    const int n_tokens = 20000;
    for (int pt = 0; pt < 10; ++pt) {
      const Vec x = region_point(p, xgen);
      const Vec exact = p.exact_grad(x);
      double acc = 0.0;
      for (int k = 0; k < n_tokens; ++k) {
        const SampleToken tok = p.draw_sample(stream);
        acc += norm_sq(sub(p.stoch_grad(x, tok), exact));
      }
      const double empirical = acc / n_tokens;
      EXPECT_LE(empirical, p.sigma() * p.sigma() * 1.05 + 1e-300)
          << p.name() << " point " << pt;
    }
  }
}

// exact_grad vs central differences of exact_value, 20 points per problem.
TEST(Oracle, FiniteDifferenceConsistency) {
  for (const Problem& p : suite()) {
    SplitMix64 xgen(99);
    for (int pt = 0; pt < 20; ++pt) {
      Vec x = region_point(p, xgen);
      const Vec g = p.exact_grad(x);
      Vec fd(p.dim());
      for (int j = 0; j < p.dim(); ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
        const double save = x[j];
        x[j] = save + h;
        const double fp = p.exact_value(x);
        x[j] = save - h;
        const double fm = p.exact_value(x);
        x[j] = save;
        fd[j] = (fp - fm) / (2.0 * h);
      }
      EXPECT_LE(norm(sub(fd, g)), 1e-5 * (1.0 + norm(g)))
          << p.name() << " point " << pt;
    }
  }
}

// Long deterministic gradient descent as the minimizer oracle: started from
// random points and from the claimed minimizer, it must never find a value
// below the declared minimum, and 100 random points must sit above it.
TEST(Oracle, MinimizerIsGlobalOnSampledRegion) {
  for (const Problem& p : suite()) {
    SplitMix64 xgen(111);
    const double lr = 0.5 / p.smoothness();
    double best = std::numeric_limits<double>::infinity();
    for (int start = 0; start < 7; ++start) {
      Vec x = (start == 0) ? p.minimizer() : region_point(p, xgen);
      for (int it = 0; it < 20000; ++it) {
        const Vec g = p.exact_grad(x);
        for (int j = 0; j < p.dim(); ++j) x[j] -= lr * g[j];
      }
      best = std::min(best, p.exact_value(x));
    }
    EXPECT_NEAR(best, p.min_value(), 1e-9 * (1.0 + std::abs(p.min_value())))
        << p.name();
    for (int k = 0; k < 100; ++k) {
      const Vec x = region_point(p, xgen);
      EXPECT_GE(p.exact_value(x) - p.min_value(),
                -1e-12 * (1.0 + std::abs(p.min_value())))
          << p.name();
    }
  }
}

TEST(PhaseRetrieval, BatchTokenAveragesComponents) {
  const Problem p = Problem::phase_retrieval(3, 10, 5, /*batch=*/4);
  RngStream stream(21);
  const SampleToken tok = p.draw_sample(stream);
  ASSERT_EQ(tok.indices.size(), 4u);
  const Vec x{0.5, -1.0, 0.75};
  Vec expect(3, 0.0);
  for (std::uint32_t ix : tok.indices) {
    SampleToken single;
    single.indices = {ix};
    expect = add(expect, p.stoch_grad(x, single));
  }
  expect = scale(expect, 0.25);
  const Vec got = p.stoch_grad(x, tok);
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(got[j], expect[j], 1e-15);
}

}  // namespace
}  // namespace stormbench
