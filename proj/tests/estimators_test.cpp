// Copyright 2026 The dfd Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dfd/estimators.hpp"

#include <cmath>
#include <cstring>

#include <gtest/gtest.h>

#include "dfd/objectives.hpp"
#include "dfd/rng.hpp"

namespace dfd {
namespace {

Batch make_batch(Rng& rng, std::size_t n, std::uint64_t origin,
                 double reward_scale = 5.0) {
  Batch b;
  for (std::size_t i = 0; i < n; ++i) {
    b.evals.push_back(Evaluation{rng.next_u64(), reward_scale * rng.normal(),
                                 1 + rng.below(50), origin});
  }
  return b;
}

bool bitwise_equal(const Vec& a, const Vec& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// --- standardize_rewards -----------------------------------------------------

TEST(Standardize, KnownThreePointBatch) {
  Batch b;
  for (double r : {1.0, 2.0, 3.0}) {
    b.evals.push_back(Evaluation{0, r, 1, 0});
  }
  b = standardize_rewards(std::move(b));
  // Population sd of {1,2,3} is sqrt(2/3).
  const double x = 1.0 / std::sqrt(2.0 / 3.0);
  EXPECT_NEAR(b.evals[0].reward, -x, 1e-12);
  EXPECT_NEAR(b.evals[1].reward, 0.0, 1e-12);
  EXPECT_NEAR(b.evals[2].reward, x, 1e-12);
  EXPECT_NEAR(x, 1.2247448713915890, 1e-12);
  EXPECT_DOUBLE_EQ(b.mu_r, 2.0);
  EXPECT_NEAR(b.sigma_r, std::sqrt(2.0 / 3.0), 1e-15);
  EXPECT_FALSE(b.degenerate);
  EXPECT_EQ(b.raw_rewards, (std::vector<double>{1.0, 2.0, 3.0}));
}

TEST(Standardize, AllEqualRewardsDegenerate) {
  Batch b;
  for (int i = 0; i < 3; ++i) b.evals.push_back(Evaluation{0, 5.0, 1, 0});
  b = standardize_rewards(std::move(b));
  EXPECT_TRUE(b.degenerate);
  EXPECT_EQ(b.sigma_r, 0.0);
  for (const Evaluation& e : b.evals) EXPECT_EQ(e.reward, 0.0);
}

TEST(Standardize, MeanZeroSdOneProperty) {
  Rng rng(101);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.below(100);
    const double scale = std::pow(10.0, rng.uniform(-2.0, 5.0));
    Batch b;
    for (std::size_t i = 0; i < n; ++i) {
      b.evals.push_back(
          Evaluation{0, scale * (10.0 + rng.normal()), 1, 0});
    }
    b = standardize_rewards(std::move(b));
    if (b.degenerate) continue;
    double mean = 0.0;
    for (const Evaluation& e : b.evals) mean += e.reward;
    mean /= static_cast<double>(n);
    double sq = 0.0;
    for (const Evaluation& e : b.evals) sq += (e.reward - mean) * (e.reward - mean);
    const double sd = std::sqrt(sq / static_cast<double>(n));
    EXPECT_LE(std::abs(mean), 1e-9);
    EXPECT_LE(std::abs(sd - 1.0), 1e-9);
  }
}

TEST(Standardize, RejectsTinyBatch) {
  Batch b;
  b.evals.push_back(Evaluation{0, 1.0, 1, 0});
  EXPECT_THROW(standardize_rewards(std::move(b)), std::invalid_argument);
}

// --- estimate_baseline -------------------------------------------------------

TEST(Baseline, InclusiveThresholdUsesCurrentMean) {
  Rng rng(7);
  Batch b;
  double current_sum = 0.0;
  for (std::size_t i = 0; i < 40; ++i) {
    const bool current = i < 8;  // B/N = 0.2 exactly
    const double r = rng.uniform(-3.0, 3.0);
    if (current) current_sum += r;
    b.evals.push_back(Evaluation{0, r, 1, current ? 9u : 2u});
  }
  EXPECT_EQ(estimate_baseline(b, 9, 0.2), current_sum / 8.0);
}

TEST(Baseline, BelowThresholdUsesFullBatchMean) {
  Rng rng(8);
  Batch b;
  double total = 0.0;
  for (std::size_t i = 0; i < 40; ++i) {
    const bool current = i < 7;  // B/N = 0.175
    const double r = rng.uniform(-3.0, 3.0);
    total += r;
    b.evals.push_back(Evaluation{0, r, 1, current ? 9u : 2u});
  }
  EXPECT_EQ(estimate_baseline(b, 9, 0.2), total / 40.0);
}

TEST(Baseline, AllCurrentCoincides) {
  Rng rng(9);
  Batch b = make_batch(rng, 10, 4);
  double total = 0.0;
  for (const Evaluation& e : b.evals) total += e.reward;
  EXPECT_EQ(estimate_baseline(b, 4), total / 10.0);
}

TEST(Baseline, EmptyBatchRejected) {
  Batch b;
  EXPECT_THROW(estimate_baseline(b, 0), std::invalid_argument);
}

// --- compute_lambda ----------------------------------------------------------

TEST(Lambda, CurrentOriginIsScaledNoise) {
  const Vec theta{0.3, -0.7, 1.1};
  const Evaluation e{77, 0.0, 1, 5};
  const Vec lambda = compute_lambda(e, 0.25, theta, theta);
  const Vec expected = scaled(sample_noise(77, 3), 0.25);
  EXPECT_TRUE(bitwise_equal(lambda, expected));
}

TEST(Lambda, PureBiasComponent) {
  // lambda - sigma*eps == theta_origin - theta_now == -w.
  const Vec origin{1.0, 2.0};
  const Vec w{0.5, -0.25};
  const Vec now = add(origin, w);
  const Evaluation e{123, 0.0, 1, 0};
  const Vec lambda = compute_lambda(e, 0.5, now, origin);
  const Vec sigma_eps = scaled(sample_noise(123, 2), 0.5);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(lambda[i] - sigma_eps[i], -w[i], 1e-12);
  }
}

TEST(Lambda, RearrangementIdentity) {
  Rng rng(55);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t d = 1 + rng.below(16);
    Vec now(d), origin(d);
    for (double& x : now) x = rng.normal();
    for (double& x : origin) x = rng.normal();
    const Evaluation e{rng.next_u64(), 0.0, 1, 0};
    const double sigma = rng.uniform(0.01, 2.0);
    const Vec lambda = compute_lambda(e, sigma, now, origin);
    const Vec sigma_eps = scaled(sample_noise(e.seed, d), sigma);
    for (std::size_t i = 0; i < d; ++i) {
      EXPECT_NEAR(lambda[i] + now[i], origin[i] + sigma_eps[i], 1e-12);
    }
  }
}

TEST(Lambda, RejectsBadArguments) {
  const Evaluation e{1, 0.0, 1, 0};
  EXPECT_THROW(compute_lambda(e, 0.0, {1.0}, {1.0}), std::invalid_argument);
  EXPECT_THROW(compute_lambda(e, 0.1, {1.0}, {1.0, 2.0}),
               std::invalid_argument);
}

// --- grad estimators ---------------------------------------------------------

TEST(GradQuotients, SingleTermArithmetic) {
  // centered reward c with perturbation (2, 0): g = (c/2, 0).
  const double c = 3.25;
  std::size_t skipped = 0;
  const Vec g = grad_quotients({c}, {Vec{2.0, 0.0}}, 2, &skipped);
  EXPECT_EQ(skipped, 0u);
  EXPECT_DOUBLE_EQ(g[0], c / 2.0);
  EXPECT_DOUBLE_EQ(g[1], 0.0);
}

TEST(GradQuotients, SkipsZeroNormAndRenormalizes) {
  std::size_t skipped = 0;
  const Vec g =
      grad_quotients({1.0, 2.0}, {Vec{0.0, 0.0}, Vec{1.0, 0.0}}, 2, &skipped);
  EXPECT_EQ(skipped, 1u);
  // Only the second term is kept and the average is over one retained term.
  EXPECT_DOUBLE_EQ(g[0], 2.0);
  EXPECT_DOUBLE_EQ(g[1], 0.0);
}

TEST(GradDfd, ReducesToFdBitForBit) {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 1 + rng.below(24);
    const std::uint64_t u = rng.below(10);
    Vec theta(d);
    for (double& x : theta) x = rng.normal();
    Batch b = make_batch(rng, 2 + rng.below(40), u);
    if (trial % 2 == 0) b = standardize_rewards(std::move(b));
    b.baseline = estimate_baseline(b, u);
    ParamHistory history(8);
    const GradEstimate dfd = grad_dfd(b, theta, u, 0.02, history);
    const GradEstimate fd = grad_fd(b, theta, u, 0.02);
    EXPECT_TRUE(bitwise_equal(dfd.g, fd.g));
    EXPECT_EQ(dfd.n_current, b.evals.size());
    EXPECT_EQ(dfd.n_delayed, 0u);
  }
}

TEST(GradDfd, SingleEvaluationMatchesDirectFormula) {
  const std::size_t d = 4;
  Vec theta{0.1, -0.2, 0.3, -0.4};
  Batch b;
  b.evals.push_back(Evaluation{991, 2.5, 1, 3});
  b.baseline = 0.5;
  ParamHistory history(4);
  const double sigma = 0.1;
  const GradEstimate est = grad_dfd(b, theta, 3, sigma, history);
  const Vec lam = scaled(sample_noise(991, d), sigma);
  const double nsq = norm_squared(lam);
  for (std::size_t i = 0; i < d; ++i) {
    EXPECT_DOUBLE_EQ(est.g[i], (2.5 - 0.5) / nsq * lam[i]);
  }
}

// Mixed current/delayed batch against a hand-accumulated expectation.
TEST(GradDfd, DelayedTermUsesHistoryParameters) {
  const std::size_t d = 2;
  const double sigma = 0.2;
  const Vec theta0{0.0, 0.0};
  const Vec theta1{0.5, -0.25};
  ParamHistory history(8);
  history.record(0, theta0);
  history.record(1, theta1);

  Batch b;
  b.evals.push_back(Evaluation{11, 1.0, 1, 1});  // current (u = 1)
  b.evals.push_back(Evaluation{22, -2.0, 1, 0});  // delayed by 1
  b.baseline = 0.25;

  const GradEstimate est = grad_dfd(b, theta1, 1, sigma, history);
  EXPECT_EQ(est.n_current, 1u);
  EXPECT_EQ(est.n_delayed, 1u);

  const Vec lam_current = scaled(sample_noise(11, d), sigma);
  Vec lam_delayed = scaled(sample_noise(22, d), sigma);
  for (std::size_t i = 0; i < d; ++i) {
    lam_delayed[i] += theta0[i] - theta1[i];
  }
  Vec expected = zeros(d);
  axpy(expected, (1.0 - 0.25) / norm_squared(lam_current), lam_current);
  axpy(expected, (-2.0 - 0.25) / norm_squared(lam_delayed), lam_delayed);
  for (double& x : expected) x *= 0.5;
  for (std::size_t i = 0; i < d; ++i) {
    EXPECT_NEAR(est.g[i], expected[i], 1e-15);
  }
}

TEST(GradDfd, MissingHistoryRejected) {
  ParamHistory history(1);
  history.record(4, Vec{0.0});
  history.record(5, Vec{0.1});  // depth 1: update 4 evicted
  Batch b;
  b.evals.push_back(Evaluation{1, 1.0, 1, 4});
  b.baseline = 0.0;
  EXPECT_THROW(grad_dfd(b, Vec{0.2}, 5, 0.1, history), MissingHistoryError);
}

TEST(GradFd, DelayedEvaluationIsABug) {
  Batch b;
  b.evals.push_back(Evaluation{1, 1.0, 1, 2});
  b.baseline = 0.0;
  EXPECT_THROW(grad_fd(b, Vec{0.0}, 3, 0.1), std::logic_error);
}

// Quadratic objective with an analytic gradient oracle: high cosine
// similarity with no delay.
TEST(GradFd, QuadraticGradientFidelity) {
  const std::size_t d = 20, n = 2000;
  const double sigma = 0.01;
  QuadraticObjective obj(d, 0.0);
  Rng rng(777);
  Vec theta(d);
  for (double& x : theta) x = rng.normal();
  Rng dummy(0);
  const double j0 = obj.rollout(theta, dummy).reward;
  Batch b;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t seed = rng.next_u64();
    Vec alpha = sample_noise(seed, d);
    for (std::size_t k = 0; k < d; ++k) alpha[k] = theta[k] + sigma * alpha[k];
    b.evals.push_back(Evaluation{seed, obj.rollout(alpha, dummy).reward, 1, 0});
  }
  b.baseline = j0;
  const GradEstimate est = grad_fd(b, theta, 0, sigma);
  const Vec exact = obj.analytic_gradient(theta);
  const double cos = dot(est.g, exact) / (norm(est.g) * norm(exact));
  EXPECT_GE(cos, 0.9);
}

// On a linear function with basis-vector perturbations the estimator
// recovers the gradient direction exactly (scaled by 1/d).
TEST(GradQuotients, BasisVectorsRecoverLinearGradient) {
  const Vec w{2.0, -1.0, 0.5};
  const std::size_t d = w.size();
  std::vector<double> centered;
  std::vector<Vec> lams;
  for (std::size_t j = 0; j < d; ++j) {
    Vec e = zeros(d);
    e[j] = 1.0;
    centered.push_back(w[j]);  // R(theta + e_j) - R(theta) on R = <w, .>
    lams.push_back(e);
  }
  const Vec g = grad_quotients(centered, lams, d);
  for (std::size_t j = 0; j < d; ++j) {
    EXPECT_DOUBLE_EQ(g[j], w[j] / static_cast<double>(d));
  }
}

// Forward terms over +/- pairs with a mean baseline agree with the antithetic
// difference form on a linear function.
TEST(GradQuotients, ForwardEqualsAntitheticOnLinear) {
  Rng rng(404);
  const std::size_t d = 8, pairs = 200;
  Vec w(d);
  for (double& x : w) x = rng.normal();
  std::vector<double> centered;
  std::vector<Vec> lams;
  Vec antithetic = zeros(d);
  for (std::size_t i = 0; i < pairs; ++i) {
    Vec eps(d);
    for (double& x : eps) x = rng.normal();
    const double r_plus = dot(w, eps);
    const double r_minus = -r_plus;
    // baseline = mean of the pair's rewards = 0
    centered.push_back(r_plus);
    lams.push_back(eps);
    centered.push_back(r_minus);
    lams.push_back(scaled(eps, -1.0));
    axpy(antithetic, (r_plus - r_minus) / norm_squared(eps), eps);
  }
  // Antithetic-with-magnitude form: (1/(2P)) sum (R+ - R-) eps / ||eps||^2;
  // the forward form over both signs averages the identical terms.
  for (double& x : antithetic) x /= 2.0 * pairs;
  const Vec forward = grad_quotients(centered, lams, d);
  for (std::size_t i = 0; i < d; ++i) {
    EXPECT_NEAR(forward[i], antithetic[i], 1e-10);
  }
}

// The sigma in the numerator cancels one sigma of the 1/||delta||^2
// normalization; on a linear objective with the exact baseline the estimate
// is sigma-free given the same seeds.
TEST(GradFd, ScaleContractOnLinearObjective) {
  Rng rng(606);
  const std::size_t d = 6, n = 64;
  Vec w(d);
  for (double& x : w) x = rng.normal();
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < n; ++i) seeds.push_back(rng.next_u64());

  const auto estimate = [&](double sigma) {
    Batch b;
    for (const std::uint64_t seed : seeds) {
      const Vec eps = sample_noise(seed, d);
      const double reward = dot(w, scaled(eps, sigma));  // theta = 0
      b.evals.push_back(Evaluation{seed, reward, 1, 0});
    }
    b.baseline = 0.0;
    return grad_fd(b, zeros(d), 0, sigma).g;
  };

  const Vec a = estimate(0.01);
  const Vec b = estimate(1.0);
  for (std::size_t i = 0; i < d; ++i) {
    EXPECT_NEAR(a[i], b[i], 1e-10 * std::max(1.0, std::abs(b[i])));
  }
}

TEST(GradEs, SymmetricReturnsGiveZero) {
  Rng rng(12);
  std::vector<AntitheticPair> pairs;
  for (int i = 0; i < 16; ++i) {
    const std::uint64_t seed = rng.next_u64();
    pairs.push_back(AntitheticPair{Evaluation{seed, 1.5, 1, 0},
                                   Evaluation{seed, 1.5, 1, 0}});
  }
  const GradEstimate est = grad_es_antithetic(pairs, 0.5, 4);
  for (double x : est.g) EXPECT_EQ(x, 0.0);
  EXPECT_EQ(est.n_current, 32u);
}

TEST(GradEs, SinglePairArithmetic) {
  // g = (1/sigma) * (R+ - R-) * eps with one pair.
  const std::uint64_t seed = 2024;
  const double sigma = 0.5;
  const Vec eps = sample_noise(seed, 3);
  std::vector<AntitheticPair> pairs{AntitheticPair{
      Evaluation{seed, 2.0, 1, 0}, Evaluation{seed, 1.0, 1, 0}}};
  const GradEstimate est = grad_es_antithetic(pairs, sigma, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(est.g[i], (2.0 - 1.0) * eps[i] / sigma);
  }
}

TEST(GradEs, MismatchedSeedsRejected) {
  std::vector<AntitheticPair> pairs{AntitheticPair{
      Evaluation{1, 0.0, 1, 0}, Evaluation{2, 0.0, 1, 0}}};
  EXPECT_THROW(grad_es_antithetic(pairs, 0.1, 3), std::invalid_argument);
}

// Closed-form expectation on a linear objective: E[g] = 2w, Monte Carlo
// within 3 standard errors per component.
TEST(GradEs, LinearObjectiveExpectation) {
  const Vec w{1.0, -2.0, 0.5};
  const double sigma = 0.1;
  const std::size_t n_pairs = 10'000;
  Rng rng(2468);
  std::vector<AntitheticPair> pairs;
  Vec term_sum = zeros(3), term_sumsq = zeros(3);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const std::uint64_t seed = rng.next_u64();
    const Vec eps = sample_noise(seed, 3);
    const double diff = 2.0 * sigma * dot(w, eps);  // R(+) - R(-)
    pairs.push_back(AntitheticPair{Evaluation{seed, diff / 2.0, 1, 0},
                                   Evaluation{seed, -diff / 2.0, 1, 0}});
    for (std::size_t k = 0; k < 3; ++k) {
      const double t = diff * eps[k] / sigma;
      term_sum[k] += t;
      term_sumsq[k] += t * t;
    }
  }
  const GradEstimate est = grad_es_antithetic(pairs, sigma, 3);
  for (std::size_t k = 0; k < 3; ++k) {
    const double m = term_sum[k] / n_pairs;
    const double var = term_sumsq[k] / n_pairs - m * m;
    const double se = std::sqrt(var / n_pairs);
    EXPECT_NEAR(est.g[k], 2.0 * w[k], 3.0 * se);
  }
}

// --- statistical invariants --------------------------------------------------

// Fixed drift nu, sigma = 1: E<lambda, nu> = -||nu||^2.
TEST(BiasIdentity, DelayedPerturbationsPointBackward) {
  const std::size_t d = 10, m = 20'000;
  Vec nu(d, 1.0 / std::sqrt(static_cast<double>(d)));
  const Vec origin = zeros(d);
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const Evaluation e{mix64(i + 1), 0.0, 1, 0};
    const Vec lambda = compute_lambda(e, 1.0, nu, origin);
    const double x = dot(lambda, nu);
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / m;
  const double se = std::sqrt((sumsq / m - mean * mean) / m);
  EXPECT_NEAR(mean, -norm_squared(nu), 3.0 * se);
}

// Current perturbations are direction-free: E<alpha - theta, v> = 0.
TEST(BiasIdentity, CurrentPerturbationsAreCentered) {
  const std::size_t d = 10, m = 20'000;
  Rng rng(55555);
  Vec v(d);
  for (double& x : v) x = rng.normal();
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const Vec eps = sample_noise(mix64(0xabc + i), d);
    const double x = dot(scaled(eps, 0.3), v);
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / m;
  const double se = std::sqrt((sumsq / m - mean * mean) / m);
  EXPECT_LE(std::abs(mean), 3.0 * se);
}

TEST(GradEstimators, AlwaysFinite) {
  Rng rng(808);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t d = 1 + rng.below(16);
    Vec theta(d);
    for (double& x : theta) x = rng.normal();
    Batch b = make_batch(rng, 2 + rng.below(30), 6, 100.0);
    b = standardize_rewards(std::move(b));
    b.baseline = estimate_baseline(b, 6);
    ParamHistory h(4);
    const GradEstimate est = grad_dfd(b, theta, 6, 0.02, h);
    EXPECT_TRUE(all_finite(est.g));
  }
}

TEST(ParamHistory, DepthAndEviction) {
  ParamHistory h(3);
  for (std::uint64_t u = 0; u < 10; ++u) h.record(u, Vec{static_cast<double>(u)});
  EXPECT_EQ(h.size(), 3u);
  EXPECT_EQ(h.find(6), nullptr);
  ASSERT_NE(h.find(9), nullptr);
  EXPECT_EQ((*h.find(9))[0], 9.0);
  EXPECT_THROW(h.record(9, Vec{0.0}), std::invalid_argument);
}

}  // namespace
}  // namespace dfd
