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

#include "dfd/optimizer.hpp"

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "dfd/rng.hpp"

namespace dfd {
namespace {

TEST(Sgd, AscentArithmetic) {
  const Vec out = sgd_step({0.0, 0.0}, {1.0, -1.0}, 0.5);
  EXPECT_DOUBLE_EQ(out[0], 0.5);
  EXPECT_DOUBLE_EQ(out[1], -0.5);
}

TEST(Sgd, ZeroGradientIsIdentity) {
  const Vec theta{1.25, -3.5, 0.0};
  const Vec out = sgd_step(theta, zeros(3), 0.1);
  EXPECT_EQ(out, theta);
}

TEST(Sgd, LinearInStepSize) {
  const Vec theta{0.5, -0.5};
  const Vec g{2.0, 1.0};
  Vec twice = sgd_step(sgd_step(theta, g, 0.1), g, 0.1);
  Vec once = sgd_step(theta, g, 0.2);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(twice[i], once[i], 1e-12);
}

TEST(Sgd, RejectsNonFiniteGradient) {
  EXPECT_THROW(
      sgd_step({0.0}, {std::numeric_limits<double>::quiet_NaN()}, 0.1),
      std::invalid_argument);
  EXPECT_THROW(sgd_step({0.0}, {0.0, 1.0}, 0.1), std::invalid_argument);
}

TEST(Adam, FirstStepClosedForm) {
  // After one step, m_hat = g and v_hat = g^2, so the step is
  // eta * g / (|g| + epsilon).
  const AdamConfig cfg{};
  AdamState state(3);
  const Vec theta{0.0, 1.0, -2.0};
  const Vec g{3.0, -0.004, 250.0};
  const Vec out = adam_step(state, cfg, theta, g);
  for (std::size_t i = 0; i < 3; ++i) {
    const double expected =
        theta[i] + cfg.eta * g[i] / (std::abs(g[i]) + cfg.epsilon);
    EXPECT_NEAR(out[i], expected, 1e-12);
  }
  EXPECT_EQ(state.t, 1u);
}

TEST(Adam, ZeroGradientNeverMoves) {
  const AdamConfig cfg{};
  AdamState state(2);
  Vec theta{0.5, -0.5};
  const Vec start = theta;
  for (int t = 0; t < 10; ++t) theta = adam_step(state, cfg, theta, zeros(2));
  EXPECT_EQ(theta, start);
}

// Independent reference: same textbook equations, written separately with
// long double accumulation.
std::vector<Vec> reference_trajectory(const Vec& theta0,
                                      const std::vector<Vec>& grads,
                                      const AdamConfig& cfg) {
  const std::size_t d = theta0.size();
  std::vector<long double> th(theta0.begin(), theta0.end());
  std::vector<long double> m(d, 0.0L), v(d, 0.0L);
  std::vector<Vec> out;
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    for (std::size_t i = 0; i < d; ++i) {
      const long double g = grads[t - 1][i];
      m[i] = cfg.beta1 * m[i] + (1.0L - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0L - cfg.beta2) * g * g;
      const long double mhat = m[i] / (1.0L - powl(cfg.beta1, t));
      const long double vhat = v[i] / (1.0L - powl(cfg.beta2, t));
      th[i] += cfg.eta * mhat / (sqrtl(vhat) + cfg.epsilon);
    }
    out.emplace_back(th.begin(), th.end());
  }
  return out;
}

TEST(Adam, MatchesReferenceTrajectory) {
  const AdamConfig cfg{};
  Rng rng(4242);
  const std::size_t d = 5;
  Vec theta(d);
  for (double& x : theta) x = rng.normal();
  std::vector<Vec> grads;
  for (int t = 0; t < 10; ++t) {
    Vec g(d);
    for (double& x : g) x = 2.0 * rng.normal();
    grads.push_back(std::move(g));
  }
  const std::vector<Vec> expected = reference_trajectory(theta, grads, cfg);
  AdamState state(d);
  Vec th = theta;
  for (std::size_t t = 0; t < grads.size(); ++t) {
    th = adam_step(state, cfg, th, grads[t]);
    for (std::size_t i = 0; i < d; ++i) {
      EXPECT_NEAR(th[i], expected[t][i], 1e-10);
    }
  }
}

// For a stationary gradient the bias-corrected moments give exactly
// g / (|g| + eps), so no step exceeds eta. For varying gradients the
// guarantee is |step| <= eta * (1 - beta1) / sqrt(1 - beta2).
TEST(Adam, StepMagnitudeBound) {
  const AdamConfig cfg{};
  const std::size_t d = 5;
  for (const double scale : {1e-6, 1.0, 1e6}) {
    AdamState state(d);
    Vec theta = zeros(d);
    const Vec g(d, scale);
    for (int t = 0; t < 30; ++t) {
      const Vec next = adam_step(state, cfg, theta, g);
      for (std::size_t i = 0; i < d; ++i) {
        EXPECT_LE(std::abs(next[i] - theta[i]), cfg.eta * (1.0 + 1e-12));
      }
      theta = next;
    }
  }

  const double cap =
      cfg.eta * (1.0 - cfg.beta1) / std::sqrt(1.0 - cfg.beta2) * (1.0 + 1e-9);
  Rng rng(99);
  for (int scenario = 0; scenario < 2; ++scenario) {
    AdamState state(d);
    Vec theta = zeros(d);
    Vec g(d, 10.0);
    for (int t = 0; t < 25; ++t) {
      if (scenario == 0) {
        for (double& x : g) x *= 0.7;
      } else {
        for (double& x : g) x = rng.normal();
      }
      const Vec next = adam_step(state, cfg, theta, g);
      for (std::size_t i = 0; i < d; ++i) {
        EXPECT_LE(std::abs(next[i] - theta[i]), cap);
      }
      theta = next;
    }
  }
}

TEST(Adam, Deterministic) {
  const AdamConfig cfg{};
  const Vec theta{1.0, 2.0};
  const Vec g{0.3, -0.6};
  AdamState s1(2), s2(2);
  const Vec a = adam_step(s1, cfg, theta, g);
  const Vec b = adam_step(s2, cfg, theta, g);
  EXPECT_EQ(a, b);
  EXPECT_EQ(s1.t, s2.t);
}

TEST(Adam, RejectsNonFiniteGradient) {
  AdamState state(1);
  EXPECT_THROW(adam_step(state, AdamConfig{}, {0.0},
                         {std::numeric_limits<double>::infinity()}),
               std::invalid_argument);
}

TEST(Optimizer, WrapperMatchesDirectCalls) {
  const AdamConfig cfg{};
  Optimizer opt = Optimizer::adam(cfg, 2);
  AdamState state(2);
  Vec a{0.1, 0.2}, b{0.1, 0.2};
  const Vec g{1.0, -1.0};
  for (int t = 0; t < 3; ++t) {
    a = opt.step(a, g);
    b = adam_step(state, cfg, b, g);
  }
  EXPECT_EQ(a, b);

  Optimizer sgd = Optimizer::sgd(0.5);
  EXPECT_EQ(sgd.step({0.0}, {2.0}), (Vec{1.0}));
}

}  // namespace
}  // namespace dfd
