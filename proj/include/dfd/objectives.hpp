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
//
// Pluggable episodic objectives. Three regimes are covered by the built-ins:
//   - analytic functions with exact gradients (quadratic, rosenbrock), for
//     validating the estimators against an oracle;
//   - a 2-D point-mass navigation task driven by the full policy stack
//     (observation standardizer -> tanh MLP -> Gaussian actions), with
//     policy-dependent and configurably distributed episode lengths;
//   - a discrete-time LQR task whose return has a closed form, for end-to-end
//     numeric checks.

#ifndef DFD_OBJECTIVES_HPP_
#define DFD_OBJECTIVES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "dfd/policy.hpp"
#include "dfd/rng.hpp"
#include "dfd/vec.hpp"

namespace dfd {

struct RolloutResult {
  double reward = 0.0;
  std::uint64_t steps = 1;
};

// An episodic return function: rollout(theta, rng) runs one full episode to
// termination and reports the undiscounted return and the episode length.
// Episodes are never cut short by the caller; the only truncation point is
// the objective's own max_episode_len.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::size_t dim() const = 0;
  virtual std::uint64_t max_episode_len() const { return 1; }

  virtual RolloutResult rollout(const Vec& theta, Rng& rng) = 0;

  // Instrumentation rollout: identical dynamics but must not mutate any
  // training state (e.g. running observation statistics) and its timesteps
  // are not charged to the training budget by callers.
  virtual RolloutResult evaluate(const Vec& theta, Rng& rng) {
    return rollout(theta, rng);
  }

  virtual bool has_analytic_gradient() const { return false; }
  virtual Vec analytic_gradient(const Vec& /*theta*/) const {
    throw std::logic_error("objective has no analytic gradient");
  }
};

// J(theta) = -||theta - target||^2, maximized at target. Reports T = 1.
class QuadraticObjective final : public Objective {
 public:
  explicit QuadraticObjective(Vec target) : target_(std::move(target)) {}
  QuadraticObjective(std::size_t dim, double fill)
      : target_(dim, fill) {}

  std::size_t dim() const override { return target_.size(); }

  RolloutResult rollout(const Vec& theta, Rng&) override {
    require_same_dim(theta, target_, "quadratic");
    double s = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double d = theta[i] - target_[i];
      s += d * d;
    }
    return {-s, 1};
  }

  bool has_analytic_gradient() const override { return true; }

  Vec analytic_gradient(const Vec& theta) const override {
    require_same_dim(theta, target_, "quadratic");
    Vec g(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
      g[i] = -2.0 * (theta[i] - target_[i]);
    }
    return g;
  }

 private:
  Vec target_;
};

// Negated Rosenbrock: J = -sum_i [100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2],
// maximized at all-ones. A non-quadratic gradient oracle.
class RosenbrockObjective final : public Objective {
 public:
  explicit RosenbrockObjective(std::size_t dim) : dim_(dim) {
    if (dim_ < 2) throw std::invalid_argument("rosenbrock: dim >= 2");
  }

  std::size_t dim() const override { return dim_; }

  RolloutResult rollout(const Vec& theta, Rng&) override {
    if (theta.size() != dim_) throw std::invalid_argument("rosenbrock: dim");
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < dim_; ++i) {
      const double a = theta[i + 1] - theta[i] * theta[i];
      const double b = 1.0 - theta[i];
      s += 100.0 * a * a + b * b;
    }
    return {-s, 1};
  }

  bool has_analytic_gradient() const override { return true; }

  Vec analytic_gradient(const Vec& theta) const override {
    if (theta.size() != dim_) throw std::invalid_argument("rosenbrock: dim");
    Vec g(dim_, 0.0);
    for (std::size_t i = 0; i + 1 < dim_; ++i) {
      const double a = theta[i + 1] - theta[i] * theta[i];
      g[i] += 400.0 * theta[i] * a + 2.0 * (1.0 - theta[i]);
      g[i + 1] -= 200.0 * a;
    }
    return g;
  }

 private:
  std::size_t dim_;
};

// Per-episode horizon distribution for episodic tasks. Horizons are capped at
// max_episode_len.
struct HorizonDist {
  enum class Kind { kFixed, kUniform, kPareto };
  Kind kind = Kind::kFixed;
  std::uint64_t fixed = 120;
  std::uint64_t uniform_min = 60;
  std::uint64_t uniform_max = 180;
  double pareto_shape = 1.5;  // tail index; smaller is heavier
  double pareto_scale = 60.0; // minimum horizon

  std::uint64_t sample(Rng& rng, std::uint64_t cap) const {
    std::uint64_t h = fixed;
    switch (kind) {
      case Kind::kFixed:
        break;
      case Kind::kUniform:
        h = uniform_min + rng.below(uniform_max - uniform_min + 1);
        break;
      case Kind::kPareto: {
        const double u = rng.uniform();  // (0, 1]
        h = static_cast<std::uint64_t>(
            std::llround(pareto_scale * std::pow(u, -1.0 / pareto_shape)));
        break;
      }
    }
    return std::clamp<std::uint64_t>(h, 1, cap);
  }
};

struct PointMassConfig {
  PolicySpec policy{4, 2, {24, 24}};
  double dt = 0.1;
  double accel_gain = 4.0;
  double drag = 2.0;
  double start_radius_min = 1.0;
  double start_radius_max = 1.5;
  double goal_radius = 0.15;   // 0 disables goal termination
  double bound_radius = 4.0;   // leaving this radius ends the episode
  double reward_sharpness = 2.0;
  bool standardize_obs = true;
  double obs_clip = 5.0;
  HorizonDist horizon{};
  std::uint64_t max_episode_len = 1000;
};

// 2-D point mass steered toward the origin by the tanh policy. Observations
// are [px, py, vx, vy]. Per-step reward is exp(-sharpness * distance);
// reaching the goal terminates the episode and credits the remaining horizon
// at the full per-step rate, so faster arrivals score higher and episode
// length shrinks as the policy improves.
//
// The observation standardizer is owned by the task instance. A worker
// process holds its own instance (worker-local statistics); the simulated and
// synchronous-study modes share one instance across all rollouts.
class PointMassTask final : public Objective {
 public:
  explicit PointMassTask(PointMassConfig cfg = {})
      : cfg_(cfg),
        stats_(static_cast<std::size_t>(cfg.policy.obs_dim), cfg.obs_clip) {
    if (cfg_.policy.obs_dim != 4 || cfg_.policy.action_dim != 2) {
      throw std::invalid_argument("point_mass: policy must be 4 obs, 2 actions");
    }
  }

  std::size_t dim() const override { return cfg_.policy.param_count(); }
  std::uint64_t max_episode_len() const override { return cfg_.max_episode_len; }
  const PointMassConfig& config() const { return cfg_; }
  const ObsStandardizer& obs_stats() const { return stats_; }

  RolloutResult rollout(const Vec& theta, Rng& rng) override {
    return run(theta, rng, /*train=*/true);
  }

  RolloutResult evaluate(const Vec& theta, Rng& rng) override {
    return run(theta, rng, /*train=*/false);
  }

 private:
  RolloutResult run(const Vec& theta, Rng& rng, bool train) {
    if (theta.size() != dim()) throw std::invalid_argument("point_mass: dim");
    const std::uint64_t horizon = cfg_.horizon.sample(rng, cfg_.max_episode_len);

    const double angle = rng.uniform(0.0, 2.0 * 3.141592653589793);
    const double radius = rng.uniform(cfg_.start_radius_min, cfg_.start_radius_max);
    double px = radius * std::cos(angle), py = radius * std::sin(angle);
    double vx = 0.0, vy = 0.0;

    double total = 0.0;
    for (std::uint64_t t = 0; t < horizon; ++t) {
      std::vector<double> obs{px, py, vx, vy};
      if (cfg_.standardize_obs) {
        obs = train ? stats_.normalize(obs) : stats_.apply(obs);
      }
      const PolicyOutput out = policy_forward(cfg_.policy, theta, obs);
      std::vector<double> action = sample_action(out, rng);
      for (double& a : action) a = std::clamp(a, -1.0, 1.0);

      vx += cfg_.dt * (cfg_.accel_gain * action[0] - cfg_.drag * vx);
      vy += cfg_.dt * (cfg_.accel_gain * action[1] - cfg_.drag * vy);
      px += cfg_.dt * vx;
      py += cfg_.dt * vy;

      if (!std::isfinite(px) || !std::isfinite(py) || !std::isfinite(vx) ||
          !std::isfinite(vy)) {
        throw std::runtime_error("point_mass: non-finite state");
      }

      const double dist = std::sqrt(px * px + py * py);
      total += std::exp(-cfg_.reward_sharpness * dist);
      const std::uint64_t steps = t + 1;
      if (cfg_.goal_radius > 0.0 && dist <= cfg_.goal_radius) {
        total += static_cast<double>(horizon - steps);  // credit early arrival
        return {total, steps};
      }
      if (dist >= cfg_.bound_radius) {
        return {total, steps};
      }
    }
    return {total, horizon};
  }

  PointMassConfig cfg_;
  ObsStandardizer stats_;
};

struct LqrConfig {
  double dt = 0.1;
  double q_pos = 1.0;    // state cost diag(q_pos, q_vel)
  double q_vel = 0.1;
  double r_ctrl = 0.01;  // control cost
  std::uint64_t horizon = 50;
  bool random_x0 = false;
  double x0_radius = 1.0;  // fixed start is (x0_radius, 0)
};

// Discrete-time double integrator with a linear gain policy u = -(k1 x1 +
// k2 x2); theta = [k1, k2]. Return is the negated finite-horizon quadratic
// cost, which also has a closed form via the backward Riccati-style
// recursion P_t = Q + K'RK + (A-BK)' P_{t+1} (A-BK).
class LqrTask final : public Objective {
 public:
  explicit LqrTask(LqrConfig cfg = {}) : cfg_(cfg) {}

  std::size_t dim() const override { return 2; }
  std::uint64_t max_episode_len() const override { return cfg_.horizon; }
  const LqrConfig& config() const { return cfg_; }

  RolloutResult rollout(const Vec& theta, Rng& rng) override {
    if (theta.size() != 2) throw std::invalid_argument("lqr: dim is 2");
    double x1, x2 = 0.0;
    if (cfg_.random_x0) {
      const double a = rng.uniform(0.0, 2.0 * 3.141592653589793);
      x1 = cfg_.x0_radius * std::cos(a);
      x2 = cfg_.x0_radius * std::sin(a);
    } else {
      x1 = cfg_.x0_radius;
    }
    double cost = 0.0;
    for (std::uint64_t t = 0; t < cfg_.horizon; ++t) {
      const double u = -(theta[0] * x1 + theta[1] * x2);
      cost += cfg_.q_pos * x1 * x1 + cfg_.q_vel * x2 * x2 + cfg_.r_ctrl * u * u;
      const double nx1 = x1 + cfg_.dt * x2;
      const double nx2 = x2 + cfg_.dt * u;
      x1 = nx1;
      x2 = nx2;
      if (!std::isfinite(x1) || !std::isfinite(x2)) {
        throw std::runtime_error("lqr: non-finite state");
      }
    }
    return {-cost, cfg_.horizon};
  }

 private:
  LqrConfig cfg_;
};

}  // namespace dfd

#endif  // DFD_OBJECTIVES_HPP_
