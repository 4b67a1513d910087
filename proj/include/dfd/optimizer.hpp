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
// Parameter update rules. Both rules ascend: theta' = theta + eta * step(g).
// The objective is maximized, so the sign convention is baked in here rather
// than at every estimator call site.

#ifndef DFD_OPTIMIZER_HPP_
#define DFD_OPTIMIZER_HPP_

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "dfd/vec.hpp"

namespace dfd {

inline Vec sgd_step(const Vec& theta, const Vec& g, double eta) {
  require_same_dim(theta, g, "sgd_step");
  if (!all_finite(g)) throw std::invalid_argument("sgd_step: non-finite g");
  Vec out(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) out[i] = theta[i] + eta * g[i];
  return out;
}

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double eta = 0.01;
};

struct AdamState {
  Vec m;  // first moment
  Vec v;  // second moment, entries >= 0
  std::uint64_t t = 0;

  explicit AdamState(std::size_t dim) : m(zeros(dim)), v(zeros(dim)) {}
};

// One Adam step with bias correction, ascent orientation:
//   theta' = theta + eta * m_hat / (sqrt(v_hat) + epsilon)
inline Vec adam_step(AdamState& state, const AdamConfig& cfg, const Vec& theta,
                     const Vec& g) {
  require_same_dim(theta, g, "adam_step");
  require_same_dim(theta, state.m, "adam_step (state)");
  if (!all_finite(g)) throw std::invalid_argument("adam_step: non-finite g");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  Vec out(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    out[i] = theta[i] + cfg.eta * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
  return out;
}

// Update-rule selector owned by the learner thread.
class Optimizer {
 public:
  static Optimizer sgd(double eta) {
    Optimizer o;
    o.kind_ = Kind::kSgd;
    o.eta_ = eta;
    return o;
  }

  static Optimizer adam(const AdamConfig& cfg, std::size_t dim) {
    Optimizer o;
    o.kind_ = Kind::kAdam;
    o.adam_cfg_ = cfg;
    o.adam_state_ = AdamState(dim);
    return o;
  }

  Vec step(const Vec& theta, const Vec& g) {
    if (kind_ == Kind::kSgd) return sgd_step(theta, g, eta_);
    return adam_step(adam_state_, adam_cfg_, theta, g);
  }

 private:
  enum class Kind { kSgd, kAdam };
  Optimizer() : adam_state_(0) {}

  Kind kind_ = Kind::kSgd;
  double eta_ = 0.01;
  AdamConfig adam_cfg_{};
  AdamState adam_state_;
};

}  // namespace dfd

#endif  // DFD_OPTIMIZER_HPP_
