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
// Feedforward tanh policy with diagonal-Gaussian action heads, evaluated
// directly from the flat parameter vector. No autograd: every estimator in
// this library works from episodic returns alone.

#ifndef DFD_POLICY_HPP_
#define DFD_POLICY_HPP_

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "dfd/rng.hpp"
#include "dfd/vec.hpp"

namespace dfd {

// Two hidden tanh layers and a tanh output layer with 2*action_dim heads:
// the first action_dim outputs are the action means, the second half maps
// affinely from [-1, 1] onto [0, 1] as the per-action variances.
//
// Weight layout in the flat vector is row-major per layer with the bias
// appended: [W1 (h1 x obs) | b1 | W2 (h2 x h1) | b2 | W3 (2A x h2) | b3].
// Perturbations act on the flat vector, so this layout is part of the wire
// contract and must not change.
struct PolicySpec {
  int obs_dim = 0;
  int action_dim = 0;
  std::array<int, 2> hidden{64, 64};

  int output_dim() const noexcept { return 2 * action_dim; }

  std::size_t param_count() const noexcept {
    const std::size_t h1 = static_cast<std::size_t>(hidden[0]);
    const std::size_t h2 = static_cast<std::size_t>(hidden[1]);
    const std::size_t in = static_cast<std::size_t>(obs_dim);
    const std::size_t out = static_cast<std::size_t>(output_dim());
    return (in + 1) * h1 + (h1 + 1) * h2 + (h2 + 1) * out;
  }
};

struct PolicyOutput {
  std::vector<double> means;      // in [-1, 1]
  std::vector<double> variances;  // in [0, 1]
};

namespace detail {

// out = tanh(W x + b) for one dense layer stored at `w` (rows x cols,
// row-major) followed by `rows` biases.
inline void dense_tanh(const double* w, std::size_t rows, std::size_t cols,
                       const std::vector<double>& x, std::vector<double>& out) {
  out.resize(rows);
  const double* bias = w + rows * cols;
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = bias[r];
    const double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    out[r] = std::tanh(acc);
  }
}

}  // namespace detail

inline PolicyOutput policy_forward(const PolicySpec& spec, const Vec& theta,
                                   const std::vector<double>& obs) {
  if (obs.size() != static_cast<std::size_t>(spec.obs_dim)) {
    throw std::invalid_argument("policy_forward: observation dimension");
  }
  if (theta.size() != spec.param_count()) {
    throw std::invalid_argument("policy_forward: parameter dimension");
  }
  const std::size_t h1 = static_cast<std::size_t>(spec.hidden[0]);
  const std::size_t h2 = static_cast<std::size_t>(spec.hidden[1]);
  const std::size_t in = static_cast<std::size_t>(spec.obs_dim);
  const std::size_t out_dim = static_cast<std::size_t>(spec.output_dim());

  std::vector<double> a1, a2, a3;
  const double* p = theta.data();
  detail::dense_tanh(p, h1, in, obs, a1);
  p += (in + 1) * h1;
  detail::dense_tanh(p, h2, h1, a1, a2);
  p += (h1 + 1) * h2;
  detail::dense_tanh(p, out_dim, h2, a2, a3);

  PolicyOutput out;
  const std::size_t actions = static_cast<std::size_t>(spec.action_dim);
  out.means.assign(a3.begin(), a3.begin() + actions);
  out.variances.resize(actions);
  for (std::size_t i = 0; i < actions; ++i) {
    out.variances[i] = (a3[actions + i] + 1.0) * 0.5;
  }
  return out;
}

// Draws each action independently from N(mean_j, variance_j). Zero variance
// gives exactly the mean.
inline std::vector<double> sample_action(const PolicyOutput& out, Rng& rng) {
  std::vector<double> action(out.means.size());
  for (std::size_t i = 0; i < action.size(); ++i) {
    const double var = out.variances[i];
    if (var < 0.0) throw std::invalid_argument("sample_action: variance < 0");
    action[i] = var == 0.0 ? out.means[i]
                           : out.means[i] + std::sqrt(var) * rng.normal();
  }
  return action;
}

// Streaming observation standardizer (Welford moments, population variance).
// Pinned order: the raw observation updates the running statistics first and
// is then standardized with the updated statistics. Until two observations
// have been seen the variance is undefined and the raw value is returned,
// clipped. Outputs are always clipped to [-clip, clip].
class ObsStandardizer {
 public:
  explicit ObsStandardizer(std::size_t dim, double clip = 5.0)
      : mean_(dim, 0.0), m2_(dim, 0.0), clip_(clip) {}

  std::size_t dim() const noexcept { return mean_.size(); }
  std::uint64_t count() const noexcept { return count_; }
  const std::vector<double>& mean() const noexcept { return mean_; }

  std::vector<double> variance() const {
    std::vector<double> v(m2_.size(), 0.0);
    if (count_ > 0) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = m2_[i] / static_cast<double>(count_);
      }
    }
    return v;
  }

  void update(const std::vector<double>& obs) {
    if (obs.size() != mean_.size()) {
      throw std::invalid_argument("ObsStandardizer: dimension mismatch");
    }
    count_ += 1;
    const double inv_n = 1.0 / static_cast<double>(count_);
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const double delta = obs[i] - mean_[i];
      mean_[i] += delta * inv_n;
      m2_[i] += delta * (obs[i] - mean_[i]);
    }
  }

  // Standardize without updating (used for instrumentation rollouts that must
  // not perturb training statistics).
  std::vector<double> apply(const std::vector<double>& obs) const {
    std::vector<double> out(obs.size());
    if (count_ < 2) {
      for (std::size_t i = 0; i < obs.size(); ++i) out[i] = clamp(obs[i]);
      return out;
    }
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const double var = m2_[i] / static_cast<double>(count_);
      const double sd = std::sqrt(var);
      out[i] = clamp((obs[i] - mean_[i]) / (sd < kSdFloor ? kSdFloor : sd));
    }
    return out;
  }

  // Update-then-standardize, the order used during training.
  std::vector<double> normalize(const std::vector<double>& obs) {
    update(obs);
    return apply(obs);
  }

 private:
  // Constant sensor channels would otherwise divide by zero.
  static constexpr double kSdFloor = 1e-8;

  double clamp(double x) const noexcept {
    return x > clip_ ? clip_ : (x < -clip_ ? -clip_ : x);
  }

  std::vector<double> mean_;
  std::vector<double> m2_;
  double clip_;
  std::uint64_t count_ = 0;
};

}  // namespace dfd

#endif  // DFD_POLICY_HPP_
