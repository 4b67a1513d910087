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
// Gradient estimators for black-box policy search.
//
// All three estimators work from episodic returns of Gaussian-perturbed
// parameters alpha = theta + sigma * eps, where eps is regenerated from a
// transmitted seed (rng.hpp):
//
//   fd   : forward differences against the current parameters; requires every
//          evaluation to originate from the current update.
//   dfd  : delayed finite differences; an evaluation produced against an older
//          theta_{u-n} is recast as a perturbation of the current theta_u with
//          the biased noise lambda = sigma*eps + theta_{u-n} - theta_u, and
//          contributes [R(alpha) - R(theta_u)] * lambda / ||lambda||^2.
//   es   : unadjusted antithetic sampling; pairs (R+, R-) sharing one noise
//          seed contribute (R+ - R-) * eps / sigma, with no per-perturbation
//          magnitude scaling and no 1/2 factor.
//
// For evaluations of the current parameters, dfd reduces to fd exactly: the
// current-origin branch builds lambda as sigma*eps without touching theta, so
// the two estimators are bit-identical on all-current batches.

#ifndef DFD_ESTIMATORS_HPP_
#define DFD_ESTIMATORS_HPP_

#include <cmath>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dfd/rng.hpp"
#include "dfd/vec.hpp"

namespace dfd {

// One worker result: the seed that regenerates the perturbation, the episodic
// return, the episode length in timesteps, and the update index whose
// parameters were perturbed.
struct Evaluation {
  std::uint64_t seed = 0;
  double reward = 0.0;
  std::uint64_t episode_len = 1;
  std::uint64_t origin_update = 0;
};

// A batch of N evaluations plus the reward statistics attached by
// standardize_rewards. `raw_rewards` keeps the pre-standardization returns for
// logging.
struct Batch {
  std::vector<Evaluation> evals;
  std::vector<double> raw_rewards;
  double mu_r = 0.0;
  double sigma_r = 0.0;
  double baseline = 0.0;
  bool standardized = false;
  // All rewards in the batch were identical; rewards were zeroed and the
  // resulting gradient is exactly zero.
  bool degenerate = false;
};

struct GradEstimate {
  Vec g;
  std::size_t n_current = 0;  // evaluations with origin_update == u
  std::size_t n_delayed = 0;  // evaluations with origin_update < u
  // Terms dropped because ||lambda||^2 == 0 (possible only when sigma*eps
  // exactly cancels the parameter drift). The remaining terms are averaged
  // over the retained count.
  std::size_t skipped_zero_norm = 0;
};

struct MissingHistoryError : std::runtime_error {
  explicit MissingHistoryError(std::uint64_t u)
      : std::runtime_error("parameter history for update " + std::to_string(u) +
                           " is not available (evicted or never recorded)"),
        update_index(u) {}
  std::uint64_t update_index;
};

// The learner's window of recently broadcast parameter vectors, keyed by
// update index. Bounded depth; entries older than `depth` updates are evicted
// and evaluations referencing them can no longer be resolved.
class ParamHistory {
 public:
  explicit ParamHistory(std::size_t depth = 64) : depth_(depth) {
    if (depth_ == 0) throw std::invalid_argument("ParamHistory: depth >= 1");
  }

  // Records theta as the parameters broadcast at update u. Indices must be
  // recorded in increasing order.
  void record(std::uint64_t u, Vec theta) {
    if (!entries_.empty() && u <= entries_.back().first) {
      throw std::invalid_argument("ParamHistory: update indices must increase");
    }
    entries_.emplace_back(u, std::move(theta));
    while (entries_.size() > depth_) entries_.pop_front();
  }

  const Vec* find(std::uint64_t u) const noexcept {
    for (const auto& [idx, theta] : entries_) {
      if (idx == u) return &theta;
    }
    return nullptr;
  }

  bool contains(std::uint64_t u) const noexcept { return find(u) != nullptr; }
  std::size_t depth() const noexcept { return depth_; }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::size_t depth_;
  std::deque<std::pair<std::uint64_t, Vec>> entries_;
};

// Replaces every reward by (r - mu_R) / sigma_R using the population standard
// deviation (divide by N; pinned convention). If all rewards are identical
// (sigma_R == 0) the standardized rewards are set to 0 and the batch is
// flagged degenerate, so the update becomes a no-op.
inline Batch standardize_rewards(Batch batch) {
  const std::size_t n = batch.evals.size();
  if (n < 2) {
    throw std::invalid_argument("standardize_rewards: batch size must be >= 2");
  }
  batch.raw_rewards.resize(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    batch.raw_rewards[i] = batch.evals[i].reward;
    sum += batch.evals[i].reward;
  }
  double mu = sum / static_cast<double>(n);
  // One refinement pass cancels the accumulation error of the first, keeping
  // the standardized mean at ~machine epsilon even for large reward scales.
  double resid = 0.0;
  for (const Evaluation& e : batch.evals) resid += e.reward - mu;
  mu += resid / static_cast<double>(n);
  double sq = 0.0;
  for (const Evaluation& e : batch.evals) {
    const double d = e.reward - mu;
    sq += d * d;
  }
  const double sd = std::sqrt(sq / static_cast<double>(n));
  batch.mu_r = mu;
  batch.sigma_r = sd;
  batch.degenerate = (sd == 0.0);
  for (Evaluation& e : batch.evals) {
    e.reward = batch.degenerate ? 0.0 : (e.reward - mu) / sd;
  }
  batch.standardized = true;
  return batch;
}

// Estimate of R(theta_u) from the batch itself: the mean reward over
// evaluations of the current parameters when they make up at least
// `ratio_threshold` of the batch (inclusive), the full-batch mean otherwise.
inline double estimate_baseline(const Batch& batch, std::uint64_t current_u,
                                double ratio_threshold = 0.2) {
  const std::size_t n = batch.evals.size();
  if (n == 0) throw std::invalid_argument("estimate_baseline: empty batch");
  double current_sum = 0.0;
  std::size_t current_count = 0;
  double total_sum = 0.0;
  for (const Evaluation& e : batch.evals) {
    total_sum += e.reward;
    if (e.origin_update == current_u) {
      current_sum += e.reward;
      ++current_count;
    }
  }
  const double ratio =
      static_cast<double>(current_count) / static_cast<double>(n);
  if (current_count > 0 && ratio >= ratio_threshold) {
    return current_sum / static_cast<double>(current_count);
  }
  return total_sum / static_cast<double>(n);
}

// The effective perturbation of theta_now implied by a (possibly delayed)
// evaluation: lambda = sigma*eps + theta_origin - theta_now, where eps is
// regenerated from the evaluation's seed.
inline Vec compute_lambda(const Evaluation& eval, double sigma,
                          const Vec& theta_now, const Vec& theta_origin) {
  require_same_dim(theta_now, theta_origin, "compute_lambda");
  if (sigma <= 0.0) throw std::invalid_argument("compute_lambda: sigma > 0");
  Vec lambda = sample_noise(eval.seed, theta_now.size());
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    // Bias first: theta_origin - theta_now is exactly zero when the origin is
    // current, so lambda reduces to sigma*eps bit for bit.
    lambda[i] = sigma * lambda[i] + (theta_origin[i] - theta_now[i]);
  }
  return lambda;
}

// Difference-quotient average over explicit perturbations:
//   g = (1/n_kept) * sum_i centered[i] * lambda_i / ||lambda_i||^2
// Terms with ||lambda||^2 == 0 are skipped and the divisor reduced
// accordingly. This is the shared core of grad_fd and grad_dfd; tests also
// drive it directly with hand-built perturbations.
inline Vec grad_quotients(const std::vector<double>& centered,
                          const std::vector<Vec>& lambdas, std::size_t dim,
                          std::size_t* skipped_out = nullptr) {
  if (centered.size() != lambdas.size()) {
    throw std::invalid_argument("grad_quotients: size mismatch");
  }
  Vec g = zeros(dim);
  std::size_t kept = 0;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const Vec& lam = lambdas[i];
    if (lam.size() != dim) {
      throw std::invalid_argument("grad_quotients: lambda dimension mismatch");
    }
    const double nsq = norm_squared(lam);
    if (nsq == 0.0) {
      ++skipped;
      continue;
    }
    axpy(g, centered[i] / nsq, lam);
    ++kept;
  }
  if (kept > 0) {
    const double inv = 1.0 / static_cast<double>(kept);
    for (double& x : g) x *= inv;
  }
  if (skipped_out != nullptr) *skipped_out = skipped;
  return g;
}

namespace detail {

inline GradEstimate grad_quotient_batch(const Batch& batch,
                                        const Vec& theta_now,
                                        std::uint64_t u_now, double sigma,
                                        const ParamHistory* history) {
  if (sigma <= 0.0) throw std::invalid_argument("gradient: sigma > 0");
  const std::size_t dim = theta_now.size();
  GradEstimate est;
  std::vector<double> centered(batch.evals.size());
  std::vector<Vec> lambdas(batch.evals.size());
  for (std::size_t i = 0; i < batch.evals.size(); ++i) {
    const Evaluation& e = batch.evals[i];
    centered[i] = e.reward - batch.baseline;
    if (e.origin_update == u_now) {
      // Current-origin branch never touches theta, keeping dfd == fd
      // bit-identical on all-current batches.
      lambdas[i] = scaled(sample_noise(e.seed, dim), sigma);
      ++est.n_current;
    } else {
      if (e.origin_update > u_now) {
        throw std::invalid_argument(
            "gradient: evaluation origin is ahead of the current update");
      }
      if (history == nullptr) throw MissingHistoryError(e.origin_update);
      const Vec* origin = history->find(e.origin_update);
      if (origin == nullptr) throw MissingHistoryError(e.origin_update);
      lambdas[i] = compute_lambda(e, sigma, theta_now, *origin);
      ++est.n_delayed;
    }
  }
  est.g = grad_quotients(centered, lambdas, dim, &est.skipped_zero_norm);
  if (!all_finite(est.g)) {
    throw std::runtime_error("gradient: non-finite estimate");
  }
  return est;
}

}  // namespace detail

// Delayed finite difference estimator. Every origin_update in the batch must
// be resolvable: equal to u_now, or present in `history`.
inline GradEstimate grad_dfd(const Batch& batch, const Vec& theta_now,
                             std::uint64_t u_now, double sigma,
                             const ParamHistory& history) {
  return detail::grad_quotient_batch(batch, theta_now, u_now, sigma, &history);
}

// Forward difference estimator over perturbations of the current parameters
// only. Delayed evaluations are discarded upstream in fd mode; one reaching
// this function is a bug in the caller.
inline GradEstimate grad_fd(const Batch& batch, const Vec& theta_now,
                            std::uint64_t u_now, double sigma) {
  for (const Evaluation& e : batch.evals) {
    if (e.origin_update != u_now) {
      throw std::logic_error(
          "grad_fd: delayed evaluation in batch (origin " +
          std::to_string(e.origin_update) + ", current " +
          std::to_string(u_now) + ")");
    }
  }
  return detail::grad_quotient_batch(batch, theta_now, u_now, sigma, nullptr);
}

// Antithetic pair: two evaluations sharing one noise seed, taken at
// theta + sigma*eps and theta - sigma*eps.
struct AntitheticPair {
  Evaluation plus;
  Evaluation minus;
};

// Unadjusted antithetic estimator:
//   g = (1 / (sigma * P)) * sum_pairs (R+ - R-) * eps
// with P pairs (2P perturbations). No scaling by the perturbation magnitude
// and no 1/2 factor.
inline GradEstimate grad_es_antithetic(const std::vector<AntitheticPair>& pairs,
                                       double sigma, std::size_t dim) {
  if (sigma <= 0.0) throw std::invalid_argument("grad_es: sigma > 0");
  if (pairs.empty()) throw std::invalid_argument("grad_es: no pairs");
  GradEstimate est;
  est.g = zeros(dim);
  for (const AntitheticPair& p : pairs) {
    if (p.plus.seed != p.minus.seed) {
      throw std::invalid_argument("grad_es: pair seeds do not match");
    }
    const Vec eps = sample_noise(p.plus.seed, dim);
    axpy(est.g, p.plus.reward - p.minus.reward, eps);
  }
  const double inv = 1.0 / (sigma * static_cast<double>(pairs.size()));
  for (double& x : est.g) x *= inv;
  est.n_current = 2 * pairs.size();
  if (!all_finite(est.g)) {
    throw std::runtime_error("grad_es: non-finite estimate");
  }
  return est;
}

}  // namespace dfd

#endif  // DFD_ESTIMATORS_HPP_
