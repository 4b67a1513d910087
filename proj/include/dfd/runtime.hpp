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
// Learner-side update loop, shared by every execution mode (threaded TCP,
// virtual-clock simulation, synchronous studies):
//
//   collect N evaluations -> standardize rewards -> estimate the baseline ->
//   gradient (dfd / fd / es) -> optimizer step -> record history, broadcast.
//
// The learner is a single logical consumer: exactly one thread may drive a
// LearnerCore. Workers communicate only through the evaluation buffer and
// policy broadcasts.

#ifndef DFD_RUNTIME_HPP_
#define DFD_RUNTIME_HPP_

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dfd/estimators.hpp"
#include "dfd/optimizer.hpp"
#include "dfd/vec.hpp"

namespace dfd {

enum class Mode { kDfd, kFd, kEs };

inline const char* mode_name(Mode m) {
  switch (m) {
    case Mode::kDfd: return "dfd";
    case Mode::kFd: return "fd";
    default: return "es";
  }
}

enum class BaselineMode { kEstimated, kMeasured };

// Hyper-parameters of one training run. Defaults mirror the reference
// experiment table (sigma 0.02, N 40, Adam 0.9/0.999/1e-8/0.01, reward and
// observation standardization on).
struct RunConfig {
  Mode mode = Mode::kDfd;
  std::size_t batch_size = 40;  // N perturbations per update; es uses N/2 pairs
  double sigma = 0.02;
  std::uint64_t t_lim = 50'000'000;
  std::size_t history_depth = 64;
  BaselineMode baseline_mode = BaselineMode::kEstimated;
  double baseline_ratio = 0.2;
  bool standardize_rewards = true;
  bool use_adam = true;
  AdamConfig adam{};
  double sgd_eta = 0.01;
  // Instrumentation rollouts of the post-update policy per update. Not
  // charged to t_lim.
  int eval_rollouts = 1;
};

// One row of the per-update log.
struct UpdateRecord {
  std::uint64_t u = 0;        // index of the update just computed (1-based)
  std::uint64_t t_total = 0;  // cumulative environment timesteps
  double mu_r = 0.0;          // raw batch reward mean
  double sigma_r = 0.0;       // raw batch reward sd (population)
  double baseline = 0.0;      // in standardized units when standardizing
  std::size_t n_current = 0;
  std::size_t n_delayed = 0;
  std::size_t skipped_zero_norm = 0;
  bool degenerate = false;
  std::map<std::uint64_t, std::size_t> staleness;  // delay k -> count
  double wall_ms = 0.0;   // real time spent in the update
  double vtime = 0.0;     // virtual completion time (simulated runs)
  double eval_reward = std::numeric_limits<double>::quiet_NaN();
};

// Counters for evaluations that never reach a gradient.
struct DropCounters {
  std::uint64_t discarded = 0;        // fd mode: stale at collection
  std::uint64_t discarded_steps = 0;
  std::uint64_t evicted = 0;          // dfd mode: origin older than history
  std::uint64_t evicted_steps = 0;
};

class LearnerCore {
 public:
  LearnerCore(RunConfig cfg, Vec theta0)
      : cfg_(cfg),
        theta_(std::move(theta0)),
        history_(cfg.history_depth),
        optimizer_(cfg.use_adam ? Optimizer::adam(cfg.adam, theta_.size())
                                : Optimizer::sgd(cfg.sgd_eta)) {
    if (cfg_.mode == Mode::kEs && cfg_.batch_size % 2 != 0) {
      throw std::invalid_argument("es mode: batch_size must be even");
    }
    history_.record(0, theta_);
  }

  const RunConfig& config() const noexcept { return cfg_; }
  const Vec& theta() const noexcept { return theta_; }
  std::uint64_t update_index() const noexcept { return u_; }
  std::uint64_t t_total() const noexcept { return t_total_; }
  const ParamHistory& history() const noexcept { return history_; }
  const DropCounters& drops() const noexcept { return drops_; }
  bool budget_exhausted() const noexcept { return t_total_ >= cfg_.t_lim; }

  // True when the evaluation's origin can still be resolved under the current
  // mode (fd: current only; dfd: current or within history).
  bool admissible(const Evaluation& e) const {
    if (e.origin_update == u_) return true;
    if (cfg_.mode != Mode::kDfd) return false;
    return e.origin_update < u_ && history_.contains(e.origin_update);
  }

  // fd-mode drop of a stale evaluation. The episode still consumed
  // environment interactions, so its timesteps are charged to the budget.
  void note_discarded(const Evaluation& e) {
    drops_.discarded += 1;
    drops_.discarded_steps += e.episode_len;
    t_total_ += e.episode_len;
  }

  // dfd-mode drop of an evaluation whose origin fell out of the history
  // window. Budget treatment as note_discarded.
  void note_evicted(const Evaluation& e) {
    drops_.evicted += 1;
    drops_.evicted_steps += e.episode_len;
    t_total_ += e.episode_len;
  }

  // Direct measurement of R(theta_u) for baseline_mode == kMeasured. The
  // measuring episodes run within the training budget.
  void set_measured_baseline(double raw_reward, std::uint64_t steps) {
    measured_ = raw_reward;
    t_total_ += steps;
  }

  // One update from N evaluations (dfd and fd modes).
  UpdateRecord apply_batch(std::vector<Evaluation> evals) {
    if (cfg_.mode == Mode::kEs) {
      throw std::logic_error("apply_batch: learner is in es mode");
    }
    if (evals.size() != cfg_.batch_size) {
      throw std::invalid_argument("apply_batch: expected exactly N evaluations");
    }
    const auto start = std::chrono::steady_clock::now();
    UpdateRecord rec;
    Batch batch;
    batch.evals = std::move(evals);
    for (const Evaluation& e : batch.evals) {
      t_total_ += e.episode_len;
      rec.staleness[u_ - e.origin_update] += 1;
    }

    if (cfg_.standardize_rewards) {
      batch = standardize_rewards(std::move(batch));
    } else {
      attach_raw_stats(batch);
    }
    batch.baseline = resolve_baseline(batch);

    GradEstimate est;
    if (batch.degenerate) {
      // Equal returns carry no directional information; the update is a no-op.
      est.g = zeros(theta_.size());
      count_origins(batch, est);
    } else if (cfg_.mode == Mode::kDfd) {
      est = grad_dfd(batch, theta_, u_, cfg_.sigma, history_);
    } else {
      est = grad_fd(batch, theta_, u_, cfg_.sigma);
    }

    finish_update(rec, batch, est, start);
    return rec;
  }

  // One update from N/2 antithetic pairs (es mode). Rewards are standardized
  // jointly over all 2P episodes; the pair difference cancels any baseline.
  UpdateRecord apply_pair_batch(std::vector<AntitheticPair> pairs) {
    if (cfg_.mode != Mode::kEs) {
      throw std::logic_error("apply_pair_batch: learner is not in es mode");
    }
    if (pairs.size() != cfg_.batch_size / 2) {
      throw std::invalid_argument("apply_pair_batch: expected N/2 pairs");
    }
    const auto start = std::chrono::steady_clock::now();
    UpdateRecord rec;
    for (const AntitheticPair& p : pairs) {
      if (p.plus.origin_update != u_ || p.minus.origin_update != u_) {
        throw std::invalid_argument("apply_pair_batch: stale pair");
      }
      t_total_ += p.plus.episode_len + p.minus.episode_len;
    }
    rec.staleness[0] = 2 * pairs.size();

    // Joint reward statistics over both signs.
    double sum = 0.0;
    for (const AntitheticPair& p : pairs) sum += p.plus.reward + p.minus.reward;
    const double n = static_cast<double>(2 * pairs.size());
    const double mu = sum / n;
    double sq = 0.0;
    for (const AntitheticPair& p : pairs) {
      sq += (p.plus.reward - mu) * (p.plus.reward - mu);
      sq += (p.minus.reward - mu) * (p.minus.reward - mu);
    }
    const double sd = std::sqrt(sq / n);

    Batch stats_only;  // carries logging fields through finish_update
    stats_only.mu_r = mu;
    stats_only.sigma_r = sd;
    stats_only.degenerate = cfg_.standardize_rewards && sd == 0.0;

    GradEstimate est;
    if (stats_only.degenerate) {
      est.g = zeros(theta_.size());
      est.n_current = 2 * pairs.size();
    } else {
      if (cfg_.standardize_rewards) {
        for (AntitheticPair& p : pairs) {
          p.plus.reward = (p.plus.reward - mu) / sd;
          p.minus.reward = (p.minus.reward - mu) / sd;
        }
      }
      est = grad_es_antithetic(pairs, cfg_.sigma, theta_.size());
    }

    finish_update(rec, stats_only, est, start);
    return rec;
  }

 private:
  void attach_raw_stats(Batch& batch) {
    const std::size_t n = batch.evals.size();
    batch.raw_rewards.resize(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      batch.raw_rewards[i] = batch.evals[i].reward;
      sum += batch.evals[i].reward;
    }
    batch.mu_r = sum / static_cast<double>(n);
    double sq = 0.0;
    for (const Evaluation& e : batch.evals) {
      sq += (e.reward - batch.mu_r) * (e.reward - batch.mu_r);
    }
    batch.sigma_r = std::sqrt(sq / static_cast<double>(n));
  }

  double resolve_baseline(const Batch& batch) {
    if (cfg_.baseline_mode == BaselineMode::kMeasured) {
      if (!measured_.has_value()) {
        throw std::logic_error(
            "baseline_mode is measured but no measurement was provided");
      }
      const double raw = *measured_;
      measured_.reset();
      if (!cfg_.standardize_rewards) return raw;
      // Keep the measured value in the same units as the rewards.
      return batch.degenerate ? 0.0 : (raw - batch.mu_r) / batch.sigma_r;
    }
    return estimate_baseline(batch, u_, cfg_.baseline_ratio);
  }

  void count_origins(const Batch& batch, GradEstimate& est) const {
    for (const Evaluation& e : batch.evals) {
      if (e.origin_update == u_) {
        ++est.n_current;
      } else {
        ++est.n_delayed;
      }
    }
  }

  void finish_update(UpdateRecord& rec, const Batch& batch,
                     const GradEstimate& est,
                     std::chrono::steady_clock::time_point start) {
    theta_ = optimizer_.step(theta_, est.g);
    u_ += 1;
    history_.record(u_, theta_);

    rec.u = u_;
    rec.t_total = t_total_;
    rec.mu_r = batch.mu_r;
    rec.sigma_r = batch.sigma_r;
    rec.baseline = batch.baseline;
    rec.n_current = est.n_current;
    rec.n_delayed = est.n_delayed;
    rec.skipped_zero_norm = est.skipped_zero_norm;
    rec.degenerate = batch.degenerate;
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - start)
                      .count();
  }

  RunConfig cfg_;
  Vec theta_;
  std::uint64_t u_ = 0;
  std::uint64_t t_total_ = 0;
  ParamHistory history_;
  Optimizer optimizer_;
  DropCounters drops_;
  std::optional<double> measured_;
};

struct CollectTimeout : std::runtime_error {
  CollectTimeout(std::size_t available, std::size_t requested)
      : std::runtime_error("timed out collecting evaluations: have " +
                           std::to_string(available) + " of " +
                           std::to_string(requested)),
        available(available),
        requested(requested) {}
  std::size_t available;
  std::size_t requested;
};

// Multi-producer single-consumer FIFO. take(n) removes exactly the first n
// items in arrival order; anything beyond n stays queued for the next update
// (put-back semantics). close() wakes the consumer permanently.
template <typename T>
class MsgQueue {
 public:
  void push(T item) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      items_.push_back(std::move(item));
    }
    cv_.notify_one();
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return items_.size();
  }

  void close() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }

  bool closed() const {
    std::lock_guard<std::mutex> lock(mu_);
    return closed_;
  }

  // Blocks until n items are available, the queue closes, or the timeout
  // expires. On success returns exactly n items in arrival order.
  std::optional<std::vector<T>> take(std::size_t n,
                                     std::chrono::milliseconds timeout) {
    std::unique_lock<std::mutex> lock(mu_);
    const bool ok = cv_.wait_for(
        lock, timeout, [&] { return items_.size() >= n || closed_; });
    if (!ok || items_.size() < n) return std::nullopt;
    std::vector<T> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back(std::move(items_.front()));
      items_.pop_front();
    }
    return out;
  }

  // Non-blocking drain of everything currently queued.
  std::vector<T> drain() {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<T> out(std::make_move_iterator(items_.begin()),
                       std::make_move_iterator(items_.end()));
    items_.clear();
    return out;
  }

  // Returns items to the FRONT of the queue, preserving their order ahead of
  // later arrivals.
  void put_back(std::vector<T> items) {
    std::lock_guard<std::mutex> lock(mu_);
    for (auto it = items.rbegin(); it != items.rend(); ++it) {
      items_.push_front(std::move(*it));
    }
    cv_.notify_all();
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<T> items_;
  bool closed_ = false;
};

using EvalBuffer = MsgQueue<Evaluation>;
using PairBuffer = MsgQueue<AntitheticPair>;

// Blocks until N evaluations are buffered and returns exactly the first N in
// arrival order; surplus evaluations remain buffered for the next update.
// Throws CollectTimeout when the deadline passes (e.g. all workers gone).
inline std::vector<Evaluation> collect_batch(EvalBuffer& buffer, std::size_t n,
                                             std::chrono::milliseconds timeout) {
  auto got = buffer.take(n, timeout);
  if (!got.has_value()) throw CollectTimeout(buffer.size(), n);
  return std::move(*got);
}

// --- per-update CSV log -----------------------------------------------------

// Deterministic float formatting for CSV output.
inline std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

inline std::string staleness_string(
    const std::map<std::uint64_t, std::size_t>& h) {
  std::string out;
  for (const auto& [k, count] : h) {
    if (!out.empty()) out += '|';
    out += std::to_string(k) + ':' + std::to_string(count);
  }
  return out;
}

inline void write_record_header(std::ostream& os) {
  os << "u,t_total,mu_r,sigma_r,baseline,n_current,n_delayed,"
        "skipped_zero_norm,degenerate,staleness,wall_ms,vtime,eval_reward\n";
}

inline void write_record(std::ostream& os, const UpdateRecord& r) {
  os << r.u << ',' << r.t_total << ',' << fmt_g(r.mu_r) << ','
     << fmt_g(r.sigma_r) << ',' << fmt_g(r.baseline) << ',' << r.n_current
     << ',' << r.n_delayed << ',' << r.skipped_zero_norm << ','
     << (r.degenerate ? 1 : 0) << ',' << staleness_string(r.staleness) << ','
     << fmt_g(r.wall_ms) << ',' << fmt_g(r.vtime) << ','
     << fmt_g(r.eval_reward) << '\n';
}

}  // namespace dfd

#endif  // DFD_RUNTIME_HPP_
