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
// Deterministic discrete-event simulation of a learner with an asynchronous
// worker pool under a virtual clock. Event processing is totally ordered by
// (virtual time, worker id, schedule sequence), so a (config, seed) pair
// always yields the identical transcript.
//
// Two schedules:
//   async: every worker runs rollouts back to back and never waits. A worker
//          picks the newest broadcast it has received when STARTING a
//          rollout, never mid-rollout, so evaluations in flight across an
//          update arrive tagged with the old update index.
//   sync:  exactly N rollout tasks are dispatched per update and workers that
//          finish early idle until the next broadcast. This is the classic
//          synchronous schedule and exists to measure the idle time the
//          asynchronous design removes.
//
// Every message between workers and learner passes through the wire codec
// (encode -> decode), so simulated runs exercise the same protocol as the
// socket transport.

#ifndef DFD_SIM_HPP_
#define DFD_SIM_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include "dfd/objectives.hpp"
#include "dfd/rng.hpp"
#include "dfd/runtime.hpp"
#include "dfd/transport.hpp"
#include "dfd/vec.hpp"

namespace dfd {

enum class ScheduleKind { kAsync, kSync };

// Virtual duration of one rollout: episode_len * per_step_cost * speed_w *
// LogNormal(0, lognormal_sigma), where speed_w is a per-worker multiplier
// drawn once from [worker_speed_min, worker_speed_max]. Heterogeneous speeds
// plus a heavy-tailed per-rollout factor reproduce the straggler behaviour of
// real pools.
struct DurationModel {
  double per_step_cost = 1.0;
  double worker_speed_min = 1.0;
  double worker_speed_max = 1.0;
  double lognormal_sigma = 0.0;
};

struct SimSchedule {
  int workers = 4;
  ScheduleKind kind = ScheduleKind::kAsync;
  DurationModel duration{};
  double update_latency = 0.0;     // learner compute time per update
  double transport_latency = 0.0;  // one-way message delay
  std::uint64_t seed = 1;
  std::uint64_t max_updates = 0;   // 0 = until t_lim
};

struct RunMetrics {
  std::uint64_t updates = 0;
  std::uint64_t t_total = 0;
  double vtime_end = 0.0;

  // Conservation: every delivered evaluation is consumed in a batch, dropped
  // with a counter, or still buffered at the end.
  std::uint64_t produced = 0;
  std::uint64_t consumed = 0;
  std::uint64_t discarded = 0;
  std::uint64_t evicted = 0;
  std::uint64_t buffered_end = 0;
  std::uint64_t discarded_steps = 0;
  std::uint64_t evicted_steps = 0;

  std::map<std::uint64_t, std::size_t> staleness;  // over consumed evals
  std::vector<double> busy_time;        // per worker
  std::vector<double> idle_time;        // per worker (sync waiting)
  std::vector<double> last_finish;      // per worker, end of last rollout
  std::vector<UpdateRecord> records;
  Vec final_theta;
  double final_reward = std::numeric_limits<double>::quiet_NaN();

  bool conservation_holds() const {
    return produced == consumed + discarded + evicted + buffered_end;
  }
};

namespace detail {

inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t kind,
                                 std::uint64_t idx) {
  return mix64(master ^ mix64((kind << 32) ^ idx));
}

// Round-trips an evaluation through the wire codec, as the loopback
// equivalent of the socket transport.
inline Evaluation through_codec(const Evaluation& e) {
  const std::vector<std::uint8_t> bytes = encode(to_wire(e));
  const std::optional<WireMessage> msg = decode(bytes);
  return from_wire(std::get<EvalMsg>(*msg));
}

inline Vec through_codec_policy(const Vec& theta, std::uint32_t u) {
  const std::vector<std::uint8_t> bytes = encode(PolicyMsg{u, theta});
  const std::optional<WireMessage> msg = decode(bytes);
  return std::get<PolicyMsg>(*msg).theta;
}

}  // namespace detail

class PoolSimulator {
 public:
  PoolSimulator(const SimSchedule& schedule, const RunConfig& cfg,
                Objective& objective, Vec theta0, int final_window = 50)
      : sched_(schedule),
        cfg_(cfg),
        obj_(objective),
        core_(cfg, std::move(theta0)),
        final_window_(final_window) {
    if (sched_.workers < 1) throw std::invalid_argument("sim: workers >= 1");
    const std::uint64_t master = sched_.seed;
    Rng speed_rng(detail::stream_seed(master, 5, 0));
    for (int w = 0; w < sched_.workers; ++w) {
      env_rng_.emplace_back(detail::stream_seed(master, 1, w));
      dur_rng_.emplace_back(detail::stream_seed(master, 2, w));
      speeds_.push_back(speed_rng.uniform(sched_.duration.worker_speed_min,
                                          sched_.duration.worker_speed_max));
    }
    eval_rng_ = Rng(detail::stream_seed(master, 3, 0));
    learner_rng_ = Rng(detail::stream_seed(master, 4, 0));
    metrics_.busy_time.assign(sched_.workers, 0.0);
    metrics_.idle_time.assign(sched_.workers, 0.0);
    metrics_.last_finish.assign(sched_.workers, 0.0);
    seed_counter_.assign(sched_.workers, 0);
  }

  RunMetrics run() {
    broadcasts_.push_back({0.0, 0, detail::through_codec_policy(core_.theta(), 0)});
    const std::size_t targets = target_tasks();
    if (sched_.kind == ScheduleKind::kSync) {
      tasks_left_ = targets;
      for (int w = 0; w < sched_.workers && tasks_left_ > 0; ++w) {
        --tasks_left_;
        start_rollout(w, 0.0);
      }
    } else {
      for (int w = 0; w < sched_.workers; ++w) start_rollout(w, 0.0);
    }

    while (!queue_.empty() && !done_) {
      const Event ev = pop_event();
      metrics_.vtime_end = ev.time;
      if (ev.kind == EventKind::kRolloutDone) {
        on_rollout_done(ev);
      } else {
        on_delivery(ev);
      }
    }

    metrics_.updates = core_.update_index();
    metrics_.t_total = core_.t_total();
    metrics_.final_theta = core_.theta();
    metrics_.discarded = core_.drops().discarded;
    metrics_.discarded_steps = core_.drops().discarded_steps;
    metrics_.evicted = core_.drops().evicted;
    metrics_.evicted_steps = core_.drops().evicted_steps;
    metrics_.buffered_end =
        cfg_.mode == Mode::kEs
            ? 2 * (pair_buffer_.size() + pending_pairs_.size())
            : buffer_.size() + pending_.size();
    if (!metrics_.records.empty()) {
      const std::size_t n = metrics_.records.size();
      const std::size_t w =
          std::min<std::size_t>(static_cast<std::size_t>(final_window_), n);
      double sum = 0.0;
      for (std::size_t i = n - w; i < n; ++i) {
        sum += metrics_.records[i].eval_reward;
      }
      metrics_.final_reward = sum / static_cast<double>(w);
    }
    return std::move(metrics_);
  }

 private:
  enum class EventKind { kRolloutDone, kDelivery };

  struct Event {
    double time = 0.0;
    int worker = 0;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::kRolloutDone;
    Evaluation eval{};
    Evaluation eval_minus{};  // es mode second half of the pair
    bool is_pair = false;
  };

  struct Broadcast {
    double visible_from;
    std::uint64_t u;
    Vec theta;
  };

  struct EventOrder {
    bool operator()(const Event& a, const Event& b) const {
      return std::tie(a.time, a.worker, a.seq) >
             std::tie(b.time, b.worker, b.seq);
    }
  };

  std::size_t target_tasks() const {
    return cfg_.mode == Mode::kEs ? cfg_.batch_size / 2 : cfg_.batch_size;
  }

  Event pop_event() {
    Event ev = queue_.top();
    queue_.pop();
    return ev;
  }

  void push_event(Event ev) {
    ev.seq = next_seq_++;
    queue_.push(std::move(ev));
  }

  // Newest broadcast visible at time t. Broadcast visibility times are
  // nondecreasing, so a linear scan from the last index suffices.
  const Broadcast& broadcast_at(double t) {
    std::size_t i = broadcasts_.size() - 1;
    while (i > 0 && broadcasts_[i].visible_from > t) --i;
    return broadcasts_[i];
  }

  void start_rollout(int w, double t) {
    const Broadcast& bc = broadcast_at(t);
    const std::uint64_t seed =
        worker_seed(static_cast<std::uint32_t>(w), seed_counter_[w]++);
    const std::size_t dim = core_.theta().size();
    const Vec eps = sample_noise(seed, dim);

    Event ev;
    ev.worker = w;
    ev.kind = EventKind::kRolloutDone;
    std::uint64_t steps = 0;
    if (cfg_.mode == Mode::kEs) {
      Vec alpha_p(dim), alpha_m(dim);
      for (std::size_t i = 0; i < dim; ++i) {
        alpha_p[i] = bc.theta[i] + cfg_.sigma * eps[i];
        alpha_m[i] = bc.theta[i] - cfg_.sigma * eps[i];
      }
      const RolloutResult rp = obj_.rollout(alpha_p, env_rng_[w]);
      const RolloutResult rm = obj_.rollout(alpha_m, env_rng_[w]);
      ev.eval = Evaluation{seed, rp.reward, rp.steps, bc.u};
      ev.eval_minus = Evaluation{seed, rm.reward, rm.steps, bc.u};
      ev.is_pair = true;
      steps = rp.steps + rm.steps;
    } else {
      Vec alpha(dim);
      for (std::size_t i = 0; i < dim; ++i) {
        alpha[i] = bc.theta[i] + cfg_.sigma * eps[i];
      }
      const RolloutResult r = obj_.rollout(alpha, env_rng_[w]);
      ev.eval = Evaluation{seed, r.reward, r.steps, bc.u};
      steps = r.steps;
    }

    double dur = static_cast<double>(steps) * sched_.duration.per_step_cost *
                 speeds_[w];
    if (sched_.duration.lognormal_sigma > 0.0) {
      dur *= std::exp(sched_.duration.lognormal_sigma * dur_rng_[w].normal());
    }
    metrics_.busy_time[w] += dur;
    ev.time = t + dur;
    metrics_.last_finish[w] = ev.time;
    push_event(ev);
  }

  void on_rollout_done(const Event& ev) {
    // Hand the result to the transport, then keep the worker busy (async) or
    // park it until the next broadcast (sync).
    Event delivery = ev;
    delivery.kind = EventKind::kDelivery;
    delivery.time = ev.time + sched_.transport_latency;
    push_event(delivery);

    if (sched_.kind == ScheduleKind::kAsync) {
      start_rollout(ev.worker, ev.time);
    } else {
      if (tasks_left_ > 0) {
        --tasks_left_;
        start_rollout(ev.worker, ev.time);
      } else {
        idle_since_[ev.worker] = ev.time;
        idle_.insert(ev.worker);
      }
    }
  }

  void on_delivery(const Event& ev) {
    if (ev.is_pair) {
      metrics_.produced += 2;
      pair_buffer_.push_back(AntitheticPair{detail::through_codec(ev.eval),
                                            detail::through_codec(ev.eval_minus)});
    } else {
      metrics_.produced += 1;
      buffer_.push_back(detail::through_codec(ev.eval));
    }
    try_updates(ev.time);
  }

  void try_updates(double now) {
    while (!done_) {
      if (cfg_.mode == Mode::kEs ? !assemble_pairs() : !assemble_batch()) break;
      const double start = std::max(now, learner_free_);
      const double done_at = start + sched_.update_latency;
      learner_free_ = done_at;

      if (cfg_.baseline_mode == BaselineMode::kMeasured &&
          cfg_.mode != Mode::kEs) {
        const RolloutResult r = obj_.rollout(core_.theta(), learner_rng_);
        core_.set_measured_baseline(r.reward, r.steps);
      }

      UpdateRecord rec = cfg_.mode == Mode::kEs
                             ? core_.apply_pair_batch(std::move(pending_pairs_))
                             : core_.apply_batch(std::move(pending_));
      pending_.clear();
      pending_pairs_.clear();
      metrics_.consumed += cfg_.batch_size;
      for (const auto& [k, c] : rec.staleness) metrics_.staleness[k] += c;
      rec.vtime = done_at;
      rec.eval_reward = instrument_policy();
      metrics_.records.push_back(std::move(rec));

      broadcasts_.push_back({done_at + sched_.transport_latency,
                             core_.update_index(),
                             detail::through_codec_policy(
                                 core_.theta(),
                                 static_cast<std::uint32_t>(core_.update_index()))});

      if (core_.budget_exhausted() ||
          (sched_.max_updates > 0 && core_.update_index() >= sched_.max_updates)) {
        done_ = true;
        break;
      }

      if (sched_.kind == ScheduleKind::kSync) {
        // Wake idle workers at broadcast visibility, in id order.
        const double vis = done_at + sched_.transport_latency;
        tasks_left_ = target_tasks();
        std::vector<int> sleeping(idle_.begin(), idle_.end());
        idle_.clear();
        for (int w : sleeping) {
          metrics_.idle_time[w] += vis - idle_since_[w];
          if (tasks_left_ > 0) {
            --tasks_left_;
            start_rollout(w, vis);
          }
        }
      }
    }
  }

  // Scans the evaluation buffer in arrival order, dropping evaluations that
  // can no longer contribute (fd: stale; dfd: history evicted), and moves the
  // first N admissible ones into pending_. Later arrivals stay buffered for
  // the next update.
  bool assemble_batch() {
    std::deque<Evaluation> keep;
    while (!buffer_.empty()) {
      Evaluation e = std::move(buffer_.front());
      buffer_.pop_front();
      if (!core_.admissible(e)) {
        if (cfg_.mode == Mode::kFd) {
          core_.note_discarded(e);
        } else {
          core_.note_evicted(e);
        }
        continue;
      }
      if (pending_.size() < cfg_.batch_size) {
        pending_.push_back(std::move(e));
      } else {
        keep.push_back(std::move(e));
      }
    }
    buffer_ = std::move(keep);
    if (pending_.size() == cfg_.batch_size) return true;
    // Not enough yet; leave what we have pending and wait for more arrivals.
    return false;
  }

  bool assemble_pairs() {
    std::deque<AntitheticPair> keep;
    while (!pair_buffer_.empty()) {
      AntitheticPair p = std::move(pair_buffer_.front());
      pair_buffer_.pop_front();
      if (p.plus.origin_update != core_.update_index()) {
        core_.note_discarded(p.plus);
        core_.note_discarded(p.minus);
        continue;
      }
      if (pending_pairs_.size() < cfg_.batch_size / 2) {
        pending_pairs_.push_back(std::move(p));
      } else {
        keep.push_back(std::move(p));
      }
    }
    pair_buffer_ = std::move(keep);
    return pending_pairs_.size() == cfg_.batch_size / 2;
  }

  double instrument_policy() {
    if (cfg_.eval_rollouts <= 0) {
      return std::numeric_limits<double>::quiet_NaN();
    }
    double sum = 0.0;
    for (int i = 0; i < cfg_.eval_rollouts; ++i) {
      sum += obj_.evaluate(core_.theta(), eval_rng_).reward;
    }
    return sum / cfg_.eval_rollouts;
  }

  SimSchedule sched_;
  RunConfig cfg_;
  Objective& obj_;
  LearnerCore core_;
  int final_window_;

  std::priority_queue<Event, std::vector<Event>, EventOrder> queue_;
  std::uint64_t next_seq_ = 0;
  std::vector<Broadcast> broadcasts_;
  std::deque<Evaluation> buffer_;
  std::deque<AntitheticPair> pair_buffer_;
  std::vector<Evaluation> pending_;
  std::vector<AntitheticPair> pending_pairs_;
  double learner_free_ = 0.0;
  std::size_t tasks_left_ = 0;  // sync schedule: rollout tasks this cycle
  bool done_ = false;

  std::vector<Rng> env_rng_;
  std::vector<Rng> dur_rng_;
  std::vector<double> speeds_;
  Rng eval_rng_{0};
  Rng learner_rng_{0};
  std::vector<std::uint64_t> seed_counter_;
  std::map<int, double> idle_since_;
  std::set<int> idle_;

  RunMetrics metrics_;
};

inline RunMetrics simulate_pool(const SimSchedule& schedule,
                                const RunConfig& cfg, Objective& objective,
                                Vec theta0, int final_window = 50) {
  PoolSimulator sim(schedule, cfg, objective, std::move(theta0), final_window);
  RunMetrics m = sim.run();
  if (!m.conservation_holds()) {
    throw std::logic_error("simulate_pool: evaluation conservation violated");
  }
  return m;
}

}  // namespace dfd

#endif  // DFD_SIM_HPP_
