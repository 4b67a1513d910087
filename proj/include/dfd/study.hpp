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
// Experiment harness:
//
//   run_delay_study    - synthetic staleness grid. At every update a batch is
//                        assembled with a fixed proportion of evaluations
//                        whose perturbations were drawn against theta_{u-k}
//                        (held back artificially); the remainder perturb the
//                        current parameters. The final score of a run is the
//                        mean evaluated policy reward over the last 50
//                        updates.
//   run_update_study   - dfd vs fd under an asynchronous heterogeneous pool
//                        at a fixed timestep budget: update counts, discarded
//                        evaluations, utilization.
//
// All outputs are CSV plus a gnuplot script; a (config, seed) pair produces
// byte-identical files on every run.

#ifndef DFD_STUDY_HPP_
#define DFD_STUDY_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dfd/estimators.hpp"
#include "dfd/objectives.hpp"
#include "dfd/rng.hpp"
#include "dfd/runtime.hpp"
#include "dfd/sim.hpp"
#include "dfd/stats.hpp"

namespace dfd {

using ObjectiveFactory = std::function<std::unique_ptr<Objective>()>;

struct DelayStudyConfig {
  std::vector<std::uint64_t> delays{1, 2, 4, 8};
  std::vector<double> proportions{0.0, 0.25, 0.5, 0.75, 1.0};
  std::uint64_t updates = 800;
  int seeds = 10;
  std::uint64_t seed_base = 124;
  int final_window = 50;
};

struct DelayCell {
  std::uint64_t delay = 0;
  double proportion = 0.0;
  std::uint64_t seed = 0;
  double final_reward = 0.0;
  std::size_t delayed_per_batch = 0;  // round(p*N), as actually used
  std::uint64_t prefilled = 0;        // delayed slots filled with current data
                                      // while u < k
};

// One evaluation of theta_src + sigma*eps with a fresh noise seed.
inline Evaluation make_eval(const Vec& theta_src, std::uint64_t origin,
                            double sigma, Objective& obj, Rng& seed_rng,
                            Rng& env_rng) {
  const std::uint64_t noise_seed = seed_rng.next_u64();
  Vec alpha = sample_noise(noise_seed, theta_src.size());
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    alpha[j] = theta_src[j] + sigma * alpha[j];
  }
  const RolloutResult r = obj.rollout(alpha, env_rng);
  return Evaluation{noise_seed, r.reward, r.steps, origin};
}

// One grid cell: a full training run with synthetic delayed batches.
inline DelayCell run_delay_cell(const RunConfig& base, Objective& obj,
                                std::uint64_t delay, double proportion,
                                std::uint64_t seed, std::uint64_t updates,
                                int final_window) {
  RunConfig cfg = base;
  cfg.mode = Mode::kDfd;
  cfg.t_lim = std::numeric_limits<std::uint64_t>::max();  // run by update count
  if (cfg.history_depth <= delay) cfg.history_depth = delay + 1;

  const std::size_t n = cfg.batch_size;
  const std::size_t n_delayed =
      static_cast<std::size_t>(std::llround(proportion * static_cast<double>(n)));

  Rng seed_rng(mix64(seed ^ 0x9a3f1c5b2d8e4a01ull));
  Rng env_rng(mix64(seed ^ 0x5bf03ab9c1d24e67ull));
  Rng eval_rng(mix64(seed ^ 0x27c4e9a8f6b1d3c5ull));

  LearnerCore core(cfg, zeros(obj.dim()));
  DelayCell cell{delay, proportion, seed, 0.0, n_delayed, 0};

  std::vector<double> eval_rewards;
  eval_rewards.reserve(updates);
  for (std::uint64_t u = 0; u < updates; ++u) {
    std::size_t want_delayed = n_delayed;
    if (u < delay) {
      // No theta_{u-k} exists yet; those slots carry current data instead.
      cell.prefilled += want_delayed;
      want_delayed = 0;
    }
    std::vector<Evaluation> evals;
    evals.reserve(n);
    if (want_delayed > 0) {
      const Vec* origin = core.history().find(u - delay);
      if (origin == nullptr) throw MissingHistoryError(u - delay);
      for (std::size_t i = 0; i < want_delayed; ++i) {
        evals.push_back(make_eval(*origin, u - delay, cfg.sigma, obj, seed_rng,
                                  env_rng));
      }
    }
    for (std::size_t i = want_delayed; i < n; ++i) {
      evals.push_back(make_eval(core.theta(), u, cfg.sigma, obj, seed_rng,
                                env_rng));
    }
    core.apply_batch(std::move(evals));

    double sum = 0.0;
    const int reps = std::max(1, cfg.eval_rollouts);
    for (int r = 0; r < reps; ++r) {
      sum += obj.evaluate(core.theta(), eval_rng).reward;
    }
    eval_rewards.push_back(sum / reps);
  }

  const std::size_t w = std::min<std::size_t>(
      static_cast<std::size_t>(final_window), eval_rewards.size());
  double s = 0.0;
  for (std::size_t i = eval_rewards.size() - w; i < eval_rewards.size(); ++i) {
    s += eval_rewards[i];
  }
  cell.final_reward = s / static_cast<double>(w);
  return cell;
}

inline std::vector<DelayCell> run_delay_study(const DelayStudyConfig& study,
                                              const RunConfig& base,
                                              const ObjectiveFactory& make_obj) {
  std::vector<DelayCell> cells;
  cells.reserve(study.delays.size() * study.proportions.size() *
                static_cast<std::size_t>(study.seeds));
  for (std::uint64_t k : study.delays) {
    for (double p : study.proportions) {
      for (int s = 0; s < study.seeds; ++s) {
        const std::uint64_t seed = study.seed_base + static_cast<std::uint64_t>(s);
        std::unique_ptr<Objective> obj = make_obj();
        cells.push_back(run_delay_cell(base, *obj, k, p, seed, study.updates,
                                       study.final_window));
      }
    }
  }
  return cells;
}

inline void write_delay_cells_csv(std::ostream& os,
                                  const std::vector<DelayCell>& cells) {
  os << "delay,proportion,seed,final_reward,delayed_per_batch,prefilled\n";
  for (const DelayCell& c : cells) {
    os << c.delay << ',' << fmt_g(c.proportion) << ',' << c.seed << ','
       << fmt_g(c.final_reward) << ',' << c.delayed_per_batch << ','
       << c.prefilled << '\n';
  }
}

// Aggregates each (delay, proportion) cell over seeds: IQM with a percentile
// bootstrap 95% interval (2000 resamples, pinned) plus the median.
inline void write_delay_summary_csv(std::ostream& os,
                                    const std::vector<DelayCell>& cells,
                                    std::size_t resamples = 2000) {
  os << "delay,proportion,n_seeds,iqm,ci_lo,ci_hi,median\n";
  std::vector<std::pair<std::uint64_t, double>> groups;
  for (const DelayCell& c : cells) {
    const std::pair<std::uint64_t, double> g{c.delay, c.proportion};
    bool seen = false;
    for (const auto& h : groups) seen = seen || h == g;
    if (!seen) groups.push_back(g);
  }
  for (const auto& [delay, proportion] : groups) {
    std::vector<double> scores;
    for (const DelayCell& c : cells) {
      if (c.delay == delay && c.proportion == proportion) {
        scores.push_back(c.final_reward);
      }
    }
    const double iqm = compute_iqm(scores);
    const std::uint64_t boot_seed =
        mix64(0xb00f5747ull ^ (delay << 20) ^
              static_cast<std::uint64_t>(std::llround(proportion * 100.0)));
    const ConfidenceInterval ci = bootstrap_iqm_ci(scores, resamples, boot_seed);
    os << delay << ',' << fmt_g(proportion) << ',' << scores.size() << ','
       << fmt_g(iqm) << ',' << fmt_g(ci.lo) << ',' << fmt_g(ci.hi) << ','
       << fmt_g(median(scores)) << '\n';
  }
}

inline void write_delay_gnuplot(std::ostream& os,
                                const std::string& summary_csv) {
  os << "# gnuplot script: IQM final reward vs proportion of delayed data\n"
     << "set datafile separator ','\n"
     << "set key top right\n"
     << "set xlabel 'proportion of delayed evaluations per batch'\n"
     << "set ylabel 'final reward (IQM over seeds, 95% bootstrap CI)'\n"
     << "plot for [k in \"1 2 4 8\"] '" << summary_csv
     << "' using (column('proportion')):(column('delay')==int(k)?"
        "column('iqm'):1/0):(column('ci_lo')):(column('ci_hi')) "
        "with yerrorlines title 'delay '.k\n";
}

// --- update-count study (asynchronous pool, dfd vs fd) ----------------------

struct UpdateStudyConfig {
  int seeds = 10;
  std::uint64_t seed_base = 124;
  SimSchedule schedule{};  // schedule.seed is overridden per run
};

struct UpdateStudyRow {
  std::string mode;
  std::uint64_t seed = 0;
  std::uint64_t updates = 0;
  std::uint64_t t_total = 0;
  std::uint64_t discarded = 0;
  std::uint64_t evicted = 0;
  double final_reward = 0.0;
  double mean_utilization = 0.0;
};

inline UpdateStudyRow summarize_run(Mode mode, std::uint64_t seed,
                                    const RunMetrics& m) {
  UpdateStudyRow row;
  row.mode = mode_name(mode);
  row.seed = seed;
  row.updates = m.updates;
  row.t_total = m.t_total;
  row.discarded = m.discarded;
  row.evicted = m.evicted;
  row.final_reward = m.final_reward;
  double util = 0.0;
  int counted = 0;
  for (std::size_t w = 0; w < m.busy_time.size(); ++w) {
    if (m.last_finish[w] > 0.0) {
      util += m.busy_time[w] / m.last_finish[w];
      ++counted;
    }
  }
  row.mean_utilization = counted > 0 ? util / counted : 0.0;
  return row;
}

inline std::vector<UpdateStudyRow> run_update_study(
    const UpdateStudyConfig& study, const RunConfig& base,
    const ObjectiveFactory& make_obj) {
  std::vector<UpdateStudyRow> rows;
  for (int s = 0; s < study.seeds; ++s) {
    const std::uint64_t seed = study.seed_base + static_cast<std::uint64_t>(s);
    for (Mode mode : {Mode::kDfd, Mode::kFd}) {
      RunConfig cfg = base;
      cfg.mode = mode;
      SimSchedule sched = study.schedule;
      sched.seed = seed;
      std::unique_ptr<Objective> obj = make_obj();
      const RunMetrics m = simulate_pool(sched, cfg, *obj, zeros(obj->dim()));
      rows.push_back(summarize_run(mode, seed, m));
    }
  }
  return rows;
}

inline void write_update_study_csv(std::ostream& os,
                                   const std::vector<UpdateStudyRow>& rows) {
  os << "mode,seed,updates,t_total,discarded,evicted,final_reward,"
        "mean_utilization\n";
  for (const UpdateStudyRow& r : rows) {
    os << r.mode << ',' << r.seed << ',' << r.updates << ',' << r.t_total
       << ',' << r.discarded << ',' << r.evicted << ',' << fmt_g(r.final_reward)
       << ',' << fmt_g(r.mean_utilization) << '\n';
  }
}

inline void write_update_summary_csv(std::ostream& os,
                                     const std::vector<UpdateStudyRow>& rows) {
  os << "mode,n_seeds,updates_mean,updates_sd,discarded_mean,"
        "utilization_mean\n";
  for (const char* mode : {"dfd", "fd"}) {
    std::vector<double> updates, discards, utils;
    for (const UpdateStudyRow& r : rows) {
      if (r.mode == mode) {
        updates.push_back(static_cast<double>(r.updates));
        discards.push_back(static_cast<double>(r.discarded));
        utils.push_back(r.mean_utilization);
      }
    }
    if (updates.empty()) continue;
    os << mode << ',' << updates.size() << ',' << fmt_g(mean(updates)) << ','
       << fmt_g(sample_sd(updates)) << ',' << fmt_g(mean(discards)) << ','
       << fmt_g(mean(utils)) << '\n';
  }
}

}  // namespace dfd

#endif  // DFD_STUDY_HPP_
