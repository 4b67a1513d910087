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
// End-to-end validation suite: every numbered check runs a pinned scenario at
// a pinned tolerance and reports pass/fail. The suite backs both the
// `dfd validate` subcommand and the acceptance test binary. Reference values
// are computed by independent oracle implementations kept inside this module
// (reference_adam, brute-force trimmed mean), never by the code under test.

#ifndef DFD_VALIDATE_HPP_
#define DFD_VALIDATE_HPP_

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dfd/estimators.hpp"
#include "dfd/objectives.hpp"
#include "dfd/optimizer.hpp"
#include "dfd/rng.hpp"
#include "dfd/runtime.hpp"
#include "dfd/sim.hpp"
#include "dfd/stats.hpp"
#include "dfd/study.hpp"
#include "dfd/transport.hpp"
#include "dfd/vec.hpp"

namespace dfd {

struct CheckResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

namespace validate_detail {

inline bool bitwise_equal(const Vec& a, const Vec& b) {
  return a.size() == b.size() &&
         (a.empty() ||
          std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

inline double cosine(const Vec& a, const Vec& b) {
  return dot(a, b) / (norm(a) * norm(b));
}

// Independent Adam reference: textbook equations, long double accumulation,
// written separately from optimizer.hpp.
inline std::vector<Vec> reference_adam(const Vec& theta0,
                                       const std::vector<Vec>& grads,
                                       long double beta1, long double beta2,
                                       long double epsilon, long double eta) {
  const std::size_t d = theta0.size();
  std::vector<long double> th(theta0.begin(), theta0.end());
  std::vector<long double> m(d, 0.0L), v(d, 0.0L);
  std::vector<Vec> trajectory;
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    const Vec& g = grads[t - 1];
    for (std::size_t i = 0; i < d; ++i) {
      m[i] = beta1 * m[i] + (1.0L - beta1) * static_cast<long double>(g[i]);
      v[i] = beta2 * v[i] +
             (1.0L - beta2) * static_cast<long double>(g[i]) *
                 static_cast<long double>(g[i]);
      const long double mhat = m[i] / (1.0L - powl(beta1, t));
      const long double vhat = v[i] / (1.0L - powl(beta2, t));
      th[i] += eta * mhat / (sqrtl(vhat) + epsilon);
    }
    trajectory.emplace_back(th.begin(), th.end());
  }
  return trajectory;
}

inline PointMassConfig study_task() {
  PointMassConfig pm;
  pm.policy.hidden = {24, 24};
  pm.horizon.kind = HorizonDist::Kind::kFixed;
  pm.horizon.fixed = 100;
  return pm;
}

template <typename F>
inline CheckResult timed(int id, const std::string& name, F&& body) {
  CheckResult r;
  r.id = id;
  r.name = name;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(r);
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return r;
}

}  // namespace validate_detail

// 1. Delayed perturbations are biased toward the parameter drift: the mean of
// <lambda, nu> over many seeds equals -||nu||^2 within 3 standard errors, for
// ||nu|| in {0.1, 1, 10} at d = 10, sigma = 1.
inline CheckResult check_bias_identity() {
  using namespace validate_detail;
  return timed(1, "bias-identity", [](CheckResult& r) {
    const std::size_t d = 10;
    const std::size_t m = 100'000;
    std::ostringstream detail;
    r.pass = true;
    for (const double scale : {0.1, 1.0, 10.0}) {
      Vec nu(d, scale / std::sqrt(static_cast<double>(d)));
      const Vec theta_origin = zeros(d);
      const Vec& theta_now = nu;  // drift theta_now - theta_origin == nu
      const double nu_sq = norm_squared(nu);
      double sum = 0.0, sumsq = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        Evaluation e;
        e.seed = mix64(0xb1a5 + i);
        const Vec lambda = compute_lambda(e, 1.0, theta_now, theta_origin);
        const double x = dot(lambda, nu);
        sum += x;
        sumsq += x * x;
      }
      const double mean_x = sum / static_cast<double>(m);
      const double var_x =
          sumsq / static_cast<double>(m) - mean_x * mean_x;
      const double se = std::sqrt(var_x / static_cast<double>(m));
      const double err = std::abs(mean_x + nu_sq);
      const bool ok = err <= 3.0 * se;
      r.pass = r.pass && ok;
      detail << "|nu|=" << scale << ": mean=" << mean_x << " target=" << -nu_sq
             << " err/se=" << (se > 0 ? err / se : 0.0) << "; ";
    }
    r.detail = detail.str();
  });
}

// 2. On all-current batches grad_dfd and grad_fd are bit-identical
// (100 random batches).
inline CheckResult check_reduction_invariant() {
  using namespace validate_detail;
  return timed(2, "reduction-invariant", [](CheckResult& r) {
    Rng rng(20260808);
    r.pass = true;
    for (int trial = 0; trial < 100 && r.pass; ++trial) {
      const std::size_t d = 1 + rng.below(32);
      const std::size_t n = 2 + rng.below(63);
      const std::uint64_t u = rng.below(20);
      const double sigma = rng.uniform(0.005, 1.0);
      Vec theta(d);
      for (double& x : theta) x = rng.normal();
      Batch batch;
      for (std::size_t i = 0; i < n; ++i) {
        batch.evals.push_back(
            Evaluation{rng.next_u64(), 5.0 * rng.normal(), 1 + rng.below(100), u});
      }
      if (trial % 2 == 0) batch = standardize_rewards(std::move(batch));
      batch.baseline = estimate_baseline(batch, u);
      ParamHistory history(4);
      const GradEstimate a = grad_dfd(batch, theta, u, sigma, history);
      const GradEstimate b = grad_fd(batch, theta, u, sigma);
      r.pass = bitwise_equal(a.g, b.g) && a.n_current == b.n_current &&
               a.n_delayed == 0 && b.n_delayed == 0;
      if (!r.pass) r.detail = "mismatch at trial " + std::to_string(trial);
    }
    if (r.pass) r.detail = "100 random all-current batches bit-identical";
  });
}

// 3. Estimator fidelity on a quadratic: cosine(g_fd, grad J) >= 0.9 in at
// least 95 of 100 seeded trials (d=20, N=2000, sigma=0.01, no
// standardization, measured baseline).
inline CheckResult check_gradient_fidelity() {
  using namespace validate_detail;
  return timed(3, "gradient-fidelity", [](CheckResult& r) {
    const std::size_t d = 20;
    const std::size_t n = 2000;
    const double sigma = 0.01;
    QuadraticObjective obj(d, 0.0);
    int good = 0;
    double worst = 1.0;
    for (int trial = 0; trial < 100; ++trial) {
      Rng rng(mix64(7700 + trial));
      Vec theta(d);
      for (double& x : theta) x = rng.normal();
      Rng dummy(0);
      const double j0 = obj.rollout(theta, dummy).reward;
      Batch batch;
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t seed = rng.next_u64();
        Vec alpha = sample_noise(seed, d);
        for (std::size_t k = 0; k < d; ++k) {
          alpha[k] = theta[k] + sigma * alpha[k];
        }
        batch.evals.push_back(
            Evaluation{seed, obj.rollout(alpha, dummy).reward, 1, 0});
      }
      batch.baseline = j0;
      const GradEstimate est = grad_fd(batch, theta, 0, sigma);
      const double cos = cosine(est.g, obj.analytic_gradient(theta));
      worst = std::min(worst, cos);
      if (cos >= 0.9) ++good;
    }
    r.pass = good >= 95;
    r.detail = std::to_string(good) + "/100 trials with cosine >= 0.9 (min " +
               fmt_g(worst) + ")";
  });
}

// 4. Antithetic estimator expectation on a linear objective R = <w, theta>:
// every component of g within 3 SE of 2w over 1e4 pairs.
inline CheckResult check_es_expectation() {
  using namespace validate_detail;
  return timed(4, "es-expectation", [](CheckResult& r) {
    const Vec w{1.0, -2.0, 0.5, 3.0, -1.0};
    const std::size_t d = w.size();
    const double sigma = 0.1;
    const std::size_t pairs_n = 10'000;
    Rng rng(424242);
    std::vector<AntitheticPair> pairs;
    pairs.reserve(pairs_n);
    // Per-pair estimator terms, for the standard error.
    Vec term_sum(d, 0.0), term_sumsq(d, 0.0);
    for (std::size_t i = 0; i < pairs_n; ++i) {
      const std::uint64_t seed = rng.next_u64();
      const Vec eps = sample_noise(seed, d);
      const double r_plus = sigma * dot(w, eps);
      const double r_minus = -sigma * dot(w, eps);
      pairs.push_back(AntitheticPair{Evaluation{seed, r_plus, 1, 0},
                                     Evaluation{seed, r_minus, 1, 0}});
      for (std::size_t k = 0; k < d; ++k) {
        const double term = (r_plus - r_minus) * eps[k] / sigma;
        term_sum[k] += term;
        term_sumsq[k] += term * term;
      }
    }
    const GradEstimate est = grad_es_antithetic(pairs, sigma, d);
    r.pass = true;
    double worst_z = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double mean_t = term_sum[k] / static_cast<double>(pairs_n);
      const double var_t =
          term_sumsq[k] / static_cast<double>(pairs_n) - mean_t * mean_t;
      const double se = std::sqrt(var_t / static_cast<double>(pairs_n));
      const double z = std::abs(est.g[k] - 2.0 * w[k]) / se;
      worst_z = std::max(worst_z, z);
      r.pass = r.pass && z <= 3.0;
    }
    r.detail = "max |g_k - 2 w_k| / SE = " + fmt_g(worst_z);
  });
}

// 5. Baseline rule boundary: B/N = 8/40 (inclusive threshold) uses the
// current-policy mean, 7/40 the full-batch mean, exactly.
inline CheckResult check_baseline_boundary() {
  using namespace validate_detail;
  return timed(5, "baseline-boundary", [](CheckResult& r) {
    Rng rng(99);
    const auto build = [&](std::size_t b) {
      Batch batch;
      for (std::size_t i = 0; i < 40; ++i) {
        const bool current = i < b;
        batch.evals.push_back(Evaluation{
            rng.next_u64(), rng.uniform(-5.0, 5.0), 10, current ? 7u : 3u});
      }
      return batch;
    };
    const auto mean_where = [](const Batch& batch, bool current_only) {
      double s = 0.0;
      std::size_t c = 0;
      for (const Evaluation& e : batch.evals) {
        if (!current_only || e.origin_update == 7) {
          s += e.reward;
          ++c;
        }
      }
      return s / static_cast<double>(c);
    };
    const Batch at = build(8);
    const Batch below = build(7);
    const double b_at = estimate_baseline(at, 7, 0.2);
    const double b_below = estimate_baseline(below, 7, 0.2);
    const bool ok_at = b_at == mean_where(at, true);
    const bool ok_below = b_below == mean_where(below, false);
    r.pass = ok_at && ok_below;
    r.detail = std::string("B=8 current-mean: ") + (ok_at ? "ok" : "WRONG") +
               ", B=7 full-mean: " + (ok_below ? "ok" : "WRONG");
  });
}

// 6. Standardization: |mean| <= 1e-9 and |sd - 1| <= 1e-9 after
// standardizing any non-degenerate batch; an all-equal batch yields a zero
// gradient and a bitwise no-op SGD update.
inline CheckResult check_standardization() {
  using namespace validate_detail;
  return timed(6, "standardization", [](CheckResult& r) {
    Rng rng(31337);
    r.pass = true;
    double worst_mean = 0.0, worst_sd = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 2 + rng.below(200);
      const double scale = std::pow(10.0, rng.uniform(-3.0, 6.0));
      const double offset = scale * rng.uniform(-10.0, 10.0);
      Batch batch;
      for (std::size_t i = 0; i < n; ++i) {
        batch.evals.push_back(
            Evaluation{rng.next_u64(), offset + scale * rng.normal(), 1, 0});
      }
      batch = standardize_rewards(std::move(batch));
      if (batch.degenerate) continue;
      double s = 0.0;
      for (const Evaluation& e : batch.evals) s += e.reward;
      const double mean_r = s / static_cast<double>(n);
      double sq = 0.0;
      for (const Evaluation& e : batch.evals) {
        sq += (e.reward - mean_r) * (e.reward - mean_r);
      }
      const double sd_r = std::sqrt(sq / static_cast<double>(n));
      worst_mean = std::max(worst_mean, std::abs(mean_r));
      worst_sd = std::max(worst_sd, std::abs(sd_r - 1.0));
      r.pass = r.pass && std::abs(mean_r) <= 1e-9 && std::abs(sd_r - 1.0) <= 1e-9;
    }

    // Degenerate batch: zero gradient, theta bitwise unchanged under sgd.
    RunConfig cfg;
    cfg.mode = Mode::kFd;
    cfg.batch_size = 8;
    cfg.use_adam = false;
    cfg.sgd_eta = 0.5;
    cfg.t_lim = 1'000'000;
    Vec theta0{0.25, -1.5, 3.0};
    LearnerCore core(cfg, theta0);
    std::vector<Evaluation> evals;
    Rng seed_rng(5);
    for (std::size_t i = 0; i < 8; ++i) {
      evals.push_back(Evaluation{seed_rng.next_u64(), 5.0, 1, 0});
    }
    const UpdateRecord rec = core.apply_batch(std::move(evals));
    const bool noop = rec.degenerate && bitwise_equal(core.theta(), theta0);
    r.pass = r.pass && noop;
    r.detail = "worst |mean|=" + fmt_g(worst_mean) + ", worst |sd-1|=" +
               fmt_g(worst_sd) + ", degenerate no-op: " + (noop ? "ok" : "WRONG");
  });
}

// 7. Update-count dynamics: 8 asynchronous workers with heavy-tailed rollout
// durations at a fixed budget; dfd computes >= 10% more updates than fd
// (median over 10 seeds) and fd discards evaluations.
inline CheckResult check_update_counts() {
  using namespace validate_detail;
  return timed(7, "update-count-dynamics", [](CheckResult& r) {
    RunConfig base;
    base.batch_size = 40;
    base.sigma = 0.02;
    base.t_lim = 200'000;
    base.eval_rollouts = 0;

    PointMassConfig pm = study_task();
    pm.policy.hidden = {16, 16};
    pm.horizon.kind = HorizonDist::Kind::kUniform;
    pm.horizon.uniform_min = 40;
    pm.horizon.uniform_max = 160;

    SimSchedule sched;
    sched.workers = 8;
    sched.kind = ScheduleKind::kAsync;
    sched.duration.per_step_cost = 1.0;
    sched.duration.worker_speed_min = 0.5;
    sched.duration.worker_speed_max = 2.0;
    sched.duration.lognormal_sigma = 1.0;
    sched.update_latency = 100.0;

    std::vector<double> ratios, discards;
    for (int s = 0; s < 10; ++s) {
      sched.seed = 124 + static_cast<std::uint64_t>(s);
      RunConfig dfd_cfg = base;
      dfd_cfg.mode = Mode::kDfd;
      PointMassTask task_a(pm);
      const RunMetrics ma = simulate_pool(sched, dfd_cfg, task_a, zeros(task_a.dim()));
      RunConfig fd_cfg = base;
      fd_cfg.mode = Mode::kFd;
      PointMassTask task_b(pm);
      const RunMetrics mb = simulate_pool(sched, fd_cfg, task_b, zeros(task_b.dim()));
      ratios.push_back(static_cast<double>(ma.updates) /
                       static_cast<double>(mb.updates));
      discards.push_back(static_cast<double>(mb.discarded));
    }
    const double med_ratio = median(ratios);
    const double med_discards = median(discards);
    r.pass = med_ratio >= 1.10 && med_discards > 0.0;
    r.detail = "median updates dfd/fd = " + fmt_g(med_ratio) +
               ", median fd discards = " + fmt_g(med_discards);
  });
}

// 8. Synthetic delay study, full grid: the all-delayed cell at the largest
// delay does not beat the no-delay cell (median final reward over 10 seeds).
inline CheckResult check_delay_study() {
  using namespace validate_detail;
  return timed(8, "delay-study", [](CheckResult& r) {
    DelayStudyConfig study;  // delays {1,2,4,8} x proportions {0..1}, 800 x 10
    RunConfig base;
    base.batch_size = 40;
    base.sigma = 0.02;
    base.eval_rollouts = 1;
    const PointMassConfig pm = study_task();
    const std::vector<DelayCell> cells = run_delay_study(
        study, base, [&pm] { return std::make_unique<PointMassTask>(pm); });

    std::vector<double> all_delayed, no_delay;
    for (const DelayCell& c : cells) {
      if (c.delay == 8 && c.proportion == 1.0) {
        all_delayed.push_back(c.final_reward);
      }
      if (c.delay == 8 && c.proportion == 0.0) {
        no_delay.push_back(c.final_reward);
      }
    }
    const double med_delayed = median(all_delayed);
    const double med_fresh = median(no_delay);
    r.pass = cells.size() == study.delays.size() * study.proportions.size() *
                                 static_cast<std::size_t>(study.seeds) &&
             med_delayed <= med_fresh;
    r.detail = "median final reward p=1,k=8: " + fmt_g(med_delayed) +
               " vs p=0: " + fmt_g(med_fresh) + " (" +
               std::to_string(cells.size()) + " cells)";
  });
}

// 9. End-to-end learning: dfd with the reference hyper-parameters on the
// point-mass task improves the IQM final reward at least 3x over the initial
// policy within 2e6 timesteps, across 10 seeds.
inline CheckResult check_learning() {
  using namespace validate_detail;
  return timed(9, "end-to-end-learning", [](CheckResult& r) {
    RunConfig cfg;  // table defaults: dfd, N=40, sigma=0.02, adam 0.01
    cfg.t_lim = 2'000'000;
    cfg.eval_rollouts = 1;

    PointMassConfig pm = study_task();
    pm.policy.hidden = {64, 64};  // table-default architecture

    SimSchedule sched;
    sched.workers = 4;
    sched.kind = ScheduleKind::kAsync;

    std::vector<double> initial, final;
    for (int s = 0; s < 10; ++s) {
      sched.seed = 124 + static_cast<std::uint64_t>(s);
      PointMassTask task(pm);
      Rng eval_rng(mix64(sched.seed ^ 0xe1a7));
      double init_sum = 0.0;
      const Vec theta0 = zeros(task.dim());
      for (int i = 0; i < 10; ++i) {
        init_sum += task.evaluate(theta0, eval_rng).reward;
      }
      initial.push_back(init_sum / 10.0);
      const RunMetrics m = simulate_pool(sched, cfg, task, theta0);
      final.push_back(m.final_reward);
    }
    const double iqm_init = compute_iqm(initial);
    const double iqm_final = compute_iqm(final);
    r.pass = iqm_init > 0.0 && iqm_final >= 3.0 * iqm_init;
    r.detail = "IQM initial = " + fmt_g(iqm_init) +
               ", IQM final = " + fmt_g(iqm_final) + " (" +
               fmt_g(iqm_final / iqm_init) + "x)";
  });
}

// 10. Protocol: round-trip identity on 1e4 random messages, constant eval
// frame size, and chunked-stream reassembly for 100 random chunkings.
inline CheckResult check_protocol() {
  using namespace validate_detail;
  return timed(10, "protocol", [](CheckResult& r) {
    Rng rng(0xC0DE);
    const auto random_msg = [&rng]() -> WireMessage {
      const std::uint64_t kind = rng.below(100);
      if (kind < 60) {
        double reward = 1e6 * (rng.uniform() - 0.5);
        if (kind < 5) reward = std::numeric_limits<double>::quiet_NaN();
        if (kind >= 5 && kind < 8) {
          reward = std::numeric_limits<double>::infinity();
        }
        return EvalMsg{rng.next_u64(), reward,
                       static_cast<std::uint32_t>(rng.below(1u << 20)),
                       static_cast<std::uint32_t>(rng.below(1u << 16))};
      }
      if (kind < 85) {
        PolicyMsg p;
        p.update_index = static_cast<std::uint32_t>(rng.below(1u << 16));
        p.theta.resize(rng.below(65));
        for (double& x : p.theta) x = rng.normal();
        return p;
      }
      if (kind < 95) {
        return HelloMsg{static_cast<std::uint32_t>(rng.below(256))};
      }
      return ShutdownMsg{};
    };

    bool roundtrip_ok = true;
    for (int i = 0; i < 10'000 && roundtrip_ok; ++i) {
      const WireMessage msg = random_msg();
      const std::optional<WireMessage> back = decode(encode(msg));
      roundtrip_ok = back.has_value() && *back == msg;
    }

    bool size_ok = true;
    for (int i = 0; i < 100; ++i) {
      const EvalMsg e{rng.next_u64(), rng.normal(),
                      static_cast<std::uint32_t>(rng.below(1u << 30)),
                      static_cast<std::uint32_t>(rng.below(1u << 30))};
      size_ok = size_ok && encode(e).size() == kEvalFrameSize;
    }

    // Chunked reassembly of one message sequence under random chunkings.
    std::vector<WireMessage> seq;
    std::vector<std::uint8_t> bytes;
    for (int i = 0; i < 200; ++i) {
      seq.push_back(random_msg());
      const auto frame = encode(seq.back());
      bytes.insert(bytes.end(), frame.begin(), frame.end());
    }
    bool chunk_ok = true;
    for (int trial = 0; trial < 100 && chunk_ok; ++trial) {
      FrameDecoder decoder;
      std::vector<WireMessage> got;
      std::size_t pos = 0;
      while (pos < bytes.size()) {
        const std::size_t len =
            std::min<std::size_t>(1 + rng.below(97), bytes.size() - pos);
        decoder.feed({bytes.data() + pos, len});
        pos += len;
        while (auto msg = decoder.next()) got.push_back(std::move(*msg));
      }
      chunk_ok = got.size() == seq.size();
      for (std::size_t i = 0; chunk_ok && i < seq.size(); ++i) {
        chunk_ok = got[i] == seq[i];
      }
    }

    r.pass = roundtrip_ok && size_ok && chunk_ok;
    r.detail = std::string("round-trip: ") + (roundtrip_ok ? "ok" : "WRONG") +
               ", eval frame 25 B constant: " + (size_ok ? "ok" : "WRONG") +
               ", 100 chunkings: " + (chunk_ok ? "ok" : "WRONG");
  });
}

// 11. Determinism: the same study config and seed produce byte-identical CSV
// outputs on repeated runs.
inline CheckResult check_determinism() {
  using namespace validate_detail;
  return timed(11, "determinism", [](CheckResult& r) {
    DelayStudyConfig study;
    study.delays = {1, 4};
    study.proportions = {0.0, 0.5, 1.0};
    study.updates = 60;
    study.seeds = 4;
    RunConfig base;
    base.batch_size = 20;
    base.eval_rollouts = 1;
    PointMassConfig pm = study_task();
    pm.horizon.fixed = 50;

    const auto run_once = [&] {
      const std::vector<DelayCell> cells = run_delay_study(
          study, base, [&pm] { return std::make_unique<PointMassTask>(pm); });
      std::ostringstream cells_csv, summary_csv;
      write_delay_cells_csv(cells_csv, cells);
      write_delay_summary_csv(summary_csv, cells, 500);
      return cells_csv.str() + "\n---\n" + summary_csv.str();
    };
    const std::string a = run_once();
    const std::string b = run_once();
    r.pass = a == b;
    r.detail = r.pass ? "two runs byte-identical (" +
                            std::to_string(a.size()) + " bytes)"
                      : "outputs differ";
  });
}

// 12. Adam against an independent reference over a 10-step trajectory,
// elementwise <= 1e-10.
inline CheckResult check_adam_oracle() {
  using namespace validate_detail;
  return timed(12, "adam-oracle", [](CheckResult& r) {
    const std::size_t d = 7;
    Rng rng(2024);
    Vec theta(d);
    for (double& x : theta) x = rng.normal();
    std::vector<Vec> grads;
    for (int t = 0; t < 10; ++t) {
      Vec g(d);
      for (double& x : g) x = 3.0 * rng.normal();
      grads.push_back(std::move(g));
    }
    const AdamConfig cfg{};
    const std::vector<Vec> expected = reference_adam(
        theta, grads, cfg.beta1, cfg.beta2, cfg.epsilon, cfg.eta);

    AdamState state(d);
    Vec th = theta;
    double worst = 0.0;
    for (std::size_t t = 0; t < grads.size(); ++t) {
      th = adam_step(state, cfg, th, grads[t]);
      for (std::size_t i = 0; i < d; ++i) {
        worst = std::max(worst, std::abs(th[i] - expected[t][i]));
      }
    }
    r.pass = worst <= 1e-10;
    r.detail = "max elementwise deviation = " + fmt_g(worst);
  });
}

inline std::vector<CheckResult> run_acceptance_checks(
    const std::set<int>& only = {}) {
  using Check = CheckResult (*)();
  static constexpr Check checks[] = {
      check_bias_identity,    check_reduction_invariant,
      check_gradient_fidelity, check_es_expectation,
      check_baseline_boundary, check_standardization,
      check_update_counts,     check_delay_study,
      check_learning,          check_protocol,
      check_determinism,       check_adam_oracle,
  };
  std::vector<CheckResult> results;
  for (int i = 0; i < 12; ++i) {
    if (!only.empty() && only.count(i + 1) == 0) continue;
    results.push_back(checks[i]());
  }
  return results;
}

inline bool print_results(std::ostream& os,
                          const std::vector<CheckResult>& results) {
  bool all = true;
  for (const CheckResult& r : results) {
    all = all && r.pass;
    char line[64];
    std::snprintf(line, sizeof(line), "%s %2d %-24s %7.2fs  ",
                  r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(), r.seconds);
    os << line << r.detail << '\n';
  }
  return all;
}

}  // namespace dfd

#endif  // DFD_VALIDATE_HPP_
