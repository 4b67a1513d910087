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
// Flat key-value experiment configuration:
//
//   # comment
//   sigma = 0.02
//   delays = 1,2,4,8
//
// Unknown keys are rejected so typos fail loudly. Defaults of every
// hyper-parameter match the reference experiment table.

#ifndef DFD_CONFIG_HPP_
#define DFD_CONFIG_HPP_

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfd/objectives.hpp"
#include "dfd/runtime.hpp"
#include "dfd/sim.hpp"
#include "dfd/study.hpp"

namespace dfd {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Config {
 public:
  Config() = default;

  static Config parse_string(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string stripped = strip(line);
      if (stripped.empty() || stripped[0] == '#') continue;
      const std::size_t eq = stripped.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": expected 'key = value'");
      }
      const std::string key = strip(stripped.substr(0, eq));
      const std::string value = strip(stripped.substr(eq + 1));
      if (key.empty()) {
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": empty key");
      }
      cfg.values_[key] = value;
    }
    return cfg;
  }

  static Config parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  void set(const std::string& key, const std::string& value) {
    values_[key] = value;
  }

  std::string get_string(const std::string& key, const std::string& dflt) const {
    const auto it = values_.find(key);
    return it == values_.end() ? dflt : it->second;
  }

  double get_double(const std::string& key, double dflt) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    return to_double(key, it->second);
  }

  std::int64_t get_int(const std::string& key, std::int64_t dflt) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    return to_int(key, it->second);
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t dflt) const {
    const std::int64_t v = get_int(key, static_cast<std::int64_t>(dflt));
    if (v < 0) throw ConfigError(key + ": must be non-negative");
    return static_cast<std::uint64_t>(v);
  }

  bool get_bool(const std::string& key, bool dflt) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    const std::string& v = it->second;
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ConfigError(key + ": expected a boolean, got '" + v + "'");
  }

  std::vector<double> get_double_list(const std::string& key,
                                      std::vector<double> dflt) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    std::vector<double> out;
    for (const std::string& item : split(it->second)) {
      out.push_back(to_double(key, item));
    }
    return out;
  }

  std::vector<std::uint64_t> get_u64_list(const std::string& key,
                                          std::vector<std::uint64_t> dflt) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    std::vector<std::uint64_t> out;
    for (const std::string& item : split(it->second)) {
      const std::int64_t v = to_int(key, item);
      if (v < 0) throw ConfigError(key + ": must be non-negative");
      out.push_back(static_cast<std::uint64_t>(v));
    }
    return out;
  }

  // Rejects keys outside the documented set.
  void validate_keys(const std::set<std::string>& known) const {
    for (const auto& [key, value] : values_) {
      if (known.count(key) == 0) {
        throw ConfigError("unknown config key: " + key);
      }
    }
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  static std::string strip(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
  }

  static std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
      const std::string t = strip(item);
      if (!t.empty()) out.push_back(t);
    }
    return out;
  }

  static double to_double(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
  }

  static std::int64_t to_int(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const std::int64_t i = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return i;
    } catch (const std::exception&) {
      throw ConfigError(key + ": expected an integer, got '" + v + "'");
    }
  }

  std::map<std::string, std::string> values_;
};

inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys{
      // learner
      "mode", "batch_size", "sigma", "total_timesteps", "history_depth",
      "baseline", "baseline_ratio", "reward_standardization", "optimizer",
      "adam_beta1", "adam_beta2", "adam_epsilon", "adam_eta", "sgd_eta",
      "eval_rollouts", "seed", "theta_init", "theta_init_scale",
      // objective
      "objective", "dim", "quadratic_target", "pm_hidden1", "pm_hidden2",
      "pm_horizon", "pm_horizon_dist", "pm_horizon_min", "pm_horizon_max",
      "pm_pareto_shape", "pm_pareto_scale", "pm_obs_standardize", "obs_clip",
      "pm_max_episode_len", "pm_goal_radius", "pm_bound_radius",
      "pm_start_radius_min", "pm_start_radius_max", "pm_reward_sharpness",
      "lqr_horizon", "lqr_random_x0", "lqr_x0_radius",
      // simulated schedule
      "workers", "schedule", "per_step_cost", "worker_speed_min",
      "worker_speed_max", "lognormal_sigma", "update_latency",
      "transport_latency", "max_updates",
      // transport
      "transport", "role", "host", "port", "worker_id", "connect_retries",
      "connect_retry_ms", "collect_timeout_ms",
      // studies
      "delays", "proportions", "study_updates", "study_seeds", "seed_base",
      "final_window", "bootstrap_resamples",
  };
  return keys;
}

inline RunConfig run_config_from(const Config& c) {
  RunConfig cfg;
  const std::string mode = c.get_string("mode", "dfd");
  if (mode == "dfd") {
    cfg.mode = Mode::kDfd;
  } else if (mode == "fd") {
    cfg.mode = Mode::kFd;
  } else if (mode == "es") {
    cfg.mode = Mode::kEs;
  } else {
    throw ConfigError("mode: expected dfd, fd or es, got '" + mode + "'");
  }
  cfg.batch_size = static_cast<std::size_t>(c.get_u64("batch_size", 40));
  cfg.sigma = c.get_double("sigma", 0.02);
  cfg.t_lim = c.get_u64("total_timesteps", 50'000'000);
  cfg.history_depth = static_cast<std::size_t>(c.get_u64("history_depth", 64));
  const std::string baseline = c.get_string("baseline", "estimated");
  if (baseline == "estimated") {
    cfg.baseline_mode = BaselineMode::kEstimated;
  } else if (baseline == "measured") {
    cfg.baseline_mode = BaselineMode::kMeasured;
  } else {
    throw ConfigError("baseline: expected estimated or measured");
  }
  cfg.baseline_ratio = c.get_double("baseline_ratio", 0.2);
  cfg.standardize_rewards = c.get_bool("reward_standardization", true);
  const std::string opt = c.get_string("optimizer", "adam");
  if (opt == "adam") {
    cfg.use_adam = true;
  } else if (opt == "sgd") {
    cfg.use_adam = false;
  } else {
    throw ConfigError("optimizer: expected adam or sgd");
  }
  cfg.adam.beta1 = c.get_double("adam_beta1", 0.9);
  cfg.adam.beta2 = c.get_double("adam_beta2", 0.999);
  cfg.adam.epsilon = c.get_double("adam_epsilon", 1e-8);
  cfg.adam.eta = c.get_double("adam_eta", 0.01);
  cfg.sgd_eta = c.get_double("sgd_eta", 0.01);
  cfg.eval_rollouts = static_cast<int>(c.get_int("eval_rollouts", 1));
  return cfg;
}

inline SimSchedule schedule_from(const Config& c) {
  SimSchedule s;
  s.workers = static_cast<int>(c.get_int("workers", 4));
  const std::string kind = c.get_string("schedule", "async");
  if (kind == "async") {
    s.kind = ScheduleKind::kAsync;
  } else if (kind == "sync") {
    s.kind = ScheduleKind::kSync;
  } else {
    throw ConfigError("schedule: expected async or sync");
  }
  s.duration.per_step_cost = c.get_double("per_step_cost", 1.0);
  s.duration.worker_speed_min = c.get_double("worker_speed_min", 1.0);
  s.duration.worker_speed_max = c.get_double("worker_speed_max", 1.0);
  s.duration.lognormal_sigma = c.get_double("lognormal_sigma", 0.0);
  s.update_latency = c.get_double("update_latency", 0.0);
  s.transport_latency = c.get_double("transport_latency", 0.0);
  s.seed = c.get_u64("seed", 124);
  s.max_updates = c.get_u64("max_updates", 0);
  return s;
}

inline DelayStudyConfig delay_study_from(const Config& c) {
  DelayStudyConfig s;
  s.delays = c.get_u64_list("delays", {1, 2, 4, 8});
  s.proportions = c.get_double_list("proportions", {0.0, 0.25, 0.5, 0.75, 1.0});
  s.updates = c.get_u64("study_updates", 800);
  s.seeds = static_cast<int>(c.get_int("study_seeds", 10));
  s.seed_base = c.get_u64("seed_base", 124);
  s.final_window = static_cast<int>(c.get_int("final_window", 50));
  return s;
}

inline UpdateStudyConfig update_study_from(const Config& c) {
  UpdateStudyConfig s;
  s.seeds = static_cast<int>(c.get_int("study_seeds", 10));
  s.seed_base = c.get_u64("seed_base", 124);
  s.schedule = schedule_from(c);
  return s;
}

inline PointMassConfig point_mass_config_from(const Config& c) {
  PointMassConfig pm;
  pm.policy.obs_dim = 4;
  pm.policy.action_dim = 2;
  pm.policy.hidden[0] = static_cast<int>(c.get_int("pm_hidden1", 24));
  pm.policy.hidden[1] = static_cast<int>(c.get_int("pm_hidden2", 24));
  pm.standardize_obs = c.get_bool("pm_obs_standardize", true);
  pm.obs_clip = c.get_double("obs_clip", 5.0);
  pm.max_episode_len = c.get_u64("pm_max_episode_len", 1000);
  pm.goal_radius = c.get_double("pm_goal_radius", 0.15);
  pm.bound_radius = c.get_double("pm_bound_radius", 4.0);
  pm.start_radius_min = c.get_double("pm_start_radius_min", 1.0);
  pm.start_radius_max = c.get_double("pm_start_radius_max", 1.5);
  pm.reward_sharpness = c.get_double("pm_reward_sharpness", 2.0);
  const std::string dist = c.get_string("pm_horizon_dist", "fixed");
  if (dist == "fixed") {
    pm.horizon.kind = HorizonDist::Kind::kFixed;
  } else if (dist == "uniform") {
    pm.horizon.kind = HorizonDist::Kind::kUniform;
  } else if (dist == "pareto") {
    pm.horizon.kind = HorizonDist::Kind::kPareto;
  } else {
    throw ConfigError("pm_horizon_dist: expected fixed, uniform or pareto");
  }
  pm.horizon.fixed = c.get_u64("pm_horizon", 120);
  pm.horizon.uniform_min = c.get_u64("pm_horizon_min", 60);
  pm.horizon.uniform_max = c.get_u64("pm_horizon_max", 180);
  pm.horizon.pareto_shape = c.get_double("pm_pareto_shape", 1.5);
  pm.horizon.pareto_scale = c.get_double("pm_pareto_scale", 60.0);
  return pm;
}

// Factory producing a fresh objective per run (each run owns its observation
// statistics).
inline ObjectiveFactory objective_factory_from(const Config& c) {
  const std::string name = c.get_string("objective", "point_mass");
  if (name == "point_mass") {
    const PointMassConfig pm = point_mass_config_from(c);
    return [pm] { return std::make_unique<PointMassTask>(pm); };
  }
  if (name == "quadratic") {
    const std::size_t dim = static_cast<std::size_t>(c.get_u64("dim", 20));
    const double target = c.get_double("quadratic_target", 0.0);
    return [dim, target] {
      return std::make_unique<QuadraticObjective>(dim, target);
    };
  }
  if (name == "rosenbrock") {
    const std::size_t dim = static_cast<std::size_t>(c.get_u64("dim", 10));
    return [dim] { return std::make_unique<RosenbrockObjective>(dim); };
  }
  if (name == "lqr") {
    LqrConfig lqr;
    lqr.horizon = c.get_u64("lqr_horizon", 50);
    lqr.random_x0 = c.get_bool("lqr_random_x0", false);
    lqr.x0_radius = c.get_double("lqr_x0_radius", 1.0);
    return [lqr] { return std::make_unique<LqrTask>(lqr); };
  }
  throw ConfigError("objective: unknown objective '" + name + "'");
}

inline Vec initial_theta(const Config& c, std::size_t dim) {
  const std::string init = c.get_string("theta_init", "zeros");
  if (init == "zeros") return zeros(dim);
  if (init == "gaussian") {
    const double scale = c.get_double("theta_init_scale", 0.01);
    Rng rng(mix64(c.get_u64("seed", 124) ^ 0x7e1a9d3fb5c06842ull));
    Vec theta(dim);
    for (double& x : theta) x = scale * rng.normal();
    return theta;
  }
  throw ConfigError("theta_init: expected zeros or gaussian");
}

}  // namespace dfd

#endif  // DFD_CONFIG_HPP_
