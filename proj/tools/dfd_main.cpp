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
// Command line front end:
//   dfd run            one training run (simulated pool or tcp learner/worker)
//   dfd study-delay    synthetic staleness grid -> CSV + gnuplot script
//   dfd study-updates  dfd vs fd update counts under an async pool -> CSV
//   dfd validate       run the numbered validation checks

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dfd/config.hpp"
#include "dfd/sim.hpp"
#include "dfd/study.hpp"
#include "dfd/tcp.hpp"
#include "dfd/validate.hpp"

namespace {

dfd::Config load_config(const std::string& path, std::uint64_t seed_override,
                        bool has_seed) {
  dfd::Config cfg =
      path.empty() ? dfd::Config() : dfd::Config::parse_file(path);
  cfg.validate_keys(dfd::known_config_keys());
  if (has_seed) cfg.set("seed", std::to_string(seed_override));
  return cfg;
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/" + name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  return out;
}

int cmd_run(const dfd::Config& cfg, const std::string& out_dir) {
  const dfd::RunConfig run_cfg = dfd::run_config_from(cfg);
  const std::string transport = cfg.get_string("transport", "sim");
  const dfd::ObjectiveFactory make_obj = dfd::objective_factory_from(cfg);

  if (transport == "sim") {
    std::unique_ptr<dfd::Objective> obj = make_obj();
    const dfd::SimSchedule sched = dfd::schedule_from(cfg);
    const dfd::Vec theta0 = dfd::initial_theta(cfg, obj->dim());
    const dfd::RunMetrics m =
        dfd::simulate_pool(sched, run_cfg, *obj, theta0,
                           static_cast<int>(cfg.get_int("final_window", 50)));
    {
      std::ofstream log = open_out(out_dir, "run_log.csv");
      dfd::write_record_header(log);
      for (const dfd::UpdateRecord& r : m.records) dfd::write_record(log, r);
    }
    std::cout << "mode=" << dfd::mode_name(run_cfg.mode)
              << " updates=" << m.updates << " t_total=" << m.t_total
              << " final_reward=" << dfd::fmt_g(m.final_reward)
              << " discarded=" << m.discarded << " evicted=" << m.evicted
              << " vtime=" << dfd::fmt_g(m.vtime_end) << '\n'
              << "log: " << out_dir << "/run_log.csv\n";
    return 0;
  }

  if (transport != "tcp") {
    throw dfd::ConfigError("transport: expected sim or tcp");
  }
  const std::string role = cfg.get_string("role", "learner");
  if (role == "learner") {
    std::unique_ptr<dfd::Objective> obj = make_obj();
    dfd::TcpLearnerConfig net;
    net.host = cfg.get_string("host", "0.0.0.0");
    net.port = static_cast<int>(cfg.get_int("port", 5555));
    net.collect_timeout =
        std::chrono::milliseconds(cfg.get_u64("collect_timeout_ms", 60'000));
    dfd::TcpLearner learner(run_cfg, net, obj.get(),
                            dfd::initial_theta(cfg, obj->dim()));
    std::cout << "learner listening on " << net.host << ":" << learner.port()
              << '\n';
    std::ofstream log = open_out(out_dir, "run_log.csv");
    const dfd::TcpRunSummary summary = learner.run(&log);
    std::cout << "updates=" << summary.updates
              << " t_total=" << summary.t_total
              << " discarded=" << summary.drops.discarded
              << " evicted=" << summary.drops.evicted << '\n';
    return 0;
  }
  if (role == "worker") {
    std::unique_ptr<dfd::Objective> obj = make_obj();
    dfd::TcpWorkerConfig net;
    net.host = cfg.get_string("host", "127.0.0.1");
    net.port = static_cast<int>(cfg.get_int("port", 5555));
    net.worker_id = static_cast<std::uint32_t>(cfg.get_u64("worker_id", 0));
    net.connect_retries = static_cast<int>(cfg.get_int("connect_retries", 30));
    net.retry_delay =
        std::chrono::milliseconds(cfg.get_u64("connect_retry_ms", 500));
    net.env_seed = cfg.get_u64("seed", 124);
    dfd::TcpWorker worker(run_cfg, net);
    const dfd::TcpWorkerSummary summary = worker.run(*obj);
    std::cout << "worker " << net.worker_id << " done: rollouts="
              << summary.rollouts << " timesteps=" << summary.timesteps << '\n';
    return 0;
  }
  throw dfd::ConfigError("role: expected learner or worker");
}

int cmd_study_delay(const dfd::Config& cfg, const std::string& out_dir) {
  const dfd::DelayStudyConfig study = dfd::delay_study_from(cfg);
  const dfd::RunConfig base = dfd::run_config_from(cfg);
  const auto cells =
      dfd::run_delay_study(study, base, dfd::objective_factory_from(cfg));
  {
    std::ofstream out = open_out(out_dir, "delay_cells.csv");
    dfd::write_delay_cells_csv(out, cells);
  }
  {
    std::ofstream out = open_out(out_dir, "delay_summary.csv");
    dfd::write_delay_summary_csv(
        out, cells,
        static_cast<std::size_t>(cfg.get_u64("bootstrap_resamples", 2000)));
  }
  {
    std::ofstream out = open_out(out_dir, "delay_plot.gp");
    dfd::write_delay_gnuplot(out, out_dir + "/delay_summary.csv");
  }
  std::cout << cells.size() << " cells -> " << out_dir
            << "/delay_cells.csv, delay_summary.csv, delay_plot.gp\n";
  return 0;
}

int cmd_study_updates(const dfd::Config& cfg, const std::string& out_dir) {
  dfd::UpdateStudyConfig study = dfd::update_study_from(cfg);
  const dfd::RunConfig base = dfd::run_config_from(cfg);
  const auto rows =
      dfd::run_update_study(study, base, dfd::objective_factory_from(cfg));
  {
    std::ofstream out = open_out(out_dir, "update_runs.csv");
    dfd::write_update_study_csv(out, rows);
  }
  {
    std::ofstream out = open_out(out_dir, "update_summary.csv");
    dfd::write_update_summary_csv(out, rows);
  }
  std::cout << rows.size() << " runs -> " << out_dir
            << "/update_runs.csv, update_summary.csv\n";
  return 0;
}

int cmd_validate(const std::vector<int>& only) {
  const std::set<int> selection(only.begin(), only.end());
  const std::vector<dfd::CheckResult> results =
      dfd::run_acceptance_checks(selection);
  const bool all = dfd::print_results(std::cout, results);
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"delayed finite difference optimizer"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool has_seed = false;
  std::vector<int> only;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", config_path, "config file");
    if (needs_config) opt->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "override the config seed")
        ->each([&](const std::string&) { has_seed = true; });
  };

  CLI::App* run = app.add_subcommand("run", "single training run");
  add_common(run, true);
  CLI::App* sdelay =
      app.add_subcommand("study-delay", "synthetic staleness study");
  add_common(sdelay, false);
  CLI::App* supd =
      app.add_subcommand("study-updates", "dfd vs fd update-count study");
  add_common(supd, false);
  CLI::App* validate =
      app.add_subcommand("validate", "run the validation checks");
  validate->add_option("--only", only, "check numbers to run (default: all)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(load_config(config_path, seed, has_seed), out_dir);
    }
    if (sdelay->parsed()) {
      return cmd_study_delay(load_config(config_path, seed, has_seed), out_dir);
    }
    if (supd->parsed()) {
      return cmd_study_updates(load_config(config_path, seed, has_seed),
                               out_dir);
    }
    return cmd_validate(only);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
