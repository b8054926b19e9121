// Copyright 2026 The quditctl Authors
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

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "quditctl/experiments.hpp"
#include "quditctl/version.hpp"

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  bool out_set = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  bool threads_set = false;
  bool resume = false;
};

void add_common_flags(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("--config", opt.config_path,
                  "JSON config file (defaults used when omitted)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", opt.out_dir, "output directory")
      ->each([&](const std::string&) { opt.out_set = true; });
  cmd->add_option("--seed", opt.seed, "RNG seed override")
      ->each([&](const std::string&) { opt.seed_set = true; });
  cmd->add_option("--threads", opt.threads, "worker threads for restarts")
      ->each([&](const std::string&) { opt.threads_set = true; });
  cmd->add_flag("--resume", opt.resume,
                "continue from the checkpoint in the output directory");
}

int run_kind(quditctl::ExperimentKind kind, const CliOptions& opt) {
  quditctl::ExperimentConfig config;
  if (!opt.config_path.empty())
    config = quditctl::load_config(opt.config_path);
  config.kind = kind;
  if (opt.out_set) config.out_dir = opt.out_dir;
  if (opt.seed_set) config.seed = opt.seed;
  if (opt.threads_set) config.threads = opt.threads;

  quditctl::RunRecord record = quditctl::run(config, opt.resume);
  std::cout << record.payload_text << "\n";
  std::cerr << "run record: " << config.out_dir << "/run_record.json ("
            << record.wall_seconds << " s)\n";

  if (kind == quditctl::ExperimentKind::Gradcheck &&
      record.payload_text.find("\"pass\": false") != std::string::npos) {
    std::cerr << "gradcheck FAILED\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-transmon qudit gate experiments: analytic "
               "speed-limit protocols and pulse optimization"};
  app.set_version_flag("--version", quditctl::kVersion);
  app.require_subcommand(1);

  struct Sub {
    quditctl::ExperimentKind kind;
    const char* name;
    const char* help;
  };
  const Sub subs[] = {
      {quditctl::ExperimentKind::Optimize, "optimize",
       "pulse optimization at a fixed gate time"},
      {quditctl::ExperimentKind::ScanTime, "scan-time",
       "minimum-time scan over a gate-time grid"},
      {quditctl::ExperimentKind::ScanOmega, "scan-omega",
       "minimum-time scans over a drive-amplitude grid"},
      {quditctl::ExperimentKind::ProtocolReport, "protocol-report",
       "analytic protocol table: durations, bounds, fidelities"},
      {quditctl::ExperimentKind::Bound, "bound",
       "speed-limit bounds for the coupling constructions"},
      {quditctl::ExperimentKind::LeakageReport, "leakage-report",
       "population profile of a stored pulse set"},
      {quditctl::ExperimentKind::FidelityVsNmax, "fidelity-vs-nmax",
       "truncation convergence of a stored pulse set"},
      {quditctl::ExperimentKind::Gradcheck, "gradcheck",
       "adjoint gradient vs finite differences"},
  };

  CliOptions opts[std::size(subs)];
  CLI::App* cmds[std::size(subs)];
  for (size_t i = 0; i < std::size(subs); ++i) {
    cmds[i] = app.add_subcommand(subs[i].name, subs[i].help);
    add_common_flags(cmds[i], opts[i]);
  }

  CLI11_PARSE(app, argc, argv);

  for (size_t i = 0; i < std::size(subs); ++i) {
    if (!cmds[i]->parsed()) continue;
    try {
      return run_kind(subs[i].kind, opts[i]);
    } catch (const quditctl::ExperimentInterrupted& e) {
      std::cerr << e.what() << "\n";
      return 3;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }
  return 1;
}
