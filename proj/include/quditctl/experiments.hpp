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

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "quditctl/grape.hpp"

namespace quditctl {

enum class ExperimentKind {
  Optimize,
  ScanTime,
  ScanOmega,
  ProtocolReport,
  Bound,
  LeakageReport,
  FidelityVsNmax,
  Gradcheck,
};

std::string experiment_kind_name(ExperimentKind kind);
ExperimentKind experiment_kind_from_name(const std::string& name);

// One experiment run, fully described. Frequencies (omega_max, grids)
// are in units of g; times (t_over_tmin, t_grid) in units of the qubit
// speed limit T_min = pi/(2g).
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Optimize;
  DeviceModel device;
  CouplingSpec coupling;

  // Optimizer block.
  double t_over_tmin = 0.5;
  int M = 40;
  double omega_max = 20.0;
  double c_max = 1.0;
  double c_avg = 1.0;
  double learning_rate = 0.0;  // <= 0 picks the 0.02 * omega_max default
  double momentum = 0.9;
  int max_iters = 3000;
  int restarts = 1;
  double target_infidelity = 0.0;
  int substeps = 64;
  int plateau_iters = 200;
  double init_amplitude_scale = 0.5;
  int polish_substeps = 0;
  int polish_iters = 0;
  double report_tol = 1e-9;
  int report_max_substeps = 16384;

  // Scan block.
  std::vector<double> t_grid;      // empty picks the default sweep grid
  double scan_threshold = 0.9999;
  bool backward_sweep = true;
  std::vector<double> omega_grid;  // empty picks the default sweep grid

  // Analysis block (leakage-report, fidelity-vs-nmax).
  std::string pulses_path;
  std::vector<int> nmax_list;      // empty picks {3,...,9}
  int samples_per_segment = 32;
  int profile_substeps = 256;

  // Gradcheck block.
  int gradcheck_configs = 5;
  double fd_step_rel = 1e-6;  // FD step as a fraction of omega_max

  // Harness block.
  std::string out_dir = "runs";
  std::uint64_t seed = 0;
  int threads = 1;

  // Test hook: stop an optimize/scan run after this many completed
  // restarts/grid points, leaving a resumable checkpoint (0 = off).
  int abort_after_units = 0;

  bool operator==(const ExperimentConfig&) const = default;
};

// JSON document with blocks {kind, device, coupling, optimizer, scan,
// analysis, gradcheck, harness, test_hooks}; every field optional except
// kind, unknown keys rejected. Doubles survive the round trip exactly:
// config_from_json_text(config_to_json_text(c)) == c.
std::string config_to_json_text(const ExperimentConfig& config);
// Throws std::runtime_error naming the offending field on invalid input.
ExperimentConfig config_from_json_text(const std::string& text);

ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& config, const std::string& path);

struct RunRecord {
  ExperimentConfig config;
  std::string payload_text;  // result payload, canonical JSON
  std::string version;
  std::string started_at;    // UTC, ISO 8601
  double wall_seconds = 0.0;
};

// Thrown by run() when the abort_after_units test hook trips; the
// checkpoint on disk is complete and resumable at that point.
struct ExperimentInterrupted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Qubit-only speed limit pi/(2g); the time unit of every config.
double baseline_t_min(const DeviceModel& device);

// Translate the reduced-unit experiment fields into the absolute-unit
// optimizer config.
OptimizationConfig make_optimizer_config(const ExperimentConfig& config);

std::vector<double> default_t_grid();
std::vector<double> default_omega_grid();

// Dispatches to the named experiment, persists the run record, config
// snapshot, and CSV data under config.out_dir. With resume = true,
// optimize/scan kinds continue from the checkpoint left by an
// interrupted run instead of starting over.
RunRecord run(const ExperimentConfig& config, bool resume = false);

// Fidelity of a stored pulse set re-propagated with the per-transmon
// truncation raised to each n_max (tone table and coupling embedding
// rebuilt at d_sim = n_max + 1).
std::vector<std::pair<int, double>> fidelity_vs_nmax(
    const PulseSet& pulses, DeviceModel device, const CouplingSpec& coupling,
    const std::vector<int>& nmax_list, double report_tol = 1e-9,
    int report_max_substeps = 1024);

// CSV with columns (t, re/im of each tone's drive) sampled on the
// sin^2 envelope, samples_per_segment points per segment plus the final
// boundary.
void export_pulse_csv(const PulseSet& pulses, int samples_per_segment,
                      const std::string& path);

void save_pulses(const PulseSet& pulses, const std::string& path);
PulseSet load_pulses(const std::string& path);

}  // namespace quditctl
