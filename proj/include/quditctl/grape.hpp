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
#include <optional>
#include <vector>

#include "quditctl/metrics.hpp"
#include "quditctl/model.hpp"

namespace quditctl {

struct OptimizationConfig {
  DeviceModel device;
  CouplingSpec coupling;
  double T = 0.0;           // absolute, units 1/g
  int M = 40;
  double omega_max = 20.0;  // units g
  double c_max = 1.0;
  double c_avg = 1.0;

  double learning_rate = 0.0;  // <= 0 picks 0.02 * omega_max
  double momentum = 0.9;
  int max_iters = 3000;  // per restart, includes any polish iterations
  int restarts = 1;
  std::uint64_t seed = 0;
  double target_infidelity = 0.0;  // 0 disables early stopping
  int substeps = 64;
  int plateau_iters = 200;  // halve the rate after this many stale iters
  double init_amplitude_scale = 0.5;  // |A| drawn from U[0, scale*omega_max]
  int threads = 1;

  // Optional refinement of the winning restart on a finer time grid,
  // budgeted inside max_iters.
  int polish_substeps = 0;
  int polish_iters = 0;

  // Reported fidelities are re-evaluated with substep doubling until the
  // change falls below report_tol (see converged_report).
  double report_tol = 1e-9;
  int report_max_substeps = 16384;
};

struct OptimizationRun {
  PulseSet best_pulses;
  FidelityReport best_report;  // from converged_report
  std::vector<double> loss_history;  // winning restart, polish appended
  std::uint64_t seed_used = 0;
  int best_restart = -1;
  long iterations_executed = 0;  // across all restarts
  int report_substeps = 0;
  double wall_time = 0.0;
};

// Wirtinger-style gradient: entry (i,k,m) holds
// d loss / d Re A + i * d loss / d Im A, laid out like PulseSet
// amplitudes.
using GradientArray = std::array<std::vector<Complex>, 4>;

// Precomputed quantities for repeated loss/gradient evaluations at a
// fixed discretization. Immutable after construction; shareable across
// threads.
struct GrapeContext {
  DeviceModel device;
  Matrix coupling;
  ToneTable tones;
  SpaceSpec space;
  double T = 0.0;
  int M = 0;
  int substeps = 0;
  double c_max = 1.0, c_avg = 1.0;
  long n_steps = 0;
  double h = 0.0;

  // Per tone-table entry: flat positions of the raising operator, the
  // owning tone, and the full drive coefficient per step
  // (g * eta * envelope * phase at the step midpoint).
  struct Entry {
    int tone;
    std::vector<std::pair<int, int>> positions;  // (row, col) of |k'><k'-1|_j
    double eta_g;      // g * eta, the drive prefactor
    double delta_abs;  // detuning in absolute angular frequency
    std::vector<Complex> coef;  // length n_steps, empty when grid is too fine
  };
  std::vector<Entry> entries;
  std::array<Matrix, 16> fidelity_kernels;  // target U_j target^dag
  std::array<Matrix, 16> paulis;
  std::array<int, 4> qubit_rows;
  std::vector<int> leak_rows;
};

GrapeContext make_context(const DeviceModel& device,
                          const CouplingSpec& coupling, double T, int M,
                          int substeps, double c_max, double c_avg);

struct LossTerms {
  double f = 0.0;
  double leak_max = 0.0;
  double leak_avg = 0.0;
  double loss = 0.0;
};

// Objective at the context's discretization, propagating only the four
// computational columns.
LossTerms evaluate_loss(const GrapeContext& ctx, const PulseSet& pulses);

// Reverse-accumulation gradient through every implicit-midpoint step.
// Exact for the discretized dynamics.
LossTerms gradient(const PulseSet& pulses, const GrapeContext& ctx,
                   GradientArray& grad);

// Central differences on Re and Im of every amplitude.
GradientArray finite_difference_gradient(const PulseSet& pulses,
                                         const GrapeContext& ctx, double step);

// Largest relative deviation between the two gradients, guarded against
// vanishing components by a floor at 1e-8 of the largest magnitude.
double gradient_max_rel_error(const GradientArray& adjoint,
                              const GradientArray& fd);

// Fidelity report with the discretization refined (substeps doubled,
// starting from max(64, start_substeps)) until the fidelity moves by
// less than tol, capped at max_substeps. Returns the report at the
// finest grid evaluated.
FidelityReport converged_report(const DeviceModel& device,
                                const CouplingSpec& coupling,
                                const PulseSet& pulses, double c_max,
                                double c_avg, double tol, int start_substeps,
                                int max_substeps, int* substeps_used = nullptr);

// Outcome of one restart; the building block of optimize and of
// checkpointable harness loops.
struct RestartSummary {
  int index = -1;
  double best_loss = 0.0;
  LossTerms best_terms;
  PulseSet best_pulses;
  std::vector<double> loss_history;
  long iters = 0;
  bool hit_target = false;
};

// One seeded restart: random init from restart_seed(config.seed, index)
// unless warm is given, then projected Nesterov descent for
// max_iters - polish_iters iterations.
RestartSummary run_single_restart(const GrapeContext& ctx,
                                  const OptimizationConfig& config, int index,
                                  const PulseSet* warm = nullptr);

// Deterministic reduction of completed restarts: winner by
// (loss, restart index), optional polish stage on a finer grid, and the
// converged fidelity report.
OptimizationRun merge_restarts(const OptimizationConfig& config,
                               std::vector<RestartSummary> completed);

// Projected Nesterov descent with random restarts. Restarts are seeded
// independently from config.seed, run in index-ordered batches of
// config.threads, and merged by (loss, restart index); identical configs
// reproduce bit-identical results. Once a completed batch contains a
// restart that hit target_infidelity, no further batches start.
OptimizationRun optimize(const OptimizationConfig& config);

// Variant used by warm-started scans: pulse sets in warm_starts are used
// as the initial iterates of the first restarts (amplitudes kept, T and
// tau taken from the config), followed by random restarts up to
// config.restarts in total.
OptimizationRun optimize_with_warm_starts(
    const OptimizationConfig& config, const std::vector<PulseSet>& warm_starts);

struct ScanPoint {
  double T = 0.0;
  double best_f = 0.0;
  double best_loss = 0.0;
  PulseSet best_pulses;
};

struct ScanResult {
  std::vector<ScanPoint> points;
  bool threshold_met = false;
  double t_f = 0.0;  // smallest grid T with best_f >= threshold
};

// optimize at every grid time (ascending), warm-starting each point from
// its predecessor's best pulses; an optional descending sweep then
// re-warms each point from the one above it and keeps improvements.
ScanResult scan_min_time(const OptimizationConfig& base, double threshold,
                         const std::vector<double>& t_grid,
                         bool backward_sweep = true);

// Deterministic per-restart seed stream.
std::uint64_t restart_seed(std::uint64_t base, int restart);

}  // namespace quditctl
