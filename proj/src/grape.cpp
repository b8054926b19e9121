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

#include "quditctl/grape.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

namespace quditctl {

namespace {

constexpr double kPi = 3.14159265358979323846;

double uniform01(std::mt19937_64& gen) {
  return double(gen() >> 11) * 0x1.0p-53;
}

// Flattened matrix positions of |k'><k'-1| acting on qudit j. The spectator
// label runs to rmax so drives can be confined to the logical block when
// off-resonant terms are disabled.
std::vector<std::pair<int, int>> raising_positions(int d, int j, int kp,
                                                   int rmax) {
  std::vector<std::pair<int, int>> pos;
  pos.reserve(rmax);
  for (int r = 0; r < rmax; ++r) {
    int row = j == 1 ? d * kp + r : d * r + kp;
    int col = j == 1 ? d * (kp - 1) + r : d * r + (kp - 1);
    pos.emplace_back(row, col);
  }
  return pos;
}

// The four computational columns of the evolution operator carry the
// whole objective, so forward and adjoint passes work on D x 4 blocks
// instead of full D x D unitaries.
struct Engine {
  const GrapeContext& ctx;
  int dim;
  Matrix base;  // I + i (h/2) coupling
  Matrix a, rhs;
  Eigen::PartialPivLU<Matrix> lu;

  explicit Engine(const GrapeContext& c)
      : ctx(c), dim(c.space.dim()), a(dim, dim), rhs(dim, 4), lu(dim) {
    base = Matrix::Identity(dim, dim) +
           Complex(0.0, 0.5 * ctx.h) * ctx.coupling;
  }

  // Drive coefficient of entry e at step n, excluding the segment
  // amplitude: g * eta * detuning phase at the midpoint. Segments are
  // zero-order holds; the smooth interpolation used for waveform export
  // does not enter the dynamics.
  Complex coef(size_t e, long n) const {
    const auto& entry = ctx.entries[e];
    if (!entry.coef.empty()) return entry.coef[n];
    double t = (double(n) + 0.5) * ctx.h;
    return entry.eta_g * std::polar(1.0, -entry.delta_abs * t);
  }

  void build_step_matrix(const PulseSet& p, long n) {
    a = base;
    const Complex ih2(0.0, 0.5 * ctx.h);
    int m = int(n / ctx.substeps);
    for (size_t e = 0; e < ctx.entries.size(); ++e) {
      Complex drive = coef(e, n) * p.amplitudes[ctx.entries[e].tone][m];
      Complex c = ih2 * drive;
      Complex cc = ih2 * std::conj(drive);
      for (const auto& [r, cl] : ctx.entries[e].positions) {
        a(r, cl) += c;
        a(cl, r) += cc;
      }
    }
  }

  double sample_leak(const Matrix& x) const {
    double leak = 0.0;
    for (int r : ctx.leak_rows) leak += x.row(r).squaredNorm();
    return 0.25 * leak;
  }

  LossTerms finish_terms(const Matrix& x_final, double leak_max,
                         double leak_sum, long n_samples) const {
    Matrix y(4, 4);
    for (int r = 0; r < 4; ++r)
      for (int q = 0; q < 4; ++q) y(r, q) = x_final(ctx.qubit_rows[r], q);
    double sum = 0.0;
    for (int j = 0; j < 16; ++j)
      sum += (ctx.fidelity_kernels[j] * y * ctx.paulis[j] * y.adjoint())
                 .trace()
                 .real();
    LossTerms terms;
    terms.f = 0.2 + sum / 80.0;
    terms.leak_max = leak_max;
    terms.leak_avg = leak_sum / double(n_samples);
    terms.loss = (1.0 - terms.f) + ctx.c_max * terms.leak_max +
                 ctx.c_avg * terms.leak_avg;
    return terms;
  }

  Matrix initial_state() const {
    Matrix x = Matrix::Zero(dim, 4);
    for (int q = 0; q < 4; ++q) x(ctx.qubit_rows[q], q) = 1.0;
    return x;
  }

  LossTerms loss(const PulseSet& p) {
    Matrix x = initial_state();
    double leak_max = 0.0, leak_sum = 0.0;
    for (long n = 0; n < ctx.n_steps; ++n) {
      build_step_matrix(p, n);
      rhs.noalias() = 2.0 * x - a * x;
      lu.compute(a);
      x = lu.solve(rhs);
      double leak = sample_leak(x);
      leak_sum += leak;
      if (leak > leak_max) leak_max = leak;
    }
    return finish_terms(x, leak_max, leak_sum, ctx.n_steps + 1);
  }

  LossTerms loss_and_gradient(const PulseSet& p, GradientArray& grad) {
    const long n_steps = ctx.n_steps;
    std::vector<Matrix> xs(n_steps + 1);
    xs[0] = initial_state();

    double leak_max = 0.0, leak_sum = 0.0;
    long argmax = 0;
    for (long n = 0; n < n_steps; ++n) {
      build_step_matrix(p, n);
      rhs.noalias() = 2.0 * xs[n] - a * xs[n];
      lu.compute(a);
      xs[n + 1] = lu.solve(rhs);
      double leak = sample_leak(xs[n + 1]);
      leak_sum += leak;
      if (leak > leak_max) {
        leak_max = leak;
        argmax = n + 1;
      }
    }
    LossTerms terms =
        finish_terms(xs[n_steps], leak_max, leak_sum, n_steps + 1);

    for (auto& gt : grad) gt.assign(ctx.M, Complex(0.0, 0.0));

    // Adjoint seed G = d loss / d conj(X_N), scaled so d loss = 2 Re<dX, G>.
    // The fidelity part lives on the computational rows; with Hermitian
    // Paulis and unitary target the two Wirtinger halves coincide.
    Matrix y(4, 4);
    for (int r = 0; r < 4; ++r)
      for (int q = 0; q < 4; ++q) y(r, q) = xs[n_steps](ctx.qubit_rows[r], q);
    Matrix gy = Matrix::Zero(4, 4);
    for (int j = 0; j < 16; ++j)
      gy.noalias() -=
          (1.0 / 80.0) * (ctx.fidelity_kernels[j] * y * ctx.paulis[j]);

    Matrix g = Matrix::Zero(dim, 4);
    for (int r = 0; r < 4; ++r)
      for (int q = 0; q < 4; ++q) g(ctx.qubit_rows[r], q) = gy(r, q);

    auto leak_weight = [&](long n) {
      double w = ctx.c_avg / double(n_steps + 1);
      if (n == argmax) w += ctx.c_max;
      return 0.25 * w;
    };
    for (int r : ctx.leak_rows)
      g.row(r) += leak_weight(n_steps) * xs[n_steps].row(r);

    Matrix w(dim, 4), s(dim, 4);
    for (long n = n_steps - 1; n >= 0; --n) {
      build_step_matrix(p, n);
      lu.compute(a);
      // A_n^dag W = G_{n+1}; drive sensitivity reads off
      // 2 Im tr(S W^dag dK) with S = X_n + X_{n+1}, evaluated only at
      // the few matrix positions each ladder operator touches.
      w = lu.adjoint().solve(g);
      s = xs[n] + xs[n + 1];
      int m = int(n / ctx.substeps);
      for (size_t e = 0; e < ctx.entries.size(); ++e) {
        Complex z(0.0, 0.0), zb(0.0, 0.0);
        for (const auto& [r, cl] : ctx.entries[e].positions) {
          for (int q = 0; q < 4; ++q) {
            z += s(cl, q) * std::conj(w(r, q));
            zb += s(r, q) * std::conj(w(cl, q));
          }
        }
        Complex cf = coef(e, n);
        Complex u = cf * z;
        Complex v = std::conj(cf) * zb;
        grad[ctx.entries[e].tone][m] +=
            Complex(ctx.h * (u + v).imag(), ctx.h * (u - v).real());
      }
      g.noalias() = a * w;
      if (n > 0)
        for (int r : ctx.leak_rows) g.row(r) += leak_weight(n) * xs[n].row(r);
    }
    return terms;
  }
};

void clip_amplitudes(PulseSet& p) {
  for (auto& tone : p.amplitudes)
    for (auto& amp : tone) {
      double mag = std::abs(amp);
      if (mag > p.omega_max) amp *= p.omega_max / mag;
    }
}

PulseSet random_pulses(const OptimizationConfig& cfg, std::uint64_t rseed) {
  PulseSet p;
  p.M = cfg.M;
  p.T = cfg.T;
  p.omega_max = cfg.omega_max;
  p.resize_segments();
  std::mt19937_64 gen(rseed);
  for (auto& tone : p.amplitudes)
    for (auto& amp : tone) {
      double mag = cfg.init_amplitude_scale * cfg.omega_max * uniform01(gen);
      double phase = 2.0 * kPi * uniform01(gen);
      amp = std::polar(mag, phase);
    }
  return p;
}

double effective_lr(const OptimizationConfig& cfg) {
  return cfg.learning_rate > 0.0 ? cfg.learning_rate : 0.02 * cfg.omega_max;
}

long main_iter_budget(const OptimizationConfig& cfg) {
  bool polish = cfg.polish_substeps > 0 && cfg.polish_iters > 0;
  long budget = cfg.max_iters - (polish ? cfg.polish_iters : 0);
  if (budget < 1)
    throw std::invalid_argument("optimize: polish_iters exhausts max_iters");
  return budget;
}

RestartSummary descend(const GrapeContext& ctx, const OptimizationConfig& cfg,
                       const PulseSet* warm, std::uint64_t rseed,
                       long iter_budget, double lr0) {
  RestartSummary out;
  out.best_loss = std::numeric_limits<double>::infinity();
  PulseSet x;
  if (warm) {
    x = *warm;
    x.T = cfg.T;
    x.M = cfg.M;
    x.omega_max = cfg.omega_max;
    clip_amplitudes(x);
  } else {
    x = random_pulses(cfg, rseed);
  }

  Engine engine(ctx);
  GradientArray v, grad;
  for (auto& t : v) t.assign(cfg.M, Complex(0.0, 0.0));

  double lr = lr0;
  int stale = 0;
  PulseSet y = x;
  out.loss_history.reserve(size_t(iter_budget));

  for (long it = 0; it < iter_budget; ++it) {
    for (int t = 0; t < 4; ++t)
      for (int m = 0; m < cfg.M; ++m)
        y.amplitudes[t][m] = x.amplitudes[t][m] + cfg.momentum * v[t][m];
    clip_amplitudes(y);

    LossTerms terms = engine.loss_and_gradient(y, grad);
    out.loss_history.push_back(terms.loss);
    ++out.iters;

    if (terms.loss < out.best_loss) {
      out.best_loss = terms.loss;
      out.best_terms = terms;
      out.best_pulses = y;
      stale = 0;
    } else {
      ++stale;
    }

    if (cfg.target_infidelity > 0.0 &&
        (1.0 - terms.f) <= cfg.target_infidelity) {
      out.hit_target = true;
      break;
    }
    if (stale >= cfg.plateau_iters) {
      lr *= 0.5;
      stale = 0;
      if (lr < 1e-14 * cfg.omega_max) break;
    }

    // Scale so the largest real-component move equals lr; the loss spans
    // many decades during a run and a raw-gradient step stalls once its
    // magnitude collapses.
    double gmax = 0.0;
    for (int t = 0; t < 4; ++t)
      for (int m = 0; m < cfg.M; ++m)
        gmax = std::max({gmax, std::abs(grad[t][m].real()),
                         std::abs(grad[t][m].imag())});
    const double scale = gmax > 0.0 ? 1.0 / gmax : 0.0;

    for (int t = 0; t < 4; ++t)
      for (int m = 0; m < cfg.M; ++m) {
        v[t][m] = cfg.momentum * v[t][m] - lr * scale * grad[t][m];
        x.amplitudes[t][m] += v[t][m];
      }
    clip_amplitudes(x);
  }

  // The raw iterate can sit below the last lookahead; give it a chance.
  LossTerms final_terms = engine.loss(x);
  if (final_terms.loss < out.best_loss) {
    out.best_loss = final_terms.loss;
    out.best_terms = final_terms;
    out.best_pulses = x;
  }
  if (cfg.target_infidelity > 0.0 &&
      (1.0 - out.best_terms.f) <= cfg.target_infidelity)
    out.hit_target = true;
  return out;
}

}  // namespace

std::uint64_t restart_seed(std::uint64_t base, int restart) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * std::uint64_t(restart + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

GrapeContext make_context(const DeviceModel& device,
                          const CouplingSpec& coupling, double T, int M,
                          int substeps, double c_max, double c_avg) {
  if (T <= 0.0) throw std::invalid_argument("make_context: T <= 0");
  if (M < 1 || substeps < 1)
    throw std::invalid_argument("make_context: bad discretization");

  GrapeContext ctx;
  ctx.device = device;
  ctx.coupling = build_coupling(coupling, device);
  ctx.tones = build_tone_table(device);
  ctx.space = device.space();
  ctx.T = T;
  ctx.M = M;
  ctx.substeps = substeps;
  ctx.c_max = c_max;
  ctx.c_avg = c_avg;
  ctx.n_steps = long(M) * substeps;
  ctx.h = T / double(ctx.n_steps);

  const int d = device.d_sim;

  // A stored coefficient table keeps forward and adjoint passes on
  // bit-identical drive values; very fine report grids compute them on
  // the fly instead of holding hundreds of MB.
  const bool store = ctx.n_steps <= 200000;
  for (const auto& e : ctx.tones.entries) {
    GrapeContext::Entry entry;
    entry.tone = PulseSet::tone_index(e.i, e.k);
    entry.positions = raising_positions(
        d, e.j, e.kprime,
        device.ort_enabled ? d : std::min(d, device.d_logical));
    entry.eta_g = device.g * e.eta;
    entry.delta_abs = e.delta * device.g;
    if (store) {
      entry.coef.resize(ctx.n_steps);
      for (long n = 0; n < ctx.n_steps; ++n) {
        double t = (double(n) + 0.5) * ctx.h;
        entry.coef[n] = entry.eta_g * std::polar(1.0, -entry.delta_abs * t);
      }
    }
    ctx.entries.push_back(std::move(entry));
  }

  Matrix id2 = Matrix::Identity(2, 2);
  Matrix px(2, 2), py(2, 2), pz(2, 2);
  px << 0, 1, 1, 0;
  py << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
  pz << 1, 0, 0, -1;
  std::array<Matrix, 4> single = {id2, px, py, pz};
  Matrix target = target_iswap();
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      int j = 4 * a + b;
      ctx.paulis[j] = kron(single[a], single[b]);
      ctx.fidelity_kernels[j] = target * ctx.paulis[j] * target.adjoint();
    }

  ctx.qubit_rows = ctx.space.qubit_indices();
  for (int n1 = 0; n1 < d; ++n1)
    for (int n2 = 0; n2 < d; ++n2)
      if (n1 >= 3 || n2 >= 3) ctx.leak_rows.push_back(d * n1 + n2);
  return ctx;
}

LossTerms evaluate_loss(const GrapeContext& ctx, const PulseSet& pulses) {
  Engine engine(ctx);
  return engine.loss(pulses);
}

LossTerms gradient(const PulseSet& pulses, const GrapeContext& ctx,
                   GradientArray& grad) {
  Engine engine(ctx);
  return engine.loss_and_gradient(pulses, grad);
}

GradientArray finite_difference_gradient(const PulseSet& pulses,
                                         const GrapeContext& ctx,
                                         double step) {
  if (step <= 0.0)
    throw std::invalid_argument("finite_difference_gradient: step <= 0");
  Engine engine(ctx);
  GradientArray out;
  PulseSet p = pulses;
  for (int t = 0; t < 4; ++t) {
    out[t].assign(ctx.M, Complex(0.0, 0.0));
    for (int m = 0; m < ctx.M; ++m) {
      Complex orig = pulses.amplitudes[t][m];
      p.amplitudes[t][m] = orig + step;
      double lp = engine.loss(p).loss;
      p.amplitudes[t][m] = orig - step;
      double lm = engine.loss(p).loss;
      double dre = (lp - lm) / (2.0 * step);
      p.amplitudes[t][m] = orig + Complex(0.0, step);
      lp = engine.loss(p).loss;
      p.amplitudes[t][m] = orig - Complex(0.0, step);
      lm = engine.loss(p).loss;
      double dim = (lp - lm) / (2.0 * step);
      p.amplitudes[t][m] = orig;
      out[t][m] = Complex(dre, dim);
    }
  }
  return out;
}

double gradient_max_rel_error(const GradientArray& adjoint,
                              const GradientArray& fd) {
  double fmax = 0.0;
  for (int t = 0; t < 4; ++t)
    for (const auto& g : fd[t])
      fmax = std::max({fmax, std::abs(g.real()), std::abs(g.imag())});
  double err = 0.0;
  for (int t = 0; t < 4; ++t)
    for (size_t m = 0; m < fd[t].size(); ++m) {
      double dre = std::abs(adjoint[t][m].real() - fd[t][m].real());
      double dim = std::abs(adjoint[t][m].imag() - fd[t][m].imag());
      if (fmax == 0.0) {
        err = std::max({err, dre, dim});
        continue;
      }
      double floor = 1e-8 * fmax;
      err = std::max(err, dre / std::max(std::abs(fd[t][m].real()), floor));
      err = std::max(err, dim / std::max(std::abs(fd[t][m].imag()), floor));
    }
  return err;
}

FidelityReport converged_report(const DeviceModel& device,
                                const CouplingSpec& coupling,
                                const PulseSet& pulses, double c_max,
                                double c_avg, double tol, int start_substeps,
                                int max_substeps, int* substeps_used) {
  int s = std::max(64, start_substeps);
  GrapeContext ctx =
      make_context(device, coupling, pulses.T, pulses.M, s, c_max, c_avg);
  LossTerms prev = evaluate_loss(ctx, pulses);
  LossTerms cur = prev;
  while (2 * s <= max_substeps) {
    s *= 2;
    ctx = make_context(device, coupling, pulses.T, pulses.M, s, c_max, c_avg);
    cur = evaluate_loss(ctx, pulses);
    bool settled = std::abs(cur.f - prev.f) < tol;
    prev = cur;
    if (settled) break;
  }
  if (substeps_used) *substeps_used = s;
  FidelityReport report;
  report.f = cur.f;
  report.leak_max = cur.leak_max;
  report.leak_avg = cur.leak_avg;
  report.loss = cur.loss;
  return report;
}

RestartSummary run_single_restart(const GrapeContext& ctx,
                                  const OptimizationConfig& config, int index,
                                  const PulseSet* warm) {
  RestartSummary out =
      descend(ctx, config, warm, restart_seed(config.seed, index),
              main_iter_budget(config), effective_lr(config));
  out.index = index;
  return out;
}

OptimizationRun merge_restarts(const OptimizationConfig& config,
                               std::vector<RestartSummary> completed) {
  if (completed.empty())
    throw std::invalid_argument("merge_restarts: no completed restarts");

  long total_iters = 0;
  int best = 0;
  for (size_t r = 0; r < completed.size(); ++r) {
    total_iters += completed[r].iters;
    const bool better =
        completed[r].best_loss < completed[best].best_loss ||
        (completed[r].best_loss == completed[best].best_loss &&
         completed[r].index < completed[best].index);
    if (better) best = int(r);
  }
  RestartSummary winner = std::move(completed[size_t(best)]);

  if (config.polish_substeps > 0 && config.polish_iters > 0) {
    GrapeContext pctx = make_context(config.device, config.coupling, config.T,
                                     config.M, config.polish_substeps,
                                     config.c_max, config.c_avg);
    RestartSummary refined =
        descend(pctx, config, &winner.best_pulses,
                restart_seed(config.seed, winner.index), config.polish_iters,
                0.25 * effective_lr(config));
    total_iters += refined.iters;
    winner.loss_history.insert(winner.loss_history.end(),
                               refined.loss_history.begin(),
                               refined.loss_history.end());
    winner.best_loss = refined.best_loss;
    winner.best_terms = refined.best_terms;
    winner.best_pulses = refined.best_pulses;
  }

  OptimizationRun run;
  run.best_pulses = winner.best_pulses;
  run.loss_history = std::move(winner.loss_history);
  run.seed_used = config.seed;
  run.best_restart = winner.index;
  run.iterations_executed = total_iters;
  run.best_report = converged_report(
      config.device, config.coupling, run.best_pulses, config.c_max,
      config.c_avg, config.report_tol,
      config.polish_substeps > 0 ? config.polish_substeps : config.substeps,
      config.report_max_substeps, &run.report_substeps);
  return run;
}

OptimizationRun optimize(const OptimizationConfig& config) {
  return optimize_with_warm_starts(config, {});
}

OptimizationRun optimize_with_warm_starts(
    const OptimizationConfig& config,
    const std::vector<PulseSet>& warm_starts) {
  if (config.restarts < 1)
    throw std::invalid_argument("optimize: restarts < 1");
  auto t0 = std::chrono::steady_clock::now();

  GrapeContext ctx =
      make_context(config.device, config.coupling, config.T, config.M,
                   config.substeps, config.c_max, config.c_avg);

  std::vector<RestartSummary> completed;
  const int threads = std::max(1, config.threads);
  bool stop = false;
  for (int batch = 0; batch < config.restarts && !stop; batch += threads) {
    int batch_end = std::min(config.restarts, batch + threads);
    std::vector<RestartSummary> slots(batch_end - batch);
    std::vector<std::thread> pool;
    for (int r = batch; r < batch_end; ++r) {
      const PulseSet* warm =
          size_t(r) < warm_starts.size() ? &warm_starts[r] : nullptr;
      auto work = [&, r, warm] {
        slots[r - batch] = run_single_restart(ctx, config, r, warm);
      };
      if (batch_end - batch == 1)
        work();
      else
        pool.emplace_back(work);
    }
    for (auto& th : pool) th.join();
    for (auto& slot : slots) {
      if (slot.hit_target) stop = true;
      completed.push_back(std::move(slot));
    }
  }

  OptimizationRun run = merge_restarts(config, std::move(completed));
  run.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return run;
}

ScanResult scan_min_time(const OptimizationConfig& base, double threshold,
                         const std::vector<double>& t_grid,
                         bool backward_sweep) {
  if (t_grid.empty())
    throw std::invalid_argument("scan_min_time: empty time grid");
  for (size_t i = 1; i < t_grid.size(); ++i)
    if (t_grid[i] <= t_grid[i - 1])
      throw std::invalid_argument("scan_min_time: grid must ascend");

  ScanResult result;
  for (size_t i = 0; i < t_grid.size(); ++i) {
    OptimizationConfig cfg = base;
    cfg.T = t_grid[i];
    std::vector<PulseSet> warms;
    if (i > 0) warms.push_back(result.points[i - 1].best_pulses);
    OptimizationRun run = optimize_with_warm_starts(cfg, warms);
    result.points.push_back({t_grid[i], run.best_report.f,
                             run.best_report.loss, run.best_pulses});
  }

  if (backward_sweep && t_grid.size() > 1) {
    for (size_t idx = t_grid.size() - 1; idx-- > 0;) {
      OptimizationConfig cfg = base;
      cfg.T = t_grid[idx];
      cfg.restarts = 1;
      OptimizationRun run = optimize_with_warm_starts(
          cfg, {result.points[idx + 1].best_pulses});
      if (run.best_report.loss < result.points[idx].best_loss) {
        result.points[idx].best_f = run.best_report.f;
        result.points[idx].best_loss = run.best_report.loss;
        result.points[idx].best_pulses = run.best_pulses;
      }
    }
  }

  for (const auto& point : result.points) {
    if (point.best_f >= threshold) {
      result.threshold_met = true;
      result.t_f = point.T;
      break;
    }
  }
  return result;
}

}  // namespace quditctl
