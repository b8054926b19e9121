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

#include "quditctl/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "quditctl/protocols.hpp"
#include "quditctl/version.hpp"

namespace quditctl {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string now_iso_utc() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// CSV per the data-export convention: comma delimiter, header row,
// 17 significant digits for every numeric cell.
class CsvFile {
 public:
  CsvFile(const fs::path& path, const std::vector<std::string>& header)
      : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_)
      throw std::runtime_error("cannot open for writing: " + path.string());
    for (size_t c = 0; c < header.size(); ++c)
      out_ << (c ? "," : "") << header[c];
    out_ << "\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (size_t c = 0; c < cells.size(); ++c)
      out_ << (c ? "," : "") << cells[c];
    out_ << "\n";
  }
  void numeric_row(const std::vector<double>& cells) {
    std::vector<std::string> text;
    text.reserve(cells.size());
    for (double v : cells) text.push_back(fmt17(v));
    row(text);
  }

 private:
  std::ofstream out_;
};

// Reads one JSON object with a fixed key set; unknown or ill-typed keys
// produce diagnostics naming the field.
class BlockReader {
 public:
  BlockReader(const ojson& block, std::string prefix)
      : block_(block), prefix_(std::move(prefix)) {
    if (!block_.is_object())
      throw std::runtime_error("config: " + label() + " must be an object");
  }

  void get(const char* key, double& field) {
    const ojson* v = fetch(key);
    if (!v) return;
    if (!v->is_number())
      throw std::runtime_error("config: " + name(key) + " must be a number");
    field = v->get<double>();
  }
  void get(const char* key, int& field) {
    const ojson* v = fetch(key);
    if (!v) return;
    if (!v->is_number_integer())
      throw std::runtime_error("config: " + name(key) + " must be an integer");
    field = v->get<int>();
  }
  void get(const char* key, std::uint64_t& field) {
    const ojson* v = fetch(key);
    if (!v) return;
    if (!v->is_number_integer() ||
        (!v->is_number_unsigned() && v->get<std::int64_t>() < 0))
      throw std::runtime_error("config: " + name(key) +
                               " must be a non-negative integer");
    field = v->get<std::uint64_t>();
  }
  void get(const char* key, bool& field) {
    const ojson* v = fetch(key);
    if (!v) return;
    if (!v->is_boolean())
      throw std::runtime_error("config: " + name(key) + " must be a boolean");
    field = v->get<bool>();
  }
  void get(const char* key, std::string& field) {
    const ojson* v = fetch(key);
    if (!v) return;
    if (!v->is_string())
      throw std::runtime_error("config: " + name(key) + " must be a string");
    field = v->get<std::string>();
  }
  void get(const char* key, std::vector<double>& field) {
    const ojson* v = fetch(key);
    if (!v) return;
    if (!v->is_array())
      throw std::runtime_error("config: " + name(key) + " must be an array");
    field.clear();
    for (const auto& e : *v) {
      if (!e.is_number())
        throw std::runtime_error("config: " + name(key) +
                                 " must contain only numbers");
      field.push_back(e.get<double>());
    }
  }
  void get(const char* key, std::vector<int>& field) {
    const ojson* v = fetch(key);
    if (!v) return;
    if (!v->is_array())
      throw std::runtime_error("config: " + name(key) + " must be an array");
    field.clear();
    for (const auto& e : *v) {
      if (!e.is_number_integer())
        throw std::runtime_error("config: " + name(key) +
                                 " must contain only integers");
      field.push_back(e.get<int>());
    }
  }

  void finish() {
    for (auto it = block_.begin(); it != block_.end(); ++it)
      if (!seen_.count(it.key()))
        throw std::runtime_error("config: unknown field " + name(it.key()));
  }

 private:
  std::string label() const { return prefix_.empty() ? "document" : prefix_; }
  std::string name(const std::string& key) const {
    return prefix_.empty() ? key : prefix_ + "." + key;
  }
  const ojson* fetch(const std::string& key) {
    seen_.insert(key);
    auto it = block_.find(key);
    return it == block_.end() ? nullptr : &*it;
  }

  const ojson& block_;
  std::string prefix_;
  std::set<std::string> seen_;
};

[[noreturn]] void fail_field(const std::string& field, const std::string& why) {
  throw std::runtime_error("config: " + field + " " + why);
}

void validate_config(const ExperimentConfig& c) {
  if (c.device.g <= 0.0) fail_field("device.g", "must be positive");
  if (c.device.d_logical < 2 || c.device.d_logical > 10)
    fail_field("device.d_logical", "must be in [2, 10]");
  if (c.device.d_sim < 2 || c.device.d_sim > 10)
    fail_field("device.d_sim", "must be in [2, 10]");
  if (c.coupling.d < 2 || c.coupling.d > 10)
    fail_field("coupling.d", "must be in [2, 10]");
  if (c.t_over_tmin <= 0.0) fail_field("optimizer.t_over_tmin", "must be positive");
  if (c.M < 1) fail_field("optimizer.segments", "must be at least 1");
  if (c.omega_max <= 0.0) fail_field("optimizer.omega_max", "must be positive");
  if (c.c_max < 0.0 || c.c_avg < 0.0)
    fail_field("optimizer.c_max/c_avg", "must be non-negative");
  if (c.momentum < 0.0 || c.momentum >= 1.0)
    fail_field("optimizer.momentum", "must be in [0, 1)");
  if (c.max_iters < 1) fail_field("optimizer.max_iters", "must be at least 1");
  if (c.restarts < 1) fail_field("optimizer.restarts", "must be at least 1");
  if (c.target_infidelity < 0.0)
    fail_field("optimizer.target_infidelity", "must be non-negative");
  if (c.substeps < 1) fail_field("optimizer.substeps", "must be at least 1");
  if (c.plateau_iters < 1)
    fail_field("optimizer.plateau_iters", "must be at least 1");
  if (c.init_amplitude_scale < 0.0 || c.init_amplitude_scale > 1.0)
    fail_field("optimizer.init_amplitude_scale", "must be in [0, 1]");
  if (c.polish_substeps < 0 || c.polish_iters < 0)
    fail_field("optimizer.polish_substeps/polish_iters",
               "must be non-negative");
  if (c.polish_substeps > 0 && c.polish_iters >= c.max_iters)
    fail_field("optimizer.polish_iters", "must leave room inside max_iters");
  if (c.report_tol <= 0.0) fail_field("optimizer.report_tol", "must be positive");
  if (c.report_max_substeps < 64)
    fail_field("optimizer.report_max_substeps", "must be at least 64");
  if (c.scan_threshold <= 0.0 || c.scan_threshold > 1.0)
    fail_field("scan.threshold", "must be in (0, 1]");
  for (size_t i = 0; i < c.t_grid.size(); ++i) {
    if (c.t_grid[i] <= 0.0) fail_field("scan.t_grid", "entries must be positive");
    if (i > 0 && c.t_grid[i] <= c.t_grid[i - 1])
      fail_field("scan.t_grid", "must be strictly ascending");
  }
  for (double w : c.omega_grid)
    if (w <= 0.0) fail_field("scan.omega_grid", "entries must be positive");
  for (int n : c.nmax_list)
    if (n < 2 || n > 9) fail_field("analysis.nmax_list", "entries must be in [2, 9]");
  if (c.samples_per_segment < 2)
    fail_field("analysis.samples_per_segment", "must be at least 2");
  if (c.profile_substeps < 1)
    fail_field("analysis.profile_substeps", "must be at least 1");
  if (c.gradcheck_configs < 1)
    fail_field("gradcheck.configs", "must be at least 1");
  if (c.fd_step_rel <= 0.0) fail_field("gradcheck.fd_step_rel", "must be positive");
  if (c.out_dir.empty()) fail_field("harness.out_dir", "must not be empty");
  if (c.threads < 1) fail_field("harness.threads", "must be at least 1");
  if (c.abort_after_units < 0)
    fail_field("test_hooks.abort_after_units", "must be non-negative");

  const bool needs_pulses = c.kind == ExperimentKind::LeakageReport ||
                            c.kind == ExperimentKind::FidelityVsNmax;
  if (needs_pulses && c.pulses_path.empty())
    fail_field("analysis.pulses_path", "is required for this experiment kind");
}

ojson config_to_ojson(const ExperimentConfig& c) {
  ojson j;
  j["kind"] = experiment_kind_name(c.kind);
  j["device"] = {{"g", c.device.g},
                 {"alpha", c.device.alpha},
                 {"delta", c.device.delta},
                 {"d_logical", c.device.d_logical},
                 {"d_sim", c.device.d_sim},
                 {"ort_enabled", c.device.ort_enabled},
                 {"harmonic_ladder_ratio", c.device.harmonic_ladder_ratio},
                 {"cross_drive_scale", c.device.cross_drive_scale}};
  j["coupling"] = {{"kind", coupling_kind_name(c.coupling.kind)},
                   {"d", c.coupling.d}};
  j["optimizer"] = {{"t_over_tmin", c.t_over_tmin},
                    {"segments", c.M},
                    {"omega_max", c.omega_max},
                    {"c_max", c.c_max},
                    {"c_avg", c.c_avg},
                    {"learning_rate", c.learning_rate},
                    {"momentum", c.momentum},
                    {"max_iters", c.max_iters},
                    {"restarts", c.restarts},
                    {"target_infidelity", c.target_infidelity},
                    {"substeps", c.substeps},
                    {"plateau_iters", c.plateau_iters},
                    {"init_amplitude_scale", c.init_amplitude_scale},
                    {"polish_substeps", c.polish_substeps},
                    {"polish_iters", c.polish_iters},
                    {"report_tol", c.report_tol},
                    {"report_max_substeps", c.report_max_substeps}};
  j["scan"] = {{"t_grid", c.t_grid},
               {"threshold", c.scan_threshold},
               {"backward_sweep", c.backward_sweep},
               {"omega_grid", c.omega_grid}};
  j["analysis"] = {{"pulses_path", c.pulses_path},
                   {"nmax_list", c.nmax_list},
                   {"samples_per_segment", c.samples_per_segment},
                   {"profile_substeps", c.profile_substeps}};
  j["gradcheck"] = {{"configs", c.gradcheck_configs},
                    {"fd_step_rel", c.fd_step_rel}};
  j["harness"] = {{"out_dir", c.out_dir},
                  {"seed", c.seed},
                  {"threads", c.threads}};
  j["test_hooks"] = {{"abort_after_units", c.abort_after_units}};
  return j;
}

ExperimentConfig config_from_ojson(const ojson& j) {
  ExperimentConfig c;
  BlockReader top(j, "");
  std::string kind;
  top.get("kind", kind);
  if (kind.empty()) fail_field("kind", "is required");
  c.kind = experiment_kind_from_name(kind);

  if (j.contains("device")) {
    BlockReader b(j.at("device"), "device");
    b.get("g", c.device.g);
    b.get("alpha", c.device.alpha);
    b.get("delta", c.device.delta);
    b.get("d_logical", c.device.d_logical);
    b.get("d_sim", c.device.d_sim);
    b.get("ort_enabled", c.device.ort_enabled);
    b.get("harmonic_ladder_ratio", c.device.harmonic_ladder_ratio);
    b.get("cross_drive_scale", c.device.cross_drive_scale);
    b.finish();
  }
  if (j.contains("coupling")) {
    BlockReader b(j.at("coupling"), "coupling");
    std::string name = coupling_kind_name(c.coupling.kind);
    b.get("kind", name);
    try {
      c.coupling.kind = coupling_kind_from_name(name);
    } catch (const std::invalid_argument&) {
      fail_field("coupling.kind", "is not a known coupling name");
    }
    b.get("d", c.coupling.d);
    b.finish();
  }
  if (j.contains("optimizer")) {
    BlockReader b(j.at("optimizer"), "optimizer");
    b.get("t_over_tmin", c.t_over_tmin);
    b.get("segments", c.M);
    b.get("omega_max", c.omega_max);
    b.get("c_max", c.c_max);
    b.get("c_avg", c.c_avg);
    b.get("learning_rate", c.learning_rate);
    b.get("momentum", c.momentum);
    b.get("max_iters", c.max_iters);
    b.get("restarts", c.restarts);
    b.get("target_infidelity", c.target_infidelity);
    b.get("substeps", c.substeps);
    b.get("plateau_iters", c.plateau_iters);
    b.get("init_amplitude_scale", c.init_amplitude_scale);
    b.get("polish_substeps", c.polish_substeps);
    b.get("polish_iters", c.polish_iters);
    b.get("report_tol", c.report_tol);
    b.get("report_max_substeps", c.report_max_substeps);
    b.finish();
  }
  if (j.contains("scan")) {
    BlockReader b(j.at("scan"), "scan");
    b.get("t_grid", c.t_grid);
    b.get("threshold", c.scan_threshold);
    b.get("backward_sweep", c.backward_sweep);
    b.get("omega_grid", c.omega_grid);
    b.finish();
  }
  if (j.contains("analysis")) {
    BlockReader b(j.at("analysis"), "analysis");
    b.get("pulses_path", c.pulses_path);
    b.get("nmax_list", c.nmax_list);
    b.get("samples_per_segment", c.samples_per_segment);
    b.get("profile_substeps", c.profile_substeps);
    b.finish();
  }
  if (j.contains("gradcheck")) {
    BlockReader b(j.at("gradcheck"), "gradcheck");
    b.get("configs", c.gradcheck_configs);
    b.get("fd_step_rel", c.fd_step_rel);
    b.finish();
  }
  if (j.contains("harness")) {
    BlockReader b(j.at("harness"), "harness");
    b.get("out_dir", c.out_dir);
    b.get("seed", c.seed);
    b.get("threads", c.threads);
    b.finish();
  }
  if (j.contains("test_hooks")) {
    BlockReader b(j.at("test_hooks"), "test_hooks");
    b.get("abort_after_units", c.abort_after_units);
    b.finish();
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    static const std::set<std::string> known = {
        "kind",     "device",    "coupling", "optimizer",  "scan",
        "analysis", "gradcheck", "harness",  "test_hooks"};
    if (!known.count(it.key()))
      throw std::runtime_error("config: unknown field " + it.key());
  }
  validate_config(c);
  return c;
}

ojson pulses_to_ojson(const PulseSet& p) {
  ojson j;
  j["segments"] = p.M;
  j["t_abs"] = p.T;
  j["omega_max"] = p.omega_max;
  for (int t = 0; t < 4; ++t) {
    ojson re = ojson::array(), im = ojson::array();
    for (const Complex& a : p.amplitudes[t]) {
      re.push_back(a.real());
      im.push_back(a.imag());
    }
    j["amps_re"].push_back(std::move(re));
    j["amps_im"].push_back(std::move(im));
  }
  return j;
}

PulseSet pulses_from_ojson(const ojson& j, const std::string& what) {
  auto need = [&](const char* key) -> const ojson& {
    auto it = j.find(key);
    if (it == j.end())
      throw std::runtime_error(what + ": missing field " + key);
    return *it;
  };
  PulseSet p;
  p.M = need("segments").get<int>();
  p.T = need("t_abs").get<double>();
  p.omega_max = need("omega_max").get<double>();
  if (p.M < 1 || p.T <= 0.0)
    throw std::runtime_error(what + ": invalid segment count or duration");
  const ojson& re = need("amps_re");
  const ojson& im = need("amps_im");
  if (!re.is_array() || !im.is_array() || re.size() != 4 || im.size() != 4)
    throw std::runtime_error(what + ": amps_re/amps_im must be 4 arrays");
  for (int t = 0; t < 4; ++t) {
    if (int(re[t].size()) != p.M || int(im[t].size()) != p.M)
      throw std::runtime_error(what + ": amplitude arrays must have " +
                               std::to_string(p.M) + " segments");
    p.amplitudes[t].resize(p.M);
    for (int m = 0; m < p.M; ++m)
      p.amplitudes[t][m] =
          Complex(re[t][m].get<double>(), im[t][m].get<double>());
  }
  return p;
}

ojson terms_to_ojson(const LossTerms& t) {
  return ojson{{"f", t.f},
               {"leak_max", t.leak_max},
               {"leak_avg", t.leak_avg},
               {"loss", t.loss}};
}

LossTerms terms_from_ojson(const ojson& j) {
  LossTerms t;
  t.f = j.at("f").get<double>();
  t.leak_max = j.at("leak_max").get<double>();
  t.leak_avg = j.at("leak_avg").get<double>();
  t.loss = j.at("loss").get<double>();
  return t;
}

ojson summary_to_ojson(const RestartSummary& s) {
  ojson j;
  j["index"] = s.index;
  j["best_loss"] = s.best_loss;
  j["hit_target"] = s.hit_target;
  j["iters"] = s.iters;
  j["best_terms"] = terms_to_ojson(s.best_terms);
  j["best_pulses"] = pulses_to_ojson(s.best_pulses);
  j["loss_history"] = s.loss_history;
  return j;
}

RestartSummary summary_from_ojson(const ojson& j) {
  RestartSummary s;
  s.index = j.at("index").get<int>();
  s.best_loss = j.at("best_loss").get<double>();
  s.hit_target = j.at("hit_target").get<bool>();
  s.iters = j.at("iters").get<long>();
  s.best_terms = terms_from_ojson(j.at("best_terms"));
  s.best_pulses = pulses_from_ojson(j.at("best_pulses"), "checkpoint");
  s.loss_history = j.at("loss_history").get<std::vector<double>>();
  return s;
}

// Checkpoints must only ever resume the run that wrote them. The test
// hook is exempt so a hook-aborted run can be finished without it.
void check_checkpoint_config(const ojson& stored_json,
                             const ExperimentConfig& current) {
  ExperimentConfig stored = config_from_ojson(stored_json);
  ExperimentConfig a = stored, b = current;
  a.abort_after_units = b.abort_after_units = 0;
  if (!(a == b))
    throw std::runtime_error(
        "checkpoint was written by a different config; refusing to resume");
}

void atomic_write_json(const fs::path& path, const ojson& j) {
  fs::path tmp = path;
  tmp += ".tmp";
  write_text_file(tmp, j.dump(1));
  fs::rename(tmp, path);
}

std::string point_file_name(size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "pulses_point_%02zu.json", index);
  return buf;
}

// ---------------------------------------------------------------------
// optimize

ojson do_optimize(const ExperimentConfig& ec, bool resume) {
  const fs::path dir = ec.out_dir;
  const fs::path ckpt = dir / "checkpoint.json";
  OptimizationConfig cfg = make_optimizer_config(ec);

  std::vector<RestartSummary> completed;
  if (resume && fs::exists(ckpt)) {
    ojson j = ojson::parse(read_text_file(ckpt));
    check_checkpoint_config(j.at("config"), ec);
    for (const auto& s : j.at("completed")) completed.push_back(summary_from_ojson(s));
  }
  auto have = [&](int index) {
    for (const auto& s : completed)
      if (s.index == index) return true;
    return false;
  };
  auto save_checkpoint = [&] {
    ojson j;
    j["config"] = config_to_ojson(ec);
    j["completed"] = ojson::array();
    for (const auto& s : completed) j["completed"].push_back(summary_to_ojson(s));
    atomic_write_json(ckpt, j);
  };

  GrapeContext ctx = make_context(cfg.device, cfg.coupling, cfg.T, cfg.M,
                                  cfg.substeps, cfg.c_max, cfg.c_avg);
  const int threads = std::max(1, cfg.threads);
  bool stop = false;
  for (int batch = 0; batch < cfg.restarts && !stop; batch += threads) {
    const int batch_end = std::min(cfg.restarts, batch + threads);
    std::vector<int> missing;
    for (int r = batch; r < batch_end; ++r)
      if (!have(r)) missing.push_back(r);

    std::vector<RestartSummary> fresh(missing.size());
    std::vector<std::thread> pool;
    for (size_t i = 0; i < missing.size(); ++i) {
      auto work = [&, i] {
        fresh[i] = run_single_restart(ctx, cfg, missing[i], nullptr);
      };
      if (missing.size() == 1)
        work();
      else
        pool.emplace_back(work);
    }
    for (auto& th : pool) th.join();
    for (auto& s : fresh) completed.push_back(std::move(s));
    std::sort(completed.begin(), completed.end(),
              [](const RestartSummary& a, const RestartSummary& b) {
                return a.index < b.index;
              });
    for (const auto& s : completed)
      if (s.index >= batch && s.index < batch_end && s.hit_target) stop = true;

    if (!missing.empty()) save_checkpoint();
    const bool work_remains = !stop && batch_end < cfg.restarts;
    if (ec.abort_after_units > 0 &&
        int(completed.size()) >= ec.abort_after_units && work_remains)
      throw ExperimentInterrupted("optimize stopped by test hook after " +
                                  std::to_string(completed.size()) +
                                  " restarts; checkpoint retained");
  }

  OptimizationRun best = merge_restarts(cfg, completed);

  save_pulses(best.best_pulses, (dir / "pulses.json").string());
  export_pulse_csv(best.best_pulses, ec.samples_per_segment,
                   (dir / "pulses.csv").string());
  {
    CsvFile csv(dir / "loss_history.csv", {"iter", "loss"});
    for (size_t i = 0; i < best.loss_history.size(); ++i)
      csv.row({std::to_string(i), fmt17(best.loss_history[i])});
  }

  const double tmin = baseline_t_min(ec.device);
  ojson payload;
  payload["t_over_tmin"] = ec.t_over_tmin;
  payload["t_abs"] = cfg.T;
  payload["best_f"] = best.best_report.f;
  payload["best_infidelity"] = 1.0 - best.best_report.f;
  payload["best_loss"] = best.best_report.loss;
  payload["leak_max"] = best.best_report.leak_max;
  payload["leak_avg"] = best.best_report.leak_avg;
  payload["best_restart"] = best.best_restart;
  payload["restarts_completed"] = completed.size();
  payload["iterations_executed"] = best.iterations_executed;
  payload["report_substeps"] = best.report_substeps;
  payload["hit_target"] = cfg.target_infidelity > 0.0 &&
                          (1.0 - best.best_report.f) <= cfg.target_infidelity;
  payload["t_min_abs"] = tmin;
  return payload;
}

// ---------------------------------------------------------------------
// scans

struct ScanPointState {
  double t_rel = 0.0;
  double best_f = 0.0;
  double best_loss = 0.0;
  PulseSet pulses;
};

struct ScanState {
  std::vector<ScanPointState> points;
  int backward_done = 0;
};

// Forward pass warm-starts each duration from the one below it; the
// optional backward pass re-seeds each point from the refined point
// above and keeps improvements. Checkpoints at grid-point granularity.
ScanState run_scan_checkpointed(const ExperimentConfig& ec,
                                const std::vector<double>& grid,
                                const fs::path& dir, bool resume,
                                int& units_done) {
  fs::create_directories(dir);
  const fs::path ckpt = dir / "checkpoint.json";
  const double tmin = baseline_t_min(ec.device);

  ScanState state;
  if (resume && fs::exists(ckpt)) {
    ojson j = ojson::parse(read_text_file(ckpt));
    check_checkpoint_config(j.at("config"), ec);
    for (const auto& pj : j.at("points")) {
      ScanPointState p;
      p.t_rel = pj.at("t_over_tmin").get<double>();
      p.best_f = pj.at("best_f").get<double>();
      p.best_loss = pj.at("best_loss").get<double>();
      p.pulses = pulses_from_ojson(pj.at("pulses"), "checkpoint");
      state.points.push_back(std::move(p));
    }
    state.backward_done = j.at("backward_done").get<int>();
  }

  auto save_checkpoint = [&] {
    ojson j;
    j["config"] = config_to_ojson(ec);
    j["points"] = ojson::array();
    for (const auto& p : state.points) {
      ojson pj;
      pj["t_over_tmin"] = p.t_rel;
      pj["best_f"] = p.best_f;
      pj["best_loss"] = p.best_loss;
      pj["pulses"] = pulses_to_ojson(p.pulses);
      j["points"].push_back(std::move(pj));
    }
    j["backward_done"] = state.backward_done;
    atomic_write_json(ckpt, j);
  };
  auto abort_check = [&](bool work_remains) {
    ++units_done;
    if (ec.abort_after_units > 0 && units_done >= ec.abort_after_units &&
        work_remains)
      throw ExperimentInterrupted("scan stopped by test hook after " +
                                  std::to_string(units_done) +
                                  " grid points; checkpoint retained");
  };

  const size_t n = grid.size();
  const bool backward = ec.backward_sweep && n > 1;
  const size_t backward_total = backward ? n - 1 : 0;

  for (size_t i = state.points.size(); i < n; ++i) {
    OptimizationConfig cfg = make_optimizer_config(ec);
    cfg.T = grid[i] * tmin;
    std::vector<PulseSet> warm;
    if (i > 0) warm.push_back(state.points[i - 1].pulses);
    OptimizationRun run = optimize_with_warm_starts(cfg, warm);
    ScanPointState p;
    p.t_rel = grid[i];
    p.best_f = run.best_report.f;
    p.best_loss = run.best_report.loss;
    p.pulses = run.best_pulses;
    state.points.push_back(std::move(p));
    save_checkpoint();
    abort_check(i + 1 < n || backward_total > 0);
  }

  for (size_t k = size_t(state.backward_done); k < backward_total; ++k) {
    const size_t idx = n - 2 - k;
    OptimizationConfig cfg = make_optimizer_config(ec);
    cfg.T = grid[idx] * tmin;
    cfg.restarts = 1;
    OptimizationRun run =
        optimize_with_warm_starts(cfg, {state.points[idx + 1].pulses});
    if (run.best_report.loss < state.points[idx].best_loss) {
      state.points[idx].best_f = run.best_report.f;
      state.points[idx].best_loss = run.best_report.loss;
      state.points[idx].pulses = run.best_pulses;
    }
    state.backward_done = int(k) + 1;
    save_checkpoint();
    abort_check(k + 1 < backward_total);
  }

  CsvFile csv(dir / "scan.csv", {"t_over_tmin", "t_abs", "best_f", "best_loss"});
  for (size_t i = 0; i < state.points.size(); ++i) {
    const auto& p = state.points[i];
    csv.numeric_row({p.t_rel, p.t_rel * tmin, p.best_f, p.best_loss});
    save_pulses(p.pulses, (dir / point_file_name(i)).string());
  }
  return state;
}

ojson scan_payload(const ExperimentConfig& ec, const ScanState& state) {
  ojson payload;
  payload["threshold"] = ec.scan_threshold;
  bool met = false;
  double t_f = 0.0;
  for (const auto& p : state.points)
    if (!met && p.best_f >= ec.scan_threshold) {
      met = true;
      t_f = p.t_rel;
    }
  payload["threshold_met"] = met;
  if (met) {
    payload["t_f_over_tmin"] = t_f;
    payload["t_f_abs"] = t_f * baseline_t_min(ec.device);
  } else {
    payload["t_f_over_tmin"] = nullptr;
    payload["t_f_abs"] = nullptr;
  }
  ojson points = ojson::array();
  for (const auto& p : state.points)
    points.push_back({{"t_over_tmin", p.t_rel},
                      {"best_f", p.best_f},
                      {"best_loss", p.best_loss}});
  payload["points"] = std::move(points);
  return payload;
}

ojson do_scan_time(const ExperimentConfig& ec, bool resume) {
  const std::vector<double> grid =
      ec.t_grid.empty() ? default_t_grid() : ec.t_grid;
  int units = 0;
  ScanState state = run_scan_checkpointed(ec, grid, ec.out_dir, resume, units);
  return scan_payload(ec, state);
}

ojson do_scan_omega(const ExperimentConfig& ec, bool resume) {
  const std::vector<double> omegas =
      ec.omega_grid.empty() ? default_omega_grid() : ec.omega_grid;
  const std::vector<double> grid =
      ec.t_grid.empty() ? default_t_grid() : ec.t_grid;
  const fs::path dir = ec.out_dir;
  const fs::path ckpt = dir / "omega_checkpoint.json";
  const double tmin = baseline_t_min(ec.device);

  ojson rows = ojson::array();
  if (resume && fs::exists(ckpt)) {
    ojson j = ojson::parse(read_text_file(ckpt));
    check_checkpoint_config(j.at("config"), ec);
    rows = j.at("completed");
  }

  int units = 0;
  for (size_t w = rows.size(); w < omegas.size(); ++w) {
    ExperimentConfig sub = ec;
    sub.omega_max = omegas[w];
    char name[32];
    std::snprintf(name, sizeof name, "omega_%02zu", w);
    ScanState state =
        run_scan_checkpointed(sub, grid, dir / name, resume, units);
    ojson payload = scan_payload(sub, state);
    ojson row;
    row["omega_max"] = omegas[w];
    row["threshold_met"] = payload.at("threshold_met");
    row["t_f_over_tmin"] = payload.at("t_f_over_tmin");
    row["points"] = payload.at("points");
    rows.push_back(std::move(row));
    ojson j;
    j["config"] = config_to_ojson(ec);
    j["completed"] = rows;
    atomic_write_json(ckpt, j);
  }

  CsvFile csv(dir / "omega_scan.csv",
              {"omega_max", "threshold_met", "t_f_over_tmin",
               "t_exact_over_tmin"});
  for (const auto& row : rows) {
    const double omega = row.at("omega_max").get<double>();
    const bool met = row.at("threshold_met").get<bool>();
    const double texact =
        t_exact(omega * ec.device.g, ec.device.g) / tmin;
    csv.row({fmt17(omega), met ? "1" : "0",
             met ? fmt17(row.at("t_f_over_tmin").get<double>()) : "nan",
             fmt17(texact)});
  }

  ojson payload;
  payload["threshold"] = ec.scan_threshold;
  payload["rows"] = std::move(rows);
  return payload;
}

// ---------------------------------------------------------------------
// analytic reports

ojson do_bound(const ExperimentConfig& ec) {
  const double tmin = baseline_t_min(ec.device);
  ojson rows = ojson::array();
  CsvFile csv(ec.out_dir + "/bound.csv",
              {"coupling", "d", "j_norm", "t_bound", "t_bound_over_tmin"});
  for (CouplingKind kind :
       {CouplingKind::QubitBaseline, CouplingKind::ParametricLadder,
        CouplingKind::CollectiveUniform, CouplingKind::FourTone,
        CouplingKind::CapacitiveRaw}) {
    CouplingSpec spec{kind, ec.coupling.d};
    if (kind == CouplingKind::QubitBaseline) spec.d = 2;
    if (kind == CouplingKind::FourTone && ec.coupling.d != 3) continue;
    if (kind == CouplingKind::CollectiveUniform && ec.coupling.d < 3) continue;
    DeviceModel device = ec.device;
    device.d_sim = std::max(device.d_sim, spec.d);
    if (kind == CouplingKind::FourTone) {
      device.d_logical = 3;
      device.d_sim = std::max(device.d_sim, 3);
    }
    BoundReport rep = speed_limit_bound(build_coupling(spec, device), device.g);
    csv.row({coupling_kind_name(kind), std::to_string(spec.d),
             fmt17(rep.j_norm), fmt17(rep.t_bound),
             fmt17(rep.t_bound / tmin)});
    rows.push_back({{"coupling", coupling_kind_name(kind)},
                    {"d", spec.d},
                    {"j_norm", rep.j_norm},
                    {"t_bound", rep.t_bound},
                    {"t_bound_over_tmin", rep.t_bound / tmin}});
  }
  ojson payload;
  payload["t_min_abs"] = tmin;
  payload["rows"] = std::move(rows);
  return payload;
}

ojson do_protocol_report(const ExperimentConfig& ec) {
  const double g = ec.device.g;
  const double tmin = baseline_t_min(ec.device);
  const int d = ec.coupling.d;

  struct Row {
    std::string name;
    CouplingKind coupling;
    GateSequence seq;
  };
  std::vector<Row> entries;
  entries.push_back({"ladder", CouplingKind::ParametricLadder,
                     protocol_ladder(d, g)});
  if (d >= 3)
    entries.push_back({"collective", CouplingKind::CollectiveUniform,
                       protocol_collective(d, g)});
  if (d == 3)
    entries.push_back({"four-tone", CouplingKind::FourTone,
                       protocol_fourtone(g)});

  ojson rows = ojson::array();
  CsvFile csv(ec.out_dir + "/protocol_report.csv",
              {"protocol", "d", "duration", "duration_over_tmin", "j_norm",
               "t_bound", "saturation_defect", "projected_fidelity",
               "block_defect"});
  for (const auto& entry : entries) {
    DeviceModel device = ec.device;
    device.d_sim = std::max(device.d_sim, std::max(d, 3));
    if (entry.coupling == CouplingKind::FourTone) device.d_logical = 3;
    CouplingSpec spec{entry.coupling, entry.coupling == CouplingKind::FourTone
                                          ? 3
                                          : d};
    BoundReport bound =
        speed_limit_bound(build_coupling(spec, device), device.g);
    SpaceSpec space{entry.seq.d};
    const double duration = entry.seq.total_duration();
    const double fidelity = verify_sequence(entry.seq, space);
    const double block = sequence_block_defect(entry.seq, space);
    csv.row({entry.name, std::to_string(d), fmt17(duration),
             fmt17(duration / tmin), fmt17(bound.j_norm), fmt17(bound.t_bound),
             fmt17(std::abs(duration - bound.t_bound)), fmt17(fidelity),
             fmt17(block)});
    rows.push_back({{"protocol", entry.name},
                    {"d", d},
                    {"duration", duration},
                    {"duration_over_tmin", duration / tmin},
                    {"j_norm", bound.j_norm},
                    {"t_bound", bound.t_bound},
                    {"saturation_defect", std::abs(duration - bound.t_bound)},
                    {"projected_fidelity", fidelity},
                    {"block_defect", block}});
  }

  ojson payload;
  payload["rows"] = std::move(rows);
  payload["omega_max"] = ec.omega_max;
  payload["t_exact_abs"] = t_exact(ec.omega_max * g, g);
  payload["t_exact_over_tmin"] = t_exact(ec.omega_max * g, g) / tmin;
  return payload;
}

// ---------------------------------------------------------------------
// stored-pulse analyses

ojson do_leakage_report(const ExperimentConfig& ec) {
  PulseSet pulses = load_pulses(ec.pulses_path);
  const DeviceModel& device = ec.device;
  const SpaceSpec space = device.space();
  Matrix coupling = build_coupling(ec.coupling, device);
  ToneTable tones = build_tone_table(device);
  auto h_of_t = [&](double t) {
    return assemble_hamiltonian(device, coupling, pulses, tones, t);
  };
  PropagationResult prop =
      propagate(h_of_t, pulses.T, ec.profile_substeps, pulses.M);
  LeakageProfile profile = leakage_profile(prop, space);
  FidelityReport at_profile = assess(prop, space, ec.c_max, ec.c_avg);
  int report_substeps = 0;
  FidelityReport converged = converged_report(
      device, ec.coupling, pulses, ec.c_max, ec.c_avg, ec.report_tol,
      ec.profile_substeps, ec.report_max_substeps, &report_substeps);

  std::vector<std::string> header = {"t", "p01"};
  for (int k = 2; k < device.d_sim; ++k)
    header.push_back("p" + std::to_string(k));
  CsvFile csv(ec.out_dir + "/leakage.csv", header);
  for (size_t s = 0; s < profile.times.size(); ++s) {
    std::vector<double> cells = {profile.times[s], profile.p01[s]};
    for (const auto& pk : profile.p_k) cells.push_back(pk[s]);
    csv.numeric_row(cells);
  }

  double p01_min = 1.0;
  for (double v : profile.p01) p01_min = std::min(p01_min, v);
  ojson payload;
  payload["t_abs"] = pulses.T;
  payload["t_over_tmin"] = pulses.T / baseline_t_min(device);
  payload["profile_substeps"] = ec.profile_substeps;
  payload["f_at_profile"] = at_profile.f;
  payload["f_converged"] = converged.f;
  payload["report_substeps"] = report_substeps;
  payload["p01_final"] = profile.p01.back();
  payload["p01_min"] = p01_min;
  payload["leak_max"] = at_profile.leak_max;
  payload["leak_avg"] = at_profile.leak_avg;
  return payload;
}

ojson do_fidelity_vs_nmax(const ExperimentConfig& ec) {
  PulseSet pulses = load_pulses(ec.pulses_path);
  std::vector<int> nmax_list = ec.nmax_list;
  if (nmax_list.empty()) nmax_list = {3, 4, 5, 6, 7, 8, 9};
  auto points = fidelity_vs_nmax(pulses, ec.device, ec.coupling, nmax_list,
                                 ec.report_tol, ec.report_max_substeps);

  CsvFile csv(ec.out_dir + "/nmax.csv", {"n_max", "f"});
  ojson rows = ojson::array();
  for (const auto& [n, f] : points) {
    csv.row({std::to_string(n), fmt17(f)});
    rows.push_back({{"n_max", n}, {"f", f}});
  }

  ojson payload;
  payload["rows"] = std::move(rows);
  payload["f_first"] = points.front().second;
  payload["f_last"] = points.back().second;
  payload["drop_first_to_last"] = points.front().second - points.back().second;
  return payload;
}

// ---------------------------------------------------------------------
// gradient self-check

ojson do_gradcheck(const ExperimentConfig& ec) {
  std::mt19937_64 gen(ec.seed ^ 0xC0FFEEULL);
  auto unit = [&] { return double(gen() >> 11) * 0x1.0p-53; };

  ojson rows = ojson::array();
  CsvFile csv(ec.out_dir + "/gradcheck.csv",
              {"config_index", "ort", "segments", "substeps", "omega_max",
               "t_abs", "max_rel_error", "pass"});
  bool all_pass = true;
  double worst = 0.0;
  for (int c = 0; c < ec.gradcheck_configs; ++c) {
    DeviceModel device = ec.device;
    device.ort_enabled = (c % 2 == 1);
    device.d_sim = device.ort_enabled ? 4 : 3;
    const int m_segments = 4 + int(gen() % 5);
    const int substeps = (gen() % 2 == 0) ? 4 : 8;
    const double omega_max = 5.0 + 30.0 * unit();
    const double t_abs = (0.3 + 0.4 * unit()) * baseline_t_min(device);

    GrapeContext ctx = make_context(device, ec.coupling, t_abs, m_segments,
                                    substeps, ec.c_max, ec.c_avg);
    PulseSet pulses;
    pulses.M = m_segments;
    pulses.T = t_abs;
    pulses.omega_max = omega_max;
    pulses.resize_segments();
    for (auto& tone : pulses.amplitudes)
      for (auto& amp : tone)
        amp = std::polar(0.7 * omega_max * unit(), 2.0 * kPi * unit());

    GradientArray adjoint;
    gradient(pulses, ctx, adjoint);
    GradientArray fd =
        finite_difference_gradient(pulses, ctx, ec.fd_step_rel * omega_max);
    const double err = gradient_max_rel_error(adjoint, fd);
    const bool pass = err <= 1e-5;
    all_pass = all_pass && pass;
    worst = std::max(worst, err);
    csv.row({std::to_string(c), device.ort_enabled ? "1" : "0",
             std::to_string(m_segments), std::to_string(substeps),
             fmt17(omega_max), fmt17(t_abs), fmt17(err), pass ? "1" : "0"});
    rows.push_back({{"config_index", c},
                    {"ort", device.ort_enabled},
                    {"segments", m_segments},
                    {"substeps", substeps},
                    {"omega_max", omega_max},
                    {"t_abs", t_abs},
                    {"max_rel_error", err},
                    {"pass", pass}});
  }

  ojson payload;
  payload["rows"] = std::move(rows);
  payload["max_rel_error"] = worst;
  payload["tolerance"] = 1e-5;
  payload["pass"] = all_pass;
  return payload;
}

}  // namespace

std::string experiment_kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Optimize: return "optimize";
    case ExperimentKind::ScanTime: return "scan-time";
    case ExperimentKind::ScanOmega: return "scan-omega";
    case ExperimentKind::ProtocolReport: return "protocol-report";
    case ExperimentKind::Bound: return "bound";
    case ExperimentKind::LeakageReport: return "leakage-report";
    case ExperimentKind::FidelityVsNmax: return "fidelity-vs-nmax";
    case ExperimentKind::Gradcheck: return "gradcheck";
  }
  throw std::logic_error("unknown experiment kind");
}

ExperimentKind experiment_kind_from_name(const std::string& name) {
  if (name == "optimize") return ExperimentKind::Optimize;
  if (name == "scan-time") return ExperimentKind::ScanTime;
  if (name == "scan-omega") return ExperimentKind::ScanOmega;
  if (name == "protocol-report") return ExperimentKind::ProtocolReport;
  if (name == "bound") return ExperimentKind::Bound;
  if (name == "leakage-report") return ExperimentKind::LeakageReport;
  if (name == "fidelity-vs-nmax") return ExperimentKind::FidelityVsNmax;
  if (name == "gradcheck") return ExperimentKind::Gradcheck;
  throw std::runtime_error("config: kind '" + name +
                           "' is not a known experiment");
}

std::string config_to_json_text(const ExperimentConfig& config) {
  return config_to_ojson(config).dump(1);
}

ExperimentConfig config_from_json_text(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    throw std::runtime_error(std::string("config: not valid JSON: ") +
                             e.what());
  }
  return config_from_ojson(j);
}

ExperimentConfig load_config(const std::string& path) {
  return config_from_json_text(read_text_file(path));
}

void save_config(const ExperimentConfig& config, const std::string& path) {
  write_text_file(path, config_to_json_text(config) + "\n");
}

double baseline_t_min(const DeviceModel& device) {
  return kPi / (2.0 * device.g);
}

OptimizationConfig make_optimizer_config(const ExperimentConfig& c) {
  OptimizationConfig cfg;
  cfg.device = c.device;
  cfg.coupling = c.coupling;
  cfg.T = c.t_over_tmin * baseline_t_min(c.device);
  cfg.M = c.M;
  cfg.omega_max = c.omega_max;
  cfg.c_max = c.c_max;
  cfg.c_avg = c.c_avg;
  cfg.learning_rate = c.learning_rate;
  cfg.momentum = c.momentum;
  cfg.max_iters = c.max_iters;
  cfg.restarts = c.restarts;
  cfg.seed = c.seed;
  cfg.target_infidelity = c.target_infidelity;
  cfg.substeps = c.substeps;
  cfg.plateau_iters = c.plateau_iters;
  cfg.init_amplitude_scale = c.init_amplitude_scale;
  cfg.threads = c.threads;
  cfg.polish_substeps = c.polish_substeps;
  cfg.polish_iters = c.polish_iters;
  cfg.report_tol = c.report_tol;
  cfg.report_max_substeps = c.report_max_substeps;
  return cfg;
}

std::vector<double> default_t_grid() {
  std::vector<double> grid = {1.0 / 3.0};
  for (int i = 7; i <= 20; ++i) grid.push_back(0.05 * i);
  return grid;
}

std::vector<double> default_omega_grid() {
  return {3.0, 5.0, 10.0, 15.0, 20.0, 30.0, 40.0};
}

RunRecord run(const ExperimentConfig& config, bool resume) {
  validate_config(config);
  fs::create_directories(config.out_dir);
  save_config(config, (fs::path(config.out_dir) / "config_snapshot.json").string());

  RunRecord record;
  record.config = config;
  record.version = kVersion;
  record.started_at = now_iso_utc();
  const auto t0 = std::chrono::steady_clock::now();

  ojson payload;
  switch (config.kind) {
    case ExperimentKind::Optimize: payload = do_optimize(config, resume); break;
    case ExperimentKind::ScanTime: payload = do_scan_time(config, resume); break;
    case ExperimentKind::ScanOmega: payload = do_scan_omega(config, resume); break;
    case ExperimentKind::ProtocolReport:
      payload = do_protocol_report(config);
      break;
    case ExperimentKind::Bound: payload = do_bound(config); break;
    case ExperimentKind::LeakageReport:
      payload = do_leakage_report(config);
      break;
    case ExperimentKind::FidelityVsNmax:
      payload = do_fidelity_vs_nmax(config);
      break;
    case ExperimentKind::Gradcheck: payload = do_gradcheck(config); break;
  }

  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  record.payload_text = payload.dump(1);

  ojson doc;
  doc["config"] = config_to_ojson(config);
  doc["payload"] = payload;
  doc["version"] = record.version;
  doc["started_at"] = record.started_at;
  doc["wall_seconds"] = record.wall_seconds;
  write_text_file(fs::path(config.out_dir) / "run_record.json",
                  doc.dump(1) + "\n");
  return record;
}

std::vector<std::pair<int, double>> fidelity_vs_nmax(
    const PulseSet& pulses, DeviceModel device, const CouplingSpec& coupling,
    const std::vector<int>& nmax_list, double report_tol,
    int report_max_substeps) {
  if (nmax_list.empty())
    throw std::invalid_argument("fidelity_vs_nmax: empty n_max list");
  std::vector<std::pair<int, double>> out;
  for (int n : nmax_list) {
    if (n < 2)
      throw std::invalid_argument("fidelity_vs_nmax: n_max must be >= 2");
    device.d_sim = n + 1;
    FidelityReport rep =
        converged_report(device, coupling, pulses, 0.0, 0.0, report_tol, 64,
                         report_max_substeps);
    out.emplace_back(n, rep.f);
  }
  return out;
}

void export_pulse_csv(const PulseSet& pulses, int samples_per_segment,
                      const std::string& path) {
  if (samples_per_segment < 2)
    throw std::invalid_argument("export_pulse_csv: need >= 2 samples/segment");
  CsvFile csv(path, {"t", "re_omega_1_01", "im_omega_1_01", "re_omega_1_12",
                     "im_omega_1_12", "re_omega_2_01", "im_omega_2_01",
                     "re_omega_2_12", "im_omega_2_12"});
  const double tau = pulses.tau();
  auto emit = [&](double t) {
    std::vector<double> cells = {t};
    for (int i = 1; i <= 2; ++i)
      for (int k = 1; k <= 2; ++k) {
        Complex v = pulse_value(pulses, i, k, t);
        cells.push_back(v.real());
        cells.push_back(v.imag());
      }
    csv.numeric_row(cells);
  };
  for (int m = 0; m < pulses.M; ++m)
    for (int s = 0; s < samples_per_segment; ++s)
      emit((double(m) + double(s) / samples_per_segment) * tau);
  emit(pulses.T);
}

void save_pulses(const PulseSet& pulses, const std::string& path) {
  write_text_file(path, pulses_to_ojson(pulses).dump(1) + "\n");
}

PulseSet load_pulses(const std::string& path) {
  ojson j;
  try {
    j = ojson::parse(read_text_file(path));
  } catch (const ojson::parse_error& e) {
    throw std::runtime_error("pulse file " + path + ": not valid JSON: " +
                             e.what());
  }
  return pulses_from_ojson(j, "pulse file " + path);
}

}  // namespace quditctl
