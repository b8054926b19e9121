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

#include "quditctl/protocols.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "quditctl/metrics.hpp"
#include "quditctl/model.hpp"

namespace quditctl {

namespace {

constexpr double kPi = 3.14159265358979323846;

Matrix embed_both(const Matrix& op, const SpaceSpec& space) {
  return embed_single(op, 1, space) * embed_single(op, 2, space);
}

Matrix x01(int d) {
  Matrix x = Matrix::Identity(d, d);
  x(0, 0) = x(1, 1) = 0.0;
  x(0, 1) = x(1, 0) = 1.0;
  return x;
}

// Single-qudit relabeling that moves |0>,|1> onto |d-2>,|d-1>. For d = 2
// this is the identity; for d = 3 the leftover level closes a 3-cycle;
// for d >= 4 it is the pair of swaps (0, d-2)(1, d-1).
Matrix ladder_permutation(int d) {
  Matrix p = Matrix::Zero(d, d);
  std::vector<bool> target_taken(d, false), source_mapped(d, false);
  auto map = [&](int from, int to) {
    p(to, from) = 1.0;
    source_mapped[from] = true;
    target_taken[to] = true;
  };
  map(0, d - 2);
  if (d >= 3) map(1, d - 1);
  int to = 0;
  for (int from = 0; from < d; ++from) {
    if (source_mapped[from]) continue;
    while (target_taken[to]) ++to;
    map(from, to);
  }
  return p;
}

// Unitary sending |0> to the uniform superposition of {|0>,|2>,...,|d-1>}
// and fixing |1>, completed by Gram-Schmidt over the remaining basis.
Matrix collective_spreader(int d) {
  Matrix v = Matrix::Zero(d, d);
  double w = 1.0 / std::sqrt(double(d - 1));
  v(0, 0) = w;
  for (int j = 2; j < d; ++j) v(j, 0) = w;
  v(1, 1) = 1.0;
  for (int col = 2; col < d; ++col) {
    Vector cand = Vector::Zero(d);
    cand(col) = 1.0;
    for (int prev = 0; prev < col; ++prev)
      cand -= v.col(prev).dot(cand) * v.col(prev);
    v.col(col) = cand / cand.norm();
  }
  return v;
}

// Rotation by 2 arctan(sqrt 2) around y in the {|0>,|2>} plane.
Matrix fourtone_rotation(int d) {
  double c = 1.0 / std::sqrt(3.0);
  double s = std::sqrt(2.0) / std::sqrt(3.0);
  Matrix u = Matrix::Identity(d, d);
  u(0, 0) = c;
  u(2, 0) = s;
  u(0, 2) = -s;
  u(2, 2) = c;
  return u;
}

DeviceModel plain_device(int d, double g) {
  DeviceModel device;
  device.g = g;
  device.d_logical = d;
  device.d_sim = d;
  return device;
}

}  // namespace

double GateSequence::total_duration() const {
  double t = 0.0;
  for (const auto& s : steps) t += s.duration;
  return t;
}

Matrix GateSequence::product() const {
  if (steps.empty()) throw std::invalid_argument("empty gate sequence");
  Matrix u = steps.front().factor;
  for (size_t i = 1; i < steps.size(); ++i) u = steps[i].factor * u;
  return u;
}

BoundReport speed_limit_bound(const Matrix& coupling, double g) {
  BoundReport report;
  report.j_norm = operator_norm(coupling);
  report.baseline_t_min = kPi / (2.0 * g);
  if (report.j_norm <= 0.0) {
    report.unbounded = true;
    report.t_bound = std::numeric_limits<double>::infinity();
  } else {
    report.t_bound = kPi / (2.0 * report.j_norm);
  }
  return report;
}

GateSequence protocol_ladder(int d, double g) {
  if (d < 2) throw std::invalid_argument("protocol_ladder: d < 2");
  SpaceSpec space{d};
  DeviceModel device = plain_device(d, g);
  Matrix h = build_coupling({CouplingKind::ParametricLadder, d}, device);
  double duration = kPi / (2.0 * g * (d - 1));

  GateSequence seq;
  seq.d = d;
  if (d == 2) {
    seq.steps.push_back({matrix_exp_hermitian(h, duration), "swap", duration});
    return seq;
  }
  Matrix p = embed_both(ladder_permutation(d), space);
  seq.steps.push_back({p, "relabel", 0.0});
  seq.steps.push_back({matrix_exp_hermitian(h, duration), "swap", duration});
  seq.steps.push_back({p.adjoint(), "relabel-back", 0.0});
  return seq;
}

GateSequence protocol_collective(int d, double g) {
  if (d < 3) throw std::invalid_argument("protocol_collective: d < 3");
  SpaceSpec space{d};
  DeviceModel device = plain_device(d, g);
  Matrix h = build_coupling({CouplingKind::CollectiveUniform, d}, device);
  double duration = kPi / (2.0 * g * (d - 1));

  Matrix x2 = embed_single(x01(d), 2, space);
  Matrix v = embed_both(collective_spreader(d), space);

  GateSequence seq;
  seq.d = d;
  seq.steps.push_back({x2, "flip2", 0.0});
  seq.steps.push_back({v, "spread", 0.0});
  seq.steps.push_back({matrix_exp_hermitian(h, duration), "swap", duration});
  seq.steps.push_back({v.adjoint(), "unspread", 0.0});
  seq.steps.push_back({x2, "flip2", 0.0});
  return seq;
}

GateSequence protocol_fourtone(double g) {
  const int d = 3;
  SpaceSpec space{d};
  DeviceModel device = plain_device(d, g);
  Matrix h = build_coupling({CouplingKind::FourTone, d}, device);
  double duration = kPi / (6.0 * g);

  Matrix x2 = embed_single(x01(d), 2, space);
  Matrix u1 = embed_single(fourtone_rotation(d), 1, space);
  Matrix u2 = embed_single(fourtone_rotation(d), 2, space);

  GateSequence seq;
  seq.d = d;
  seq.steps.push_back({x2, "flip2", 0.0});
  seq.steps.push_back({u1, "rot1", 0.0});
  seq.steps.push_back({u2, "rot2", 0.0});
  seq.steps.push_back({matrix_exp_hermitian(h, duration), "swap", duration});
  seq.steps.push_back({u2.adjoint(), "rot2-back", 0.0});
  seq.steps.push_back({u1.adjoint(), "rot1-back", 0.0});
  seq.steps.push_back({x2, "flip2", 0.0});
  return seq;
}

double t_exact(double omega_max, double g) {
  if (omega_max <= 0.0) throw std::invalid_argument("t_exact: omega_max <= 0");
  return (kPi + 2.0 * std::atan(std::sqrt(2.0))) / omega_max +
         kPi / (6.0 * g);
}

double verify_sequence(const GateSequence& seq, const SpaceSpec& space) {
  return average_fidelity(project_to_qubit(seq.product(), space),
                          target_iswap());
}

double sequence_block_defect(const GateSequence& seq, const SpaceSpec& space) {
  Matrix u = seq.product();
  auto qubit = space.qubit_indices();
  auto is_qubit = [&](int r) {
    return r == qubit[0] || r == qubit[1] || r == qubit[2] || r == qubit[3];
  };
  double defect = 0.0;
  for (int q : qubit)
    for (int r = 0; r < space.dim(); ++r)
      if (!is_qubit(r)) defect = std::max(defect, std::abs(u(r, q)));
  return defect;
}

}  // namespace quditctl
