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

#include "quditctl/model.hpp"

#include <cmath>
#include <stdexcept>

namespace quditctl {

namespace {

constexpr double kPi = 3.14159265358979323846;

Matrix two_qudit_zero(const DeviceModel& device) {
  int dim = device.d_sim * device.d_sim;
  return Matrix::Zero(dim, dim);
}

// Basis index of |n1 n2> in the d_sim^2 space.
int idx(const DeviceModel& device, int n1, int n2) {
  return device.d_sim * n1 + n2;
}

}  // namespace

std::string coupling_kind_name(CouplingKind kind) {
  switch (kind) {
    case CouplingKind::QubitBaseline: return "qubit-baseline";
    case CouplingKind::ParametricLadder: return "parametric-ladder";
    case CouplingKind::CollectiveUniform: return "collective-uniform";
    case CouplingKind::FourTone: return "four-tone";
    case CouplingKind::CapacitiveRaw: return "capacitive-raw";
  }
  throw std::logic_error("unknown coupling kind");
}

CouplingKind coupling_kind_from_name(const std::string& name) {
  if (name == "qubit-baseline") return CouplingKind::QubitBaseline;
  if (name == "parametric-ladder") return CouplingKind::ParametricLadder;
  if (name == "collective-uniform") return CouplingKind::CollectiveUniform;
  if (name == "four-tone") return CouplingKind::FourTone;
  if (name == "capacitive-raw") return CouplingKind::CapacitiveRaw;
  throw std::invalid_argument("unknown coupling kind: " + name);
}

Matrix build_coupling(const CouplingSpec& spec, const DeviceModel& device) {
  if (spec.d > device.d_sim)
    throw std::invalid_argument("coupling dimension exceeds d_sim");
  if (spec.kind == CouplingKind::FourTone && device.d_logical != 3)
    throw std::invalid_argument("four-tone coupling requires d_logical = 3");

  const double g = device.g;
  Matrix h = two_qudit_zero(device);

  switch (spec.kind) {
    case CouplingKind::QubitBaseline: {
      h(idx(device, 0, 1), idx(device, 1, 0)) = g;
      h(idx(device, 1, 0), idx(device, 0, 1)) = g;
      break;
    }
    case CouplingKind::ParametricLadder: {
      int d = spec.d;
      if (d < 2) throw std::invalid_argument("ladder coupling needs d >= 2");
      int a = idx(device, d - 1, d - 2);
      int b = idx(device, d - 2, d - 1);
      h(a, b) = g * (d - 1);
      h(b, a) = g * (d - 1);
      break;
    }
    case CouplingKind::CollectiveUniform: {
      int d = spec.d;
      if (d < 3)
        throw std::invalid_argument("collective coupling needs d >= 3");
      int t = idx(device, 1, 1);
      for (int n1 = 0; n1 < d; ++n1) {
        if (n1 == 1) continue;
        for (int n2 = 0; n2 < d; ++n2) {
          if (n2 == 1) continue;
          h(idx(device, n1, n2), t) = g;
          h(t, idx(device, n1, n2)) = g;
        }
      }
      break;
    }
    case CouplingKind::FourTone: {
      const double s2 = std::sqrt(2.0);
      int t = idx(device, 1, 1);
      h(idx(device, 0, 0), t) = g;
      h(idx(device, 0, 2), t) = g * s2;
      h(idx(device, 2, 0), t) = g * s2;
      h(idx(device, 2, 2), t) = g * 2.0;
      for (int n : {idx(device, 0, 0), idx(device, 0, 2), idx(device, 2, 0),
                    idx(device, 2, 2)})
        h(t, n) = std::conj(h(n, t));
      break;
    }
    case CouplingKind::CapacitiveRaw: {
      int d = spec.d;
      Matrix x = Matrix::Zero(device.d_sim, device.d_sim);
      for (int n = 1; n < d; ++n) {
        x(n - 1, n) = std::sqrt(double(n));
        x(n, n - 1) = std::sqrt(double(n));
      }
      SpaceSpec space = device.space();
      h = g * embed_single(x, 1, space) * embed_single(x, 2, space);
      break;
    }
  }
  return h;
}

Complex pulse_value(const PulseSet& p, int i, int k, double t) {
  if (t < 0.0 || t > p.T)
    throw std::out_of_range("pulse_value: t outside [0, T]");
  double tau = p.tau();
  int m = int(t / tau) + 1;  // 1-based segment
  if (m > p.M) m = p.M;      // t == T lands in the last segment
  double s = std::sin(kPi * (m - 1 - t / tau));
  return p.amplitudes[PulseSet::tone_index(i, k)][m - 1] * (s * s);
}

Complex segment_amplitude(const PulseSet& p, int i, int k, double t) {
  if (t < 0.0 || t > p.T)
    throw std::out_of_range("segment_amplitude: t outside [0, T]");
  int m = int(t / p.tau()) + 1;
  if (m > p.M) m = p.M;
  return p.amplitudes[PulseSet::tone_index(i, k)][m - 1];
}

ToneTable build_tone_table(const DeviceModel& device) {
  ToneTable table;
  // Qudit frequencies w1 = 0, w2 = delta; transition |k'-1> <-> |k'> of
  // qudit j sits at w_j - (k'-1) alpha (units of g).
  auto omega = [&](int j) { return j == 1 ? 0.0 : device.delta; };

  for (int i = 1; i <= 2; ++i) {
    for (int k = 1; k <= 2; ++k) {
      if (!device.ort_enabled) {
        // Only transitions that exist in the truncated ladder.
        if (k <= device.d_sim - 1)
          table.entries.push_back({i, k, i, k, 0.0, 1.0});
        continue;
      }
      for (int j = 1; j <= 2; ++j) {
        for (int kp = 1; kp <= device.d_sim - 1; ++kp) {
          double carrier = omega(i) - (k - 1) * device.alpha;
          double transition = omega(j) - (kp - 1) * device.alpha;
          double eta = device.harmonic_ladder_ratio
                           ? std::sqrt(double(kp)) / std::sqrt(double(k))
                           : 1.0;
          if (j != i) eta *= device.cross_drive_scale;
          table.entries.push_back({i, k, j, kp, carrier - transition, eta});
        }
      }
    }
  }
  return table;
}

Matrix assemble_hamiltonian(const DeviceModel& device, const Matrix& coupling,
                            const PulseSet& pulses, const ToneTable& tones,
                            double t) {
  Matrix h = coupling;
  int d = device.d_sim;
  for (const auto& e : tones.entries) {
    Complex amp = segment_amplitude(pulses, e.i, e.k, t);
    Complex c = device.g * e.eta * amp *
                std::exp(Complex(0.0, -e.delta * device.g * t));
    // |k'><k'-1| on qudit j, identity on the other. Without off-resonant
    // terms the model lives on the logical block, so the spectator factor
    // is truncated there and level-3 rows stay identically zero.
    int rmax = device.ort_enabled ? d : std::min(d, device.d_logical);
    for (int r = 0; r < rmax; ++r) {
      int row = e.j == 1 ? idx(device, e.kprime, r) : idx(device, r, e.kprime);
      int col =
          e.j == 1 ? idx(device, e.kprime - 1, r) : idx(device, r, e.kprime - 1);
      h(row, col) += c;
      h(col, row) += std::conj(c);
    }
  }
  return h;
}

}  // namespace quditctl
