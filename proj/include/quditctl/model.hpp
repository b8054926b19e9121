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

#include <string>
#include <vector>

#include "quditctl/linalg.hpp"

namespace quditctl {

// Physical parameters of the coupled-transmon pair. All frequencies are
// stored in units of g (alpha, delta, drive amplitudes, detunings); g
// itself sets the frequency unit and times are in 1/g.
struct DeviceModel {
  double g = 1.0;
  double alpha = 10.0;  // anharmonicity, units of g
  double delta = 15.0;  // qudit frequency difference w2 - w1, units of g
  int d_logical = 3;
  int d_sim = 3;
  bool ort_enabled = false;
  // Off-resonant matrix elements follow the harmonic ladder sqrt(k'),
  // and a tone drives the other qudit at full strength. Both are
  // conventions the hardware does not pin down, so they stay adjustable.
  bool harmonic_ladder_ratio = true;
  double cross_drive_scale = 1.0;

  SpaceSpec space() const { return SpaceSpec{d_sim}; }
  bool operator==(const DeviceModel&) const = default;
};

enum class CouplingKind {
  QubitBaseline,     // g(|01><10| + h.c.)
  ParametricLadder,  // g(d-1)(|d-1,d-2><d-2,d-1| + h.c.)
  CollectiveUniform, // g sum_{j,k != 1} |jk><11| + h.c.
  FourTone,          // g(|00> + sqrt2|02> + sqrt2|20> + 2|22>)<11| + h.c.
  CapacitiveRaw,     // g(a1 + a1^dag)(a2 + a2^dag)
};

struct CouplingSpec {
  CouplingKind kind = CouplingKind::FourTone;
  int d = 3;  // dimension parameter for the general-d constructions

  bool operator==(const CouplingSpec&) const = default;
};

std::string coupling_kind_name(CouplingKind kind);
CouplingKind coupling_kind_from_name(const std::string& name);

// Piecewise pulse envelopes for the four drive tones. Tones are indexed
// by (qudit i, transition k) with i,k in {1,2}; flat index 2*(i-1)+(k-1).
// Amplitudes are in units of g.
struct PulseSet {
  int M = 40;
  double T = 0.0;          // units of 1/g
  double omega_max = 0.0;  // units of g
  std::array<std::vector<Complex>, 4> amplitudes;

  double tau() const { return T / M; }
  static int tone_index(int i, int k) { return 2 * (i - 1) + (k - 1); }
  void resize_segments() {
    for (auto& a : amplitudes) a.assign(M, Complex(0.0, 0.0));
  }
};

// One drive term: tone (i,k) acting on transition |k'-1> <-> |k'> of
// qudit j, detuned by delta_g (units of g) with matrix-element ratio eta.
struct ToneEntry {
  int i, k;       // source tone
  int j, kprime;  // target qudit and transition
  double delta;   // units of g
  double eta;
};

struct ToneTable {
  std::vector<ToneEntry> entries;
};

// Coupling Hamiltonian on the d_sim^2 space. The construction itself
// lives on spec.d levels per qudit; rows and columns touching higher
// levels are zero.
Matrix build_coupling(const CouplingSpec& spec, const DeviceModel& device);

// Smoothed waveform A^(m) sin^2[pi(m-1-t/tau)] for the segment m
// containing t: the shape a bandwidth-limited generator would emit,
// used for plotting and CSV export.
Complex pulse_value(const PulseSet& p, int i, int k, double t);

// Zero-order-hold amplitude A^(m) for the segment containing t. The
// dynamics treat each segment as a constant drive; |A| <= omega_max
// bounds the Rabi rate of every segment.
Complex segment_amplitude(const PulseSet& p, int i, int k, double t);

// Drive terms per tone. Without ORT only the four resonant entries
// exist; with ORT each tone also drives every other ladder transition
// of both qudits (k' up to d_sim-1), detuned by
// delta = (w_i - w_j) + (k'-k) alpha.
ToneTable build_tone_table(const DeviceModel& device);

// H(t) = coupling + sum over entries of
//   g * eta * A_{i,k}(t) e^{-i delta g t} |k'><k'-1|_j + h.c.
// with A_{i,k}(t) the zero-order-hold segment amplitude.
Matrix assemble_hamiltonian(const DeviceModel& device, const Matrix& coupling,
                            const PulseSet& pulses, const ToneTable& tones,
                            double t);

}  // namespace quditctl
