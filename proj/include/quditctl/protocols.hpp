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

// One factor of an analytic gate sequence. Single-qudit gates are taken
// as instantaneous (duration 0); only coupling evolutions carry time.
struct GateStep {
  Matrix factor;
  std::string label;
  double duration = 0.0;
};

struct GateSequence {
  std::vector<GateStep> steps;  // applied left to right in time
  int d = 0;                    // local dimension

  double total_duration() const;
  // Ordered product: factors applied in time order (later steps multiply
  // from the left).
  Matrix product() const;
};

struct BoundReport {
  double j_norm = 0.0;
  double t_bound = 0.0;  // pi / (2 j_norm)
  double baseline_t_min = 0.0;
  bool unbounded = false;  // zero coupling
};

// Gate-time lower bound pi/(2 ||coupling||) from the interaction norm.
BoundReport speed_limit_bound(const Matrix& coupling, double g);

// Swap the top-ladder pair into the computational states, evolve the
// d-1 enhanced ladder coupling for pi/(2g(d-1)), swap back.
GateSequence protocol_ladder(int d, double g);

// Spread |0> uniformly over {|0>,|2>,...,|d-1>} on both qudits, evolve
// the collective coupling for pi/(2g(d-1)); the second qubit is flipped
// before and after.
GateSequence protocol_collective(int d, double g);

// The d=3 composition X2 U1' U2' exp(-i H pi/(6g)) U2 U1 X2 with U1, U2
// rotations by 2 arctan(sqrt 2) in the {|0>,|2>} plane.
GateSequence protocol_fourtone(double g);

// Serial-schedule gate time when every drive is capped at omega_max:
// (pi + 2 arctan sqrt2)/omega_max + pi/(6g).
double t_exact(double omega_max, double g);

// Projected average fidelity of the sequence product against the iSWAP
// target. Block preservation is checked separately via
// sequence_block_defect; shipped protocols keep the computational block
// exactly closed, but verify_sequence itself accepts leaky sequences
// (they simply score a lower fidelity).
double verify_sequence(const GateSequence& seq, const SpaceSpec& space);

// Largest amplitude the end-to-end product moves from a computational
// column out of the computational block.
double sequence_block_defect(const GateSequence& seq, const SpaceSpec& space);

}  // namespace quditctl
