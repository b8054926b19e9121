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

#include <vector>

#include "quditctl/linalg.hpp"
#include "quditctl/propagator.hpp"

namespace quditctl {

struct FidelityReport {
  double f = 0.0;
  double leak_max = 0.0;  // peak mean population outside the qutrit block
  double leak_avg = 0.0;  // time average of the same
  double loss = 0.0;
};

// Populations along the gate, averaged over the four computational
// initial states. p01 is the probability of both transmons staying in
// {|0>,|1>}; p_k[k-2] the probability of at least one transmon in |k>.
struct LeakageProfile {
  std::vector<double> times;
  std::vector<double> p01;
  std::vector<std::vector<double>> p_k;
};

// Average gate fidelity of the projected (possibly sub-unitary) 4x4
// operator against a unitary target:
//   F = 1/5 + 1/80 Re sum_j tr(target U_j^dag target^dag m4 U_j m4^dag)
// over the 16 two-qubit Pauli operators U_j.
double average_fidelity(const Matrix& m4, const Matrix& target);

// iSWAP in the -i convention: |01> -> -i|10>, |10> -> -i|01|,
// |00> and |11> fixed. This is e^{-iHT} for H = g(|01><10|+h.c.) at
// T = pi/(2g).
Matrix target_iswap();

LeakageProfile leakage_profile(const PropagationResult& prop,
                               const SpaceSpec& space);

// (1 - f) + c_max * leak_max + c_avg * leak_avg. The leak terms measure
// population outside the two-qutrit subspace (any transmon at |3> or
// above).
double loss(double f, double leak_max, double leak_avg, double c_max,
            double c_avg);

// Full report for a propagation: projected fidelity against the iSWAP
// target plus leakage statistics over all trajectory samples.
FidelityReport assess(const PropagationResult& prop, const SpaceSpec& space,
                      double c_max, double c_avg);

}  // namespace quditctl
