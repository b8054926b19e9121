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

#include <functional>
#include <vector>

#include "quditctl/linalg.hpp"

namespace quditctl {

using HamiltonianFn = std::function<Matrix(double)>;

struct PropagationResult {
  Matrix u_final;
  // trajectory[s] is dim x 4: per-basis-state probabilities of the four
  // computational initial states at sample_times[s].
  std::vector<Eigen::MatrixXd> trajectory;
  std::vector<double> sample_times;
};

// Evolution operator over [0, T] by the implicit-midpoint (Cayley)
// update U <- (I + i h H/2)^{-1} (I - i h H/2) U with h = tau/substeps,
// exactly unitary up to round-off. The trajectory is sampled at every
// substep boundary, including t = 0 and t = T.
PropagationResult propagate(const HamiltonianFn& h_of_t, double T,
                            int substeps_per_segment, int M);

// operator_norm(U^dag U - I).
double unitarity_defect(const Matrix& u);

}  // namespace quditctl
