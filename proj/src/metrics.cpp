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

#include "quditctl/metrics.hpp"

#include <stdexcept>

namespace quditctl {

namespace {

const std::array<Matrix, 16>& two_qubit_paulis() {
  static const std::array<Matrix, 16> paulis = [] {
    Matrix id = Matrix::Identity(2, 2);
    Matrix x(2, 2), y(2, 2), z(2, 2);
    x << 0, 1, 1, 0;
    y << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
    z << 1, 0, 0, -1;
    std::array<Matrix, 4> single = {id, x, y, z};
    std::array<Matrix, 16> out;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) out[4 * a + b] = kron(single[a], single[b]);
    return out;
  }();
  return paulis;
}

}  // namespace

double average_fidelity(const Matrix& m4, const Matrix& target) {
  if (m4.rows() != 4 || m4.cols() != 4 || target.rows() != 4 ||
      target.cols() != 4)
    throw std::invalid_argument("average_fidelity: expected 4x4 operators");
  double sum = 0.0;
  for (const auto& u_j : two_qubit_paulis()) {
    Matrix lhs = target * u_j.adjoint() * target.adjoint();
    Matrix rhs = m4 * u_j * m4.adjoint();
    sum += (lhs * rhs).trace().real();
  }
  return 0.2 + sum / 80.0;
}

Matrix target_iswap() {
  Matrix u = Matrix::Zero(4, 4);
  u(0, 0) = 1.0;
  u(1, 2) = Complex(0.0, -1.0);
  u(2, 1) = Complex(0.0, -1.0);
  u(3, 3) = 1.0;
  return u;
}

LeakageProfile leakage_profile(const PropagationResult& prop,
                               const SpaceSpec& space) {
  const int d = space.d_local;
  const size_t n_samples = prop.trajectory.size();
  LeakageProfile profile;
  profile.times = prop.sample_times;
  profile.p01.resize(n_samples);
  profile.p_k.assign(size_t(std::max(0, d - 2)),
                     std::vector<double>(n_samples, 0.0));

  for (size_t s = 0; s < n_samples; ++s) {
    const auto& pops = prop.trajectory[s];
    double p01 = 0.0;
    for (int n1 = 0; n1 < d; ++n1) {
      for (int n2 = 0; n2 < d; ++n2) {
        double p = pops.row(d * n1 + n2).mean();
        if (n1 <= 1 && n2 <= 1) p01 += p;
        for (int k = 2; k < d; ++k)
          if (n1 == k || n2 == k) profile.p_k[k - 2][s] += p;
      }
    }
    profile.p01[s] = p01;
  }
  return profile;
}

double loss(double f, double leak_max, double leak_avg, double c_max,
            double c_avg) {
  if (c_max < 0.0 || c_avg < 0.0)
    throw std::invalid_argument("loss: penalty weights must be >= 0");
  return (1.0 - f) + c_max * leak_max + c_avg * leak_avg;
}

FidelityReport assess(const PropagationResult& prop, const SpaceSpec& space,
                      double c_max, double c_avg) {
  FidelityReport report;
  report.f = average_fidelity(project_to_qubit(prop.u_final, space),
                              target_iswap());

  const int d = space.d_local;
  double peak = 0.0, accum = 0.0;
  for (const auto& pops : prop.trajectory) {
    double leak = 0.0;
    for (int n1 = 0; n1 < d; ++n1)
      for (int n2 = 0; n2 < d; ++n2)
        if (n1 >= 3 || n2 >= 3) leak += pops.row(d * n1 + n2).mean();
    peak = std::max(peak, leak);
    accum += leak;
  }
  report.leak_max = peak;
  report.leak_avg =
      prop.trajectory.empty() ? 0.0 : accum / double(prop.trajectory.size());
  report.loss = loss(report.f, report.leak_max, report.leak_avg, c_max, c_avg);
  return report;
}

}  // namespace quditctl
