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

#include "quditctl/propagator.hpp"

#include <cmath>
#include <stdexcept>

namespace quditctl {

namespace {

// Computational columns for trajectory sampling: the space is d x d with
// d inferred from the matrix dimension.
std::array<int, 4> computational_columns(Eigen::Index dim) {
  int d = int(std::lround(std::sqrt(double(dim))));
  if (Eigen::Index(d) * d != dim)
    throw std::invalid_argument("propagate: dimension is not a qudit pair");
  return {0, 1, d, d + 1};
}

Eigen::MatrixXd sample_populations(const Matrix& u,
                                   const std::array<int, 4>& cols) {
  Eigen::MatrixXd p(u.rows(), 4);
  for (int q = 0; q < 4; ++q)
    p.col(q) = u.col(cols[q]).cwiseAbs2();
  return p;
}

}  // namespace

PropagationResult propagate(const HamiltonianFn& h_of_t, double T,
                            int substeps_per_segment, int M) {
  if (substeps_per_segment < 1)
    throw std::invalid_argument("propagate: substeps_per_segment < 1");
  if (M < 1) throw std::invalid_argument("propagate: M < 1");
  if (T <= 0.0) throw std::invalid_argument("propagate: T <= 0");

  const long n_steps = long(M) * substeps_per_segment;
  const double h = T / double(n_steps);

  Matrix probe = h_of_t(0.5 * h);
  const Eigen::Index dim = probe.rows();
  auto cols = computational_columns(dim);

  PropagationResult out;
  out.sample_times.reserve(n_steps + 1);
  out.trajectory.reserve(n_steps + 1);

  Matrix u = Matrix::Identity(dim, dim);
  out.sample_times.push_back(0.0);
  out.trajectory.push_back(sample_populations(u, cols));

  Matrix a(dim, dim), rhs(dim, dim);
  Eigen::PartialPivLU<Matrix> lu(dim);
  const Matrix eye = Matrix::Identity(dim, dim);

  for (long n = 0; n < n_steps; ++n) {
    double t_mid = (double(n) + 0.5) * h;
    Matrix k = h_of_t(t_mid);
    k *= Complex(0.0, 0.5 * h);  // i h H / 2
    a = eye + k;
    rhs.noalias() = u - k * u;
    lu.compute(a);
    u = lu.solve(rhs);
    out.sample_times.push_back(double(n + 1) * h);
    out.trajectory.push_back(sample_populations(u, cols));
  }

  out.u_final = std::move(u);
  return out;
}

double unitarity_defect(const Matrix& u) {
  Matrix d = u.adjoint() * u;
  d -= Matrix::Identity(u.rows(), u.cols());
  return operator_norm(d);
}

}  // namespace quditctl
