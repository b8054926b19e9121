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

#include <array>
#include <complex>

#include <Eigen/Dense>

namespace quditctl {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// Two coupled qudits with d levels each. Basis states are ordered
// row-major in the tensor labels: index = d * n1 + n2, so the
// computational (qubit) states |00>,|01>,|10>,|11> sit at
// {0, 1, d, d+1}.
struct SpaceSpec {
  int d_local = 3;

  int dim() const { return d_local * d_local; }
  std::array<int, 4> qubit_indices() const {
    return {0, 1, d_local, d_local + 1};
  }
};

// Kronecker product a (x) b.
Matrix kron(const Matrix& a, const Matrix& b);

// Largest singular value.
double operator_norm(const Matrix& a);

// Max-abs deviation from Hermiticity, max |A - A^dag|.
double hermiticity_defect(const Matrix& a);
bool is_hermitian(const Matrix& a, double tol = 1e-12);

// op (x) I for which = 1, I (x) op for which = 2. op must be
// d_local x d_local.
Matrix embed_single(const Matrix& op, int which, const SpaceSpec& space);

// e^{-i h t} by eigendecomposition. Rejects non-Hermitian input.
Matrix matrix_exp_hermitian(const Matrix& h, double t);

// 4x4 restriction of u to the computational indices, ordered
// |00>,|01>,|10>,|11>. Not renormalized; under leakage the result
// is sub-unitary.
Matrix project_to_qubit(const Matrix& u, const SpaceSpec& space);

}  // namespace quditctl
