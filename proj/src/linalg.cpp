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

#include "quditctl/linalg.hpp"

#include <stdexcept>

namespace quditctl {

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

double operator_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return a.jacobiSvd().singularValues()(0);
}

double hermiticity_defect(const Matrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("matrix not square");
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

bool is_hermitian(const Matrix& a, double tol) {
  return hermiticity_defect(a) <= tol;
}

Matrix embed_single(const Matrix& op, int which, const SpaceSpec& space) {
  if (op.rows() != space.d_local || op.cols() != space.d_local)
    throw std::invalid_argument("embed_single: operator dimension mismatch");
  if (which != 1 && which != 2)
    throw std::invalid_argument("embed_single: qudit index must be 1 or 2");
  Matrix eye = Matrix::Identity(space.d_local, space.d_local);
  return which == 1 ? kron(op, eye) : kron(eye, op);
}

Matrix matrix_exp_hermitian(const Matrix& h, double t) {
  if (!is_hermitian(h))
    throw std::invalid_argument("matrix_exp_hermitian: input not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const auto& w = es.eigenvalues();
  Vector phases(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i)
    phases(i) = std::exp(Complex(0.0, -w(i) * t));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

Matrix project_to_qubit(const Matrix& u, const SpaceSpec& space) {
  if (u.rows() != space.dim() || u.cols() != space.dim())
    throw std::invalid_argument("project_to_qubit: dimension mismatch");
  auto idx = space.qubit_indices();
  Matrix out(4, 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) out(r, c) = u(idx[r], idx[c]);
  return out;
}

}  // namespace quditctl
