// Copyright 2026 The varid Authors
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

#include "varid/linearization.hpp"

#include <string>

#include <Eigen/Dense>

#include "varid/discretization.hpp"
#include "varid/errors.hpp"

namespace varid {

StepSensitivity linearize_step(const Model& model, const DiscreteState& state,
                               const DiscreteState& next, const Vector& rho, double t_k, double dt,
                               int step_index, const Matrix* dx_drho,
                               const SolverSettings& settings) {
  check_dims(model, state.q, rho);
  const int nq = model.config_dim();
  const int nh = model.constraint_dim();
  const int nrho = model.param_dim();
  if (next.q.size() != nq || next.lambda.size() != nh) {
    throw DimensionError("linearize_step: next state does not match the model");
  }

  const DiscreteSlotDerivatives d = slot_derivatives(model, state.q, next.q, rho, t_k, t_k + dt);

  // Right-hand sides dR/d(q_k), dR/d(p_k), dR/d(rho) of the step residual
  // R = [p + D1Ld + Fd- - Dh(q_k)^T lambda; h(q_{k+1})].
  Matrix K = Matrix::Zero(nq + nh, nq + nh);
  K.topLeftCorner(nq, nq) = d.D12Ld + d.D2Fdm;
  Matrix rhs = Matrix::Zero(nq + nh, 2 * nq + nrho);
  rhs.block(0, 0, nq, nq) = d.D11Ld + d.D1Fdm;
  rhs.block(0, nq, nq, nq).setIdentity();
  rhs.block(0, 2 * nq, nq, nrho) = d.D3D1Ld + d.D3Fdm;

  if (nh > 0) {
    const ConstraintTerms c0 = model.constraint(state.q, rho);
    const ConstraintTerms c1 = model.constraint(next.q, rho);
    K.topRightCorner(nq, nh) = -c0.jacobian.transpose();
    K.bottomLeftCorner(nh, nq) = c1.jacobian;
    for (int c = 0; c < nh; ++c) {
      rhs.block(0, 0, nq, nq) -= next.lambda[c] * c0.hessians[static_cast<std::size_t>(c)];
    }
    for (int j = 0; j < nrho; ++j) {
      rhs.block(0, 2 * nq + j, nq, 1) -=
          c0.jacobian_drho[static_cast<std::size_t>(j)].transpose() * next.lambda;
    }
    rhs.block(nq, 2 * nq, nh, nrho) = c1.drho;
  }

  const Eigen::PartialPivLU<Matrix> lu(K);
  if (!(factorization_rcond(lu) >= settings.singular_rcond)) {
    throw SolverError(SolverFailure::kConstraintRank,
                      "linearize_step: singular KKT matrix at step " + std::to_string(step_index),
                      step_index);
  }
  const Matrix Y = -lu.solve(rhs);

  StepSensitivity s;
  s.step_index = step_index;
  const Matrix dq1_dq = Y.block(0, 0, nq, nq);
  const Matrix dq1_dp = Y.block(0, nq, nq, nq);
  const Matrix dq1_drho = Y.block(0, 2 * nq, nq, nrho);
  s.dlambda_dq = Y.block(nq, 0, nh, nq);
  s.dlambda_dp = Y.block(nq, nq, nh, nq);
  s.dlambda_drho = Y.block(nq, 2 * nq, nh, nrho);

  // p_{k+1} = D2Ld(q_k, q_{k+1}) + Fd+(q_k, q_{k+1}).
  const Matrix P = d.D22Ld + d.D2Fdp;
  s.A.resize(2 * nq, 2 * nq);
  s.A.topLeftCorner(nq, nq) = dq1_dq;
  s.A.topRightCorner(nq, nq) = dq1_dp;
  s.A.bottomLeftCorner(nq, nq) = P * dq1_dq + d.D12Ld.transpose() + d.D1Fdp;
  s.A.bottomRightCorner(nq, nq) = P * dq1_dp;

  s.B.resize(2 * nq, nrho);
  s.B.topRows(nq) = dq1_drho;
  s.B.bottomRows(nq) = P * dq1_drho + d.D3D2Ld + d.D3Fdp;

  if (dx_drho != nullptr) {
    if (dx_drho->rows() != 2 * nq || dx_drho->cols() != nrho) {
      throw DimensionError("linearize_step: dx/drho has the wrong shape");
    }
    s.total_drho = s.A * (*dx_drho) + s.B;
  }
  return s;
}

std::vector<StepSensitivity> linearize_trajectory(const Model& model, const Trajectory& traj,
                                                  const Vector& rho,
                                                  const SolverSettings& settings) {
  if (traj.size() != traj.grid.samples()) {
    throw DimensionError("linearize_trajectory: trajectory length does not match its grid");
  }
  const int nq = model.config_dim();
  Matrix z = traj.initial_sensitivity.size() != 0
                 ? traj.initial_sensitivity
                 : Matrix(Matrix::Zero(2 * nq, model.param_dim()));
  std::vector<StepSensitivity> out;
  out.reserve(static_cast<std::size_t>(traj.grid.steps()));
  for (int k = 0; k < traj.grid.steps(); ++k) {
    out.push_back(linearize_step(model, traj[k], traj[k + 1], rho, traj.grid.time(k),
                                 traj.grid.dt(), k, &z, settings));
    z = *out.back().total_drho;
  }
  return out;
}

Matrix state_transition(const std::vector<StepSensitivity>& sens, int k1, int k2) {
  if (sens.empty()) throw DimensionError("state_transition: no sensitivities");
  const int n = static_cast<int>(sens.size());
  if (k1 < 0 || k2 < k1 || k2 > n) {
    throw DimensionError("state_transition: indices (" + std::to_string(k2) + ", " +
                         std::to_string(k1) + ") out of range");
  }
  const Eigen::Index dim = sens.front().A.rows();
  Matrix phi = Matrix::Identity(dim, dim);
  for (int j = k1; j < k2; ++j) phi = sens[static_cast<std::size_t>(j)].A * phi;
  return phi;
}

}  // namespace varid
