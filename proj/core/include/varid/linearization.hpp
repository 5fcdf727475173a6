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

// Exact linearization of the implicit one-step map by differentiating the
// converged step equations. One factorization of the KKT matrix
//   [[M_{k+1}, -Dh(q_k)^T], [Dh(q_{k+1}), 0]]
// is back-solved against the right-hand sides for q_k, p_k and rho.

#ifndef VARID_LINEARIZATION_HPP_
#define VARID_LINEARIZATION_HPP_

#include <optional>
#include <vector>

#include "varid/integrator.hpp"

namespace varid {

struct StepSensitivity {
  int step_index = 0;
  // d x_{k+1} / d x_k, blocks [[dq'/dq, dq'/dp], [dp'/dq, dp'/dp]].
  Matrix A;
  // d x_{k+1} / d rho with x_k held fixed (the input matrix of the linearized
  // state equation z_{k+1} = A_k z_k + B_k theta).
  Matrix B;
  Matrix dlambda_dq;    // n_h x n_q
  Matrix dlambda_dp;    // n_h x n_q
  Matrix dlambda_drho;  // n_h x n_rho
  // Total derivative d x_{k+1} / d rho = A_k dx_k/drho + B_k, present when the
  // caller threads dx_k/drho through linearize_step.
  std::optional<Matrix> total_drho;

  LinearizationPair pair() const { return {A, B, step_index}; }
};

// Linearizes the step x_k -> x_{k+1} = `next`. `next` must be a converged
// solution of the step from `state` (q_{k+1}, p_{k+1} and lambda_k).
// `dx_drho` is d x_k / d rho; when given, `total_drho` is filled in.
StepSensitivity linearize_step(const Model& model, const DiscreteState& state,
                               const DiscreteState& next, const Vector& rho, double t_k, double dt,
                               int step_index = 0, const Matrix* dx_drho = nullptr,
                               const SolverSettings& settings = {});

// All steps of a trajectory, threading the total parameter derivative forward
// from traj.initial_sensitivity.
std::vector<StepSensitivity> linearize_trajectory(const Model& model, const Trajectory& traj,
                                                  const Vector& rho,
                                                  const SolverSettings& settings = {});

// Phi(k2, k1) = A_{k2-1} ... A_{k1}; Phi(k, k) = I.
Matrix state_transition(const std::vector<StepSensitivity>& sens, int k1, int k2);

}  // namespace varid

#endif  // VARID_LINEARIZATION_HPP_
