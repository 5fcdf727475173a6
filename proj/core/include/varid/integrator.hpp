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

// Forced, constrained midpoint variational integrator.
//
// One step solves for (q_{k+1}, lambda_k):
//   p_k + D1Ld(q_k, q_{k+1}) + Fd-(q_k, q_{k+1}) - Dh(q_k)^T lambda_k = 0
//   h(q_{k+1}) = 0
// then sets p_{k+1} = D2Ld(q_k, q_{k+1}) + Fd+(q_k, q_{k+1}).

#ifndef VARID_INTEGRATOR_HPP_
#define VARID_INTEGRATOR_HPP_

#include <vector>

#include <Eigen/LU>

#include "varid/model.hpp"

namespace varid {

enum class Predictor {
  kHold,                 // q_{k+1}^0 = q_k
  kLinearExtrapolation,  // q_{k+1}^0 = 2 q_k - q_{k-1}
};

struct SolverSettings {
  double newton_tol = 1e-10;  // on the residual infinity norm
  int max_iters = 50;
  Predictor predictor = Predictor::kLinearExtrapolation;
  // Reciprocal condition estimate below which the KKT matrix counts as singular.
  double singular_rcond = 1e-12;
};

// Reciprocal condition estimate of a factorized matrix. Eigen's estimator
// assumes invertibility, so this also takes the smallest pivot ratio, which
// is zero for an exactly singular matrix.
double factorization_rcond(const Eigen::PartialPivLU<Matrix>& lu);

struct StepResult {
  DiscreteState next;
  int newton_iters = 0;
  double residual = 0.0;
};

// Residual of the step equations at a candidate (q1, lambda); stacked
// [momentum rows; constraint rows].
Vector step_residual(const Model& model, const DiscreteState& state, const Vector& q1,
                     const Vector& lambda, const Vector& rho, double t0, double t1);

// KKT matrix [[M, -Dh(q0)^T], [Dh(q1), 0]] with M = D12Ld + D2Fd-.
Matrix step_jacobian(const Model& model, const Vector& q0, const Vector& q1, const Vector& rho,
                     double t0, double t1);

// One step of the discrete map. Requires |h(q_k)|_inf <= newton_tol.
// `previous_q` (q_{k-1}) feeds the linear-extrapolation predictor; without it
// the predictor holds q_k.
StepResult step(const Model& model, const DiscreteState& state, const Vector& rho, double t_k,
                double dt, const SolverSettings& settings = {},
                const Vector* previous_q = nullptr);

// As `step`, without the feasibility precondition. Used for finite-difference
// probes of the map away from the constraint manifold.
StepResult step_unchecked(const Model& model, const DiscreteState& state, const Vector& rho,
                          double t_k, double dt, const SolverSettings& settings = {},
                          const Vector* previous_q = nullptr);

// Rolls out grid.steps() steps. The initial momentum is the continuous
// Legendre transform p_0 = Lv(q_0, v_0, rho). SolverErrors carry the index of
// the failing step.
Trajectory simulate(const Model& model, const Vector& initial_q, const Vector& initial_v,
                    const Vector& rho, const TimeGrid& grid, const SolverSettings& settings = {});

// Continues a rollout from an arbitrary discrete state.
Trajectory simulate_from_state(const Model& model, const DiscreteState& initial,
                               const Vector& rho, const TimeGrid& grid,
                               const SolverSettings& settings = {});

// KE(q̄, v̄) + V(q̄) at the midpoint of (q0, q1).
double discrete_energy(const Model& model, const Vector& q0, const Vector& q1, const Vector& rho,
                       double dt);

// Reference solution of the continuous forced Euler-Lagrange equations,
//   Lvv qdd = Lq + Fc - Lqv^T v,
// by classic fourth order Runge-Kutta. Unconstrained models only.
struct ContinuousSamples {
  std::vector<double> t;
  std::vector<Vector> q;
  std::vector<Vector> v;
};

ContinuousSamples continuous_oracle(const Model& model, const Vector& initial_q,
                                    const Vector& initial_v, const Vector& rho, double t0,
                                    double t_final, int steps);

// Convenience for continuous diagnostics.
double continuous_energy(const Model& model, const Vector& q, const Vector& v, const Vector& rho);

}  // namespace varid

#endif  // VARID_INTEGRATOR_HPP_
