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

// Parameter identification: trajectory-matching cost, its adjoint gradient
// and projected steepest descent with Armijo backtracking.

#ifndef VARID_ESTIMATION_HPP_
#define VARID_ESTIMATION_HPP_

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "varid/linearization.hpp"
#include "varid/observation.hpp"

namespace varid {

// J_d = sum_{k=1}^{k_f} w_k |g(q_k) - m_k|^2 + w_T |g(q_kf) - m_kf|^2.
// The final sample appears in both sums.
struct CostSpec {
  std::shared_ptr<const Observation> observation;
  std::vector<Vector> measured;  // one target per grid sample (steps + 1)
  std::vector<double> weights;   // empty -> all 1
  double terminal_weight = 1.0;

  double weight(int k) const {
    return weights.empty() ? 1.0 : weights[static_cast<std::size_t>(k)];
  }
};

double cost(const Trajectory& traj, const CostSpec& spec, const Vector& rho);

// Adjoint co-vectors over the full state, one per sample; entry 0 is
// lambda_1 A_0 and only contributes through the initial sensitivity.
struct AdjointState {
  std::vector<RowVector> lambda;
};

struct AdjointSolution {
  Vector gradient;
  AdjointState adjoint;
};

// Backward recursion
//   lambda_kf = D1 l_d(x_kf) + D1 m_d(x_kf)
//   lambda_k  = lambda_{k+1} A_k + D1 l_d(x_k)
// and DJ = sum_{k=1}^{kf} lambda_k B_{k-1} (+ lambda_1 A_0 dx_0/drho).
AdjointSolution solve_adjoint(const Trajectory& traj, const std::vector<StepSensitivity>& sens,
                              const CostSpec& spec, const Vector& rho);

Vector adjoint_gradient(const Trajectory& traj, const std::vector<StepSensitivity>& sens,
                        const CostSpec& spec, const Vector& rho);

// Measured series aligned with a time grid: row k holds the sample at t_k.
struct TimeSeries {
  TimeGrid grid{0.0, 1.0, 1};
  std::vector<std::string> names;
  Matrix samples;  // grid.samples() x channels

  // Linear interpolation between grid samples, clamped to the grid span.
  Vector at(double t) const;
};

// Fc = T_meas(t) - K (b - b_meas(t)) on the actuated coordinates, zero on the
// rest. `gains` is the diagonal of K and must be non-negative.
std::shared_ptr<const ForceProvider> feedback_force(TimeSeries torques, TimeSeries coordinates,
                                                    Vector gains, std::vector<int> actuated,
                                                    int nq);

struct DescentSettings {
  double alpha = 0.4;  // sufficient decrease
  double beta = 0.4;   // backtracking factor
  int max_iters = 100;
  double grad_tol = 1e-3;
  double initial_step = 1.0;
  int max_backtracks = 40;
};

enum class Termination { kGradTol, kMaxIters, kLineSearchFailure };

const char* to_string(Termination termination);

struct IdentificationResult {
  ParameterVector rho_opt;
  std::vector<Vector> rho_history;     // iterate j
  std::vector<double> cost_history;    // J at iterate j
  std::vector<double> grad_norm_history;
  std::vector<double> step_history;    // accepted step length leaving iterate j
  int iterations = 0;
  Termination termination = Termination::kMaxIters;
};

// Projected gradient: components whose bound is active and that point out of
// the box are zeroed.
Vector projected_gradient(const ParameterVector& rho, const Vector& gradient);

struct IdentificationProblem {
  const Model* model = nullptr;
  Vector initial_q;
  Vector initial_v;
  TimeGrid grid{0.0, 1.0, 1};
  CostSpec cost;
  // Optional external forcing (e.g. feedback_force); applied on top of the
  // model's own forces.
  std::shared_ptr<const ForceProvider> forcing;
  SolverSettings solver;
};

// Called with every accepted iterate (including the start) and its trajectory.
using IterationObserver = std::function<void(int iteration, const Vector& rho,
                                             const Trajectory& traj, double cost)>;

// Evaluates J and its adjoint gradient at rho.
struct CostAndGradient {
  double cost = 0.0;
  Vector gradient;
  Trajectory trajectory;
};
CostAndGradient evaluate_cost_and_gradient(const IdentificationProblem& problem,
                                           const Vector& rho);

// Projected steepest descent,
//   rho_{j+1} = clamp(rho_j - gamma_j * g_j),
// where g_j is the projected gradient and gamma_j = initial_step * beta^i is
// the first step meeting J(rho_{j+1}) <= J(rho_j) - alpha gamma_j |g_j|^2.
// Candidates whose rollout fails count as J = +inf.
IdentificationResult identify(const IdentificationProblem& problem, const ParameterVector& rho0,
                              const DescentSettings& settings = {},
                              const IterationObserver& observer = {});

}  // namespace varid

#endif  // VARID_ESTIMATION_HPP_
