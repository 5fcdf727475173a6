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

// Finite-difference verification of every analytic derivative the integrator
// and the adjoint rely on. Shared by the `check` command and the test suites.

#ifndef VARID_DIAGNOSTICS_HPP_
#define VARID_DIAGNOSTICS_HPP_

#include <string>
#include <vector>

#include "varid/estimation.hpp"

namespace varid {

// Normwise relative error with an absolute floor:
//   max(0, |a - e|_max - floor) / (|e|_max + floor)
double relative_error(const Matrix& actual, const Matrix& expected, double floor = 1e-12);

struct CheckEntry {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  int samples = 0;

  bool passed() const { return max_error < tolerance; }
};

class CheckReport {
 public:
  // Keeps the worst error per name.
  void record(const std::string& name, double error, double tolerance);
  void merge(const CheckReport& other);

  bool passed() const;
  const std::vector<CheckEntry>& entries() const { return entries_; }
  const CheckEntry* find(const std::string& name) const;
  std::vector<std::string> failures() const;

 private:
  std::vector<CheckEntry> entries_;
};

struct CheckOptions {
  double fd_step = 1e-6;           // scaled by (1 + |x|)
  double tolerance = 1e-6;         // model, slot and A/B blocks
  double multiplier_tolerance = 1e-5;
  double gradient_tolerance = 1e-5;
  // Tight solver for re-solves inside the finite-difference probes.
  SolverSettings probe_solver{1e-13, 100, Predictor::kHold, 1e-12};
  // Solver for the end-to-end gradient check. Its rollouts span many steps,
  // where an absolute 1e-13 residual is below the roundoff of larger models.
  SolverSettings gradient_solver{1e-12, 100, Predictor::kLinearExtrapolation, 1e-12};
};

// Continuous evaluators at (q, v): Lq, Lv, Lqq, Lqv, Lvv, Lq_rho, Lv_rho,
// Fq, Fv, F_rho, and for constrained models Dh, DDh, Dh_rho.
CheckReport check_model_derivatives(const Model& model, const Vector& q, const Vector& v,
                                    const Vector& rho, double t, const CheckOptions& options = {});

// Every block of slot_derivatives against differences of discrete_lagrangian,
// discrete_force_minus and the first slot derivatives.
CheckReport check_slot_derivatives(const Model& model, const Vector& q0, const Vector& q1,
                                   const Vector& rho, double t0, double t1,
                                   const CheckOptions& options = {});

// A and B blocks and the multiplier sensitivities against central differences
// through the converged Newton solve.
CheckReport check_step_linearization(const Model& model, const DiscreteState& state,
                                     const Vector& rho, double t_k, double dt,
                                     const CheckOptions& options = {});

// Adjoint gradient against central differences of J(simulate(rho)).
CheckReport check_adjoint_gradient(const IdentificationProblem& problem, const Vector& rho,
                                   const CheckOptions& options = {});

// Runs the model, slot and step checks at the given step indices of `traj`.
CheckReport check_along_trajectory(const Model& model, const Trajectory& traj, const Vector& rho,
                                   const std::vector<int>& step_indices,
                                   const CheckOptions& options = {});

}  // namespace varid

#endif  // VARID_DIAGNOSTICS_HPP_
