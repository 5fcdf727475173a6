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

// Value types shared by the integrator, linearization and estimation code.

#ifndef VARID_TYPES_HPP_
#define VARID_TYPES_HPP_

#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace varid {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

// Uniform time grid. Times are always derived as t0 + k*dt, never accumulated.
class TimeGrid {
 public:
  TimeGrid(double t0, double dt, int steps);

  double t0() const { return t0_; }
  double dt() const { return dt_; }
  // Number of steps k_f; the grid holds steps + 1 samples.
  int steps() const { return steps_; }
  int samples() const { return steps_ + 1; }
  double time(int k) const { return t0_ + static_cast<double>(k) * dt_; }
  double final_time() const { return time(steps_); }

  bool operator==(const TimeGrid&) const = default;

 private:
  double t0_;
  double dt_;
  int steps_;
};

// x_k = [q_k, p_k] together with the multipliers lambda_k of the step that
// produced it (empty for unconstrained models and for the initial state).
struct DiscreteState {
  Vector q;
  Vector p;
  Vector lambda;
};

// Parameter vector rho with entrywise lower bounds (the feasible box).
class ParameterVector {
 public:
  // Default lower bound used for stiffness-like parameters that must stay > 0.
  static constexpr double kPositiveLowerBound = 1e-6;

  ParameterVector() = default;
  // Unbounded below.
  explicit ParameterVector(Vector values);
  ParameterVector(Vector values, Vector lower_bounds);

  static ParameterVector positive(Vector values);

  const Vector& values() const { return values_; }
  const Vector& lower_bounds() const { return lower_bounds_; }
  int size() const { return static_cast<int>(values_.size()); }
  double operator[](int i) const { return values_[i]; }

  // Projection onto the box; returns a copy with values clamped to the bounds.
  ParameterVector clamped() const;
  ParameterVector with_values(Vector values) const;

 private:
  Vector values_;
  Vector lower_bounds_;
};

struct Trajectory {
  TimeGrid grid{0.0, 1.0, 1};
  std::vector<DiscreteState> states;
  // d x_0 / d rho, 2n_q x n_rho. Non-zero only when the initial momentum
  // Lv(q0, v0, rho) depends on the parameters.
  Matrix initial_sensitivity;

  int size() const { return static_cast<int>(states.size()); }
  const DiscreteState& operator[](int k) const { return states[static_cast<std::size_t>(k)]; }
};

// A_k (2n_q x 2n_q) and B_k (2n_q x n_rho) for step k -> k+1.
struct LinearizationPair {
  Matrix A;
  Matrix B;
  int step_index = 0;
};

// Flat state [q, p].
Vector state_pack(const Vector& q, const Vector& p);
// Inverse of state_pack; `x` must have even length.
std::pair<Vector, Vector> state_unpack(const Vector& x);

}  // namespace varid

#endif  // VARID_TYPES_HPP_
