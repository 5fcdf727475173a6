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

// Planar serial chains of point masses joined by torsional springs.
//
// Joint angles are relative: the absolute angle of link i is
// phi_i = q_0 + ... + q_i, measured from the +x axis, with the chain base at
// the origin. Each link carries its mass at its far end. Gravity acts along -y.

#ifndef VARID_CHAIN_HPP_
#define VARID_CHAIN_HPP_

#include <array>
#include <vector>

#include "varid/model.hpp"

namespace varid {

using Point2 = Eigen::Vector2d;

// Assignment of every joint to exactly one stiffness parameter. Joints in the
// same group share one spring constant kappa_g = rho[g].
class StiffnessGrouping {
 public:
  // groups[g] lists the joints sharing rho[g]. Must partition {0..n_joints-1}.
  StiffnessGrouping(std::vector<std::vector<int>> groups, int n_joints);

  // Joint j -> parameter group_of[j].
  static StiffnessGrouping from_map(const std::vector<int>& group_of);
  // Even joints -> group 0, odd joints -> group 1.
  static StiffnessGrouping alternating(int n_joints);
  static StiffnessGrouping uniform(int n_joints);

  int num_groups() const { return static_cast<int>(groups_.size()); }
  int num_joints() const { return static_cast<int>(group_of_.size()); }
  int group_of(int joint) const { return group_of_[static_cast<std::size_t>(joint)]; }
  const std::vector<int>& joints(int group) const { return groups_[static_cast<std::size_t>(group)]; }
  const std::vector<int>& group_map() const { return group_of_; }

 private:
  std::vector<std::vector<int>> groups_;
  std::vector<int> group_of_;
};

struct ChainParams {
  std::vector<double> link_lengths;
  std::vector<double> link_masses;
  double gravity = 9.81;
  std::vector<double> rest_angles;  // empty -> all zero
  std::vector<int> stiffness_map;   // joint -> rho index; empty -> one shared group
  double damping = 0.0;             // -c v per joint, c fixed and known
};

class ChainModel : public Model {
 public:
  explicit ChainModel(ChainParams params);

  int config_dim() const override { return n_links_; }
  int param_dim() const override { return grouping_.num_groups(); }

  double kinetic_energy(const Vector& q, const Vector& v, const Vector& rho) const override;
  double potential_energy(const Vector& q, const Vector& rho) const override;
  LagrangianTerms lagrangian_terms(const Vector& q, const Vector& v,
                                   const Vector& rho) const override;
  ForceTerms force(const Vector& q, const Vector& v, const Vector& rho, double t) const override;

  int num_links() const { return n_links_; }
  const ChainParams& params() const { return params_; }
  const StiffnessGrouping& grouping() const { return grouping_; }
  const Vector& rest_angles() const { return rest_; }

  // Position of the far end of `link`.
  Point2 forward_kinematics(const Vector& q, int link) const;
  // d fk / dq, 2 x n_q (columns beyond `link` are zero).
  Matrix forward_kinematics_jacobian(const Vector& q, int link) const;
  // d^2 fk_c / dq dq for c = x, y.
  std::array<Matrix, 2> forward_kinematics_hessians(const Vector& q, int link) const;

 private:
  ChainParams params_;
  int n_links_;
  StiffnessGrouping grouping_;
  Vector lengths_;
  Vector rest_;
  Vector outboard_mass_;  // mu_j = sum_{i >= j} m_i
};

// A chain whose last link end is pinned to `anchor` (two position constraints).
class ClosedLoopModel final : public ChainModel {
 public:
  // Throws InfeasibleStartError if the rest shape cannot be projected onto the
  // constraint.
  ClosedLoopModel(ChainParams params, Point2 anchor);

  // Regular n-gon of circumradius `radius` and uniformly distributed mass.
  // The first link points along +x and every joint turns by 2 pi / n at rest,
  // so the unstressed shape closes at the origin, which is the anchor.
  static ClosedLoopModel regular_polygon(int n_links, double radius, double total_mass,
                                         std::vector<int> stiffness_map, double gravity = 0.0,
                                         double damping = 0.0);

  int constraint_dim() const override { return 2; }
  ConstraintTerms constraint(const Vector& q, const Vector& rho) const override;

  const Point2& anchor() const { return anchor_; }
  // h = fk(last link) - anchor.
  Point2 loop_constraint(const Vector& q) const;

  // A feasible configuration close to the rest angles.
  const Vector& reference_configuration() const { return reference_; }

 private:
  Point2 anchor_;
  Vector reference_;
};

// Minimal-norm Newton projection onto h(q, rho) = 0.
// Throws InfeasibleStartError if |h|_inf < tol is not reached in max_iters or
// when the anchor is geometrically out of reach.
Vector project_to_constraint(const Model& model, const Vector& q_guess, const Vector& rho,
                             double tol = 1e-10, int max_iters = 50);
// Same, with an up-front reachability check of the anchor.
Vector project_to_constraint(const ClosedLoopModel& model, const Vector& q_guess,
                             const Vector& rho, double tol = 1e-10, int max_iters = 50);

}  // namespace varid

#endif  // VARID_CHAIN_HPP_
