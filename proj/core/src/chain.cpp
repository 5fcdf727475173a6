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

#include "varid/chain.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "varid/errors.hpp"

namespace varid {
namespace {

// Reverse cumulative sum: (T^T x)_i = sum_{j >= i} x_j, where T is the
// lower-triangular matrix of ones mapping relative to absolute angles.
Vector tail_sums(const Vector& x) {
  Vector out = x;
  for (Eigen::Index i = out.size() - 2; i >= 0; --i) out[i] += out[i + 1];
  return out;
}

// T^T X T.
Matrix congruence(const Matrix& x) {
  Matrix y = x;
  const Eigen::Index n = y.rows();
  for (Eigen::Index j = n - 2; j >= 0; --j) y.col(j) += y.col(j + 1);
  for (Eigen::Index i = n - 2; i >= 0; --i) y.row(i) += y.row(i + 1);
  return y;
}

// Cumulative sum: phi = T q.
Vector absolute_angles(const Vector& q) {
  Vector phi = q;
  for (Eigen::Index i = 1; i < phi.size(); ++i) phi[i] += phi[i - 1];
  return phi;
}

}  // namespace

StiffnessGrouping::StiffnessGrouping(std::vector<std::vector<int>> groups, int n_joints)
    : groups_(std::move(groups)), group_of_(static_cast<std::size_t>(n_joints), -1) {
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    if (groups_[g].empty()) {
      throw ConfigError("stiffness grouping: group " + std::to_string(g) + " is empty");
    }
    for (int j : groups_[g]) {
      if (j < 0 || j >= n_joints) {
        throw ConfigError("stiffness grouping: joint " + std::to_string(j) + " out of range");
      }
      if (group_of_[static_cast<std::size_t>(j)] != -1) {
        throw ConfigError("stiffness grouping: joint " + std::to_string(j) +
                          " assigned to more than one group");
      }
      group_of_[static_cast<std::size_t>(j)] = static_cast<int>(g);
    }
  }
  for (int j = 0; j < n_joints; ++j) {
    if (group_of_[static_cast<std::size_t>(j)] == -1) {
      throw ConfigError("stiffness grouping: joint " + std::to_string(j) + " has no group");
    }
  }
}

StiffnessGrouping StiffnessGrouping::from_map(const std::vector<int>& group_of) {
  int n_groups = 0;
  for (int g : group_of) {
    if (g < 0) throw ConfigError("stiffness grouping: negative parameter index");
    n_groups = std::max(n_groups, g + 1);
  }
  std::vector<std::vector<int>> groups(static_cast<std::size_t>(n_groups));
  for (std::size_t j = 0; j < group_of.size(); ++j) {
    groups[static_cast<std::size_t>(group_of[j])].push_back(static_cast<int>(j));
  }
  return StiffnessGrouping(std::move(groups), static_cast<int>(group_of.size()));
}

StiffnessGrouping StiffnessGrouping::alternating(int n_joints) {
  std::vector<int> map(static_cast<std::size_t>(n_joints));
  for (int j = 0; j < n_joints; ++j) map[static_cast<std::size_t>(j)] = j % 2;
  return from_map(map);
}

StiffnessGrouping StiffnessGrouping::uniform(int n_joints) {
  return from_map(std::vector<int>(static_cast<std::size_t>(n_joints), 0));
}

namespace {

StiffnessGrouping make_grouping(const ChainParams& p) {
  const int n = static_cast<int>(p.link_lengths.size());
  if (p.stiffness_map.empty()) return StiffnessGrouping::uniform(n);
  if (static_cast<int>(p.stiffness_map.size()) != n) {
    throw ConfigError("chain: stiffness_map must have one entry per joint");
  }
  return StiffnessGrouping::from_map(p.stiffness_map);
}

int validated_links(const ChainParams& p) {
  const std::size_t n = p.link_lengths.size();
  if (n == 0) throw ConfigError("chain: at least one link required");
  if (p.link_masses.size() != n) throw ConfigError("chain: link_masses must match link_lengths");
  if (!p.rest_angles.empty() && p.rest_angles.size() != n) {
    throw ConfigError("chain: rest_angles must match link_lengths");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(p.link_lengths[i] > 0.0)) throw ConfigError("chain: link lengths must be positive");
    if (!(p.link_masses[i] > 0.0)) throw ConfigError("chain: link masses must be positive");
  }
  if (p.damping < 0.0) throw ConfigError("chain: damping must be non-negative");
  return static_cast<int>(n);
}

}  // namespace

ChainModel::ChainModel(ChainParams params)
    : params_(std::move(params)),
      n_links_(validated_links(params_)),
      grouping_(make_grouping(params_)) {
  lengths_ = Eigen::Map<const Vector>(params_.link_lengths.data(), n_links_);
  rest_ = params_.rest_angles.empty()
              ? Vector::Zero(n_links_)
              : Vector(Eigen::Map<const Vector>(params_.rest_angles.data(), n_links_));
  const Vector masses = Eigen::Map<const Vector>(params_.link_masses.data(), n_links_);
  outboard_mass_ = tail_sums(masses);
}

double ChainModel::kinetic_energy(const Vector& q, const Vector& v, const Vector&) const {
  const Vector phi = absolute_angles(q);
  const Vector omega = absolute_angles(v);
  double ke = 0.0;
  for (int a = 0; a < n_links_; ++a) {
    for (int b = 0; b < n_links_; ++b) {
      const double mu = outboard_mass_[std::max(a, b)];
      ke += mu * lengths_[a] * lengths_[b] * std::cos(phi[a] - phi[b]) * omega[a] * omega[b];
    }
  }
  return 0.5 * ke;
}

double ChainModel::potential_energy(const Vector& q, const Vector& rho) const {
  const Vector phi = absolute_angles(q);
  double V = 0.0;
  for (int j = 0; j < n_links_; ++j) {
    V += params_.gravity * outboard_mass_[j] * lengths_[j] * std::sin(phi[j]);
    const double d = q[j] - rest_[j];
    V += 0.5 * rho[grouping_.group_of(j)] * d * d;
  }
  return V;
}

// Kinetic energy in absolute angles: KE = 1/2 w^T G(phi) w with
//   G_ab = mu_max(a,b) l_a l_b cos(phi_a - phi_b)
// and S_ab the matching sine form. Then
//   dKE/dphi_c         = -w_c (S w)_c
//   d2KE/dphi_c dw_d   = -delta_cd (S w)_c - w_c S_cd
//   d2KE/dphi_c dphi_d = -delta_cd w_c (G w)_c + w_c G_cd w_d
LagrangianTerms ChainModel::lagrangian_terms(const Vector& q, const Vector& v,
                                             const Vector& rho) const {
  check_dims(*this, q, rho);
  const int n = n_links_;
  const Vector phi = absolute_angles(q);
  const Vector omega = absolute_angles(v);
  const Vector cphi = phi.array().cos();
  const Vector sphi = phi.array().sin();

  Matrix G(n, n);
  Matrix S(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const double scale = outboard_mass_[std::max(a, b)] * lengths_[a] * lengths_[b];
      G(a, b) = scale * (cphi[a] * cphi[b] + sphi[a] * sphi[b]);
      S(a, b) = scale * (sphi[a] * cphi[b] - cphi[a] * sphi[b]);
    }
  }
  const Vector Gw = G * omega;
  const Vector Sw = S * omega;

  Vector L_phi = -omega.cwiseProduct(Sw);
  Matrix L_phi_w = -(omega.asDiagonal() * S);
  L_phi_w.diagonal() -= Sw;
  Matrix L_phi_phi = omega.asDiagonal() * G * omega.asDiagonal();
  L_phi_phi.diagonal() -= omega.cwiseProduct(Gw);

  for (int j = 0; j < n; ++j) {
    const double gml = params_.gravity * outboard_mass_[j] * lengths_[j];
    L_phi[j] -= gml * cphi[j];
    L_phi_phi(j, j) += gml * sphi[j];
  }

  LagrangianTerms L;
  L.value = 0.5 * omega.dot(Gw);
  L.dq = tail_sums(L_phi);
  L.dv = tail_sums(Gw);
  L.dqq = congruence(L_phi_phi);
  L.dqv = congruence(L_phi_w);
  L.dvv = congruence(G);
  L.dq_drho = Matrix::Zero(n, param_dim());
  L.dv_drho = Matrix::Zero(n, param_dim());

  for (int j = 0; j < n; ++j) {
    const int g = grouping_.group_of(j);
    const double d = q[j] - rest_[j];
    L.value -= params_.gravity * outboard_mass_[j] * lengths_[j] * sphi[j] + 0.5 * rho[g] * d * d;
    L.dq[j] -= rho[g] * d;
    L.dqq(j, j) -= rho[g];
    L.dq_drho(j, g) = -d;
  }
  return L;
}

ForceTerms ChainModel::force(const Vector&, const Vector& v, const Vector&, double) const {
  ForceTerms f = ForceTerms::zero(n_links_, param_dim());
  if (params_.damping != 0.0) {
    f.value = -params_.damping * v;
    f.dv.diagonal().setConstant(-params_.damping);
  }
  return f;
}

Point2 ChainModel::forward_kinematics(const Vector& q, int link) const {
  if (link < 0 || link >= n_links_) {
    throw DimensionError("forward_kinematics: link " + std::to_string(link) + " out of range");
  }
  if (q.size() != n_links_) throw DimensionError("forward_kinematics: configuration size");
  Point2 p = Point2::Zero();
  double phi = 0.0;
  for (int j = 0; j <= link; ++j) {
    phi += q[j];
    p += lengths_[j] * Point2(std::cos(phi), std::sin(phi));
  }
  return p;
}

Matrix ChainModel::forward_kinematics_jacobian(const Vector& q, int link) const {
  if (link < 0 || link >= n_links_) {
    throw DimensionError("forward_kinematics: link " + std::to_string(link) + " out of range");
  }
  const Vector phi = absolute_angles(q);
  Matrix J = Matrix::Zero(2, n_links_);
  // Column i accumulates the links i..link.
  Point2 acc = Point2::Zero();
  for (int j = link; j >= 0; --j) {
    acc += lengths_[j] * Point2(-std::sin(phi[j]), std::cos(phi[j]));
    J.col(j) = acc;
  }
  return J;
}

std::array<Matrix, 2> ChainModel::forward_kinematics_hessians(const Vector& q, int link) const {
  if (link < 0 || link >= n_links_) {
    throw DimensionError("forward_kinematics: link " + std::to_string(link) + " out of range");
  }
  const Vector phi = absolute_angles(q);
  std::array<Matrix, 2> H{Matrix::Zero(n_links_, n_links_), Matrix::Zero(n_links_, n_links_)};
  // Entry (i, k) sums links max(i, k)..link.
  Point2 acc = Point2::Zero();
  for (int j = link; j >= 0; --j) {
    acc += lengths_[j] * Point2(-std::cos(phi[j]), -std::sin(phi[j]));
    for (int i = 0; i <= j; ++i) {
      H[0](i, j) = H[0](j, i) = acc.x();
      H[1](i, j) = H[1](j, i) = acc.y();
    }
  }
  return H;
}

ClosedLoopModel::ClosedLoopModel(ChainParams params, Point2 anchor)
    : ChainModel(std::move(params)), anchor_(std::move(anchor)) {
  reference_ = project_to_constraint(*this, rest_angles(), Vector::Zero(param_dim()));
}

ClosedLoopModel ClosedLoopModel::regular_polygon(int n_links, double radius, double total_mass,
                                                 std::vector<int> stiffness_map, double gravity,
                                                 double damping) {
  if (n_links < 3) throw ConfigError("closed loop: a polygon needs at least 3 links");
  if (!(radius > 0.0) || !(total_mass > 0.0)) {
    throw ConfigError("closed loop: radius and mass must be positive");
  }
  const double side = 2.0 * radius * std::sin(std::numbers::pi / n_links);
  ChainParams p;
  p.link_lengths.assign(static_cast<std::size_t>(n_links), side);
  p.link_masses.assign(static_cast<std::size_t>(n_links), total_mass / n_links);
  p.rest_angles.assign(static_cast<std::size_t>(n_links), 2.0 * std::numbers::pi / n_links);
  p.rest_angles[0] = 0.0;
  p.gravity = gravity;
  p.damping = damping;
  p.stiffness_map = std::move(stiffness_map);
  return ClosedLoopModel(std::move(p), Point2::Zero());
}

Point2 ClosedLoopModel::loop_constraint(const Vector& q) const {
  return forward_kinematics(q, num_links() - 1) - anchor_;
}

ConstraintTerms ClosedLoopModel::constraint(const Vector& q, const Vector& rho) const {
  check_dims(*this, q, rho);
  const int last = num_links() - 1;
  ConstraintTerms c;
  c.value = loop_constraint(q);
  c.jacobian = forward_kinematics_jacobian(q, last);
  const auto H = forward_kinematics_hessians(q, last);
  c.hessians = {H[0], H[1]};
  c.drho = Matrix::Zero(2, param_dim());
  c.jacobian_drho.assign(static_cast<std::size_t>(param_dim()), Matrix::Zero(2, num_links()));
  return c;
}

Vector project_to_constraint(const Model& model, const Vector& q_guess, const Vector& rho,
                             double tol, int max_iters) {
  check_dims(model, q_guess, rho);
  Vector q = q_guess;
  if (model.constraint_dim() == 0) return q;
  for (int iter = 0; iter <= max_iters; ++iter) {
    const ConstraintTerms c = model.constraint(q, rho);
    if (!c.value.allFinite()) break;
    if (c.value.lpNorm<Eigen::Infinity>() < tol) return q;
    if (iter == max_iters) break;
    // Minimal-norm least-squares Newton update.
    q -= c.jacobian.completeOrthogonalDecomposition().solve(c.value);
  }
  throw InfeasibleStartError("could not project the configuration onto the constraints within " +
                             std::to_string(max_iters) + " iterations");
}

Vector project_to_constraint(const ClosedLoopModel& model, const Vector& q_guess,
                             const Vector& rho, double tol, int max_iters) {
  const double reach = Eigen::Map<const Vector>(model.params().link_lengths.data(),
                                                model.num_links()).sum();
  if (model.anchor().norm() > reach) {
    throw InfeasibleStartError("anchor lies beyond the total chain length");
  }
  return project_to_constraint(static_cast<const Model&>(model), q_guess, rho, tol, max_iters);
}

}  // namespace varid
