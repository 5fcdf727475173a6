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

#ifndef VARID_MODEL_HPP_
#define VARID_MODEL_HPP_

#include <memory>
#include <vector>

#include "varid/types.hpp"

namespace varid {

// Lagrangian L(q, v, rho) and its derivatives.
//   dqv(i, j) = d^2 L / dq_i dv_j
struct LagrangianTerms {
  double value = 0.0;
  Vector dq;
  Vector dv;
  Matrix dqq;
  Matrix dqv;
  Matrix dvv;
  Matrix dq_drho;  // n_q x n_rho
  Matrix dv_drho;  // n_q x n_rho
};

// Generalized force F_c(q, v, rho, t) and its Jacobians.
struct ForceTerms {
  Vector value;
  Matrix dq;
  Matrix dv;
  Matrix drho;

  static ForceTerms zero(int nq, int nrho);
  ForceTerms& operator+=(const ForceTerms& other);
};

// Holonomic constraints h(q, rho) = 0.
struct ConstraintTerms {
  Vector value;                      // h, length n_h
  Matrix jacobian;                   // Dh, n_h x n_q
  std::vector<Matrix> hessians;      // DDh, one n_q x n_q matrix per row of h
  Matrix drho;                       // dh/drho, n_h x n_rho
  std::vector<Matrix> jacobian_drho; // d(Dh)/drho_j, one n_h x n_q per parameter

  static ConstraintTerms empty(int nq, int nrho);
};

// A mechanical model with analytic first and second derivatives.
//
// Evaluators are pure; implementations must be safe to call concurrently.
class Model {
 public:
  virtual ~Model() = default;

  virtual int config_dim() const = 0;
  virtual int constraint_dim() const { return 0; }
  virtual int param_dim() const = 0;

  virtual double kinetic_energy(const Vector& q, const Vector& v, const Vector& rho) const = 0;
  virtual double potential_energy(const Vector& q, const Vector& rho) const = 0;
  double lagrangian(const Vector& q, const Vector& v, const Vector& rho) const {
    return kinetic_energy(q, v, rho) - potential_energy(q, rho);
  }

  virtual LagrangianTerms lagrangian_terms(const Vector& q, const Vector& v,
                                           const Vector& rho) const = 0;

  // Defaults to no forcing.
  virtual ForceTerms force(const Vector& q, const Vector& v, const Vector& rho, double t) const;

  // Defaults to no constraints.
  virtual ConstraintTerms constraint(const Vector& q, const Vector& rho) const;
};

// An additional, possibly time- and state-dependent generalized force.
class ForceProvider {
 public:
  virtual ~ForceProvider() = default;
  virtual ForceTerms evaluate(const Vector& q, const Vector& v, const Vector& rho,
                              double t) const = 0;
};

// `base` plus an external force. Holds a reference to `base`; the caller keeps
// it alive.
class ForcedModel final : public Model {
 public:
  ForcedModel(const Model& base, std::shared_ptr<const ForceProvider> forcing);

  int config_dim() const override { return base_.config_dim(); }
  int constraint_dim() const override { return base_.constraint_dim(); }
  int param_dim() const override { return base_.param_dim(); }
  double kinetic_energy(const Vector& q, const Vector& v, const Vector& rho) const override {
    return base_.kinetic_energy(q, v, rho);
  }
  double potential_energy(const Vector& q, const Vector& rho) const override {
    return base_.potential_energy(q, rho);
  }
  LagrangianTerms lagrangian_terms(const Vector& q, const Vector& v,
                                   const Vector& rho) const override {
    return base_.lagrangian_terms(q, v, rho);
  }
  ForceTerms force(const Vector& q, const Vector& v, const Vector& rho, double t) const override;
  ConstraintTerms constraint(const Vector& q, const Vector& rho) const override {
    return base_.constraint(q, rho);
  }

  const Model& base() const { return base_; }

 private:
  const Model& base_;
  std::shared_ptr<const ForceProvider> forcing_;
};

// Throws DimensionError if q/v/rho do not match the model.
void check_dims(const Model& model, const Vector& q, const Vector& rho);

}  // namespace varid

#endif  // VARID_MODEL_HPP_
