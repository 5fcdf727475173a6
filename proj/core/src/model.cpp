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

#include "varid/model.hpp"

#include <string>

#include "varid/errors.hpp"

namespace varid {

const char* to_string(SolverFailure failure) {
  switch (failure) {
    case SolverFailure::kNonConvergence: return "non_convergence";
    case SolverFailure::kSingularMass: return "singular_mass";
    case SolverFailure::kConstraintRank: return "constraint_rank";
    case SolverFailure::kNonFinite: return "non_finite";
  }
  return "unknown";
}

ForceTerms ForceTerms::zero(int nq, int nrho) {
  return {Vector::Zero(nq), Matrix::Zero(nq, nq), Matrix::Zero(nq, nq), Matrix::Zero(nq, nrho)};
}

ForceTerms& ForceTerms::operator+=(const ForceTerms& other) {
  value += other.value;
  dq += other.dq;
  dv += other.dv;
  drho += other.drho;
  return *this;
}

ConstraintTerms ConstraintTerms::empty(int nq, int nrho) {
  ConstraintTerms c;
  c.value = Vector::Zero(0);
  c.jacobian = Matrix::Zero(0, nq);
  c.drho = Matrix::Zero(0, nrho);
  c.jacobian_drho.assign(static_cast<std::size_t>(nrho), Matrix::Zero(0, nq));
  return c;
}

ForceTerms Model::force(const Vector&, const Vector&, const Vector&, double) const {
  return ForceTerms::zero(config_dim(), param_dim());
}

ConstraintTerms Model::constraint(const Vector&, const Vector&) const {
  return ConstraintTerms::empty(config_dim(), param_dim());
}

ForcedModel::ForcedModel(const Model& base, std::shared_ptr<const ForceProvider> forcing)
    : base_(base), forcing_(std::move(forcing)) {}

ForceTerms ForcedModel::force(const Vector& q, const Vector& v, const Vector& rho,
                              double t) const {
  ForceTerms f = base_.force(q, v, rho, t);
  if (forcing_) f += forcing_->evaluate(q, v, rho, t);
  return f;
}

void check_dims(const Model& model, const Vector& q, const Vector& rho) {
  if (q.size() != model.config_dim()) {
    throw DimensionError("configuration has " + std::to_string(q.size()) +
                         " entries, model expects " + std::to_string(model.config_dim()));
  }
  if (rho.size() != model.param_dim()) {
    throw DimensionError("parameter vector has " + std::to_string(rho.size()) +
                         " entries, model expects " + std::to_string(model.param_dim()));
  }
}

}  // namespace varid
