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

#include "varid/pendulum.hpp"

#include <cmath>

#include "varid/errors.hpp"

namespace varid {

PendulumModel::PendulumModel(PendulumParams params) : params_(params) {
  if (!(params_.mass > 0.0)) throw ConfigError("pendulum: mass must be positive");
  if (!(params_.length > 0.0)) throw ConfigError("pendulum: length must be positive");
  if (params_.damping < 0.0) throw ConfigError("pendulum: damping must be non-negative");
}

double PendulumModel::kinetic_energy(const Vector&, const Vector& v, const Vector&) const {
  const double ml2 = params_.mass * params_.length * params_.length;
  return 0.5 * ml2 * v[0] * v[0];
}

double PendulumModel::potential_energy(const Vector& q, const Vector& rho) const {
  double V = -params_.mass * params_.gravity * params_.length * std::cos(q[0]);
  if (params_.spring) V += 0.5 * rho[0] * q[0] * q[0];
  return V;
}

LagrangianTerms PendulumModel::lagrangian_terms(const Vector& q, const Vector& v,
                                                const Vector& rho) const {
  check_dims(*this, q, rho);
  const double mgl = params_.mass * params_.gravity * params_.length;
  const double ml2 = params_.mass * params_.length * params_.length;
  const double c = std::cos(q[0]);
  const double s = std::sin(q[0]);

  LagrangianTerms L;
  L.value = kinetic_energy(q, v, rho) - potential_energy(q, rho);
  L.dq = Vector::Constant(1, -mgl * s);
  L.dv = Vector::Constant(1, ml2 * v[0]);
  L.dqq = Matrix::Constant(1, 1, -mgl * c);
  L.dqv = Matrix::Zero(1, 1);
  L.dvv = Matrix::Constant(1, 1, ml2);
  L.dq_drho = Matrix::Zero(1, 1);
  L.dv_drho = Matrix::Zero(1, 1);
  if (params_.spring) {
    L.dq[0] -= rho[0] * q[0];
    L.dqq(0, 0) -= rho[0];
    L.dq_drho(0, 0) = -q[0];
  }
  return L;
}

ForceTerms PendulumModel::force(const Vector&, const Vector& v, const Vector&, double) const {
  ForceTerms f = ForceTerms::zero(1, 1);
  f.value[0] = -params_.damping * v[0];
  f.dv(0, 0) = -params_.damping;
  return f;
}

}  // namespace varid
