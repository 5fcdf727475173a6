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

#include "varid/discretization.hpp"

#include <string>

#include "varid/errors.hpp"

namespace varid {

MidpointSample midpoint(const Vector& q0, const Vector& q1, double t0, double t1) {
  const double dt = t1 - t0;
  return {0.5 * (q0 + q1), (q1 - q0) / dt, 0.5 * (t0 + t1)};
}

double discrete_lagrangian(const Model& model, const Vector& q0, const Vector& q1,
                           const Vector& rho, double dt) {
  if (!(dt > 0.0)) throw ConfigError("discrete_lagrangian: dt must be positive");
  const Vector qm = 0.5 * (q0 + q1);
  const Vector vm = (q1 - q0) / dt;
  return dt * model.lagrangian(qm, vm, rho);
}

Vector discrete_force_minus(const Model& model, const Vector& q0, const Vector& q1,
                            const Vector& rho, double t0, double t1) {
  const MidpointSample m = midpoint(q0, q1, t0, t1);
  return (t1 - t0) * model.force(m.q, m.v, rho, m.t).value;
}

// With q̄ = (q0 + q1)/2 and v̄ = (q1 - q0)/dt:
//   dq̄/dq0 = dq̄/dq1 = I/2,  dv̄/dq0 = -I/dt,  dv̄/dq1 = I/dt.
DiscreteSlotDerivatives slot_derivatives(const Model& model, const Vector& q0, const Vector& q1,
                                         const Vector& rho, double t0, double t1) {
  if (q1.size() != q0.size()) throw DimensionError("slot_derivatives: q0/q1 size mismatch");
  return slot_derivatives_increment(model, q0, q1 - q0, rho, t0, t1);
}

DiscreteSlotDerivatives slot_derivatives_increment(const Model& model, const Vector& q0,
                                                   const Vector& dq, const Vector& rho, double t0,
                                                   double t1) {
  const double dt = t1 - t0;
  if (!(dt > 0.0)) throw ConfigError("slot_derivatives: t1 must exceed t0");
  check_dims(model, q0, rho);
  if (dq.size() != q0.size()) throw DimensionError("slot_derivatives: increment size mismatch");
  const int nq = model.config_dim();
  const int nrho = model.param_dim();

  const MidpointSample m{q0 + 0.5 * dq, dq / dt, 0.5 * (t0 + t1)};
  const LagrangianTerms L = model.lagrangian_terms(m.q, m.v, rho);
  const ForceTerms F = model.force(m.q, m.v, rho, m.t);

  DiscreteSlotDerivatives d;
  const double h = 0.5 * dt;
  d.D1Ld = h * L.dq - L.dv;
  d.D2Ld = h * L.dq + L.dv;

  const Matrix qq = (0.25 * dt) * L.dqq;
  const Matrix vv = L.dvv / dt;
  const Matrix sym = 0.5 * (L.dqv + L.dqv.transpose());
  const Matrix skew = 0.5 * (L.dqv - L.dqv.transpose());
  d.D11Ld = qq - sym + vv;
  d.D12Ld = qq + skew - vv;
  d.D22Ld = qq + sym + vv;

  d.D3D1Ld = h * L.dq_drho - L.dv_drho;
  d.D3D2Ld = h * L.dq_drho + L.dv_drho;

  d.Fdm = dt * F.value;
  d.D1Fdm = h * F.dq - F.dv;
  d.D2Fdm = h * F.dq + F.dv;
  d.D3Fdm = dt * F.drho;

  d.Fdp = Vector::Zero(nq);
  d.D1Fdp = Matrix::Zero(nq, nq);
  d.D2Fdp = Matrix::Zero(nq, nq);
  d.D3Fdp = Matrix::Zero(nq, nrho);
  return d;
}

Vector spring_param_derivatives(std::span<const int> indices, const Vector& q0, const Vector& q1,
                                double dt, const Vector& rest) {
  const Eigen::Index nq = q0.size();
  if (q1.size() != nq) throw DimensionError("spring_param_derivatives: q0/q1 size mismatch");
  if (rest.size() != 0 && rest.size() != nq) {
    throw DimensionError("spring_param_derivatives: rest angle size mismatch");
  }
  Vector out = Vector::Zero(nq);
  for (int i : indices) {
    if (i < 0 || i >= nq) {
      throw DimensionError("spring_param_derivatives: index " + std::to_string(i) +
                           " out of range");
    }
    const double offset = rest.size() == 0 ? 0.0 : 2.0 * rest[i];
    out[i] = 0.25 * dt * (q1[i] + q0[i] - offset);
  }
  return out;
}

}  // namespace varid
