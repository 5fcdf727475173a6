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

// Midpoint discretization of a continuous model: the discrete Lagrangian
//   Ld(q0, q1) = dt * L((q0 + q1) / 2, (q1 - q0) / dt)
// the discrete forces Fd- = dt * Fc(midpoint), Fd+ = 0, and all slot
// derivatives used by the one-step map and its linearization.

#ifndef VARID_DISCRETIZATION_HPP_
#define VARID_DISCRETIZATION_HPP_

#include <span>

#include "varid/model.hpp"

namespace varid {

// Slot derivatives of Ld(q0, q1, rho) and of Fd-/Fd+. DiJ means D_i D_j,
// e.g. D12Ld(a, b) = d(D1Ld)_a / d(q1)_b. D21Ld is D12Ld transposed.
struct DiscreteSlotDerivatives {
  Vector D1Ld;
  Vector D2Ld;
  Matrix D11Ld;
  Matrix D12Ld;
  Matrix D22Ld;
  Matrix D3D1Ld;  // n_q x n_rho
  Matrix D3D2Ld;

  Vector Fdm;     // Fd-
  Matrix D1Fdm;
  Matrix D2Fdm;
  Matrix D3Fdm;
  Vector Fdp;     // Fd+ (identically zero for the midpoint rule)
  Matrix D1Fdp;
  Matrix D2Fdp;
  Matrix D3Fdp;
};

// Midpoint sample of a step: q̄, v̄ and the midpoint time.
struct MidpointSample {
  Vector q;
  Vector v;
  double t;
};

MidpointSample midpoint(const Vector& q0, const Vector& q1, double t0, double t1);

double discrete_lagrangian(const Model& model, const Vector& q0, const Vector& q1,
                           const Vector& rho, double dt);

// Discrete forces only; Fdm = dt * Fc(q̄, v̄, rho, (t0 + t1) / 2).
Vector discrete_force_minus(const Model& model, const Vector& q0, const Vector& q1,
                            const Vector& rho, double t0, double t1);

// The midpoint time is the average of t0 and t1; dt = t1 - t0.
DiscreteSlotDerivatives slot_derivatives(const Model& model, const Vector& q0, const Vector& q1,
                                         const Vector& rho, double t0, double t1);

// Same blocks, with the second slot given as the increment d = q1 - q0. The
// midpoint velocity d / dt then carries no cancellation error from q0.
DiscreteSlotDerivatives slot_derivatives_increment(const Model& model, const Vector& q0,
                                                   const Vector& d, const Vector& rho, double t0,
                                                   double t1);

// Contribution of V = sum_i 1/2 kappa (q_i - rest_i)^2 over `indices` to
// D3D1 of the discrete potential: (dt/4)(q1_i + q0_i - 2 rest_i) on the index
// set and zero elsewhere. `rest` may be empty (all zero). D3D2 is identical,
// and the D3D1Ld column for this kappa is the negative of this vector.
Vector spring_param_derivatives(std::span<const int> indices, const Vector& q0, const Vector& q1,
                                double dt, const Vector& rest = Vector());

}  // namespace varid

#endif  // VARID_DISCRETIZATION_HPP_
