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

#ifndef VARID_PENDULUM_HPP_
#define VARID_PENDULUM_HPP_

#include "varid/model.hpp"

namespace varid {

// Point-mass pendulum, theta measured from the downward vertical.
//   L = 1/2 m l^2 v^2 + m g l cos(theta) - [spring] 1/2 kappa theta^2
// rho = [kappa] always has one entry; with the spring disabled the Lagrangian
// does not reference it. Damping enters the generalized force as -c v.
struct PendulumParams {
  double mass = 1.0;
  double length = 1.0;
  double gravity = 9.81;
  bool spring = false;
  double damping = 0.0;
};

class PendulumModel final : public Model {
 public:
  explicit PendulumModel(PendulumParams params = {});

  int config_dim() const override { return 1; }
  int param_dim() const override { return 1; }

  double kinetic_energy(const Vector& q, const Vector& v, const Vector& rho) const override;
  double potential_energy(const Vector& q, const Vector& rho) const override;
  LagrangianTerms lagrangian_terms(const Vector& q, const Vector& v,
                                   const Vector& rho) const override;
  ForceTerms force(const Vector& q, const Vector& v, const Vector& rho, double t) const override;

  const PendulumParams& params() const { return params_; }

 private:
  PendulumParams params_;
};

}  // namespace varid

#endif  // VARID_PENDULUM_HPP_
