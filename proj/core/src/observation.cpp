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

#include "varid/observation.hpp"

#include <string>

#include "varid/errors.hpp"

namespace varid {

LinkPositionObservation::LinkPositionObservation(const ChainModel& chain, int link)
    : chain_(chain), link_(link) {
  if (link < 0 || link >= chain.num_links()) {
    throw DimensionError("link observation: link " + std::to_string(link) + " out of range");
  }
}

Vector LinkPositionObservation::value(const Vector& q) const {
  return chain_.forward_kinematics(q, link_);
}

Matrix LinkPositionObservation::jacobian(const Vector& q) const {
  return chain_.forward_kinematics_jacobian(q, link_);
}

CoordinateObservation::CoordinateObservation(std::vector<int> indices, int nq)
    : indices_(std::move(indices)), nq_(nq) {
  for (int i : indices_) {
    if (i < 0 || i >= nq) {
      throw DimensionError("coordinate observation: index " + std::to_string(i) + " out of range");
    }
  }
}

Vector CoordinateObservation::value(const Vector& q) const {
  Vector w(dim());
  for (int r = 0; r < dim(); ++r) w[r] = q[indices_[static_cast<std::size_t>(r)]];
  return w;
}

Matrix CoordinateObservation::jacobian(const Vector&) const {
  Matrix J = Matrix::Zero(dim(), nq_);
  for (int r = 0; r < dim(); ++r) J(r, indices_[static_cast<std::size_t>(r)]) = 1.0;
  return J;
}

}  // namespace varid
