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

#ifndef VARID_OBSERVATION_HPP_
#define VARID_OBSERVATION_HPP_

#include <memory>
#include <vector>

#include "varid/chain.hpp"

namespace varid {

// Measured quantity w = g(q) compared against data in the identification cost.
class Observation {
 public:
  virtual ~Observation() = default;
  virtual int dim() const = 0;
  virtual Vector value(const Vector& q) const = 0;
  // dim x n_q
  virtual Matrix jacobian(const Vector& q) const = 0;
};

// Cartesian position of the end of one chain link (the "end effector").
class LinkPositionObservation final : public Observation {
 public:
  // Keeps a reference to `chain`.
  LinkPositionObservation(const ChainModel& chain, int link);

  int dim() const override { return 2; }
  Vector value(const Vector& q) const override;
  Matrix jacobian(const Vector& q) const override;

 private:
  const ChainModel& chain_;
  int link_;
};

// A subset of the generalized coordinates.
class CoordinateObservation final : public Observation {
 public:
  CoordinateObservation(std::vector<int> indices, int nq);

  int dim() const override { return static_cast<int>(indices_.size()); }
  Vector value(const Vector& q) const override;
  Matrix jacobian(const Vector& q) const override;

 private:
  std::vector<int> indices_;
  int nq_;
};

}  // namespace varid

#endif  // VARID_OBSERVATION_HPP_
