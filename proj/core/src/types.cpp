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

#include "varid/types.hpp"

#include <cmath>
#include <string>

#include "varid/errors.hpp"

namespace varid {

TimeGrid::TimeGrid(double t0, double dt, int steps) : t0_(t0), dt_(dt), steps_(steps) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("time grid: dt must be positive");
  if (steps < 1) throw ConfigError("time grid: steps must be at least 1");
  if (!std::isfinite(t0)) throw ConfigError("time grid: t0 must be finite");
}

ParameterVector::ParameterVector(Vector values)
    : ParameterVector(values, Vector::Constant(values.size(),
                                               -std::numeric_limits<double>::infinity())) {}

ParameterVector::ParameterVector(Vector values, Vector lower_bounds)
    : values_(std::move(values)), lower_bounds_(std::move(lower_bounds)) {
  if (values_.size() != lower_bounds_.size()) {
    throw DimensionError("parameter vector: values and lower bounds differ in length");
  }
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw ConfigError("parameter vector: entry " + std::to_string(i) + " is not finite");
    }
    if (values_[i] < lower_bounds_[i]) {
      throw ConfigError("parameter vector: entry " + std::to_string(i) + " below its lower bound");
    }
  }
}

ParameterVector ParameterVector::positive(Vector values) {
  Vector lb = Vector::Constant(values.size(), kPositiveLowerBound);
  return ParameterVector(std::move(values), std::move(lb));
}

ParameterVector ParameterVector::clamped() const {
  ParameterVector out = *this;
  out.values_ = values_.cwiseMax(lower_bounds_);
  return out;
}

ParameterVector ParameterVector::with_values(Vector values) const {
  if (values.size() != values_.size()) {
    throw DimensionError("parameter vector: size change");
  }
  return ParameterVector(values.cwiseMax(lower_bounds_), lower_bounds_);
}

Vector state_pack(const Vector& q, const Vector& p) {
  if (q.size() != p.size()) {
    throw DimensionError("state_pack: q has " + std::to_string(q.size()) + " entries, p has " +
                         std::to_string(p.size()));
  }
  Vector x(q.size() + p.size());
  x << q, p;
  return x;
}

std::pair<Vector, Vector> state_unpack(const Vector& x) {
  if (x.size() % 2 != 0) throw DimensionError("state_unpack: odd state length");
  const Eigen::Index n = x.size() / 2;
  return {x.head(n), x.tail(n)};
}

}  // namespace varid
