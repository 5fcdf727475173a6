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

#include <cstring>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "support/fixtures.hpp"
#include "varid/errors.hpp"
#include "varid/types.hpp"

namespace varid {
namespace {

TEST(StatePack, ConcatenatesConfigurationAndMomentum) {
  const Vector x = state_pack(Vector::Constant(1, 1.0), Vector::Constant(1, 2.0));
  ASSERT_EQ(x.size(), 2);
  EXPECT_EQ(x[0], 1.0);
  EXPECT_EQ(x[1], 2.0);

  const Vector zero = state_pack(Vector::Zero(2), Vector::Zero(2));
  EXPECT_EQ(zero, Vector::Zero(4));
}

TEST(StatePack, RoundTripIsBitwise) {
  std::mt19937_64 rng(11);
  const Vector q = testing::random_vector(rng, 7, 1e3);
  const Vector p = testing::random_vector(rng, 7, 1e-3);
  const auto [q2, p2] = state_unpack(state_pack(q, p));
  EXPECT_EQ(std::memcmp(q.data(), q2.data(), sizeof(double) * 7), 0);
  EXPECT_EQ(std::memcmp(p.data(), p2.data(), sizeof(double) * 7), 0);
}

TEST(StatePack, RejectsMismatchedLengths) {
  EXPECT_THROW(state_pack(Vector::Zero(2), Vector::Zero(3)), DimensionError);
  EXPECT_THROW(state_unpack(Vector::Zero(3)), DimensionError);
}

TEST(TimeGrid, TimesAreDerivedFromIndex) {
  const TimeGrid grid(0.3, 0.01, 100000);
  EXPECT_EQ(grid.samples(), 100001);
  for (int k : {0, 1, 7, 4999, 100000}) {
    EXPECT_EQ(grid.time(k), 0.3 + static_cast<double>(k) * 0.01);
  }
  // Accumulating dt would drift; the derived time does not.
  double accumulated = 0.3;
  for (int k = 0; k < 100000; ++k) accumulated += 0.01;
  EXPECT_GT(std::abs(accumulated - grid.final_time()), 1e-12);
  EXPECT_NEAR(grid.final_time(), 1000.3, 1e-12);
  for (int k = 0; k < 1000; ++k) EXPECT_GT(grid.time(k + 1), grid.time(k));
}

TEST(TimeGrid, RejectsInvalidSpacing) {
  EXPECT_THROW(TimeGrid(0.0, 0.0, 10), ConfigError);
  EXPECT_THROW(TimeGrid(0.0, -0.01, 10), ConfigError);
  EXPECT_THROW(TimeGrid(0.0, 0.01, 0), ConfigError);
  EXPECT_THROW(TimeGrid(std::numeric_limits<double>::quiet_NaN(), 0.01, 10), ConfigError);
}

TEST(ParameterVector, EnforcesBoundsAndFiniteness) {
  EXPECT_THROW(ParameterVector::positive(Vector::Constant(1, 0.0)), ConfigError);
  EXPECT_THROW(ParameterVector(Vector::Constant(1, std::numeric_limits<double>::infinity())),
               ConfigError);
  EXPECT_THROW(ParameterVector(Vector::Zero(2), Vector::Zero(3)), DimensionError);

  const ParameterVector rho = ParameterVector::positive(Vector::Constant(2, 5.0));
  EXPECT_EQ(rho.lower_bounds()[0], ParameterVector::kPositiveLowerBound);
  const ParameterVector moved = rho.with_values((Vector(2) << -1.0, 2.0).finished());
  EXPECT_EQ(moved[0], ParameterVector::kPositiveLowerBound);
  EXPECT_EQ(moved[1], 2.0);
}

TEST(ParameterVector, ClampIsIdempotent) {
  const ParameterVector rho((Vector(3) << 1.0, 2.0, 3.0).finished(),
                            (Vector(3) << 0.5, 2.0, -1.0).finished());
  const ParameterVector once = rho.with_values((Vector(3) << 0.1, 5.0, -7.0).finished());
  const ParameterVector twice = once.clamped();
  EXPECT_EQ(once.values(), twice.values());
  EXPECT_EQ(once.values(), (Vector(3) << 0.5, 5.0, -1.0).finished());
}

}  // namespace
}  // namespace varid
