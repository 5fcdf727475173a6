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

#ifndef VARID_ERRORS_HPP_
#define VARID_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace varid {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mismatched vector/matrix sizes or out-of-range indices.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Malformed configuration, model description or data file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// The starting configuration violates the holonomic constraints and could not
// be projected back onto them.
class InfeasibleStartError : public Error {
 public:
  using Error::Error;
};

enum class SolverFailure {
  kNonConvergence,
  kSingularMass,       // M_{k+1} = D2D1 Ld + D2 Fd- is singular
  kConstraintRank,     // constraint Jacobian lost row rank
  kNonFinite,
};

const char* to_string(SolverFailure failure);

// Raised by the one-step solver. `step_index` is -1 when the failure is not
// attached to a particular step of a rollout.
class SolverError : public Error {
 public:
  SolverError(SolverFailure failure, const std::string& what, int step_index = -1)
      : Error(what), failure_(failure), step_index_(step_index) {}

  SolverFailure failure() const { return failure_; }
  int step_index() const { return step_index_; }

 private:
  SolverFailure failure_;
  int step_index_;
};

}  // namespace varid

#endif  // VARID_ERRORS_HPP_
