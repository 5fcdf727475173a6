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

#ifndef VARID_HARNESS_COMMANDS_HPP_
#define VARID_HARNESS_COMMANDS_HPP_

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

#include "config.hpp"
#include "varid/diagnostics.hpp"

namespace varid::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitCheck = 4;

struct RunOptions {
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;  // overrides the config seed
  bool dump_linearization = false;
};

// Each command writes its artifacts into options.out_dir (created if needed),
// prints a short report to `log`, and returns the process exit code. Library
// errors propagate as exceptions; see classify().
int cmd_generate(const ExperimentConfig& config, const RunOptions& options, std::ostream& log);
int cmd_simulate(const ExperimentConfig& config, const RunOptions& options, std::ostream& log);
int cmd_check(const ExperimentConfig& config, const RunOptions& options, std::ostream& log);
int cmd_identify(const ExperimentConfig& config, const RunOptions& options, std::ostream& log);

// The derivative and gradient checks behind cmd_check, for any model whose
// dimensions match the config (tests pass deliberately broken models).
// Closed-loop problem on synthetic data. The reference is an open-loop torque
// playback at rho_data over the full config grid; the feedback law tracks its
// coordinates and the cost targets its observations over `horizon` steps.
struct SyntheticProblem {
  Trajectory reference;
  std::shared_ptr<const ForceProvider> forcing;  // null when nothing is actuated
  IdentificationProblem problem;                 // starts from rho_start's initial state
};
SyntheticProblem synthetic_problem(const Model& model, const ExperimentConfig& config,
                                   const Vector& rho_data, const Vector& rho_start, int horizon);

CheckReport run_checks(const Model& model, const ExperimentConfig& config, const Vector& rho);

struct ErrorStatus {
  int exit_code;
  std::string code;  // e.g. CONFIG_ERROR, SOLVER_FAILURE
};
ErrorStatus classify(const std::exception& error);

// Single-line, machine-parseable error report.
std::string format_error(const std::exception& error);

// Full CLI: parses arguments, dispatches, maps errors to exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace varid::harness

#endif  // VARID_HARNESS_COMMANDS_HPP_
