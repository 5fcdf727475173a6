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

// Experiment configuration shared by every CLI subcommand. One JSON document
// describes the model, grid, initial state, parameters, excitation, noise,
// observation and optimizer settings.

#ifndef VARID_HARNESS_CONFIG_HPP_
#define VARID_HARNESS_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "varid/estimation.hpp"
#include "varid/model_io.hpp"
#include "varid/observation.hpp"

namespace varid::harness {

// a * sin(2 pi f t + phase) + offset
struct Sinusoid {
  double amplitude = 0.0;
  double frequency = 0.0;
  double phase = 0.0;
  double offset = 0.0;

  double operator()(double t) const;
};

struct ObservationSpec {
  std::string type = "link_position";  // or "coordinates"
  int link = 1;
  std::vector<int> indices;
};

struct NoiseSpec {
  double observation_std = 0.0;
  double torque_std = 0.0;
  double coordinate_std = 0.0;
};

struct CheckSpec {
  int points = 5;            // trajectory points for the derivative checks
  int adjoint_steps = 50;    // horizon of the end-to-end gradient check
  double perturbation = 0.05;  // rho used for the checks is rho * (1 + perturbation)
};

struct ExperimentConfig {
  std::filesystem::path base_dir;  // relative paths resolve against this
  std::string canonical;           // compact sorted JSON of the whole config
  std::shared_ptr<const LoadedModel> model;

  TimeGrid grid{0.0, 0.01, 1};
  std::optional<Vector> initial_q;  // empty: the model's reference configuration
  std::optional<Vector> initial_v;  // empty: zero
  bool project_initial = true;

  std::optional<Vector> rho_true;
  std::optional<Vector> rho0;
  std::optional<Vector> lower_bounds;  // empty: ParameterVector::kPositiveLowerBound

  std::vector<int> actuated;
  std::vector<Sinusoid> excitation;  // one per actuated coordinate
  Vector feedback_gain;              // one per actuated coordinate

  ObservationSpec observation;
  NoiseSpec noise;
  std::uint64_t seed = 0;

  double terminal_weight = 1.0;
  DescentSettings descent;
  SolverSettings solver;
  CheckSpec check;

  std::optional<std::filesystem::path> data_dir;
  std::optional<std::filesystem::path> output_dir;

  std::uint64_t hash() const;
};

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

// Initial configuration, projected onto the constraints when requested.
Vector initial_configuration(const ExperimentConfig& config, const Vector& rho);
Vector initial_velocity(const ExperimentConfig& config);

ParameterVector parameters(const ExperimentConfig& config, const Vector& values);
const Vector& require_rho_true(const ExperimentConfig& config);
const Vector& require_rho0(const ExperimentConfig& config);

// Excitation torques sampled on the grid, one channel per actuated coordinate.
TimeSeries excitation_series(const ExperimentConfig& config);
// Actuated coordinates of `traj`, one channel per actuated coordinate.
TimeSeries coordinate_series(const ExperimentConfig& config, const Trajectory& traj);

std::shared_ptr<const Observation> make_observation(const ExperimentConfig& config);
std::vector<std::string> observation_names(const ExperimentConfig& config);
std::vector<std::string> torque_names(const ExperimentConfig& config);
std::vector<std::string> coordinate_names(const ExperimentConfig& config);

}  // namespace varid::harness

#endif  // VARID_HARNESS_CONFIG_HPP_
