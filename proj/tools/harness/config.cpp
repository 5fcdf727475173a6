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

#include "config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"
#include "varid/errors.hpp"

namespace varid::harness {
namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (allowed.count(it.key()) == 0) {
      throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
  }
}

template <typename T>
T get(const json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <typename T>
void read(const json& j, const std::string& key, const std::string& where, T& target) {
  if (j.contains(key)) target = get<T>(j, key, where);
}

Vector vector_from(const json& j, const std::string& key, const std::string& where) {
  const auto values = get<std::vector<double>>(j, key, where);
  Vector v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) throw ConfigError(where + "." + key + ": non-finite entry");
    v[static_cast<Eigen::Index>(i)] = values[i];
  }
  return v;
}

Predictor predictor_from(const std::string& name) {
  if (name == "hold") return Predictor::kHold;
  if (name == "linear") return Predictor::kLinearExtrapolation;
  throw ConfigError("solver.predictor: expected \"hold\" or \"linear\", got '" + name + "'");
}

void expect_size(const Vector& v, int n, const std::string& what) {
  if (v.size() != n) {
    throw ConfigError(what + ": expected " + std::to_string(n) + " entries, got " +
                      std::to_string(v.size()));
  }
}

// Link-position observation that keeps its model alive.
class OwningLinkObservation final : public Observation {
 public:
  OwningLinkObservation(std::shared_ptr<const LoadedModel> owner, const ChainModel& chain,
                        int link)
      : owner_(std::move(owner)), inner_(chain, link) {}

  int dim() const override { return inner_.dim(); }
  Vector value(const Vector& q) const override { return inner_.value(q); }
  Matrix jacobian(const Vector& q) const override { return inner_.jacobian(q); }

 private:
  std::shared_ptr<const LoadedModel> owner_;
  LinkPositionObservation inner_;
};

}  // namespace

double Sinusoid::operator()(double t) const {
  return amplitude * std::sin(2.0 * std::numbers::pi * frequency * t + phase) + offset;
}

std::uint64_t ExperimentConfig::hash() const {
  return fnv1a64(canonical + "\n" + model->canonical_json());
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  reject_unknown(j,
                 {"model", "grid", "initial", "rho_true", "rho0", "lower_bounds", "excitation",
                  "observation", "noise", "seed", "cost", "descent", "solver", "check",
                  "data_dir", "output_dir"},
                 "config");

  ExperimentConfig c;
  c.base_dir = base_dir;
  c.canonical = j.dump();

  if (!j.contains("model")) throw ConfigError("config: missing key 'model'");
  const json& m = j.at("model");
  if (m.is_string()) {
    c.model = std::make_shared<LoadedModel>(load_model(base_dir / m.get<std::string>()));
  } else if (m.is_object()) {
    c.model = std::make_shared<LoadedModel>(model_from_json(m.dump()));
  } else {
    throw ConfigError("config.model: expected a file name or an object");
  }
  const Model& model = c.model->model();
  const int nq = model.config_dim();
  const int nrho = model.param_dim();

  if (!j.contains("grid")) throw ConfigError("config: missing key 'grid'");
  {
    const json& g = j.at("grid");
    reject_unknown(g, {"t0", "dt", "steps"}, "grid");
    double t0 = 0.0;
    double dt = 0.01;
    int steps = 0;
    read(g, "t0", "grid", t0);
    read(g, "dt", "grid", dt);
    steps = get<int>(g, "steps", "grid");
    try {
      c.grid = TimeGrid(t0, dt, steps);
    } catch (const Error& e) {
      throw ConfigError(std::string("grid: ") + e.what());
    }
  }

  if (j.contains("initial")) {
    const json& ini = j.at("initial");
    reject_unknown(ini, {"q", "v", "project"}, "initial");
    if (ini.contains("q")) {
      c.initial_q = vector_from(ini, "q", "initial");
      expect_size(*c.initial_q, nq, "initial.q");
    }
    if (ini.contains("v")) {
      c.initial_v = vector_from(ini, "v", "initial");
      expect_size(*c.initial_v, nq, "initial.v");
    }
    read(ini, "project", "initial", c.project_initial);
  }

  if (j.contains("rho_true")) {
    c.rho_true = vector_from(j, "rho_true", "config");
    expect_size(*c.rho_true, nrho, "rho_true");
  }
  if (j.contains("rho0")) {
    c.rho0 = vector_from(j, "rho0", "config");
    expect_size(*c.rho0, nrho, "rho0");
  }
  if (j.contains("lower_bounds")) {
    c.lower_bounds = vector_from(j, "lower_bounds", "config");
    expect_size(*c.lower_bounds, nrho, "lower_bounds");
  }

  if (j.contains("excitation")) {
    const json& e = j.at("excitation");
    reject_unknown(e, {"actuated", "torques", "feedback_gain"}, "excitation");
    c.actuated = get<std::vector<int>>(e, "actuated", "excitation");
    for (int a : c.actuated) {
      if (a < 0 || a >= nq) throw ConfigError("excitation.actuated: index out of range");
    }
    const auto n_act = static_cast<int>(c.actuated.size());
    if (e.contains("torques")) {
      const json& ts = e.at("torques");
      if (!ts.is_array() || static_cast<int>(ts.size()) != n_act) {
        throw ConfigError("excitation.torques: expected one entry per actuated coordinate");
      }
      for (const json& t : ts) {
        reject_unknown(t, {"amplitude", "frequency", "phase", "offset"}, "excitation.torques");
        Sinusoid s;
        read(t, "amplitude", "excitation.torques", s.amplitude);
        read(t, "frequency", "excitation.torques", s.frequency);
        read(t, "phase", "excitation.torques", s.phase);
        read(t, "offset", "excitation.torques", s.offset);
        c.excitation.push_back(s);
      }
    } else {
      c.excitation.assign(static_cast<std::size_t>(n_act), Sinusoid{});
    }
    c.feedback_gain = Vector::Zero(n_act);
    if (e.contains("feedback_gain")) {
      const json& k = e.at("feedback_gain");
      if (k.is_number()) {
        c.feedback_gain.setConstant(k.get<double>());
      } else {
        c.feedback_gain = vector_from(e, "feedback_gain", "excitation");
        expect_size(c.feedback_gain, n_act, "excitation.feedback_gain");
      }
    }
    if ((c.feedback_gain.array() < 0.0).any()) {
      throw ConfigError("excitation.feedback_gain: gains must be non-negative");
    }
  }

  if (j.contains("observation")) {
    const json& o = j.at("observation");
    reject_unknown(o, {"type", "link", "indices"}, "observation");
    read(o, "type", "observation", c.observation.type);
    read(o, "link", "observation", c.observation.link);
    read(o, "indices", "observation", c.observation.indices);
    if (c.observation.type != "link_position" && c.observation.type != "coordinates") {
      throw ConfigError("observation.type: expected \"link_position\" or \"coordinates\"");
    }
  } else if (c.model->chain() == nullptr) {
    c.observation.type = "coordinates";
  }
  if (c.observation.type == "coordinates" && c.observation.indices.empty()) {
    for (int i = 0; i < nq; ++i) c.observation.indices.push_back(i);
  }

  if (j.contains("noise")) {
    const json& n = j.at("noise");
    reject_unknown(n, {"observation_std", "torque_std", "coordinate_std"}, "noise");
    read(n, "observation_std", "noise", c.noise.observation_std);
    read(n, "torque_std", "noise", c.noise.torque_std);
    read(n, "coordinate_std", "noise", c.noise.coordinate_std);
    if (c.noise.observation_std < 0 || c.noise.torque_std < 0 || c.noise.coordinate_std < 0) {
      throw ConfigError("noise: standard deviations must be non-negative");
    }
  }
  read(j, "seed", "config", c.seed);

  if (j.contains("cost")) {
    const json& co = j.at("cost");
    reject_unknown(co, {"terminal_weight"}, "cost");
    read(co, "terminal_weight", "cost", c.terminal_weight);
    if (c.terminal_weight < 0) throw ConfigError("cost.terminal_weight: must be non-negative");
  }

  if (j.contains("descent")) {
    const json& d = j.at("descent");
    reject_unknown(d, {"alpha", "beta", "max_iters", "grad_tol", "initial_step", "max_backtracks"},
                   "descent");
    read(d, "alpha", "descent", c.descent.alpha);
    read(d, "beta", "descent", c.descent.beta);
    read(d, "max_iters", "descent", c.descent.max_iters);
    read(d, "grad_tol", "descent", c.descent.grad_tol);
    read(d, "initial_step", "descent", c.descent.initial_step);
    read(d, "max_backtracks", "descent", c.descent.max_backtracks);
    if (!(c.descent.alpha > 0 && c.descent.alpha < 1) || !(c.descent.beta > 0 && c.descent.beta < 1)) {
      throw ConfigError("descent: alpha and beta must lie in (0, 1)");
    }
  }

  if (j.contains("solver")) {
    const json& s = j.at("solver");
    reject_unknown(s, {"newton_tol", "max_iters", "predictor", "singular_rcond"}, "solver");
    read(s, "newton_tol", "solver", c.solver.newton_tol);
    read(s, "max_iters", "solver", c.solver.max_iters);
    read(s, "singular_rcond", "solver", c.solver.singular_rcond);
    if (s.contains("predictor")) c.solver.predictor = predictor_from(get<std::string>(s, "predictor", "solver"));
    if (!(c.solver.newton_tol > 0) || c.solver.max_iters < 1) {
      throw ConfigError("solver: newton_tol must be > 0 and max_iters >= 1");
    }
  }

  if (j.contains("check")) {
    const json& ch = j.at("check");
    reject_unknown(ch, {"points", "adjoint_steps", "perturbation"}, "check");
    read(ch, "points", "check", c.check.points);
    read(ch, "adjoint_steps", "check", c.check.adjoint_steps);
    read(ch, "perturbation", "check", c.check.perturbation);
    if (c.check.points < 1 || c.check.adjoint_steps < 1) {
      throw ConfigError("check: points and adjoint_steps must be >= 1");
    }
  }

  if (j.contains("data_dir")) c.data_dir = base_dir / get<std::string>(j, "data_dir", "config");
  if (j.contains("output_dir")) c.output_dir = base_dir / get<std::string>(j, "output_dir", "config");

  // Validate the observation against the model now rather than mid-run.
  make_observation(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.parent_path());
}

Vector initial_configuration(const ExperimentConfig& config, const Vector& rho) {
  Vector q = config.initial_q ? *config.initial_q : config.model->reference_configuration();
  if (config.project_initial && config.model->model().constraint_dim() > 0) {
    if (const ClosedLoopModel* loop = config.model->loop()) {
      q = project_to_constraint(*loop, q, rho);
    } else {
      q = project_to_constraint(config.model->model(), q, rho);
    }
  }
  return q;
}

Vector initial_velocity(const ExperimentConfig& config) {
  return config.initial_v ? *config.initial_v : Vector::Zero(config.model->model().config_dim());
}

ParameterVector parameters(const ExperimentConfig& config, const Vector& values) {
  if (!config.lower_bounds) return ParameterVector::positive(values);
  try {
    return ParameterVector(values, *config.lower_bounds);
  } catch (const DimensionError& e) {
    throw ConfigError(std::string("parameters: ") + e.what());
  }
}

const Vector& require_rho_true(const ExperimentConfig& config) {
  if (!config.rho_true) throw ConfigError("config: 'rho_true' is required for this command");
  return *config.rho_true;
}

const Vector& require_rho0(const ExperimentConfig& config) {
  if (!config.rho0) throw ConfigError("config: 'rho0' is required for this command");
  return *config.rho0;
}

TimeSeries excitation_series(const ExperimentConfig& config) {
  TimeSeries s;
  s.grid = config.grid;
  s.names = torque_names(config);
  const auto n = static_cast<Eigen::Index>(config.actuated.size());
  s.samples.resize(config.grid.samples(), n);
  for (int k = 0; k < config.grid.samples(); ++k) {
    for (Eigen::Index a = 0; a < n; ++a) {
      s.samples(k, a) = config.excitation[static_cast<std::size_t>(a)](config.grid.time(k));
    }
  }
  return s;
}

TimeSeries coordinate_series(const ExperimentConfig& config, const Trajectory& traj) {
  TimeSeries s;
  s.grid = config.grid;
  s.names = coordinate_names(config);
  const auto n = static_cast<Eigen::Index>(config.actuated.size());
  s.samples.resize(traj.size(), n);
  for (int k = 0; k < traj.size(); ++k) {
    for (Eigen::Index a = 0; a < n; ++a) {
      s.samples(k, a) = traj[k].q[config.actuated[static_cast<std::size_t>(a)]];
    }
  }
  return s;
}

std::shared_ptr<const Observation> make_observation(const ExperimentConfig& config) {
  const int nq = config.model->model().config_dim();
  try {
    if (config.observation.type == "link_position") {
      const ChainModel* chain = config.model->chain();
      if (chain == nullptr) {
        throw ConfigError("observation: link_position requires a chain or loop model");
      }
      return std::make_shared<OwningLinkObservation>(config.model, *chain,
                                                     config.observation.link);
    }
    return std::make_shared<CoordinateObservation>(config.observation.indices, nq);
  } catch (const DimensionError& e) {
    throw ConfigError(std::string("observation: ") + e.what());
  }
}

std::vector<std::string> observation_names(const ExperimentConfig& config) {
  std::vector<std::string> names;
  if (config.observation.type == "link_position") {
    const std::string l = std::to_string(config.observation.link);
    names = {"x_" + l, "y_" + l};
  } else {
    for (int i : config.observation.indices) names.push_back("q_" + std::to_string(i));
  }
  return names;
}

std::vector<std::string> torque_names(const ExperimentConfig& config) {
  std::vector<std::string> names;
  for (int a : config.actuated) names.push_back("tau_" + std::to_string(a));
  return names;
}

std::vector<std::string> coordinate_names(const ExperimentConfig& config) {
  std::vector<std::string> names;
  for (int a : config.actuated) names.push_back("q_" + std::to_string(a));
  return names;
}

}  // namespace varid::harness
