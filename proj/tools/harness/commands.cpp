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

#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "varid/csv.hpp"
#include "varid/errors.hpp"
#include "varid/linearization.hpp"

#ifndef VARID_VERSION
#define VARID_VERSION "unknown"
#endif

namespace varid::harness {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json to_json(const Matrix& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

json grid_json(const TimeGrid& g) { return {{"t0", g.t0()}, {"dt", g.dt()}, {"steps", g.steps()}}; }

json solver_json(const SolverSettings& s) {
  return {{"newton_tol", s.newton_tol},
          {"max_iters", s.max_iters},
          {"predictor", s.predictor == Predictor::kHold ? "hold" : "linear"},
          {"singular_rcond", s.singular_rcond}};
}

// Writes artifacts atomically and remembers their names for the manifest.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  void write(const std::string& name, const std::string& contents) {
    write_file_atomically(dir_ / name, contents);
    names_.push_back(name);
  }

  void write_manifest(const std::string& command, const ExperimentConfig& config,
                      std::uint64_t seed, const json& timings) {
    json m;
    m["command"] = command;
    m["code_version"] = VARID_VERSION;
    m["config_hash"] = hex64(config.hash());
    m["model_hash"] = hex64(config.model->hash());
    m["seed"] = seed;
    m["timings_s"] = timings;
    m["artifacts"] = names_;
    write_file_atomically(dir_ / "manifest.json", m.dump(2) + "\n");
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> names_;
};

std::string trajectory_csv(const Trajectory& traj) {
  std::ostringstream s;
  write_trajectory_csv(s, traj);
  return s.str();
}

std::string series_csv(const TimeSeries& series) {
  std::ostringstream s;
  write_time_series_csv(s, series);
  return s.str();
}

TimeSeries zero_coordinates(const ExperimentConfig& config) {
  TimeSeries s;
  s.grid = config.grid;
  s.names = coordinate_names(config);
  s.samples = Matrix::Zero(config.grid.samples(), static_cast<Eigen::Index>(config.actuated.size()));
  return s;
}

// Open-loop torque playback on the actuated coordinates; null when nothing is
// actuated.
std::shared_ptr<const ForceProvider> playback(const ExperimentConfig& config,
                                              const TimeSeries& torques) {
  if (config.actuated.empty()) return nullptr;
  const auto n = static_cast<Eigen::Index>(config.actuated.size());
  return feedback_force(torques, zero_coordinates(config), Vector::Zero(n), config.actuated,
                        config.model->model().config_dim());
}

// `base` with an optional external force attached.
class MaybeForced {
 public:
  MaybeForced(const Model& base, std::shared_ptr<const ForceProvider> forcing) : base_(base) {
    if (forcing) forced_.emplace(base, std::move(forcing));
  }
  const Model& get() const { return forced_ ? static_cast<const Model&>(*forced_) : base_; }

 private:
  const Model& base_;
  std::optional<ForcedModel> forced_;
};

TimeSeries observation_series(const ExperimentConfig& config, const Observation& obs,
                              const Trajectory& traj) {
  TimeSeries s;
  s.grid = config.grid;
  s.names = observation_names(config);
  s.samples.resize(traj.size(), obs.dim());
  for (int k = 0; k < traj.size(); ++k) s.samples.row(k) = obs.value(traj[k].q).transpose();
  return s;
}

void add_noise(Matrix& samples, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index r = 0; r < samples.rows(); ++r) {
    for (Eigen::Index c = 0; c < samples.cols(); ++c) {
      const double z = normal(rng);
      if (stddev > 0.0) samples(r, c) += stddev * z;
    }
  }
}

std::string linearization_json(const Model& model, const Trajectory& traj, const Vector& rho,
                               const SolverSettings& solver) {
  const std::vector<StepSensitivity> sens = linearize_trajectory(model, traj, rho, solver);
  json steps = json::array();
  for (const StepSensitivity& s : sens) {
    steps.push_back({{"k", s.step_index}, {"A", to_json(s.A)}, {"B", to_json(s.B)}});
  }
  return json{{"layout", "row-major"}, {"steps", steps}}.dump() + "\n";
}

double constraint_residual(const Model& model, const Vector& q, const Vector& rho) {
  if (model.constraint_dim() == 0) return 0.0;
  return model.constraint(q, rho).value.cwiseAbs().maxCoeff();
}

std::string rho_text(const Vector& rho) {
  std::ostringstream s;
  s << '[';
  for (Eigen::Index i = 0; i < rho.size(); ++i) s << (i ? ", " : "") << format_double(rho[i]);
  s << ']';
  return s.str();
}

std::vector<int> check_points(int steps, int points) {
  std::vector<int> idx;
  if (points <= 1 || steps <= 1) return {0};
  for (int i = 0; i < points; ++i) {
    const int k = static_cast<int>((static_cast<long long>(i) * (steps - 1)) / (points - 1));
    if (idx.empty() || idx.back() != k) idx.push_back(k);
  }
  return idx;
}

std::string quote(const std::string& text) {
  std::string out = "\"";
  for (char c : text) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else if (c == '\n' || c == '\r') {
      out += ' ';
    } else {
      out += c;
    }
  }
  return out + "\"";
}

}  // namespace

int cmd_generate(const ExperimentConfig& config, const RunOptions& options, std::ostream& log) {
  const auto start = Clock::now();
  const Vector& rho = require_rho_true(config);
  const std::uint64_t seed = options.seed.value_or(config.seed);
  const Model& model = config.model->model();

  const Vector q0 = initial_configuration(config, rho);
  const TimeSeries torques = excitation_series(config);
  const MaybeForced sim_model(model, playback(config, torques));
  const Trajectory traj = simulate(sim_model.get(), q0, initial_velocity(config), rho, config.grid,
                                   config.solver);

  const auto obs = make_observation(config);
  const TimeSeries clean_obs = observation_series(config, *obs, traj);
  const TimeSeries clean_coords = coordinate_series(config, traj);

  // Draw order is fixed (observations, torques, coordinates) so that a seed
  // pins every file.
  std::mt19937_64 rng(seed);
  TimeSeries noisy_obs = clean_obs;
  TimeSeries noisy_torques = torques;
  TimeSeries noisy_coords = clean_coords;
  add_noise(noisy_obs.samples, config.noise.observation_std, rng);
  add_noise(noisy_torques.samples, config.noise.torque_std, rng);
  add_noise(noisy_coords.samples, config.noise.coordinate_std, rng);

  ArtifactWriter out(options.out_dir);
  out.write("trajectory.csv", trajectory_csv(traj));
  out.write("observations.csv", series_csv(noisy_obs));
  out.write("observations_clean.csv", series_csv(clean_obs));
  if (!config.actuated.empty()) {
    out.write("torques.csv", series_csv(noisy_torques));
    out.write("torques_clean.csv", series_csv(torques));
    out.write("coords.csv", series_csv(noisy_coords));
    out.write("coords_clean.csv", series_csv(clean_coords));
  }
  out.write_manifest("generate", config, seed, {{"total", seconds_since(start)}});
  log << "generate: steps=" << config.grid.steps() << " rho_true=" << rho_text(rho)
      << " observation_std=" << format_double(config.noise.observation_std) << " seed=" << seed
      << " out=" << options.out_dir.string() << '\n';
  return kExitOk;
}

int cmd_simulate(const ExperimentConfig& config, const RunOptions& options, std::ostream& log) {
  const auto start = Clock::now();
  const Vector rho = config.rho_true ? *config.rho_true : require_rho0(config);
  const Model& model = config.model->model();
  const Vector q0 = initial_configuration(config, rho);
  const Vector v0 = initial_velocity(config);
  const MaybeForced sim_model(model, playback(config, excitation_series(config)));
  const Trajectory traj = simulate(sim_model.get(), q0, v0, rho, config.grid, config.solver);
  const double sim_time = seconds_since(start);

  const double dt = config.grid.dt();
  std::ostringstream energy;
  energy << "k,t,energy,constraint_residual\n";
  double max_residual = constraint_residual(model, traj[0].q, rho);
  for (int k = 0; k < config.grid.steps(); ++k) {
    const double e = discrete_energy(model, traj[k].q, traj[k + 1].q, rho, dt);
    const double r = constraint_residual(model, traj[k + 1].q, rho);
    max_residual = std::max(max_residual, r);
    energy << k << ',' << format_double(config.grid.time(k)) << ',' << format_double(e) << ','
           << format_double(r) << '\n';
  }

  json meta;
  meta["model_kind"] = config.model->kind();
  meta["model_hash"] = hex64(config.model->hash());
  meta["rho"] = to_json(rho);
  meta["grid"] = grid_json(config.grid);
  meta["solver"] = solver_json(config.solver);
  meta["initial_q"] = to_json(q0);
  meta["initial_v"] = to_json(v0);
  meta["samples"] = traj.size();
  meta["max_constraint_residual"] = max_residual;

  ArtifactWriter out(options.out_dir);
  out.write("trajectory.csv", trajectory_csv(traj));
  out.write("energy.csv", energy.str());
  out.write("trajectory.json", meta.dump(2) + "\n");
  if (options.dump_linearization) {
    out.write("linearization.json", linearization_json(sim_model.get(), traj, rho, config.solver));
  }
  out.write_manifest("simulate", config, options.seed.value_or(config.seed),
                     {{"simulate", sim_time}, {"total", seconds_since(start)}});
  log << "simulate: steps=" << config.grid.steps() << " rho=" << rho_text(rho)
      << " max_constraint_residual=" << format_double(max_residual)
      << " out=" << options.out_dir.string() << '\n';
  return kExitOk;
}

SyntheticProblem synthetic_problem(const Model& model, const ExperimentConfig& config,
                                   const Vector& rho_data, const Vector& rho_start, int horizon) {
  if (horizon < 1 || horizon > config.grid.steps()) {
    throw ConfigError("synthetic problem horizon must lie in [1, steps]");
  }
  const TimeSeries torques = excitation_series(config);
  const MaybeForced open_loop(model, playback(config, torques));
  SyntheticProblem out;
  out.reference = simulate(open_loop.get(), initial_configuration(config, rho_data),
                           initial_velocity(config), rho_data, config.grid, config.solver);
  if (!config.actuated.empty()) {
    out.forcing = feedback_force(torques, coordinate_series(config, out.reference),
                                 config.feedback_gain, config.actuated, model.config_dim());
  }
  IdentificationProblem& problem = out.problem;
  problem.model = &model;
  problem.initial_q = initial_configuration(config, rho_start);
  problem.initial_v = initial_velocity(config);
  problem.grid = TimeGrid(config.grid.t0(), config.grid.dt(), horizon);
  problem.cost.observation = make_observation(config);
  for (int k = 0; k <= horizon; ++k) {
    problem.cost.measured.push_back(problem.cost.observation->value(out.reference[k].q));
  }
  problem.cost.terminal_weight = config.terminal_weight;
  problem.forcing = out.forcing;
  problem.solver = config.solver;
  return out;
}

CheckReport run_checks(const Model& model, const ExperimentConfig& config, const Vector& rho) {
  // Checks run at a perturbed rho so that the feedback is active.
  const Vector rho_c = rho * (1.0 + config.check.perturbation);
  const int horizon = std::min(config.check.adjoint_steps, config.grid.steps());
  const SyntheticProblem synth = synthetic_problem(model, config, rho, rho_c, horizon);
  const MaybeForced closed_loop(model, synth.forcing);

  const std::vector<int> points = check_points(config.grid.steps(), config.check.points);
  const TimeGrid check_grid(config.grid.t0(), config.grid.dt(), points.back() + 1);
  const Trajectory traj = simulate(closed_loop.get(), synth.problem.initial_q,
                                   synth.problem.initial_v, rho_c, check_grid, config.solver);
  CheckReport report = check_along_trajectory(closed_loop.get(), traj, rho_c, points);
  report.merge(check_adjoint_gradient(synth.problem, rho_c));
  return report;
}

int cmd_check(const ExperimentConfig& config, const RunOptions& options, std::ostream& log) {
  const auto start = Clock::now();
  const Vector rho = config.rho_true ? *config.rho_true : require_rho0(config);
  const CheckReport report = run_checks(config.model->model(), config, rho);

  json entries = json::array();
  for (const CheckEntry& e : report.entries()) {
    log << "check " << std::left << std::setw(14) << e.name << std::right << std::scientific
        << std::setprecision(3) << " max_rel_err=" << e.max_error << " tol=" << e.tolerance
        << std::defaultfloat << " samples=" << e.samples << ' ' << (e.passed() ? "PASS" : "FAIL")
        << '\n';
    entries.push_back({{"name", e.name},
                       {"max_error", e.max_error},
                       {"tolerance", e.tolerance},
                       {"samples", e.samples},
                       {"passed", e.passed()}});
  }
  ArtifactWriter out(options.out_dir);
  out.write("check.json", json{{"passed", report.passed()}, {"entries", entries}}.dump(2) + "\n");
  out.write_manifest("check", config, options.seed.value_or(config.seed),
                     {{"total", seconds_since(start)}});
  if (report.passed()) {
    log << "check: PASS\n";
    return kExitOk;
  }
  log << "check: FAIL blocks=";
  const auto failed = report.failures();
  for (std::size_t i = 0; i < failed.size(); ++i) log << (i ? "," : "") << failed[i];
  log << '\n';
  return kExitCheck;
}

int cmd_identify(const ExperimentConfig& config, const RunOptions& options, std::ostream& log) {
  const auto start = Clock::now();
  const Model& model = config.model->model();
  const int nq = model.config_dim();
  const std::filesystem::path data = config.data_dir.value_or(options.out_dir);

  const TimeSeries measured = read_time_series_csv(data / "observations.csv", config.grid);
  const auto obs = make_observation(config);
  if (measured.samples.cols() != obs->dim()) {
    throw ConfigError("observations.csv: expected " + std::to_string(obs->dim()) + " channels");
  }
  std::shared_ptr<const ForceProvider> forcing;
  if (!config.actuated.empty()) {
    const TimeSeries torques = read_time_series_csv(data / "torques.csv", config.grid);
    const TimeSeries coords = read_time_series_csv(data / "coords.csv", config.grid);
    const auto n = static_cast<Eigen::Index>(config.actuated.size());
    if (torques.samples.cols() != n || coords.samples.cols() != n) {
      throw ConfigError("torques.csv/coords.csv: expected one channel per actuated coordinate");
    }
    forcing = feedback_force(torques, coords, config.feedback_gain, config.actuated, nq);
  }
  const double load_time = seconds_since(start);

  const ParameterVector rho0 = parameters(config, require_rho0(config));
  IdentificationProblem problem;
  problem.model = &model;
  problem.initial_q = initial_configuration(config, rho0.values());
  problem.initial_v = initial_velocity(config);
  problem.grid = config.grid;
  problem.cost.observation = obs;
  for (int k = 0; k < config.grid.samples(); ++k) {
    problem.cost.measured.push_back(measured.samples.row(k).transpose());
  }
  problem.cost.terminal_weight = config.terminal_weight;
  problem.forcing = forcing;
  problem.solver = config.solver;

  std::ostringstream paths;
  paths << "iteration,k,t";
  for (const std::string& n : observation_names(config)) paths << ',' << n;
  paths << '\n';
  const auto observer = [&](int iteration, const Vector& rho, const Trajectory& traj, double cost) {
    for (int k = 0; k < traj.size(); ++k) {
      paths << iteration << ',' << k << ',' << format_double(traj.grid.time(k));
      const Vector w = obs->value(traj[k].q);
      for (Eigen::Index c = 0; c < w.size(); ++c) paths << ',' << format_double(w[c]);
      paths << '\n';
    }
    log << "iteration " << iteration << " cost=" << format_double(cost) << " rho=" << rho_text(rho)
        << '\n';
  };
  const auto t_opt = Clock::now();
  const IdentificationResult result = identify(problem, rho0, config.descent, observer);
  const double opt_time = seconds_since(t_opt);

  json history = json::array();
  std::ostringstream convergence;
  convergence << "iteration,cost,grad_norm,step";
  for (Eigen::Index i = 0; i < rho0.values().size(); ++i) convergence << ",rho_" << i;
  convergence << '\n';
  for (std::size_t j = 0; j < result.cost_history.size(); ++j) {
    const double step = j < result.step_history.size() ? result.step_history[j] : 0.0;
    history.push_back({{"iteration", j},
                       {"rho", to_json(result.rho_history[j])},
                       {"cost", result.cost_history[j]},
                       {"grad_norm", result.grad_norm_history[j]},
                       {"step", step}});
    convergence << j << ',' << format_double(result.cost_history[j]) << ','
                << format_double(result.grad_norm_history[j]) << ',' << format_double(step);
    for (Eigen::Index i = 0; i < result.rho_history[j].size(); ++i) {
      convergence << ',' << format_double(result.rho_history[j][i]);
    }
    convergence << '\n';
  }
  json res;
  res["rho_opt"] = to_json(result.rho_opt.values());
  res["rho0"] = to_json(rho0.values());
  res["iterations"] = result.iterations;
  res["termination"] = to_string(result.termination);
  res["final_cost"] = result.cost_history.back();
  res["final_grad_norm"] = result.grad_norm_history.back();
  res["descent"] = {{"alpha", config.descent.alpha},
                    {"beta", config.descent.beta},
                    {"max_iters", config.descent.max_iters},
                    {"grad_tol", config.descent.grad_tol},
                    {"initial_step", config.descent.initial_step},
                    {"max_backtracks", config.descent.max_backtracks}};
  res["grid"] = grid_json(config.grid);
  res["model_hash"] = hex64(config.model->hash());
  res["config_hash"] = hex64(config.hash());
  if (config.rho_true) {
    res["rho_true"] = to_json(*config.rho_true);
    res["relative_error"] =
        to_json(Vector(((result.rho_opt.values() - *config.rho_true).array() /
                        config.rho_true->array().abs()).abs()));
  }
  res["history"] = history;

  ArtifactWriter out(options.out_dir);
  out.write("result.json", res.dump(2) + "\n");
  out.write("convergence.csv", convergence.str());
  out.write("paths.csv", paths.str());
  if (options.dump_linearization) {
    const MaybeForced final_model(model, forcing);
    const Trajectory traj = simulate(final_model.get(), problem.initial_q, problem.initial_v,
                                     result.rho_opt.values(), config.grid, config.solver);
    out.write("linearization.json", linearization_json(final_model.get(), traj,
                                                       result.rho_opt.values(), config.solver));
  }
  out.write_manifest("identify", config, options.seed.value_or(config.seed),
                     {{"load", load_time}, {"identify", opt_time}, {"total", seconds_since(start)}});
  log << "identify: termination=" << to_string(result.termination)
      << " iterations=" << result.iterations << " rho=" << rho_text(result.rho_opt.values())
      << " cost=" << format_double(result.cost_history.back())
      << " grad_norm=" << format_double(result.grad_norm_history.back())
      << " wall_s=" << std::fixed << std::setprecision(2) << opt_time << std::defaultfloat << '\n';
  return kExitOk;
}

ErrorStatus classify(const std::exception& error) {
  if (dynamic_cast<const ConfigError*>(&error)) return {kExitConfig, "CONFIG_ERROR"};
  if (dynamic_cast<const DimensionError*>(&error)) return {kExitConfig, "DIMENSION_ERROR"};
  if (dynamic_cast<const InfeasibleStartError*>(&error)) return {kExitSolver, "INFEASIBLE_START"};
  if (dynamic_cast<const SolverError*>(&error)) return {kExitSolver, "SOLVER_FAILURE"};
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&error)) {
    return {kExitConfig, "IO_ERROR"};
  }
  return {kExitSolver, "INTERNAL_ERROR"};
}

std::string format_error(const std::exception& error) {
  const ErrorStatus status = classify(error);
  std::string line = "error: code=" + status.code;
  if (const auto* s = dynamic_cast<const SolverError*>(&error)) {
    line += std::string(" kind=") + to_string(s->failure());
    line += " step=" + std::to_string(s->step_index());
  }
  return line + " message=" + quote(error.what());
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"varid: variational integrator simulation and stiffness identification"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool dump = false;
  std::vector<std::pair<std::string, CLI::App*>> subs;
  for (const auto& [name, help] :
       std::vector<std::pair<std::string, std::string>>{
           {"generate", "simulate at rho_true and write synthetic measurement files"},
           {"simulate", "roll out a trajectory and write trajectory and energy files"},
           {"check", "finite-difference checks of derivatives, linearizations and gradients"},
           {"identify", "estimate parameters from measurement files"}}) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "RNG seed (overrides the config)");
    sub->add_flag("--dump-linearization", dump, "write per-step A_k, B_k to linearization.json");
    subs.emplace_back(name, sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: code=USAGE_ERROR message=" << quote(e.what()) << '\n';
    return kExitConfig;
  }

  std::string command;
  CLI::App* chosen = nullptr;
  for (const auto& [name, sub] : subs) {
    if (sub->parsed()) {
      command = name;
      chosen = sub;
    }
  }

  try {
    const ExperimentConfig config = load_config(config_path);
    RunOptions options;
    if (!out_dir.empty()) {
      options.out_dir = out_dir;
    } else {
      options.out_dir = config.output_dir.value_or(std::filesystem::path("out"));
    }
    if (chosen->count("--seed") > 0) options.seed = seed;
    options.dump_linearization = dump;
    if (command == "generate") return cmd_generate(config, options, out);
    if (command == "simulate") return cmd_simulate(config, options, out);
    if (command == "check") return cmd_check(config, options, out);
    return cmd_identify(config, options, out);
  } catch (const std::exception& e) {
    err << format_error(e) << '\n';
    return classify(e).exit_code;
  }
}

}  // namespace varid::harness
