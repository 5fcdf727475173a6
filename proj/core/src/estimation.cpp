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

#include "varid/estimation.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "varid/errors.hpp"

namespace varid {
namespace {

void validate_cost_spec(const Trajectory& traj, const CostSpec& spec) {
  if (!spec.observation) throw ConfigError("cost: no observation map");
  if (static_cast<int>(spec.measured.size()) != traj.size()) {
    throw DimensionError("cost: " + std::to_string(spec.measured.size()) +
                         " measured samples for a trajectory of " + std::to_string(traj.size()));
  }
  if (!spec.weights.empty() && static_cast<int>(spec.weights.size()) != traj.size()) {
    throw DimensionError("cost: weights must have one entry per sample");
  }
  for (const Vector& m : spec.measured) {
    if (m.size() != spec.observation->dim()) {
      throw DimensionError("cost: measured sample dimension differs from the observation");
    }
  }
}

// D1 of w |g(q) - m|^2 with respect to x = [q, p].
RowVector error_gradient(const Vector& q, const Vector& measured, const Observation& obs,
                         double weight) {
  const Eigen::Index nq = q.size();
  RowVector out = RowVector::Zero(2 * nq);
  if (weight == 0.0) return out;
  const Vector eps = obs.value(q) - measured;
  out.head(nq) = 2.0 * weight * eps.transpose() * obs.jacobian(q);
  return out;
}

}  // namespace

double cost(const Trajectory& traj, const CostSpec& spec, const Vector&) {
  validate_cost_spec(traj, spec);
  double J = 0.0;
  const int kf = traj.size() - 1;
  for (int k = 1; k <= kf; ++k) {
    const double w = spec.weight(k);
    if (w == 0.0) continue;
    J += w * (spec.observation->value(traj[k].q) -
              spec.measured[static_cast<std::size_t>(k)]).squaredNorm();
  }
  if (spec.terminal_weight != 0.0) {
    J += spec.terminal_weight * (spec.observation->value(traj[kf].q) -
                                 spec.measured[static_cast<std::size_t>(kf)]).squaredNorm();
  }
  return J;
}

AdjointSolution solve_adjoint(const Trajectory& traj, const std::vector<StepSensitivity>& sens,
                              const CostSpec& spec, const Vector& rho) {
  validate_cost_spec(traj, spec);
  const int kf = traj.size() - 1;
  if (static_cast<int>(sens.size()) != kf) {
    throw DimensionError("adjoint: " + std::to_string(sens.size()) + " sensitivities for " +
                         std::to_string(kf) + " steps");
  }
  const Observation& obs = *spec.observation;
  auto measured = [&](int k) -> const Vector& { return spec.measured[static_cast<std::size_t>(k)]; };

  AdjointSolution out;
  auto& lam = out.adjoint.lambda;
  lam.resize(static_cast<std::size_t>(kf) + 1);
  lam[static_cast<std::size_t>(kf)] =
      error_gradient(traj[kf].q, measured(kf), obs, spec.weight(kf)) +
      error_gradient(traj[kf].q, measured(kf), obs, spec.terminal_weight);
  for (int k = kf - 1; k >= 1; --k) {
    lam[static_cast<std::size_t>(k)] =
        lam[static_cast<std::size_t>(k) + 1] * sens[static_cast<std::size_t>(k)].A +
        error_gradient(traj[k].q, measured(k), obs, spec.weight(k));
  }
  lam[0] = lam[1] * sens[0].A;

  RowVector grad = RowVector::Zero(rho.size());
  for (int k = 1; k <= kf; ++k) {
    grad += lam[static_cast<std::size_t>(k)] * sens[static_cast<std::size_t>(k) - 1].B;
  }
  if (traj.initial_sensitivity.size() != 0) grad += lam[0] * traj.initial_sensitivity;
  out.gradient = grad.transpose();
  return out;
}

Vector adjoint_gradient(const Trajectory& traj, const std::vector<StepSensitivity>& sens,
                        const CostSpec& spec, const Vector& rho) {
  return solve_adjoint(traj, sens, spec, rho).gradient;
}

Vector TimeSeries::at(double t) const {
  const double s = (t - grid.t0()) / grid.dt();
  const int last = grid.steps();
  if (!(s > 0.0)) return samples.row(0).transpose();
  if (s >= last) return samples.row(last).transpose();
  const int i = static_cast<int>(std::floor(s));
  const double f = s - i;
  return ((1.0 - f) * samples.row(i) + f * samples.row(i + 1)).transpose();
}

namespace {

class FeedbackForce final : public ForceProvider {
 public:
  FeedbackForce(TimeSeries torques, TimeSeries coordinates, Vector gains,
                std::vector<int> actuated, int nq)
      : torques_(std::move(torques)),
        coordinates_(std::move(coordinates)),
        gains_(std::move(gains)),
        actuated_(std::move(actuated)),
        nq_(nq) {
    const auto m = static_cast<Eigen::Index>(actuated_.size());
    if (torques_.samples.cols() != m || coordinates_.samples.cols() != m || gains_.size() != m) {
      throw DimensionError("feedback_force: torque, coordinate and gain channels must match the "
                           "actuated index set");
    }
    if (torques_.samples.rows() != torques_.grid.samples() ||
        coordinates_.samples.rows() != coordinates_.grid.samples()) {
      throw DimensionError("feedback_force: series length does not match its grid");
    }
    if (!(torques_.grid == coordinates_.grid)) {
      throw DimensionError("feedback_force: torque and coordinate series on different grids");
    }
    for (int a : actuated_) {
      if (a < 0 || a >= nq) {
        throw DimensionError("feedback_force: actuated index " + std::to_string(a) +
                             " out of range");
      }
    }
    if ((gains_.array() < 0.0).any()) {
      throw ConfigError("feedback_force: gains must be non-negative");
    }
  }

  ForceTerms evaluate(const Vector& q, const Vector&, const Vector& rho, double t) const override {
    ForceTerms f = ForceTerms::zero(nq_, static_cast<int>(rho.size()));
    const Vector torque = torques_.at(t);
    const Vector target = coordinates_.at(t);
    for (std::size_t j = 0; j < actuated_.size(); ++j) {
      const int a = actuated_[j];
      const auto jj = static_cast<Eigen::Index>(j);
      f.value[a] += torque[jj] - gains_[jj] * (q[a] - target[jj]);
      f.dq(a, a) -= gains_[jj];
    }
    return f;
  }

 private:
  TimeSeries torques_;
  TimeSeries coordinates_;
  Vector gains_;
  std::vector<int> actuated_;
  int nq_;
};

}  // namespace

std::shared_ptr<const ForceProvider> feedback_force(TimeSeries torques, TimeSeries coordinates,
                                                    Vector gains, std::vector<int> actuated,
                                                    int nq) {
  return std::make_shared<FeedbackForce>(std::move(torques), std::move(coordinates),
                                         std::move(gains), std::move(actuated), nq);
}

const char* to_string(Termination termination) {
  switch (termination) {
    case Termination::kGradTol: return "grad_tol";
    case Termination::kMaxIters: return "max_iters";
    case Termination::kLineSearchFailure: return "line_search_failure";
  }
  return "unknown";
}

Vector projected_gradient(const ParameterVector& rho, const Vector& gradient) {
  Vector g = gradient;
  for (int i = 0; i < rho.size(); ++i) {
    if (rho[i] <= rho.lower_bounds()[i] && g[i] > 0.0) g[i] = 0.0;
  }
  return g;
}

namespace {

class ProblemEvaluator {
 public:
  explicit ProblemEvaluator(const IdentificationProblem& problem) : problem_(problem) {
    if (problem.model == nullptr) throw ConfigError("identify: no model");
    if (problem.forcing) forced_.emplace(*problem.model, problem.forcing);
  }

  const Model& model() const { return forced_ ? *forced_ : *problem_.model; }

  Trajectory rollout(const Vector& rho) const {
    return simulate(model(), problem_.initial_q, problem_.initial_v, rho, problem_.grid,
                    problem_.solver);
  }

  CostAndGradient evaluate(const Vector& rho, std::optional<Trajectory> traj = std::nullopt) const {
    CostAndGradient out;
    out.trajectory = traj ? std::move(*traj) : rollout(rho);
    out.cost = cost(out.trajectory, problem_.cost, rho);
    const auto sens = linearize_trajectory(model(), out.trajectory, rho, problem_.solver);
    out.gradient = adjoint_gradient(out.trajectory, sens, problem_.cost, rho);
    return out;
  }

 private:
  const IdentificationProblem& problem_;
  std::optional<ForcedModel> forced_;
};

}  // namespace

CostAndGradient evaluate_cost_and_gradient(const IdentificationProblem& problem,
                                           const Vector& rho) {
  return ProblemEvaluator(problem).evaluate(rho);
}

IdentificationResult identify(const IdentificationProblem& problem, const ParameterVector& rho0,
                              const DescentSettings& settings, const IterationObserver& observer) {
  if (!(settings.alpha > 0.0 && settings.alpha < 1.0) ||
      !(settings.beta > 0.0 && settings.beta < 1.0)) {
    throw ConfigError("identify: Armijo alpha and beta must lie in (0, 1)");
  }
  if (!(settings.initial_step > 0.0) || settings.max_iters < 0 || settings.max_backtracks < 0) {
    throw ConfigError("identify: invalid descent settings");
  }
  const ProblemEvaluator evaluator(problem);

  IdentificationResult result;
  ParameterVector rho = rho0.clamped();
  CostAndGradient current = evaluator.evaluate(rho.values());

  for (int iter = 0;; ++iter) {
    const Vector g = projected_gradient(rho, current.gradient);
    const double g2 = g.squaredNorm();
    result.rho_history.push_back(rho.values());
    result.cost_history.push_back(current.cost);
    result.grad_norm_history.push_back(std::sqrt(g2));
    if (observer) observer(iter, rho.values(), current.trajectory, current.cost);

    result.iterations = iter;
    result.rho_opt = rho;
    if (std::sqrt(g2) < settings.grad_tol) {
      result.termination = Termination::kGradTol;
      return result;
    }
    if (iter == settings.max_iters) {
      result.termination = Termination::kMaxIters;
      return result;
    }

    double gamma = settings.initial_step;
    std::optional<ParameterVector> accepted;
    std::optional<Trajectory> accepted_traj;
    for (int backtrack = 0; backtrack <= settings.max_backtracks; ++backtrack, gamma *= settings.beta) {
      const ParameterVector candidate = rho.with_values(rho.values() - gamma * g);
      double trial = std::numeric_limits<double>::infinity();
      Trajectory traj;
      try {
        traj = evaluator.rollout(candidate.values());
        trial = cost(traj, problem.cost, candidate.values());
      } catch (const SolverError&) {
      } catch (const InfeasibleStartError&) {
      }
      if (std::isfinite(trial) && trial <= current.cost - settings.alpha * gamma * g2) {
        accepted = candidate;
        accepted_traj = std::move(traj);
        break;
      }
    }
    if (!accepted) {
      result.termination = Termination::kLineSearchFailure;
      return result;
    }
    result.step_history.push_back(gamma);
    rho = *accepted;
    current = evaluator.evaluate(rho.values(), std::move(accepted_traj));
  }
}

}  // namespace varid
