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

#include "varid/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include <Eigen/Dense>

#include "varid/discretization.hpp"
#include "varid/errors.hpp"

namespace varid {
namespace {

struct StepSystem {
  DiscreteSlotDerivatives slots;
  ConstraintTerms next_constraint;
};

Vector stack_residual(const DiscreteState& state, const Vector& lambda, const Matrix& Dh0,
                      const StepSystem& sys) {
  const Eigen::Index nq = state.q.size();
  const Eigen::Index nh = lambda.size();
  Vector r(nq + nh);
  r.head(nq) = state.p + sys.slots.D1Ld + sys.slots.Fdm;
  if (nh > 0) {
    r.head(nq) -= Dh0.transpose() * lambda;
    r.tail(nh) = sys.next_constraint.value;
  }
  return r;
}

Matrix assemble_kkt(const Matrix& Dh0, const StepSystem& sys) {
  const Eigen::Index nq = sys.slots.D12Ld.rows();
  const Eigen::Index nh = Dh0.rows();
  Matrix K = Matrix::Zero(nq + nh, nq + nh);
  K.topLeftCorner(nq, nq) = sys.slots.D12Ld + sys.slots.D2Fdm;
  if (nh > 0) {
    K.topRightCorner(nq, nh) = -Dh0.transpose();
    K.bottomLeftCorner(nh, nq) = sys.next_constraint.jacobian;
  }
  return K;
}

// The second slot is passed as the increment d = q1 - q0.
StepSystem evaluate(const Model& model, const Vector& q0, const Vector& d, const Vector& rho,
                    double t0, double t1) {
  StepSystem sys{slot_derivatives_increment(model, q0, d, rho, t0, t1), {}};
  if (model.constraint_dim() > 0) sys.next_constraint = model.constraint(q0 + d, rho);
  return sys;
}

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", x);
  return buf;
}

[[noreturn]] void throw_singular(const Matrix& K, int nq, double threshold) {
  if (K.rows() == nq) {
    throw SolverError(SolverFailure::kSingularMass,
                      "singular step matrix M_{k+1} = D2D1Ld + D2Fd-");
  }
  const Matrix M = K.topLeftCorner(nq, nq);
  const double mass_rcond = factorization_rcond(Eigen::PartialPivLU<Matrix>(M));
  if (!(mass_rcond >= threshold)) {
    throw SolverError(SolverFailure::kSingularMass,
                      "singular step matrix M_{k+1} = D2D1Ld + D2Fd- (rcond " +
                          sci(mass_rcond) + ")");
  }
  throw SolverError(SolverFailure::kConstraintRank,
                    "constraint Jacobian is rank deficient; KKT matrix singular");
}

}  // namespace

double factorization_rcond(const Eigen::PartialPivLU<Matrix>& lu) {
  if (lu.rows() == 0) return 1.0;
  const Vector pivots = lu.matrixLU().diagonal().cwiseAbs();
  const double largest = pivots.maxCoeff();
  if (!(largest > 0.0)) return 0.0;
  const double ratio = pivots.minCoeff() / largest;
  const double estimate = lu.rcond();
  return std::isfinite(estimate) ? std::min(ratio, estimate) : 0.0;
}

Vector step_residual(const Model& model, const DiscreteState& state, const Vector& q1,
                     const Vector& lambda, const Vector& rho, double t0, double t1) {
  const Matrix Dh0 = model.constraint(state.q, rho).jacobian;
  return stack_residual(state, lambda, Dh0, evaluate(model, state.q, q1 - state.q, rho, t0, t1));
}

Matrix step_jacobian(const Model& model, const Vector& q0, const Vector& q1, const Vector& rho,
                     double t0, double t1) {
  const Matrix Dh0 = model.constraint(q0, rho).jacobian;
  return assemble_kkt(Dh0, evaluate(model, q0, q1 - q0, rho, t0, t1));
}

StepResult step_unchecked(const Model& model, const DiscreteState& state, const Vector& rho,
                          double t_k, double dt, const SolverSettings& settings,
                          const Vector* previous_q) {
  check_dims(model, state.q, rho);
  if (state.p.size() != state.q.size()) throw DimensionError("step: dim(p) != dim(q)");
  if (!(dt > 0.0)) throw ConfigError("step: dt must be positive");
  if (!(settings.newton_tol > 0.0) || settings.max_iters < 1) {
    throw ConfigError("step: invalid solver settings");
  }
  const int nq = model.config_dim();
  const int nh = model.constraint_dim();
  const double t1 = t_k + dt;

  const Matrix Dh0 = nh > 0 ? model.constraint(state.q, rho).jacobian : Matrix(0, nq);

  // Newton runs on the increment d = q1 - q_k; see slot_derivatives_increment.
  Vector d = Vector::Zero(nq);
  if (settings.predictor == Predictor::kLinearExtrapolation && previous_q != nullptr &&
      previous_q->size() == nq) {
    d = state.q - *previous_q;
  }
  Vector lambda = state.lambda.size() == nh ? state.lambda : Vector::Zero(nh);

  for (int iter = 0;; ++iter) {
    const StepSystem sys = evaluate(model, state.q, d, rho, t_k, t1);
    const Vector r = stack_residual(state, lambda, Dh0, sys);
    if (!r.allFinite()) {
      throw SolverError(SolverFailure::kNonFinite, "non-finite residual in step solve");
    }
    const double res = r.lpNorm<Eigen::Infinity>();
    if (res <= settings.newton_tol) {
      StepResult out;
      out.next.q = state.q + d;
      out.next.p = sys.slots.D2Ld + sys.slots.Fdp;
      out.next.lambda = lambda;
      out.newton_iters = iter;
      out.residual = res;
      return out;
    }
    if (iter == settings.max_iters) {
      throw SolverError(SolverFailure::kNonConvergence,
                        "Newton did not converge in " + std::to_string(settings.max_iters) +
                            " iterations (residual " + sci(res) + ")");
    }
    const Matrix K = assemble_kkt(Dh0, sys);
    const Eigen::PartialPivLU<Matrix> lu(K);
    const double rcond = factorization_rcond(lu);
    if (!(rcond >= settings.singular_rcond)) throw_singular(K, nq, settings.singular_rcond);
    const Vector delta = lu.solve(r);
    d -= delta.head(nq);
    if (nh > 0) lambda -= delta.tail(nh);
  }
}

StepResult step(const Model& model, const DiscreteState& state, const Vector& rho, double t_k,
                double dt, const SolverSettings& settings, const Vector* previous_q) {
  check_dims(model, state.q, rho);
  if (model.constraint_dim() > 0) {
    const double h = model.constraint(state.q, rho).value.lpNorm<Eigen::Infinity>();
    if (!(h <= settings.newton_tol)) {
      throw InfeasibleStartError("step: current configuration violates the constraints (|h| = " +
                                 sci(h) + ")");
    }
  }
  return step_unchecked(model, state, rho, t_k, dt, settings, previous_q);
}

Trajectory simulate_from_state(const Model& model, const DiscreteState& initial,
                               const Vector& rho, const TimeGrid& grid,
                               const SolverSettings& settings) {
  Trajectory traj;
  traj.grid = grid;
  traj.states.reserve(static_cast<std::size_t>(grid.samples()));
  traj.states.push_back(initial);
  if (traj.states[0].lambda.size() != model.constraint_dim()) {
    traj.states[0].lambda = Vector::Zero(model.constraint_dim());
  }
  traj.initial_sensitivity = Matrix::Zero(2 * model.config_dim(), model.param_dim());
  for (int k = 0; k < grid.steps(); ++k) {
    const Vector* prev = k > 0 ? &traj.states[static_cast<std::size_t>(k - 1)].q : nullptr;
    try {
      StepResult r = step(model, traj.states.back(), rho, grid.time(k), grid.dt(), settings, prev);
      traj.states.push_back(std::move(r.next));
    } catch (const SolverError& e) {
      throw SolverError(e.failure(), "step " + std::to_string(k) + ": " + e.what(), k);
    } catch (const InfeasibleStartError& e) {
      throw InfeasibleStartError("step " + std::to_string(k) + ": " + e.what());
    }
  }
  return traj;
}

Trajectory simulate(const Model& model, const Vector& initial_q, const Vector& initial_v,
                    const Vector& rho, const TimeGrid& grid, const SolverSettings& settings) {
  check_dims(model, initial_q, rho);
  if (initial_v.size() != initial_q.size()) throw DimensionError("simulate: dim(v) != dim(q)");
  if (!initial_q.allFinite() || !initial_v.allFinite()) {
    throw ConfigError("simulate: non-finite initial conditions");
  }
  if (model.constraint_dim() > 0) {
    const double h = model.constraint(initial_q, rho).value.lpNorm<Eigen::Infinity>();
    if (!(h <= settings.newton_tol)) {
      throw InfeasibleStartError("initial configuration violates the constraints (|h| = " +
                                 sci(h) + "); project it first");
    }
  }
  const LagrangianTerms L = model.lagrangian_terms(initial_q, initial_v, rho);
  DiscreteState x0{initial_q, L.dv, Vector::Zero(model.constraint_dim())};
  Trajectory traj = simulate_from_state(model, x0, rho, grid, settings);
  traj.initial_sensitivity.bottomRows(model.config_dim()) = L.dv_drho;
  return traj;
}

double discrete_energy(const Model& model, const Vector& q0, const Vector& q1, const Vector& rho,
                       double dt) {
  if (!(dt > 0.0)) throw ConfigError("discrete_energy: dt must be positive");
  const Vector qm = 0.5 * (q0 + q1);
  const Vector vm = (q1 - q0) / dt;
  return model.kinetic_energy(qm, vm, rho) + model.potential_energy(qm, rho);
}

double continuous_energy(const Model& model, const Vector& q, const Vector& v, const Vector& rho) {
  return model.kinetic_energy(q, v, rho) + model.potential_energy(q, rho);
}

ContinuousSamples continuous_oracle(const Model& model, const Vector& initial_q,
                                    const Vector& initial_v, const Vector& rho, double t0,
                                    double t_final, int steps) {
  if (model.constraint_dim() != 0) {
    throw ConfigError("continuous_oracle: constrained models are not supported");
  }
  check_dims(model, initial_q, rho);
  if (steps < 1 || !(t_final > t0)) throw ConfigError("continuous_oracle: invalid horizon");
  const double h = (t_final - t0) / steps;

  auto accel = [&](const Vector& q, const Vector& v, double t) -> Vector {
    const LagrangianTerms L = model.lagrangian_terms(q, v, rho);
    const Vector f = model.force(q, v, rho, t).value;
    return L.dvv.ldlt().solve(L.dq + f - L.dqv.transpose() * v);
  };

  ContinuousSamples out;
  out.t.reserve(static_cast<std::size_t>(steps) + 1);
  out.q.reserve(static_cast<std::size_t>(steps) + 1);
  out.v.reserve(static_cast<std::size_t>(steps) + 1);
  Vector q = initial_q;
  Vector v = initial_v;
  out.t.push_back(t0);
  out.q.push_back(q);
  out.v.push_back(v);
  for (int k = 0; k < steps; ++k) {
    const double t = t0 + k * h;
    const Vector k1q = v;
    const Vector k1v = accel(q, v, t);
    const Vector k2q = v + 0.5 * h * k1v;
    const Vector k2v = accel(q + 0.5 * h * k1q, k2q, t + 0.5 * h);
    const Vector k3q = v + 0.5 * h * k2v;
    const Vector k3v = accel(q + 0.5 * h * k2q, k3q, t + 0.5 * h);
    const Vector k4q = v + h * k3v;
    const Vector k4v = accel(q + h * k3q, k4q, t + h);
    q += (h / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
    v += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    out.t.push_back(t0 + (k + 1) * h);
    out.q.push_back(q);
    out.v.push_back(v);
  }
  return out;
}

}  // namespace varid
