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

#include <cmath>
#include <limits>
#include <memory>
#include <random>

#include <gtest/gtest.h>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "varid/estimation.hpp"

namespace varid {
namespace {

constexpr double kDt = 0.01;

TimeSeries series(const TimeGrid& grid, const Matrix& samples) {
  TimeSeries s;
  s.grid = grid;
  s.samples = samples;
  for (Eigen::Index c = 0; c < samples.cols(); ++c) s.names.push_back("c" + std::to_string(c));
  return s;
}

TimeSeries sinusoid(const TimeGrid& grid, double amplitude, double freq) {
  Matrix m(grid.samples(), 1);
  for (int k = 0; k < grid.samples(); ++k) m(k, 0) = amplitude * std::sin(freq * grid.time(k));
  return series(grid, m);
}

// Coordinate observations of a torque-driven spring pendulum: data simulated at
// rho_data, feedback tracks the recorded angle with gain `gain`.
struct PendulumProblem {
  PendulumModel model = testing::spring_pendulum(0.1);
  IdentificationProblem problem;

  PendulumProblem(double rho_data, int steps, double gain) {
    const TimeGrid grid(0.0, kDt, steps);
    const TimeSeries torque = sinusoid(grid, 0.5, 2.0);
    const auto playback = feedback_force(torque, series(grid, Matrix::Zero(grid.samples(), 1)),
                                         Vector::Zero(1), {0}, 1);
    const ForcedModel open_loop(model, playback);
    const Vector q0 = Vector::Constant(1, 0.5);
    const Trajectory data = simulate(open_loop, q0, Vector::Zero(1),
                                     Vector::Constant(1, rho_data), grid);
    Matrix coords(grid.samples(), 1);
    for (int k = 0; k < grid.samples(); ++k) coords(k, 0) = data[k].q[0];

    problem.model = &model;
    problem.initial_q = q0;
    problem.initial_v = Vector::Zero(1);
    problem.grid = grid;
    problem.cost.observation = std::make_shared<CoordinateObservation>(std::vector<int>{0}, 1);
    for (int k = 0; k < grid.samples(); ++k) problem.cost.measured.push_back(data[k].q);
    problem.forcing = feedback_force(torque, series(grid, coords), Vector::Constant(1, gain), {0}, 1);
  }
};

TEST(Cost, VanishesOnMatchingData) {
  const ChainModel chain(testing::chain4_params());
  const Vector rho = (Vector(2) << 40.0, 20.0).finished();
  const Trajectory traj = simulate(chain, Vector::Constant(4, 0.2), Vector::Zero(4), rho,
                                   TimeGrid(0.0, kDt, 20));
  CostSpec spec;
  spec.observation = std::make_shared<LinkPositionObservation>(chain, 3);
  for (const DiscreteState& s : traj.states) spec.measured.push_back(spec.observation->value(s.q));
  EXPECT_EQ(cost(traj, spec, rho), 0.0);
}

TEST(Cost, ConstantOffsetClosedForm) {
  const ChainModel chain(testing::chain4_params());
  const Vector rho = (Vector(2) << 40.0, 20.0).finished();
  const int kf = 25;
  const Trajectory traj = simulate(chain, Vector::Constant(4, 0.2), Vector::Zero(4), rho,
                                   TimeGrid(0.0, kDt, kf));
  const double delta = 0.125;
  CostSpec spec;
  spec.observation = std::make_shared<LinkPositionObservation>(chain, 2);
  for (const DiscreteState& s : traj.states) {
    spec.measured.push_back(spec.observation->value(s.q) - Vector::Constant(2, delta));
  }
  EXPECT_NEAR(cost(traj, spec, rho), (kf + 1) * 2 * delta * delta, 1e-14);
}

TEST(Cost, MatchesDirectResummation) {
  const ChainModel chain(testing::chain4_params());
  const Vector rho = (Vector(2) << 40.0, 20.0).finished();
  std::mt19937_64 rng(109);
  const int kf = 30;
  const Trajectory traj = simulate(chain, testing::random_vector(rng, 4, 1.0), Vector::Zero(4),
                                   rho, TimeGrid(0.0, kDt, kf));
  CostSpec spec;
  spec.observation = std::make_shared<CoordinateObservation>(std::vector<int>{1, 3}, 4);
  for (int k = 0; k <= kf; ++k) {
    spec.measured.push_back(testing::random_vector(rng, 2, 1.0));
    spec.weights.push_back(std::abs(testing::random_vector(rng, 1, 1.0)[0]));
  }
  spec.terminal_weight = 2.5;
  double expected = 0.0;
  for (int k = 1; k <= kf; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const double e1 = traj[k].q[1] - spec.measured[ks][0];
    const double e3 = traj[k].q[3] - spec.measured[ks][1];
    expected += spec.weights[ks] * (e1 * e1 + e3 * e3);
    if (k == kf) expected += 2.5 * (e1 * e1 + e3 * e3);
  }
  EXPECT_NEAR(cost(traj, spec, rho), expected, 1e-13 * expected);
  spec.measured.pop_back();
  EXPECT_THROW(cost(traj, spec, rho), DimensionError);
}

TEST(AdjointGradient, ZeroWhenCostIgnoresTrajectory) {
  PendulumProblem p(2.0, 40, 0.5);
  p.problem.cost.weights.assign(41, 0.0);
  p.problem.cost.terminal_weight = 0.0;
  const CostAndGradient cg = evaluate_cost_and_gradient(p.problem, Vector::Constant(1, 3.0));
  EXPECT_EQ(cg.cost, 0.0);
  EXPECT_EQ(cg.gradient[0], 0.0);
}

TEST(AdjointGradient, UnreferencedParameterHasZeroGradient) {
  const testing::FreeParticle particle(2, 1.0, 2);
  IdentificationProblem problem;
  problem.model = &particle;
  problem.initial_q = Vector::Zero(2);
  problem.initial_v = Vector::Ones(2);
  problem.grid = TimeGrid(0.0, kDt, 10);
  problem.cost.observation = std::make_shared<CoordinateObservation>(std::vector<int>{0, 1}, 2);
  problem.cost.measured.assign(11, Vector::Constant(2, 3.0));
  const Vector g = evaluate_cost_and_gradient(problem, Vector::Ones(2)).gradient;
  EXPECT_EQ(g, Vector::Zero(2));
}

TEST(AdjointGradient, PendulumMatchesEndToEndFiniteDifferences) {
  PendulumProblem p(2.0, 200, 0.5);
  p.problem.solver.newton_tol = 1e-13;
  const Vector rho = Vector::Constant(1, 2.7);
  const Vector g = evaluate_cost_and_gradient(p.problem, rho).gradient;
  const Vector fd = testing::fd_gradient(
      [&](const Vector& r) { return evaluate_cost_and_gradient(p.problem, r).cost; }, rho);
  EXPECT_LT(std::abs(g[0] - fd[0]) / std::abs(fd[0]), 1e-6);
}

// Same gradient from the backward recursion and from explicit transition-matrix
// products.
TEST(AdjointGradient, MatchesStateTransitionDoubleSum) {
  PendulumProblem p(2.0, 10, 0.5);
  const Vector rho = Vector::Constant(1, 2.7);
  const ForcedModel model(p.model, p.problem.forcing);
  const Trajectory traj = simulate(model, p.problem.initial_q, p.problem.initial_v, rho,
                                   p.problem.grid);
  const auto sens = linearize_trajectory(model, traj, rho);
  const Vector g = adjoint_gradient(traj, sens, p.problem.cost, rho);
  const Vector ref = testing::stm_gradient(traj, sens, p.problem.cost);
  EXPECT_LT((g - ref).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(AdjointGradient, ClosedLoopMatchesFiniteDifferencesPerComponent) {
  const ClosedLoopModel loop = testing::planar_loop(6);
  const Vector rho_data = (Vector(2) << 4.45252, 0.96969).finished();
  std::mt19937_64 rng(113);
  const Vector q0 = testing::deformed_loop_configuration(loop, rho_data, rng, 0.3);
  const Vector v0 = testing::tangent_velocity(loop, q0, rho_data, rng, 1.0);
  const TimeGrid grid(0.0, kDt, 100);
  const Trajectory data = simulate(loop, q0, v0, rho_data, grid);

  IdentificationProblem problem;
  problem.model = &loop;
  problem.initial_q = q0;
  problem.initial_v = v0;
  problem.grid = grid;
  problem.cost.observation = std::make_shared<LinkPositionObservation>(loop, 1);
  for (const DiscreteState& s : data.states) {
    problem.cost.measured.push_back(problem.cost.observation->value(s.q));
  }
  problem.solver.newton_tol = 1e-13;
  const Vector rho = (Vector(2) << 5.0, 1.5).finished();
  const Vector g = evaluate_cost_and_gradient(problem, rho).gradient;
  const Vector fd = testing::fd_gradient(
      [&](const Vector& r) { return evaluate_cost_and_gradient(problem, r).cost; }, rho);
  for (int i = 0; i < 2; ++i) {
    EXPECT_LT(std::abs(g[i] - fd[i]) / (1e-12 + std::abs(fd[i])), 1e-5) << "component " << i;
  }
}

TEST(FeedbackForce, TrackingLaw) {
  const TimeGrid grid(0.0, kDt, 10);
  const TimeSeries torque = sinusoid(grid, 1.0, 3.0);
  Matrix targets(grid.samples(), 2);
  for (int k = 0; k < grid.samples(); ++k) targets.row(k) << 0.1 * k, -0.2 * k;
  const Vector gains = (Vector(2) << 0.0, 4.0).finished();
  const auto f = feedback_force(
      series(grid, (Matrix(grid.samples(), 2) << torque.samples, 2.0 * torque.samples).finished()),
      series(grid, targets), gains, {0, 2}, 3);
  const double t = grid.time(4);
  Vector q(3);
  q << 0.4, 9.0, -0.8;  // exactly on the targets at k = 4
  const ForceTerms on = f->evaluate(q, Vector::Zero(3), Vector::Ones(1), t);
  EXPECT_DOUBLE_EQ(on.value[0], torque.samples(4, 0));
  EXPECT_EQ(on.value[1], 0.0);
  EXPECT_DOUBLE_EQ(on.value[2], 2.0 * torque.samples(4, 0));

  // Gain zero on coordinate 0: playback regardless of the state. Gain 4 on
  // coordinate 2: a disturbance d gives a correction -4 d.
  q[0] += 1.0;
  q[2] += 0.25;
  const ForceTerms off = f->evaluate(q, Vector::Zero(3), Vector::Ones(1), t);
  EXPECT_DOUBLE_EQ(off.value[0], torque.samples(4, 0));
  EXPECT_NEAR(off.value[2] - on.value[2], -1.0, 1e-15);
  EXPECT_EQ(off.dq(2, 2), -4.0);
  EXPECT_EQ(off.dq(0, 0), 0.0);
}

TEST(FeedbackForce, RejectsMismatchedInputs) {
  const TimeGrid grid(0.0, kDt, 10);
  const TimeSeries one = sinusoid(grid, 1.0, 1.0);
  EXPECT_THROW(feedback_force(one, one, Vector::Ones(2), {0}, 2), DimensionError);
  EXPECT_THROW(feedback_force(one, one, Vector::Ones(1), {5}, 2), DimensionError);
  TimeSeries shorter = one;
  shorter.samples.conservativeResize(5, 1);
  EXPECT_THROW(feedback_force(one, shorter, Vector::Ones(1), {0}, 2), DimensionError);
  EXPECT_THROW(feedback_force(one, one, Vector::Constant(1, -1.0), {0}, 2), ConfigError);
}

TEST(Identify, StartingAtTruthStopsImmediately) {
  PendulumProblem p(2.0, 200, 0.5);
  const IdentificationResult r = identify(p.problem, ParameterVector::positive(Vector::Constant(1, 2.0)));
  EXPECT_EQ(r.termination, Termination::kGradTol);
  EXPECT_LE(r.iterations, 2);
  EXPECT_NEAR(r.rho_opt[0], 2.0, 1e-9);
}

TEST(Identify, ArmijoStepsAreLoggedAndMonotone) {
  PendulumProblem p(2.0, 200, 0.5);
  DescentSettings settings;
  settings.grad_tol = 1e-6;
  const IdentificationResult r = identify(p.problem, ParameterVector::positive(Vector::Constant(1, 3.0)), settings);
  ASSERT_GT(r.iterations, 0);
  ASSERT_EQ(r.step_history.size(), static_cast<std::size_t>(r.iterations));
  for (int j = 0; j < r.iterations; ++j) {
    const auto js = static_cast<std::size_t>(j);
    const double g = r.grad_norm_history[js];
    EXPECT_LE(r.cost_history[js + 1],
              r.cost_history[js] - settings.alpha * r.step_history[js] * g * g * (1.0 - 1e-12));
  }
  EXPECT_EQ(r.termination, Termination::kGradTol);
  EXPECT_NEAR(r.rho_opt[0], 2.0, 1e-3);
}

TEST(Identify, ClampsAtLowerBound) {
  PendulumProblem p(0.001, 200, 0.5);
  DescentSettings settings;
  settings.max_iters = 30;
  settings.initial_step = 100.0;
  const IdentificationResult r =
      identify(p.problem, ParameterVector::positive(Vector::Constant(1, 1.0)), settings);
  bool touched = false;
  for (const Vector& rho : r.rho_history) {
    EXPECT_TRUE(std::isfinite(rho[0]));
    EXPECT_GE(rho[0], ParameterVector::kPositiveLowerBound);
    touched = touched || rho[0] == ParameterVector::kPositiveLowerBound;
  }
  EXPECT_TRUE(touched);
  for (double c : r.cost_history) EXPECT_TRUE(std::isfinite(c));
}

TEST(Identify, ProjectedGradientIgnoresOutwardComponentsAtBound) {
  const ParameterVector rho((Vector(3) << 1e-6, 1e-6, 2.0).finished(),
                            Vector::Constant(3, 1e-6));
  const Vector g = projected_gradient(rho, (Vector(3) << 5.0, -5.0, 5.0).finished());
  EXPECT_EQ(g, (Vector(3) << 0.0, -5.0, 5.0).finished());
}

TEST(Identify, LineSearchFailureIsATermination) {
  PendulumProblem p(2.0, 100, 0.5);
  DescentSettings settings;
  settings.initial_step = 1e8;
  settings.max_backtracks = 0;
  const IdentificationResult r =
      identify(p.problem, ParameterVector::positive(Vector::Constant(1, 3.0)), settings);
  EXPECT_EQ(r.termination, Termination::kLineSearchFailure);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_EQ(r.rho_opt[0], 3.0);
}

// A stiffness below 1 makes the force non-finite, so the step solve fails.
class FragileBelowOne final : public Model {
 public:
  explicit FragileBelowOne(const Model& base) : base_(base) {}
  int config_dim() const override { return base_.config_dim(); }
  int param_dim() const override { return base_.param_dim(); }
  double kinetic_energy(const Vector& q, const Vector& v, const Vector& rho) const override {
    return base_.kinetic_energy(q, v, rho);
  }
  double potential_energy(const Vector& q, const Vector& rho) const override {
    return base_.potential_energy(q, rho);
  }
  LagrangianTerms lagrangian_terms(const Vector& q, const Vector& v,
                                   const Vector& rho) const override {
    return base_.lagrangian_terms(q, v, rho);
  }
  ForceTerms force(const Vector& q, const Vector& v, const Vector& rho, double t) const override {
    ForceTerms f = base_.force(q, v, rho, t);
    if (rho[0] < 1.0) f.value.setConstant(std::numeric_limits<double>::quiet_NaN());
    return f;
  }

 private:
  const Model& base_;
};

TEST(Identify, SolverFailureAtCandidateIsRejected) {
  PendulumProblem p(2.0, 100, 0.5);
  const FragileBelowOne fragile(p.model);
  p.problem.model = &fragile;
  DescentSettings settings;
  settings.initial_step = 1e4;  // the first trial lands far below 1
  settings.grad_tol = 1e-6;
  const IdentificationResult r =
      identify(p.problem, ParameterVector::positive(Vector::Constant(1, 3.0)), settings);
  EXPECT_EQ(r.termination, Termination::kGradTol);
  EXPECT_NEAR(r.rho_opt[0], 2.0, 1e-3);
}

}  // namespace
}  // namespace varid
