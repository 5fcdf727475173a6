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

#include "varid/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>

#include <Eigen/Dense>

#include "varid/discretization.hpp"
#include "varid/errors.hpp"

namespace varid {
namespace {

using VectorFn = std::function<Vector(const Vector&)>;

double fd_step(const CheckOptions& options, double x) {
  return options.fd_step * (1.0 + std::abs(x));
}

// Central-difference Jacobian of f at x, with the roundoff level of the
// quotients: differences below eps * max|f| / h are not resolvable.
struct FdJacobian {
  Matrix J;
  double floor = 0.0;
};

FdJacobian fd_jacobian(const VectorFn& f, const Vector& x, const CheckOptions& options) {
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  FdJacobian out;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = fd_step(options, x[i]);
    Vector xp = x;
    Vector xm = x;
    xp[i] += h;
    xm[i] -= h;
    const Vector fp = f(xp);
    const Vector fm = f(xm);
    if (i == 0) out.J.resize(fp.size(), x.size());
    out.J.col(i) = (fp - fm) / (2.0 * h);
    if (fp.size() > 0) {
      const double fmax = std::max(fp.cwiseAbs().maxCoeff(), fm.cwiseAbs().maxCoeff());
      out.floor = std::max(out.floor, kEps * fmax / h);
    }
  }
  return out;
}

double fd_error(const Matrix& analytic, const FdJacobian& fd) {
  return relative_error(analytic, fd.J, fd.floor);
}

Vector scalar(double v) { return Vector::Constant(1, v); }

// Derivative of a matrix-valued function, one matrix per input coordinate,
// compared entrywise with `expected[i]`.
double compare_stack(const std::function<Matrix(const Vector&)>& f, const Vector& x,
                     const std::vector<Matrix>& expected, const CheckOptions& options) {
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = fd_step(options, x[i]);
    Vector xp = x;
    Vector xm = x;
    xp[i] += h;
    xm[i] -= h;
    const Matrix fp = f(xp);
    const Matrix fm = f(xm);
    const double fmax = fp.size() == 0 ? 0.0 : std::max(fp.cwiseAbs().maxCoeff(), fm.cwiseAbs().maxCoeff());
    worst = std::max(worst, relative_error(expected[static_cast<std::size_t>(i)],
                                           (fp - fm) / (2.0 * h), kEps * fmax / h));
  }
  return worst;
}

struct Probe {
  Vector d;  // q1 - q0
  Vector p1;
  Vector lambda;
};

// Step equations written in the increment d = q1 - q0. Evaluating the
// midpoint velocity from d instead of from a rounded q1 keeps the 1/dt
// amplification of rounding out of the momentum difference quotients.
struct IncrementResidual {
  Vector r;
  Vector p1;
};

IncrementResidual increment_residual(const Model& model, const DiscreteState& state,
                                     const Vector& d, const Vector& lambda, const Vector& rho,
                                     double t_k, double dt) {
  const int nq = model.config_dim();
  const int nh = model.constraint_dim();
  const Vector qm = state.q + 0.5 * d;
  const Vector vm = d / dt;
  const LagrangianTerms L = model.lagrangian_terms(qm, vm, rho);
  const ForceTerms F = model.force(qm, vm, rho, t_k + 0.5 * dt);
  IncrementResidual out;
  out.r.resize(nq + nh);
  out.r.head(nq) = state.p + 0.5 * dt * L.dq - L.dv + dt * F.value;
  if (nh > 0) {
    out.r.head(nq) -= model.constraint(state.q, rho).jacobian.transpose() * lambda;
    out.r.tail(nh) = model.constraint(state.q + d, rho).value;
  }
  out.p1 = 0.5 * dt * L.dq + L.dv;
  return out;
}

// Converged step followed by Newton corrections on the increment, so that
// solver tolerance does not pollute the difference quotients.
Probe probe_step(const Model& model, const DiscreteState& state, const DiscreteState& guess,
                 const Vector& rho, double t_k, double dt, const CheckOptions& options) {
  DiscreteState start = state;
  start.lambda = guess.lambda;
  const Vector previous = 2.0 * state.q - guess.q;
  SolverSettings settings = options.probe_solver;
  settings.predictor = Predictor::kLinearExtrapolation;
  const StepResult r = step_unchecked(model, start, rho, t_k, dt, settings, &previous);

  const int nq = model.config_dim();
  Vector d = r.next.q - state.q;
  Vector lambda = r.next.lambda;
  IncrementResidual res = increment_residual(model, state, d, lambda, rho, t_k, dt);
  for (int it = 0; it < 2; ++it) {
    const Matrix K = step_jacobian(model, state.q, state.q + d, rho, t_k, t_k + dt);
    const Vector delta = K.partialPivLu().solve(res.r);
    d -= delta.head(nq);
    lambda -= delta.tail(model.constraint_dim());
    res = increment_residual(model, state, d, lambda, rho, t_k, dt);
  }
  return {d, res.p1, lambda};
}

}  // namespace

double relative_error(const Matrix& actual, const Matrix& expected, double floor) {
  if (actual.rows() != expected.rows() || actual.cols() != expected.cols()) {
    return std::numeric_limits<double>::infinity();
  }
  if (actual.size() == 0) return 0.0;
  const double diff = (actual - expected).cwiseAbs().maxCoeff();
  const double scale = expected.cwiseAbs().maxCoeff();
  if (!std::isfinite(diff)) return std::numeric_limits<double>::infinity();
  const double excess = diff - floor;
  if (excess <= 0.0) return 0.0;
  return excess / (scale + floor);
}

void CheckReport::record(const std::string& name, double error, double tolerance) {
  for (CheckEntry& e : entries_) {
    if (e.name == name) {
      if (!(error <= e.max_error)) e.max_error = error;
      e.tolerance = tolerance;
      ++e.samples;
      return;
    }
  }
  entries_.push_back({name, error, tolerance, 1});
}

void CheckReport::merge(const CheckReport& other) {
  for (const CheckEntry& e : other.entries_) {
    CheckEntry* mine = nullptr;
    for (CheckEntry& m : entries_) {
      if (m.name == e.name) mine = &m;
    }
    if (mine == nullptr) {
      entries_.push_back(e);
    } else {
      if (!(e.max_error <= mine->max_error)) mine->max_error = e.max_error;
      mine->samples += e.samples;
      mine->tolerance = e.tolerance;
    }
  }
}

bool CheckReport::passed() const {
  return std::all_of(entries_.begin(), entries_.end(),
                     [](const CheckEntry& e) { return e.passed(); });
}

const CheckEntry* CheckReport::find(const std::string& name) const {
  for (const CheckEntry& e : entries_) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

std::vector<std::string> CheckReport::failures() const {
  std::vector<std::string> out;
  for (const CheckEntry& e : entries_) {
    if (!e.passed()) out.push_back(e.name);
  }
  return out;
}

CheckReport check_model_derivatives(const Model& model, const Vector& q, const Vector& v,
                                    const Vector& rho, double t, const CheckOptions& options) {
  check_dims(model, q, rho);
  const double tol = options.tolerance;
  CheckReport report;
  const LagrangianTerms L = model.lagrangian_terms(q, v, rho);

  report.record("L", relative_error(scalar(L.value), scalar(model.lagrangian(q, v, rho))), tol);
  const FdJacobian Lq = fd_jacobian([&](const Vector& x) { return scalar(model.lagrangian(x, v, rho)); },
                                q, options);
  report.record("Lq", fd_error(L.dq.transpose(), Lq), tol);
  const FdJacobian Lv = fd_jacobian([&](const Vector& x) { return scalar(model.lagrangian(q, x, rho)); },
                                v, options);
  report.record("Lv", fd_error(L.dv.transpose(), Lv), tol);

  auto Lq_at = [&](const Vector& qq, const Vector& vv, const Vector& rr) {
    return model.lagrangian_terms(qq, vv, rr).dq;
  };
  auto Lv_at = [&](const Vector& qq, const Vector& vv, const Vector& rr) {
    return model.lagrangian_terms(qq, vv, rr).dv;
  };
  report.record("Lqq", fd_error(L.dqq, fd_jacobian([&](const Vector& x) {
                                        return Lq_at(x, v, rho);
                                      }, q, options)), tol);
  report.record("Lqv", fd_error(L.dqv, fd_jacobian([&](const Vector& x) {
                                        return Lq_at(q, x, rho);
                                      }, v, options)), tol);
  report.record("Lvv", fd_error(L.dvv, fd_jacobian([&](const Vector& x) {
                                        return Lv_at(q, x, rho);
                                      }, v, options)), tol);
  if (rho.size() > 0) {
    report.record("Lq_rho", fd_error(L.dq_drho, fd_jacobian([&](const Vector& x) {
                                             return Lq_at(q, v, x);
                                           }, rho, options)), tol);
    report.record("Lv_rho", fd_error(L.dv_drho, fd_jacobian([&](const Vector& x) {
                                             return Lv_at(q, v, x);
                                           }, rho, options)), tol);
  }

  const ForceTerms F = model.force(q, v, rho, t);
  report.record("Fq", fd_error(F.dq, fd_jacobian([&](const Vector& x) {
                                       return model.force(x, v, rho, t).value;
                                     }, q, options)), tol);
  report.record("Fv", fd_error(F.dv, fd_jacobian([&](const Vector& x) {
                                       return model.force(q, x, rho, t).value;
                                     }, v, options)), tol);
  if (rho.size() > 0) {
    report.record("F_rho", fd_error(F.drho, fd_jacobian([&](const Vector& x) {
                                            return model.force(q, v, x, t).value;
                                          }, rho, options)), tol);
  }

  if (model.constraint_dim() > 0) {
    const ConstraintTerms c = model.constraint(q, rho);
    report.record("Dh", fd_error(c.jacobian, fd_jacobian([&](const Vector& x) {
                                         return model.constraint(x, rho).value;
                                       }, q, options)), tol);
    double ddh = 0.0;
    for (int r = 0; r < model.constraint_dim(); ++r) {
      const FdJacobian fd = fd_jacobian([&](const Vector& x) -> Vector {
        return model.constraint(x, rho).jacobian.row(r).transpose();
      }, q, options);
      ddh = std::max(ddh, fd_error(c.hessians[static_cast<std::size_t>(r)], fd));
    }
    report.record("DDh", ddh, tol);
    if (rho.size() > 0) {
      report.record("h_rho", fd_error(c.drho, fd_jacobian([&](const Vector& x) {
                                              return model.constraint(q, x).value;
                                            }, rho, options)), tol);
      report.record("Dh_rho",
                    compare_stack([&](const Vector& x) { return model.constraint(q, x).jacobian; },
                                  rho, c.jacobian_drho, options),
                    tol);
    }
  }
  return report;
}

CheckReport check_slot_derivatives(const Model& model, const Vector& q0, const Vector& q1,
                                   const Vector& rho, double t0, double t1,
                                   const CheckOptions& options) {
  const double tol = options.tolerance;
  const double dt = t1 - t0;
  const DiscreteSlotDerivatives d = slot_derivatives(model, q0, q1, rho, t0, t1);
  CheckReport report;

  auto Ld = [&](const Vector& a, const Vector& b, const Vector& r) {
    return discrete_lagrangian(model, a, b, r, dt);
  };
  auto slots = [&](const Vector& a, const Vector& b, const Vector& r) {
    return slot_derivatives(model, a, b, r, t0, t1);
  };
  auto Fdm = [&](const Vector& a, const Vector& b, const Vector& r) {
    return discrete_force_minus(model, a, b, r, t0, t1);
  };

  report.record("D1Ld", fd_error(d.D1Ld.transpose(), fd_jacobian([&](const Vector& x) {
                                         return scalar(Ld(x, q1, rho));
                                       }, q0, options)), tol);
  report.record("D2Ld", fd_error(d.D2Ld.transpose(), fd_jacobian([&](const Vector& x) {
                                         return scalar(Ld(q0, x, rho));
                                       }, q1, options)), tol);
  report.record("D11Ld", fd_error(d.D11Ld, fd_jacobian([&](const Vector& x) {
                                          return slots(x, q1, rho).D1Ld;
                                        }, q0, options)), tol);
  report.record("D12Ld", fd_error(d.D12Ld, fd_jacobian([&](const Vector& x) {
                                          return slots(q0, x, rho).D1Ld;
                                        }, q1, options)), tol);
  report.record("D21Ld", fd_error(Matrix(d.D12Ld.transpose()), fd_jacobian([&](const Vector& x) {
                                          return slots(x, q1, rho).D2Ld;
                                        }, q0, options)), tol);
  report.record("D22Ld", fd_error(d.D22Ld, fd_jacobian([&](const Vector& x) {
                                          return slots(q0, x, rho).D2Ld;
                                        }, q1, options)), tol);
  if (rho.size() > 0) {
    report.record("D3D1Ld", fd_error(d.D3D1Ld, fd_jacobian([&](const Vector& x) {
                                             return slots(q0, q1, x).D1Ld;
                                           }, rho, options)), tol);
    report.record("D3D2Ld", fd_error(d.D3D2Ld, fd_jacobian([&](const Vector& x) {
                                             return slots(q0, q1, x).D2Ld;
                                           }, rho, options)), tol);
    report.record("D3Fd-", fd_error(d.D3Fdm, fd_jacobian([&](const Vector& x) {
                                            return Fdm(q0, q1, x);
                                          }, rho, options)), tol);
  }
  report.record("D1Fd-", fd_error(d.D1Fdm, fd_jacobian([&](const Vector& x) {
                                          return Fdm(x, q1, rho);
                                        }, q0, options)), tol);
  report.record("D2Fd-", fd_error(d.D2Fdm, fd_jacobian([&](const Vector& x) {
                                          return Fdm(q0, x, rho);
                                        }, q1, options)), tol);
  return report;
}

CheckReport check_step_linearization(const Model& model, const DiscreteState& state,
                                     const Vector& rho, double t_k, double dt,
                                     const CheckOptions& options) {
  const int nq = model.config_dim();
  const int nh = model.constraint_dim();
  const int nrho = model.param_dim();

  DiscreteState base = state;
  if (base.lambda.size() != nh) base.lambda = Vector::Zero(nh);
  const StepResult r = step_unchecked(model, base, rho, t_k, dt, options.probe_solver);
  const Probe center = probe_step(model, base, r.next, rho, t_k, dt, options);
  DiscreteState next{base.q + center.d, center.p1, center.lambda};
  const StepSensitivity s = linearize_step(model, base, next, rho, t_k, dt);

  // Columns of d(q1, p1, lambda) / d(q, p, rho).
  Matrix fd_q1(nq, 2 * nq + nrho);
  Matrix fd_p1(nq, 2 * nq + nrho);
  Matrix fd_lam(nh, 2 * nq + nrho);
  for (int col = 0; col < 2 * nq + nrho; ++col) {
    auto shifted = [&](double sign) {
      DiscreteState st = base;
      Vector rr = rho;
      double h;
      if (col < nq) {
        h = fd_step(options, st.q[col]);
        st.q[col] += sign * h;
      } else if (col < 2 * nq) {
        h = fd_step(options, st.p[col - nq]);
        st.p[col - nq] += sign * h;
      } else {
        h = fd_step(options, rr[col - 2 * nq]);
        rr[col - 2 * nq] += sign * h;
      }
      return std::pair{probe_step(model, st, next, rr, t_k, dt, options), h};
    };
    const auto [plus, h] = shifted(+1.0);
    const auto [minus, h2] = shifted(-1.0);
    (void)h2;
    fd_q1.col(col) = (plus.d - minus.d) / (2.0 * h);
    if (col < nq) fd_q1(col, col) += 1.0;
    fd_p1.col(col) = (plus.p1 - minus.p1) / (2.0 * h);
    if (nh > 0) fd_lam.col(col) = (plus.lambda - minus.lambda) / (2.0 * h);
  }

  // Roundoff floors of the quotients: rounding of the step residual (the
  // constraint rows round at the scale of q itself) pushed through the KKT
  // inverse, then into p1 through D22Ld. Differences below these levels are
  // not resolvable with the pinned step size.
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  const Vector q1 = base.q + center.d;
  const double t1 = t_k + dt;
  const MidpointSample mid = midpoint(base.q, q1, t_k, t1);
  const LagrangianTerms L = model.lagrangian_terms(mid.q, mid.v, rho);
  const ForceTerms F = model.force(mid.q, mid.v, rho, mid.t);
  Vector r_noise(nq + nh);
  r_noise.head(nq) = base.p.cwiseAbs() + 0.5 * dt * L.dq.cwiseAbs() + L.dv.cwiseAbs() +
                     dt * F.value.cwiseAbs();
  if (nh > 0) {
    const Matrix Dh0 = model.constraint(base.q, rho).jacobian;
    const Matrix Dh1 = model.constraint(q1, rho).jacobian;
    r_noise.head(nq) += Dh0.transpose().cwiseAbs() * center.lambda.cwiseAbs();
    r_noise.tail(nh) = Dh1.cwiseAbs() * q1.cwiseAbs();
  }
  r_noise *= kEps;
  const Matrix Kinv = step_jacobian(model, base.q, q1, rho, t_k, t1).inverse();
  // Root-sum-square: rounding errors of different terms are independent.
  const Vector x_noise = (Kinv.cwiseAbs2() * r_noise.cwiseAbs2()).cwiseSqrt();
  const Matrix D22 = slot_derivatives(model, base.q, q1, rho, t_k, t1).D22Ld;
  const double d_noise = x_noise.head(nq).maxCoeff();
  const double p_noise =
      (D22.cwiseAbs2() * x_noise.head(nq).cwiseAbs2()).cwiseSqrt().maxCoeff() +
      kEps * center.p1.cwiseAbs().maxCoeff();
  const double lam_noise = nh > 0 ? x_noise.tail(nh).maxCoeff() : 0.0;
  auto min_step = [&](const Vector& x) {
    double h = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < x.size(); ++i) h = std::min(h, fd_step(options, x[i]));
    return h;
  };
  const double hq = min_step(base.q);
  const double hp = min_step(base.p);
  const double hr = min_step(rho);

  const double tol = options.tolerance;
  CheckReport report;
  report.record("A_qq", relative_error(s.A.topLeftCorner(nq, nq), fd_q1.leftCols(nq), d_noise / hq),
                tol);
  report.record("A_qp",
                relative_error(s.A.topRightCorner(nq, nq), fd_q1.middleCols(nq, nq), d_noise / hp),
                tol);
  report.record("A_pq",
                relative_error(s.A.bottomLeftCorner(nq, nq), fd_p1.leftCols(nq), p_noise / hq), tol);
  report.record("A_pp",
                relative_error(s.A.bottomRightCorner(nq, nq), fd_p1.middleCols(nq, nq), p_noise / hp),
                tol);
  if (nrho > 0) {
    report.record("B_q", relative_error(s.B.topRows(nq), fd_q1.rightCols(nrho), d_noise / hr), tol);
    report.record("B_p", relative_error(s.B.bottomRows(nq), fd_p1.rightCols(nrho), p_noise / hr),
                  tol);
  }
  if (nh > 0) {
    const double mtol = options.multiplier_tolerance;
    report.record("dlambda_dq",
                  relative_error(s.dlambda_dq, fd_lam.leftCols(nq), lam_noise / hq), mtol);
    report.record("dlambda_dp",
                  relative_error(s.dlambda_dp, fd_lam.middleCols(nq, nq), lam_noise / hp), mtol);
    if (nrho > 0) {
      report.record("dlambda_drho",
                    relative_error(s.dlambda_drho, fd_lam.rightCols(nrho), lam_noise / hr), mtol);
    }
  }
  return report;
}

CheckReport check_adjoint_gradient(const IdentificationProblem& problem, const Vector& rho,
                                   const CheckOptions& options) {
  IdentificationProblem tight = problem;
  tight.solver = options.gradient_solver;
  const CostAndGradient analytic = evaluate_cost_and_gradient(tight, rho);

  const Model* model = problem.model;
  std::optional<ForcedModel> forced;
  if (problem.forcing) forced.emplace(*model, problem.forcing);
  const Model& m = forced ? *forced : *model;
  auto J = [&](const Vector& r) {
    const Trajectory traj = simulate(m, tight.initial_q, tight.initial_v, r, tight.grid, tight.solver);
    return scalar(cost(traj, tight.cost, r));
  };
  const Vector fd = fd_jacobian(J, rho, options).J.transpose();

  CheckReport report;
  const double err = (analytic.gradient - fd).cwiseAbs().maxCoeff() / (1.0 + fd.cwiseAbs().maxCoeff());
  report.record("gradient", err, options.gradient_tolerance);
  return report;
}

CheckReport check_along_trajectory(const Model& model, const Trajectory& traj, const Vector& rho,
                                   const std::vector<int>& step_indices,
                                   const CheckOptions& options) {
  CheckReport report;
  const double dt = traj.grid.dt();
  for (int k : step_indices) {
    if (k < 0 || k >= traj.grid.steps()) {
      throw DimensionError("check_along_trajectory: step " + std::to_string(k) + " out of range");
    }
    const Vector& q0 = traj[k].q;
    const Vector& q1 = traj[k + 1].q;
    const double t0 = traj.grid.time(k);
    const MidpointSample mid = midpoint(q0, q1, t0, t0 + dt);
    report.merge(check_model_derivatives(model, mid.q, mid.v, rho, mid.t, options));
    report.merge(check_slot_derivatives(model, q0, q1, rho, t0, t0 + dt, options));
    report.merge(check_step_linearization(model, traj[k], rho, t0, dt, options));
  }
  return report;
}

}  // namespace varid
