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

// Models, oracles and helpers shared by the unit tests and the acceptance
// runner.

#ifndef VARID_TESTS_SUPPORT_FIXTURES_HPP_
#define VARID_TESTS_SUPPORT_FIXTURES_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "varid/chain.hpp"
#include "varid/errors.hpp"
#include "varid/integrator.hpp"
#include "varid/model.hpp"
#include "varid/pendulum.hpp"

#ifndef VARID_SOURCE_DIR
#error "VARID_SOURCE_DIR must point at the repository root"
#endif

namespace varid::testing {

inline std::filesystem::path source_path(const std::string& relative) {
  return std::filesystem::path(VARID_SOURCE_DIR) / relative;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("varid_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// m/2 |v|^2 on n coordinates, every coordinate cyclic. The parameter vector is
// carried but never referenced.
class FreeParticle final : public Model {
 public:
  FreeParticle(int n, double mass, int nrho = 1) : n_(n), mass_(mass), nrho_(nrho) {}

  int config_dim() const override { return n_; }
  int param_dim() const override { return nrho_; }
  double kinetic_energy(const Vector&, const Vector& v, const Vector&) const override {
    return 0.5 * mass_ * v.squaredNorm();
  }
  double potential_energy(const Vector&, const Vector&) const override { return 0.0; }
  LagrangianTerms lagrangian_terms(const Vector& q, const Vector& v,
                                   const Vector& rho) const override {
    LagrangianTerms L;
    L.value = kinetic_energy(q, v, rho);
    L.dq = Vector::Zero(n_);
    L.dv = mass_ * v;
    L.dqq = Matrix::Zero(n_, n_);
    L.dqv = Matrix::Zero(n_, n_);
    L.dvv = mass_ * Matrix::Identity(n_, n_);
    L.dq_drho = Matrix::Zero(n_, nrho_);
    L.dv_drho = Matrix::Zero(n_, nrho_);
    return L;
  }

 private:
  int n_;
  double mass_;
  int nrho_;
};

// Forwards to `base` but shifts Lq by a constant, leaving L untouched.
class CorruptedLq final : public Model {
 public:
  CorruptedLq(const Model& base, double shift) : base_(base), shift_(shift) {}

  int config_dim() const override { return base_.config_dim(); }
  int constraint_dim() const override { return base_.constraint_dim(); }
  int param_dim() const override { return base_.param_dim(); }
  double kinetic_energy(const Vector& q, const Vector& v, const Vector& rho) const override {
    return base_.kinetic_energy(q, v, rho);
  }
  double potential_energy(const Vector& q, const Vector& rho) const override {
    return base_.potential_energy(q, rho);
  }
  LagrangianTerms lagrangian_terms(const Vector& q, const Vector& v,
                                   const Vector& rho) const override {
    LagrangianTerms L = base_.lagrangian_terms(q, v, rho);
    L.dq.array() += shift_;
    return L;
  }
  ForceTerms force(const Vector& q, const Vector& v, const Vector& rho, double t) const override {
    return base_.force(q, v, rho, t);
  }
  ConstraintTerms constraint(const Vector& q, const Vector& rho) const override {
    return base_.constraint(q, rho);
  }

 private:
  const Model& base_;
  double shift_;
};

// Two coordinates, only the first carries inertia: M_{k+1} is singular.
class MasslessCoordinate final : public Model {
 public:
  int config_dim() const override { return 2; }
  int param_dim() const override { return 1; }
  double kinetic_energy(const Vector&, const Vector& v, const Vector&) const override {
    return 0.5 * v[0] * v[0];
  }
  double potential_energy(const Vector&, const Vector&) const override { return 0.0; }
  LagrangianTerms lagrangian_terms(const Vector& q, const Vector& v,
                                   const Vector& rho) const override {
    LagrangianTerms L;
    L.value = kinetic_energy(q, v, rho);
    L.dq = Vector::Zero(2);
    L.dv = Vector::Zero(2);
    L.dv[0] = v[0];
    L.dqq = Matrix::Zero(2, 2);
    L.dqv = Matrix::Zero(2, 2);
    L.dvv = Matrix::Zero(2, 2);
    L.dvv(0, 0) = 1.0;
    L.dq_drho = Matrix::Zero(2, 1);
    L.dv_drho = Matrix::Zero(2, 1);
    return L;
  }
};

// Scales Lvv only. The step solution is unchanged (Newton still converges
// to the same root) but any sensitivity built from the Hessian is off.
class ScaledLvv final : public Model {
 public:
  ScaledLvv(const Model& base, double factor) : base_(base), factor_(factor) {}

  int config_dim() const override { return base_.config_dim(); }
  int constraint_dim() const override { return base_.constraint_dim(); }
  int param_dim() const override { return base_.param_dim(); }
  double kinetic_energy(const Vector& q, const Vector& v, const Vector& rho) const override {
    return base_.kinetic_energy(q, v, rho);
  }
  double potential_energy(const Vector& q, const Vector& rho) const override {
    return base_.potential_energy(q, rho);
  }
  LagrangianTerms lagrangian_terms(const Vector& q, const Vector& v,
                                   const Vector& rho) const override {
    LagrangianTerms L = base_.lagrangian_terms(q, v, rho);
    L.dvv *= factor_;
    return L;
  }
  ForceTerms force(const Vector& q, const Vector& v, const Vector& rho, double t) const override {
    return base_.force(q, v, rho, t);
  }
  ConstraintTerms constraint(const Vector& q, const Vector& rho) const override {
    return base_.constraint(q, rho);
  }

 private:
  const Model& base_;
  double factor_;
};

// Planar free particle with the constraint q_0 = 0 stated twice, so Dh has
// rank 1 with two rows.
class RedundantConstraint final : public Model {
 public:
  int config_dim() const override { return 2; }
  int constraint_dim() const override { return 2; }
  int param_dim() const override { return 1; }
  double kinetic_energy(const Vector& q, const Vector& v, const Vector& rho) const override {
    return particle_.kinetic_energy(q, v, rho);
  }
  double potential_energy(const Vector&, const Vector&) const override { return 0.0; }
  LagrangianTerms lagrangian_terms(const Vector& q, const Vector& v,
                                   const Vector& rho) const override {
    return particle_.lagrangian_terms(q, v, rho);
  }
  ConstraintTerms constraint(const Vector& q, const Vector&) const override {
    ConstraintTerms c;
    c.value = Vector::Constant(2, q[0]);
    c.jacobian = Matrix::Zero(2, 2);
    c.jacobian.col(0).setOnes();
    c.hessians.assign(2, Matrix::Zero(2, 2));
    c.drho = Matrix::Zero(2, 1);
    c.jacobian_drho.assign(1, Matrix::Zero(2, 2));
    return c;
  }

 private:
  FreeParticle particle_{2, 1.0};
};

inline PendulumModel spring_pendulum(double damping = 0.0) {
  PendulumParams p;
  p.spring = true;
  p.damping = damping;
  return PendulumModel(p);
}

inline ChainParams chain4_params() {
  ChainParams p;
  p.link_lengths = {1.0, 0.8, 0.6, 0.5};
  p.link_masses = {1.0, 0.7, 0.5, 0.4};
  p.rest_angles = {0.3, -0.2, 0.25, -0.15};
  p.stiffness_map = {0, 1, 0, 1};
  p.damping = 0.05;
  return p;
}

inline std::vector<int> alternating_map(int n) {
  std::vector<int> m(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) m[static_cast<std::size_t>(i)] = i % 2;
  return m;
}

inline ClosedLoopModel planar_loop(int n_links, double damping = 0.01) {
  return ClosedLoopModel::regular_polygon(n_links, 0.355, 0.132, alternating_map(n_links), 0.0,
                                          damping);
}

inline Vector random_vector(std::mt19937_64& rng, int n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

// Feasible loop configuration: the reference shape pushed by `scale` per joint
// and projected back.
inline Vector deformed_loop_configuration(const ClosedLoopModel& loop, const Vector& rho,
                                          std::mt19937_64& rng, double scale) {
  const Vector guess = loop.reference_configuration() +
                       random_vector(rng, loop.config_dim(), scale);
  return project_to_constraint(loop, guess, rho, 1e-13);
}

// Velocity in the null space of Dh(q).
inline Vector tangent_velocity(const Model& model, const Vector& q, const Vector& rho,
                               std::mt19937_64& rng, double scale) {
  Vector v = random_vector(rng, model.config_dim(), scale);
  if (model.constraint_dim() == 0) return v;
  const Matrix J = model.constraint(q, rho).jacobian;
  return v - J.transpose() * (J * J.transpose()).ldlt().solve(J * v);
}

// Central difference step used throughout: 1e-6 (1 + |x|).
inline double fd_step(double x) { return 1e-6 * (1.0 + std::abs(x)); }

// Central-difference Jacobian of a vector function.
template <class F>
Matrix fd_jacobian(F&& f, const Vector& x) {
  const Vector f0 = f(x);
  Matrix J(f0.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = fd_step(x[i]);
    Vector xp = x;
    Vector xm = x;
    xp[i] += h;
    xm[i] -= h;
    J.col(i) = (f(xp) - f(xm)) / (xp[i] - xm[i]);
  }
  return J;
}

template <class F>
Vector fd_gradient(F&& f, const Vector& x) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = fd_step(x[i]);
    Vector xp = x;
    Vector xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (xp[i] - xm[i]);
  }
  return g;
}

// max |a - b| / max |b|; the absolute error when b vanishes.
inline double max_rel_error(const Matrix& actual, const Matrix& expected) {
  if (actual.size() == 0 && expected.size() == 0) return 0.0;
  const double diff = (actual - expected).cwiseAbs().maxCoeff();
  const double scale = expected.cwiseAbs().maxCoeff();
  return scale > 0.0 ? diff / scale : diff;
}

// Least-squares slope of y against its index.
inline double regression_slope(const std::vector<double>& y) {
  const double n = static_cast<double>(y.size());
  const double xbar = 0.5 * (n - 1.0);
  double ybar = 0.0;
  for (double v : y) ybar += v;
  ybar /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double dx = static_cast<double>(i) - xbar;
    sxy += dx * (y[i] - ybar);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace varid::testing

#endif  // VARID_TESTS_SUPPORT_FIXTURES_HPP_
