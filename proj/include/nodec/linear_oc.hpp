#pragma once

#include <cmath>
#include <cstddef>

#include "nodec/error.hpp"
#include "nodec/linalg.hpp"
#include "nodec/matrix.hpp"
#include "nodec/quadrature.hpp"

namespace nodec {

// Linear time-invariant controlled dynamics dx/dt = A x + B u.
struct LinearSystem {
  Matrix A, B;

  std::size_t dim() const { return A.rows(); }
  std::size_t control_dim() const { return B.cols(); }

  Vector rhs(double, const Vector& x, const Vector& u) const {
    Vector dx = A * x;
    const Vector bu = B * u;
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += bu[i];
    return dx;
  }

  void rhs_vjp(double, const Vector&, const Vector&, const Vector& v,
               Vector& xbar, Vector& ubar) const {
    const Vector atv = transpose_times(A, v);
    const Vector btv = transpose_times(B, v);
    for (std::size_t i = 0; i < xbar.size(); ++i) xbar[i] += atv[i];
    for (std::size_t i = 0; i < ubar.size(); ++i) ubar[i] += btv[i];
  }
};

// Steering task bundle: drive x0 to x_target over [0, horizon].
struct LinearControlProblem {
  Matrix A;
  Matrix B;
  Vector x0;
  Vector x_target;
  double horizon = 1.0;

  LinearSystem system() const { return LinearSystem{A, B}; }

  void validate() const {
    if (!A.square()) throw DimensionError("A must be square");
    if (B.rows() != A.rows()) throw DimensionError("B row count must match A");
    if (x0.size() != A.rows() || x_target.size() != A.rows())
      throw DimensionError("state vectors must match A");
    if (!(horizon > 0.0)) throw ParamError("horizon must be positive");
  }
};

// Controllability Gramian W(T) = int_0^T e^{At} B B^T e^{A^T t} dt by
// adaptive quadrature over the matrix-exponential integrand.
inline Matrix gramian(const LinearControlProblem& p, double tol = 1e-10) {
  p.validate();
  if (!(tol > 0.0)) throw ParamError("gramian tolerance must be positive");
  const std::size_t n = p.A.rows();
  auto integrand = [&](double t) {
    const Matrix eb = mat_exp(p.A, t) * p.B;  // n x m
    Matrix g(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < eb.cols(); ++k) s += eb(i, k) * eb(j, k);
        g(i, j) = s;
      }
    return g;
  };
  return integrate_matrix(integrand, 0.0, p.horizon, tol);
}

// Difference between the target and the free evolution of x0.
inline Vector free_evolution_gap(const LinearControlProblem& p) {
  const Vector drift = mat_exp(p.A, p.horizon) * p.x0;
  return vec_sub(p.x_target, drift);
}

// Precomputed pieces of the minimum-energy control law. The Gramian is
// inverted once (Gaussian elimination with partial pivoting) and refused
// outright when its condition estimate exceeds 1e12: a silently poor
// inverse would corrupt the ground truth NODEC is judged against.
struct MinimumEnergyControl {
  LinearControlProblem problem;
  Matrix W;
  Vector gramian_solve_gap;  // W^{-1} v(T)
  double energy = 0.0;

  Vector operator()(double t) const {
    const Matrix e = mat_exp(problem.A, problem.horizon - t);
    // u*(t) = B^T e^{A^T (T-t)} W^{-1} v(T)
    const Vector tmp = transpose_times(e, gramian_solve_gap);
    return transpose_times(problem.B, tmp);
  }
};

inline MinimumEnergyControl make_minimum_energy_control(
    const LinearControlProblem& p, double tol = 1e-10) {
  MinimumEnergyControl oc;
  oc.problem = p;
  oc.W = gramian(p, tol);
  const double cond = cond_inf(oc.W);
  if (!(cond < 1e12))
    throw SingularError("controllability Gramian is numerically singular (condition " +
                        std::to_string(cond) + "); some direction is uncontrollable");
  const Vector v = free_evolution_gap(p);
  oc.gramian_solve_gap = lu_solve(lu_factor(oc.W), v);
  oc.energy = dot(v, oc.gramian_solve_gap);
  return oc;
}

inline Vector optimal_control(const LinearControlProblem& p, double t) {
  return make_minimum_energy_control(p)(t);
}

// Minimum steering energy v(T)^T W(T)^{-1} v(T).
inline double oc_energy(const LinearControlProblem& p, double tol = 1e-10) {
  return make_minimum_energy_control(p, tol).energy;
}

// The two-node benchmark system: A = [[1,0],[1,0]], B = (1,0)^T,
// x0 = (1, 0.5), target = origin, T = 1.
inline LinearControlProblem two_node_problem() {
  LinearControlProblem p;
  p.A = Matrix(2, 2, {1.0, 0.0, 1.0, 0.0});
  p.B = Matrix(2, 1, {1.0, 0.0});
  p.x0 = {1.0, 0.5};
  p.x_target = {0.0, 0.0};
  p.horizon = 1.0;
  return p;
}

}  // namespace nodec
