#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "nodec/error.hpp"
#include "nodec/kuramoto.hpp"
#include "nodec/matrix.hpp"
#include "nodec/ode.hpp"

namespace nodec {

// Adjoint-gradient method for the global Kuramoto control: forward state
// solve, backward adjoint solve, pointwise update of u on the grid. The
// control is represented by its values at the grid nodes and treated as
// piecewise linear in time.

struct AgmConfig {
  double beta = 1e-3;
  double learning_rate = 0.1;  // halved whenever a step would increase the loss
  std::size_t iterations = 200;
  TimeGrid grid;
  std::uint64_t seed = 0;  // recorded in the manifest; AGM itself is deterministic
  double min_learning_rate = 1e-12;

  void validate() const {
    if (beta < 0.0) throw ParamError("beta must be non-negative");
    if (!(learning_rate > 0.0)) throw ParamError("learning rate must be positive");
    if (iterations < 1) throw ParamError("iterations must be >= 1");
  }
};

struct AdjointTrajectory {
  TimeGrid grid;
  std::vector<Vector> lambdas;  // one per grid node, lambdas.back() = terminal condition
};

// lambda_i(T) = (1/2) sum_j A_ij sin(2 theta_i(T) - 2 theta_j(T))
inline Vector adjoint_terminal(const KuramotoSystem& sys, const Vector& theta_final) {
  Vector lambda(sys.graph.n, 0.0);
  for (const auto& [i, j] : sys.graph.edges) {
    const double s = 0.5 * std::sin(2.0 * theta_final[i] - 2.0 * theta_final[j]);
    lambda[i] += s;
    lambda[j] -= s;
  }
  return lambda;
}

namespace detail {

// -dlambda_i/dt = -(K u lambda_i / N) sum_j A_ij cos(theta_j - theta_i)
//                 + (K u / N) sum_j A_ij lambda_j cos(theta_j - theta_i),
// taken verbatim; rearranged to dlambda/dt for the backward integrator.
inline Vector adjoint_rhs(const KuramotoSystem& sys, const Vector& theta,
                          double u, const Vector& lambda) {
  const double scale = sys.coupling * u / static_cast<double>(sys.graph.n);
  Vector dl(sys.graph.n, 0.0);
  for (const auto& [i, j] : sys.graph.edges) {
    const double c = std::cos(theta[j] - theta[i]);
    const double d = scale * c * (lambda[i] - lambda[j]);
    dl[i] += d;
    dl[j] -= d;
  }
  return dl;
}

inline Vector interp_mid(const Vector& a, const Vector& b) {
  Vector m(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) m[i] = 0.5 * (a[i] + b[i]);
  return m;
}

}  // namespace detail

// Backward RK4 integration of the adjoint system from lambda(T), with theta
// and u interpolated linearly between grid nodes at the substage times.
inline AdjointTrajectory integrate_adjoint(const KuramotoSystem& sys,
                                           const Trajectory& theta_traj,
                                           const Vector& u_nodes,
                                           const TimeGrid& grid) {
  if (!(theta_traj.grid == grid))
    throw ParamError("state trajectory is not on the adjoint grid");
  if (u_nodes.size() != grid.nodes())
    throw DimensionError("control samples must cover every grid node");

  AdjointTrajectory adj;
  adj.grid = grid;
  adj.lambdas.assign(grid.nodes(), Vector());
  adj.lambdas[grid.steps] = adjoint_terminal(sys, theta_traj.states.back());

  const double h = -grid.h();
  const std::size_t n = sys.graph.n;
  for (std::size_t k = grid.steps; k-- > 0;) {
    const Vector& theta_hi = theta_traj.states[k + 1];
    const Vector& theta_lo = theta_traj.states[k];
    const Vector theta_mid = detail::interp_mid(theta_lo, theta_hi);
    const double u_hi = u_nodes[k + 1];
    const double u_lo = u_nodes[k];
    const double u_mid = 0.5 * (u_lo + u_hi);

    const Vector& lam = adj.lambdas[k + 1];
    const Vector l1 = detail::adjoint_rhs(sys, theta_hi, u_hi, lam);
    Vector stage(n);
    for (std::size_t i = 0; i < n; ++i) stage[i] = lam[i] + 0.5 * h * l1[i];
    const Vector l2 = detail::adjoint_rhs(sys, theta_mid, u_mid, stage);
    for (std::size_t i = 0; i < n; ++i) stage[i] = lam[i] + 0.5 * h * l2[i];
    const Vector l3 = detail::adjoint_rhs(sys, theta_mid, u_mid, stage);
    for (std::size_t i = 0; i < n; ++i) stage[i] = lam[i] + h * l3[i];
    const Vector l4 = detail::adjoint_rhs(sys, theta_lo, u_lo, stage);

    Vector next(n);
    for (std::size_t i = 0; i < n; ++i)
      next[i] = lam[i] + h / 6.0 * (l1[i] + 2.0 * l2[i] + 2.0 * l3[i] + l4[i]);
    if (!all_finite(next))
      throw DivergenceError("non-finite adjoint state during backward RK4", k);
    adj.lambdas[k] = std::move(next);
  }
  return adj;
}

struct AgmIterRecord {
  std::size_t iter = 0;
  double loss = 0.0;
  double energy = 0.0;
  double r_final = 0.0;
};

struct AgmResult {
  Vector u;  // final control at the grid nodes
  std::vector<AgmIterRecord> history;
  bool diverged = false;
  Trajectory trajectory;  // states under the final control
};

// piecewise-linear control interpolant over the grid
inline double interp_control(const TimeGrid& grid, const Vector& u_nodes, double t) {
  if (t <= grid.t_start) return u_nodes.front();
  if (t >= grid.t_end) return u_nodes.back();
  const double s = (t - grid.t_start) / grid.h();
  std::size_t k = static_cast<std::size_t>(s);
  if (k >= grid.steps) k = grid.steps - 1;
  const double frac = s - static_cast<double>(k);
  return u_nodes[k] + frac * (u_nodes[k + 1] - u_nodes[k]);
}

// u^(n+1) = u^(n) - eta~ [beta u^(n) + (K/N) sum_i lambda_i sum_j A_ij
// sin(theta_j - theta_i)], applied at every grid node. Steps that would
// increase the loss are retried with a halved learning rate.
inline AgmResult agm_optimize(const KuramotoSystem& sys, const Vector& u0,
                              const AgmConfig& cfg) {
  cfg.validate();
  sys.validate();
  if (sys.mode != ControlMode::global_scalar)
    throw ParamError("agm_optimize requires global scalar control");
  if (u0.size() != cfg.grid.nodes())
    throw DimensionError("u0 must be sampled at every grid node");

  const TimeGrid& grid = cfg.grid;
  const std::size_t n = sys.graph.n;

  auto forward = [&](const Vector& u_nodes) {
    auto rhs = [&sys](double t, const Vector& x, const Vector& u) {
      return sys.rhs(t, x, u);
    };
    auto control = [&](double t) { return Vector{interp_control(grid, u_nodes, t)}; };
    return integrate_rk4(rhs, control, sys.theta0, grid);
  };
  auto energy_of = [&](const Vector& u_nodes) {
    double e = 0.0;
    const double h = grid.h();
    for (std::size_t k = 0; k + 1 < u_nodes.size(); ++k)
      e += 0.5 * h * (u_nodes[k] * u_nodes[k] + u_nodes[k + 1] * u_nodes[k + 1]);
    return e;
  };
  auto loss_of = [&](const Trajectory& traj, const Vector& u_nodes) {
    return phase_loss(sys.graph, traj.states.back()) + 0.5 * cfg.beta * energy_of(u_nodes);
  };

  AgmResult result;
  result.u = u0;
  double lr = cfg.learning_rate;

  Trajectory traj;
  try {
    traj = forward(result.u);
  } catch (const DivergenceError&) {
    result.diverged = true;
    return result;
  }
  double loss = loss_of(traj, result.u);
  result.history.push_back(
      {0, loss, energy_of(result.u), order_parameter(traj.states.back())});

  for (std::size_t iter = 1; iter <= cfg.iterations; ++iter) {
    const AdjointTrajectory adj = integrate_adjoint(sys, traj, result.u, grid);

    // gradient of the loss with respect to u at each node
    Vector grad(grid.nodes(), 0.0);
    const double scale = sys.coupling / static_cast<double>(n);
    for (std::size_t k = 0; k < grid.nodes(); ++k) {
      const Vector& theta = traj.states[k];
      const Vector& lambda = adj.lambdas[k];
      Vector acc(n, 0.0);
      for (const auto& [i, j] : sys.graph.edges) {
        const double s = std::sin(theta[j] - theta[i]);
        acc[i] += s;
        acc[j] -= s;
      }
      double coupling_term = 0.0;
      for (std::size_t i = 0; i < n; ++i) coupling_term += lambda[i] * scale * acc[i];
      grad[k] = cfg.beta * result.u[k] + coupling_term;
    }

    // backtracking on the pointwise update; the rate recovers slowly after
    // clean accepts so one early rejection does not cripple later progress
    bool accepted = false;
    bool halved = false;
    while (lr >= cfg.min_learning_rate) {
      Vector candidate(grid.nodes());
      for (std::size_t k = 0; k < grid.nodes(); ++k)
        candidate[k] = result.u[k] - lr * grad[k];
      Trajectory cand_traj;
      try {
        cand_traj = forward(candidate);
      } catch (const DivergenceError&) {
        lr *= 0.5;
        halved = true;
        continue;
      }
      const double cand_loss = loss_of(cand_traj, candidate);
      if (cand_loss <= loss) {
        result.u = std::move(candidate);
        traj = std::move(cand_traj);
        loss = cand_loss;
        accepted = true;
        break;
      }
      lr *= 0.5;
      halved = true;
    }
    if (!accepted) break;  // step size underflow: converged or stuck
    if (!halved) lr *= 1.25;

    result.history.push_back(
        {iter, loss, energy_of(result.u), order_parameter(traj.states.back())});
  }

  result.trajectory = std::move(traj);
  return result;
}

}  // namespace nodec
