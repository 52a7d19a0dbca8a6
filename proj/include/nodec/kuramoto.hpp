#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "nodec/error.hpp"
#include "nodec/graph.hpp"
#include "nodec/linalg.hpp"
#include "nodec/matrix.hpp"
#include "nodec/ode.hpp"

namespace nodec {

// How the control input enters the coupling term.
enum class ControlMode { global_scalar, per_node, constant_one };

// Coupled phase oscillators with multiplicative control:
//   dtheta_i/dt = omega_i + (K u_i / N) sum_j A_ij sin(theta_j - theta_i)
// Phases are unwrapped reals; the dynamics and the loss depend only on
// differences through sin, so no modular reduction is applied.
struct KuramotoSystem {
  Graph graph;
  Vector omega;
  double coupling = 1.0;
  Vector theta0;
  double horizon = 3.0;
  ControlMode mode = ControlMode::global_scalar;

  void validate() const {
    if (omega.size() != graph.n || theta0.size() != graph.n)
      throw DimensionError("omega and theta0 must have one entry per node");
    if (!(coupling > 0.0)) throw ParamError("coupling must be positive");
    if (!(horizon > 0.0)) throw ParamError("horizon must be positive");
  }

  std::size_t dim() const { return graph.n; }
  std::size_t control_dim() const {
    return mode == ControlMode::per_node ? graph.n : 1;
  }

  double node_gain(const Vector& u, std::size_t i) const {
    switch (mode) {
      case ControlMode::global_scalar: return u[0];
      case ControlMode::per_node: return u[i];
      default: return 1.0;
    }
  }

  Vector rhs(double, const Vector& theta, const Vector& u) const {
    const std::size_t n = graph.n;
    Vector acc(n, 0.0);
    for (const auto& [i, j] : graph.edges) {
      const double s = std::sin(theta[j] - theta[i]);
      acc[i] += s;
      acc[j] -= s;
    }
    const double scale = coupling / static_cast<double>(n);
    Vector out(n);
    for (std::size_t i = 0; i < n; ++i)
      out[i] = omega[i] + scale * node_gain(u, i) * acc[i];
    return out;
  }

  void rhs_vjp(double, const Vector& theta, const Vector& u, const Vector& v,
               Vector& thetabar, Vector& ubar) const {
    const std::size_t n = graph.n;
    const double scale = coupling / static_cast<double>(n);

    // Single pass over edges. Phase part:
    //   d(rhs_i)/d(theta_j) = a_i A_ij cos(theta_j - theta_i),
    //   d(rhs_i)/d(theta_i) = -a_i sum_j A_ij cos(theta_j - theta_i),
    // control part: d(rhs_i)/d(u_i) = (K/N) sum_j A_ij sin(theta_j - theta_i).
    double global_ubar = 0.0;
    for (const auto& [i, j] : graph.edges) {
      const double d = theta[j] - theta[i];
      const double c = std::cos(d);
      const double w =
          v[i] * scale * node_gain(u, i) - v[j] * scale * node_gain(u, j);
      thetabar[j] += c * w;
      thetabar[i] -= c * w;
      if (mode == ControlMode::constant_one) continue;
      const double s = std::sin(d);
      if (mode == ControlMode::global_scalar) {
        global_ubar += scale * s * (v[i] - v[j]);
      } else {
        ubar[i] += scale * s * v[i];
        ubar[j] -= scale * s * v[j];
      }
    }
    if (mode == ControlMode::global_scalar) ubar[0] += global_ubar;
  }
};

// r = |sum_j e^{i theta_j}| / N, which equals
// N^{-1} sqrt(sum_{i,j} cos(theta_j - theta_i)); clamped to [0, 1].
inline double order_parameter(const Vector& theta) {
  double c = 0.0, s = 0.0;
  for (double t : theta) {
    c += std::cos(t);
    s += std::sin(t);
  }
  const double r = std::sqrt(c * c + s * s) / static_cast<double>(theta.size());
  return std::min(std::max(r, 0.0), 1.0);
}

// K* = max over edges of |(L^+ Omega)_i - (L^+ Omega)_j|
inline double critical_coupling(const Graph& g, const Vector& omega) {
  if (omega.size() != g.n) throw DimensionError("omega must have one entry per node");
  if (!is_connected(g))
    throw ConnectivityError("critical coupling is defined on connected graphs only");
  const Vector x = pinv_sym(laplacian(g)) * omega;
  double kstar = 0.0;
  for (const auto& [i, j] : g.edges)
    kstar = std::max(kstar, std::abs(x[i] - x[j]));
  return kstar;
}

// max over edges of |dtheta_i/dt - dtheta_j/dt| at the terminal state
inline double sync_residual(const KuramotoSystem& sys, const Vector& theta_final,
                            const Vector& u_final) {
  const Vector d = sys.rhs(sys.horizon, theta_final, u_final);
  double worst = 0.0;
  for (const auto& [i, j] : sys.graph.edges)
    worst = std::max(worst, std::abs(d[i] - d[j]));
  return worst;
}

// (1/2) sum_{i,j} A_ij sin^2(theta_j - theta_i), i.e. one term per edge
inline double phase_loss(const Graph& g, const Vector& theta) {
  double loss = 0.0;
  for (const auto& [i, j] : g.edges) {
    const double s = std::sin(theta[j] - theta[i]);
    loss += s * s;
  }
  return loss;
}

inline Vector phase_loss_grad(const Graph& g, const Vector& theta) {
  Vector grad(g.n, 0.0);
  for (const auto& [i, j] : g.edges) {
    const double s = std::sin(2.0 * (theta[i] - theta[j]));
    grad[i] += s;
    grad[j] -= s;
  }
  return grad;
}

// Terminal loss used by NODEC training (beta = 0 there).
inline double kuramoto_loss(const KuramotoSystem& sys, const Vector& theta_final,
                            double beta, double energy) {
  if (beta < 0.0) throw ParamError("beta must be non-negative");
  return phase_loss(sys.graph, theta_final) + 0.5 * beta * energy;
}

inline double kuramoto_loss(const KuramotoSystem& sys, const Vector& theta_final,
                            double beta, const Trajectory& u_trajectory) {
  return kuramoto_loss(sys, theta_final, beta, control_energy(u_trajectory));
}

// Loss adapter for loss_and_grad (phase term only).
struct KuramotoPhaseLoss {
  const Graph* graph;
  double value(const Vector& theta) const { return phase_loss(*graph, theta); }
  Vector grad(const Vector& theta) const { return phase_loss_grad(*graph, theta); }
};

}  // namespace nodec
