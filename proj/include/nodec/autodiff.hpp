#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "nodec/error.hpp"
#include "nodec/matrix.hpp"
#include "nodec/mlp.hpp"
#include "nodec/ode.hpp"

namespace nodec {

// Exact reverse-mode gradient of a terminal loss through the unrolled RK4
// integration and every network evaluation inside it.
//
// System requirements:
//   std::size_t dim() const
//   std::size_t control_dim() const
//   Vector rhs(double t, const Vector& x, const Vector& u) const
//   void rhs_vjp(double t, const Vector& x, const Vector& u,
//                const Vector& v, Vector& xbar, Vector& ubar) const
//     (accumulates v^T d(rhs)/dx into xbar and v^T d(rhs)/du into ubar)
//
// Loss requirements:
//   double value(const Vector& x_terminal) const
//   Vector grad(const Vector& x_terminal) const

struct GradientResult {
  double loss = 0.0;
  Vector grad_w;
  Vector terminal_state;
};

template <typename System, typename Loss>
GradientResult loss_and_grad(const ControlNet& net, const System& system,
                             const Vector& x0, const TimeGrid& grid,
                             const Loss& loss) {
  const std::size_t steps = grid.steps;
  const std::size_t n = system.dim();
  const std::size_t m = system.control_dim();
  if (net.output_dim() != m)
    throw DimensionError("network output width does not match system control dimension");
  if (x0.size() != n)
    throw DimensionError("initial state does not match system dimension");
  const double horizon = grid.t_end;
  const double h = grid.h();

  // Control is a function of time only, so per step the three distinct
  // sample times are node k, the midpoint, and node k+1; node samples are
  // shared between neighboring steps. Activations are kept for the
  // reverse pass.
  std::vector<NetActivations> acts_node(steps + 1), acts_half(steps);
  std::vector<Vector> u_node(steps + 1), u_half(steps);
  for (std::size_t k = 0; k <= steps; ++k) {
    net_forward_store(net, grid.node(k) / horizon, acts_node[k]);
    u_node[k] = acts_node[k].z.back();
  }
  for (std::size_t k = 0; k < steps; ++k) {
    net_forward_store(net, grid.half(k) / horizon, acts_half[k]);
    u_half[k] = acts_half[k].z.back();
  }

  auto rhs = [&system](double t, const Vector& x, const Vector& u) {
    return system.rhs(t, x, u);
  };

  // forward unroll, keeping the first three stage slopes per step
  std::vector<Vector> states(steps + 1);
  std::vector<Vector> s1(steps), s2(steps), s3(steps);
  states[0] = x0;
  Vector k4;
  for (std::size_t k = 0; k < steps; ++k) {
    states[k + 1] = rk4_step(rhs, grid.node(k), grid.half(k), grid.node(k + 1),
                             h, states[k], u_node[k], u_half[k], u_node[k + 1],
                             s1[k], s2[k], s3[k], k4);
    if (!all_finite(states[k + 1]))
      throw DivergenceError("non-finite state during RK4 integration", k);
  }

  GradientResult result;
  result.terminal_state = states[steps];
  result.loss = loss.value(states[steps]);

  // reverse sweep over the steps
  std::vector<Vector> ubar_node(steps + 1, Vector(m, 0.0));
  std::vector<Vector> ubar_half(steps, Vector(m, 0.0));
  Vector xbar = loss.grad(states[steps]);
  Vector x_stage(n), stage_bar(n), kb1(n), kb2(n), kb3(n), kb4(n), xbar_next(n);

  for (std::size_t k = steps; k-- > 0;) {
    const double t0 = grid.node(k), tm = grid.half(k), t1 = grid.node(k + 1);
    for (std::size_t i = 0; i < n; ++i) {
      kb1[i] = h / 6.0 * xbar[i];
      kb2[i] = h / 3.0 * xbar[i];
      kb3[i] = h / 3.0 * xbar[i];
      kb4[i] = h / 6.0 * xbar[i];
      xbar_next[i] = xbar[i];
    }

    // stage 4: k4 = f(t1, x + h*k3, u_node[k+1])
    for (std::size_t i = 0; i < n; ++i) x_stage[i] = states[k][i] + h * s3[k][i];
    std::fill(stage_bar.begin(), stage_bar.end(), 0.0);
    system.rhs_vjp(t1, x_stage, u_node[k + 1], kb4, stage_bar, ubar_node[k + 1]);
    for (std::size_t i = 0; i < n; ++i) {
      xbar_next[i] += stage_bar[i];
      kb3[i] += h * stage_bar[i];
    }

    // stage 3: k3 = f(tm, x + h/2*k2, u_half[k])
    for (std::size_t i = 0; i < n; ++i) x_stage[i] = states[k][i] + 0.5 * h * s2[k][i];
    std::fill(stage_bar.begin(), stage_bar.end(), 0.0);
    system.rhs_vjp(tm, x_stage, u_half[k], kb3, stage_bar, ubar_half[k]);
    for (std::size_t i = 0; i < n; ++i) {
      xbar_next[i] += stage_bar[i];
      kb2[i] += 0.5 * h * stage_bar[i];
    }

    // stage 2: k2 = f(tm, x + h/2*k1, u_half[k])
    for (std::size_t i = 0; i < n; ++i) x_stage[i] = states[k][i] + 0.5 * h * s1[k][i];
    std::fill(stage_bar.begin(), stage_bar.end(), 0.0);
    system.rhs_vjp(tm, x_stage, u_half[k], kb2, stage_bar, ubar_half[k]);
    for (std::size_t i = 0; i < n; ++i) {
      xbar_next[i] += stage_bar[i];
      kb1[i] += 0.5 * h * stage_bar[i];
    }

    // stage 1: k1 = f(t0, x, u_node[k])
    std::fill(stage_bar.begin(), stage_bar.end(), 0.0);
    system.rhs_vjp(t0, states[k], u_node[k], kb1, stage_bar, ubar_node[k]);
    for (std::size_t i = 0; i < n; ++i) xbar_next[i] += stage_bar[i];

    xbar = xbar_next;
  }

  // pull the control cotangents back through the network, in a fixed order
  result.grad_w.assign(net.w.size(), 0.0);
  for (std::size_t k = 0; k <= steps; ++k)
    net_backprop(net, acts_node[k], ubar_node[k], result.grad_w);
  for (std::size_t k = 0; k < steps; ++k)
    net_backprop(net, acts_half[k], ubar_half[k], result.grad_w);
  return result;
}

// Forward-only convenience: integrates the system under the network control.
template <typename System>
Trajectory simulate(const ControlNet& net, const System& system,
                    const Vector& x0, const TimeGrid& grid) {
  const double horizon = grid.t_end;
  auto rhs = [&system](double t, const Vector& x, const Vector& u) {
    return system.rhs(t, x, u);
  };
  auto control = [&](double t) { return net_forward(net, t, horizon); };
  return integrate_rk4(rhs, control, x0, grid);
}

}  // namespace nodec
