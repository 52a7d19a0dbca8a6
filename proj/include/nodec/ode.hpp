#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "nodec/error.hpp"
#include "nodec/matrix.hpp"

namespace nodec {

// Uniform grid over [t_start, t_end]. Node times are computed from the
// endpoints (never accumulated), so node(steps) == t_end exactly and the
// solver and the gradient code agree bit-for-bit on sample times.
struct TimeGrid {
  double t_start = 0.0;
  double t_end = 1.0;
  std::size_t steps = 1;

  TimeGrid() = default;
  TimeGrid(double start, double end, std::size_t n) : t_start(start), t_end(end), steps(n) {
    if (!(t_end > t_start)) throw ParamError("TimeGrid requires t_end > t_start");
    if (steps < 1) throw ParamError("TimeGrid requires steps >= 1");
  }

  double h() const { return (t_end - t_start) / static_cast<double>(steps); }
  std::size_t nodes() const { return steps + 1; }

  double node(std::size_t k) const {
    if (k == steps) return t_end;
    return t_start + (t_end - t_start) * (static_cast<double>(k) / static_cast<double>(steps));
  }

  // midpoint of step k, used by the RK4 interior stages
  double half(std::size_t k) const { return 0.5 * (node(k) + node(k + 1)); }

  bool operator==(const TimeGrid& o) const {
    return t_start == o.t_start && t_end == o.t_end && steps == o.steps;
  }
};

struct Trajectory {
  TimeGrid grid;
  std::vector<Vector> states;    // steps + 1 entries, states[0] = x0
  std::vector<Vector> controls;  // steps + 1 entries, sampled at grid nodes
};

// One classical RK4 step. Control samples come in precomputed: ua at t_k,
// ub at the midpoint (stages 2 and 3 share it since control depends on
// time only), uc at t_{k+1}. Stage slopes are written to k1..k4 so the
// reverse pass can reuse them.
template <typename Rhs>
Vector rk4_step(Rhs&& rhs, double t0, double tm, double t1, double h,
                const Vector& x, const Vector& ua, const Vector& ub,
                const Vector& uc, Vector& k1, Vector& k2, Vector& k3,
                Vector& k4) {
  const std::size_t n = x.size();
  k1 = rhs(t0, x, ua);
  Vector xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = x[i] + 0.5 * h * k1[i];
  k2 = rhs(tm, xs, ub);
  for (std::size_t i = 0; i < n; ++i) xs[i] = x[i] + 0.5 * h * k2[i];
  k3 = rhs(tm, xs, ub);
  for (std::size_t i = 0; i < n; ++i) xs[i] = x[i] + h * k3[i];
  k4 = rhs(t1, xs, uc);
  Vector out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

// Fixed-step RK4 over the grid. rhs(t, x, u) -> dx/dt, control(t) -> u.
// Control is evaluated once per node and once per step midpoint.
template <typename Rhs, typename Control>
Trajectory integrate_rk4(Rhs&& rhs, Control&& control, const Vector& x0,
                         const TimeGrid& grid) {
  Trajectory traj;
  traj.grid = grid;
  traj.states.reserve(grid.nodes());
  traj.controls.reserve(grid.nodes());
  traj.states.push_back(x0);
  traj.controls.push_back(control(grid.node(0)));

  const double h = grid.h();
  Vector k1, k2, k3, k4;
  for (std::size_t k = 0; k < grid.steps; ++k) {
    const Vector& ua = traj.controls.back();
    const Vector ub = control(grid.half(k));
    Vector uc = control(grid.node(k + 1));
    Vector next = rk4_step(rhs, grid.node(k), grid.half(k), grid.node(k + 1),
                           h, traj.states.back(), ua, ub, uc, k1, k2, k3, k4);
    if (!all_finite(next))
      throw DivergenceError("non-finite state during RK4 integration", k);
    traj.states.push_back(std::move(next));
    traj.controls.push_back(std::move(uc));
  }
  return traj;
}

// Trapezoid approximation of the running control energy
// E_t = integral of |u|^2 from t_start to each grid node.
inline Vector prefix_energies(const Trajectory& traj) {
  const std::size_t n = traj.grid.nodes();
  if (traj.controls.size() != n)
    throw DimensionError("trajectory lacks controls at every grid node");
  Vector e(n, 0.0);
  const double h = traj.grid.h();
  for (std::size_t k = 1; k < n; ++k)
    e[k] = e[k - 1] + 0.5 * h * (norm2sq(traj.controls[k - 1]) + norm2sq(traj.controls[k]));
  return e;
}

inline double control_energy(const Trajectory& traj) {
  return prefix_energies(traj).back();
}

// Same quadrature applied to a bare control sequence on a grid (no states
// needed); used when scoring network outputs directly.
inline Vector prefix_energies(const TimeGrid& grid, const std::vector<Vector>& controls) {
  if (controls.size() != grid.nodes())
    throw DimensionError("control sequence does not match grid");
  Vector e(grid.nodes(), 0.0);
  const double h = grid.h();
  for (std::size_t k = 1; k < grid.nodes(); ++k)
    e[k] = e[k - 1] + 0.5 * h * (norm2sq(controls[k - 1]) + norm2sq(controls[k]));
  return e;
}

inline double control_energy(const TimeGrid& grid, const std::vector<Vector>& controls) {
  return prefix_energies(grid, controls).back();
}

}  // namespace nodec
