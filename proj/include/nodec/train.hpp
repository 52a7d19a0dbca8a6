#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "nodec/autodiff.hpp"
#include "nodec/error.hpp"
#include "nodec/matrix.hpp"
#include "nodec/mlp.hpp"
#include "nodec/ode.hpp"

namespace nodec {

inline double mse_loss(const Vector& x, const Vector& target) {
  if (x.size() != target.size()) throw DimensionError("mse_loss length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - target[i];
    s += d * d;
  }
  return s / static_cast<double>(x.size());
}

struct MseLoss {
  Vector target;
  double value(const Vector& x) const { return mse_loss(x, target); }
  Vector grad(const Vector& x) const {
    Vector g(x.size());
    const double scale = 2.0 / static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = scale * (x[i] - target[i]);
    return g;
  }
};

enum class Optimizer { plain_gd, adam };

struct TrainConfig {
  double learning_rate = 0.02;
  std::size_t epochs = 30000;
  Optimizer optimizer = Optimizer::plain_gd;
  std::uint64_t seed = 42;  // recorded for the manifest; net init happens upstream
  std::size_t log_every = 1;
  std::vector<std::size_t> snapshot_epochs;  // the final epoch is always snapshotted

  void validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
      throw ParamError("learning rate must be finite and non-negative");
    if (epochs < 1) throw ParamError("epochs must be >= 1");
    if (log_every < 1) throw ParamError("log_every must be >= 1");
  }
};

// One row per recorded epoch. The delta norms compare against the previous
// epoch: |dw|^2 in weight space and the trapezoid-discretized
// integral of |u^(n) - u^(n-1)|^2 over the grid in control space.
struct TrainRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double energy = 0.0;
  double w_norm2 = 0.0;
  double dw_norm2 = 0.0;
  double du_norm2 = 0.0;
};

// Full control state at selected epochs: running energy E_t on the grid,
// the control samples, and the weights (so trajectories can be re-simulated).
struct TrainSnapshot {
  std::size_t epoch = 0;
  Vector prefix_energy;
  std::vector<Vector> controls;
  Vector weights;
};

struct TrainLog {
  std::vector<TrainRecord> records;
  std::vector<TrainSnapshot> snapshots;
  bool diverged = false;
  std::size_t divergence_epoch = 0;
};

namespace detail {

struct AdamState {
  Vector m, v;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::size_t t = 0;

  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

  void apply(Vector& w, const Vector& g, double lr) {
    ++t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
};

inline double grid_delta_norm2(const TimeGrid& grid, const std::vector<Vector>& a,
                               const std::vector<Vector>& b) {
  double sum = 0.0;
  const double h = grid.h();
  for (std::size_t k = 0; k + 1 < a.size(); ++k) {
    double left = 0.0, right = 0.0;
    for (std::size_t c = 0; c < a[k].size(); ++c) {
      const double dl = a[k][c] - b[k][c];
      const double dr = a[k + 1][c] - b[k + 1][c];
      left += dl * dl;
      right += dr * dr;
    }
    sum += 0.5 * h * (left + right);
  }
  return sum;
}

}  // namespace detail

// Gradient descent on the terminal loss: w <- w - eta * grad_w J, unrolled
// through the solver by loss_and_grad. Divergence aborts with a flagged
// partial log rather than clipping, so failed runs are loud.
template <typename System, typename Loss>
std::pair<ControlNet, TrainLog> train(ControlNet net, const System& system,
                                      const Vector& x0, const TimeGrid& grid,
                                      const Loss& loss, const TrainConfig& cfg) {
  cfg.validate();
  net.validate();
  const double horizon = grid.t_end;

  TrainLog log;
  log.records.reserve(cfg.epochs / cfg.log_every + 2);
  std::vector<Vector> u_prev = net_grid_controls(net, grid, horizon);
  detail::AdamState adam(net.w.size());

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    GradientResult gr;
    try {
      gr = loss_and_grad(net, system, x0, grid, loss);
    } catch (const DivergenceError&) {
      log.diverged = true;
      log.divergence_epoch = epoch;
      break;
    }
    if (!std::isfinite(gr.loss)) {
      log.diverged = true;
      log.divergence_epoch = epoch;
      break;
    }

    double dw_norm2 = 0.0;
    if (cfg.optimizer == Optimizer::plain_gd) {
      for (std::size_t i = 0; i < net.w.size(); ++i) {
        const double delta = cfg.learning_rate * gr.grad_w[i];
        net.w[i] -= delta;
        dw_norm2 += delta * delta;
      }
    } else {
      const Vector w_before = net.w;
      adam.apply(net.w, gr.grad_w, cfg.learning_rate);
      for (std::size_t i = 0; i < net.w.size(); ++i) {
        const double delta = net.w[i] - w_before[i];
        dw_norm2 += delta * delta;
      }
    }

    std::vector<Vector> u_now = net_grid_controls(net, grid, horizon);
    if (epoch % cfg.log_every == 0 || epoch == cfg.epochs) {
      TrainRecord rec;
      rec.epoch = epoch;
      rec.loss = gr.loss;
      rec.energy = control_energy(grid, u_now);
      rec.w_norm2 = norm2sq(net.w);
      rec.dw_norm2 = dw_norm2;
      rec.du_norm2 = detail::grid_delta_norm2(grid, u_now, u_prev);
      log.records.push_back(rec);
    }
    const bool want_snapshot =
        epoch == cfg.epochs ||
        std::find(cfg.snapshot_epochs.begin(), cfg.snapshot_epochs.end(), epoch) !=
            cfg.snapshot_epochs.end();
    if (want_snapshot) {
      TrainSnapshot snap;
      snap.epoch = epoch;
      snap.prefix_energy = prefix_energies(grid, u_now);
      snap.controls = u_now;
      snap.weights = net.w;
      log.snapshots.push_back(std::move(snap));
    }
    u_prev = std::move(u_now);
  }
  return {std::move(net), std::move(log)};
}

struct CorrelationWindow {
  std::size_t index = 0;
  double r = 0.0;
  double p_value = 1.0;
  bool defined = false;
};

inline double pearson(const Vector& x, const Vector& y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

// two-sided p-value from the Fisher z transform
inline double pearson_p_value(double r, std::size_t n) {
  if (n < 4 || !std::isfinite(r)) return 1.0;
  const double clamped = std::min(std::max(r, -1.0), 1.0);
  const double z = std::atanh(clamped) * std::sqrt(static_cast<double>(n - 3));
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

// Pearson correlation of |dw|^2 vs |du|^2 over consecutive non-overlapping
// windows of recorded epochs. A zero-variance window yields an undefined
// marker instead of aborting.
inline std::vector<CorrelationWindow> delta_correlations(const TrainLog& log,
                                                         std::size_t window) {
  if (window < 3) throw ParamError("correlation window must be >= 3");
  const std::size_t total = log.records.size();
  std::vector<CorrelationWindow> out;
  for (std::size_t start = 0; start + window <= total; start += window) {
    Vector dw(window), du(window);
    for (std::size_t i = 0; i < window; ++i) {
      dw[i] = log.records[start + i].dw_norm2;
      du[i] = log.records[start + i].du_norm2;
    }
    CorrelationWindow cw;
    cw.index = out.size();
    cw.r = pearson(dw, du);
    cw.defined = std::isfinite(cw.r);
    cw.p_value = cw.defined ? pearson_p_value(cw.r, window) : 1.0;
    out.push_back(cw);
  }
  return out;
}

// Max over grid nodes of |u(t; w+dw) - u(t; w) - J_u(t) dw|_2, the
// first-order Taylor remainder of the control in weight space.
inline double taylor_check(const ControlNet& net, const Vector& dw,
                           const TimeGrid& grid, double horizon) {
  if (dw.size() != net.w.size()) throw DimensionError("dw length mismatch");
  ControlNet shifted = net;
  for (std::size_t i = 0; i < dw.size(); ++i) shifted.w[i] += dw[i];

  double worst = 0.0;
  for (std::size_t k = 0; k < grid.nodes(); ++k) {
    const double t = grid.node(k);
    const Vector base = net_forward(net, t, horizon);
    const Vector moved = net_forward(shifted, t, horizon);
    const Matrix jac = net_jacobian_w(net, t, horizon);
    double norm2 = 0.0;
    for (std::size_t i = 0; i < base.size(); ++i) {
      double lin = 0.0;
      for (std::size_t j = 0; j < dw.size(); ++j) lin += jac(i, j) * dw[j];
      const double resid = moved[i] - base[i] - lin;
      norm2 += resid * resid;
    }
    worst = std::max(worst, std::sqrt(norm2));
  }
  return worst;
}

}  // namespace nodec
