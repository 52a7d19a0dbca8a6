#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "nodec/error.hpp"
#include "nodec/matrix.hpp"
#include "nodec/ode.hpp"
#include "nodec/rng.hpp"

namespace nodec {

enum class Activation { tanh, elu };

inline std::string activation_name(Activation a) {
  return a == Activation::tanh ? "tanh" : "elu";
}

inline Activation activation_from_name(const std::string& s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "elu") return Activation::elu;
  throw ParamError("unknown activation: " + s);
}

// Feed-forward control network u(t; w). Input is the normalized time t/T,
// hidden layers use tanh or elu, the output layer is linear. All weights
// and biases live in one flat vector w (per layer: row-major weight block,
// then biases), which is what gradient descent updates.
struct ControlNet {
  std::vector<std::size_t> layer_sizes;  // {1, hidden..., M}
  std::vector<Activation> activations;   // one per hidden layer
  Vector w;

  static std::size_t weight_count(const std::vector<std::size_t>& sizes) {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
      n += (sizes[l] + 1) * sizes[l + 1];
    return n;
  }

  std::size_t output_dim() const { return layer_sizes.back(); }
  std::size_t weight_layers() const { return layer_sizes.size() - 1; }

  // offset of layer l's parameter block inside w
  std::size_t layer_offset(std::size_t l) const {
    std::size_t off = 0;
    for (std::size_t m = 0; m < l; ++m)
      off += (layer_sizes[m] + 1) * layer_sizes[m + 1];
    return off;
  }

  void validate() const {
    if (layer_sizes.size() < 2)
      throw ParamError("ControlNet needs at least input and output layers");
    if (activations.size() != layer_sizes.size() - 2)
      throw ParamError("ControlNet needs one activation per hidden layer");
    if (w.size() != weight_count(layer_sizes))
      throw DimensionError("ControlNet weight vector has wrong length");
  }
};

inline double apply_activation(Activation a, double x) {
  if (a == Activation::tanh) return std::tanh(x);
  return x >= 0.0 ? x : std::expm1(x);
}

// derivative expressed through the post-activation value z
inline double activation_slope(Activation a, double z) {
  if (a == Activation::tanh) return 1.0 - z * z;
  return z >= 0.0 ? 1.0 : z + 1.0;
}

// Post-activation values per layer; z[0] holds the (scalar) input. Stored
// during the forward pass so the reverse pass can run without recomputing.
struct NetActivations {
  std::vector<Vector> z;
};

inline void net_forward_store(const ControlNet& net, double input,
                              NetActivations& acts) {
  const std::size_t layers = net.weight_layers();
  acts.z.resize(layers + 1);
  acts.z[0].assign(1, input);
  std::size_t off = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t nin = net.layer_sizes[l];
    const std::size_t nout = net.layer_sizes[l + 1];
    const Vector& in = acts.z[l];
    Vector& out = acts.z[l + 1];
    out.assign(nout, 0.0);
    for (std::size_t i = 0; i < nout; ++i) {
      double s = net.w[off + nin * nout + i];  // bias
      const double* row = net.w.data() + off + i * nin;
      for (std::size_t j = 0; j < nin; ++j) s += row[j] * in[j];
      out[i] = s;
    }
    if (l + 1 < layers) {
      const Activation a = net.activations[l];
      for (double& v : out) v = apply_activation(a, v);
    }
    off += (nin + 1) * nout;
  }
}

// u(t; w) with time normalized by the horizon.
inline Vector net_forward(const ControlNet& net, double t, double horizon) {
  NetActivations acts;
  net_forward_store(net, t / horizon, acts);
  return acts.z.back();
}

// Reverse pass through one stored evaluation: accumulates
// out_cotangent^T du/dw into grad_w. grad_w must have length |w|.
inline void net_backprop(const ControlNet& net, const NetActivations& acts,
                         const Vector& out_cotangent, Vector& grad_w) {
  const std::size_t layers = net.weight_layers();
  Vector delta = out_cotangent;
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t nin = net.layer_sizes[l];
    const std::size_t nout = net.layer_sizes[l + 1];
    const std::size_t off = net.layer_offset(l);
    const Vector& in = acts.z[l];

    for (std::size_t i = 0; i < nout; ++i) {
      const double d = delta[i];
      if (d != 0.0) {
        double* grow = grad_w.data() + off + i * nin;
        for (std::size_t j = 0; j < nin; ++j) grow[j] += d * in[j];
      }
      grad_w[off + nin * nout + i] += d;
    }
    if (l == 0) break;

    Vector prev(nin, 0.0);
    for (std::size_t i = 0; i < nout; ++i) {
      const double d = delta[i];
      if (d == 0.0) continue;
      const double* row = net.w.data() + off + i * nin;
      for (std::size_t j = 0; j < nin; ++j) prev[j] += d * row[j];
    }
    const Activation a = net.activations[l - 1];
    for (std::size_t j = 0; j < nin; ++j)
      prev[j] *= activation_slope(a, in[j]);
    delta = std::move(prev);
  }
}

// Jacobian du/dw at one time, rows computed by reverse mode per output.
inline Matrix net_jacobian_w(const ControlNet& net, double t, double horizon) {
  NetActivations acts;
  net_forward_store(net, t / horizon, acts);
  const std::size_t m = net.output_dim();
  Matrix jac(m, net.w.size());
  Vector unit(m, 0.0);
  Vector row(net.w.size());
  for (std::size_t i = 0; i < m; ++i) {
    unit[i] = 1.0;
    std::fill(row.begin(), row.end(), 0.0);
    net_backprop(net, acts, unit, row);
    for (std::size_t j = 0; j < row.size(); ++j) jac(i, j) = row[j];
    unit[i] = 0.0;
  }
  return jac;
}

// Glorot-style uniform init: weights in +-sqrt(6/(n_in+n_out)), biases 0.
inline ControlNet make_net(const std::vector<std::size_t>& layer_sizes,
                           const std::vector<Activation>& activations,
                           std::uint64_t seed) {
  ControlNet net;
  net.layer_sizes = layer_sizes;
  net.activations = activations;
  net.w.assign(ControlNet::weight_count(layer_sizes), 0.0);
  net.validate();
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const std::size_t nin = layer_sizes[l];
    const std::size_t nout = layer_sizes[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(nin + nout));
    const std::size_t off = net.layer_offset(l);
    for (std::size_t i = 0; i < nin * nout; ++i)
      net.w[off + i] = rng.uniform(-bound, bound);
  }
  return net;
}

// default architecture: 1 -> 32 -> 32 -> M, elu hidden layers
inline ControlNet make_default_net(std::size_t control_dim, std::uint64_t seed,
                                   Activation act = Activation::elu) {
  return make_net({1, 32, 32, control_dim}, {act, act}, seed);
}

inline void scale_output_layer(ControlNet& net, double s) {
  const std::size_t l = net.weight_layers() - 1;
  const std::size_t off = net.layer_offset(l);
  const std::size_t count = (net.layer_sizes[l] + 1) * net.layer_sizes[l + 1];
  for (std::size_t i = 0; i < count; ++i) net.w[off + i] *= s;
}

inline void set_output_biases(ControlNet& net, double value) {
  const std::size_t l = net.weight_layers() - 1;
  const std::size_t nin = net.layer_sizes[l];
  const std::size_t nout = net.layer_sizes[l + 1];
  const std::size_t off = net.layer_offset(l) + nin * nout;
  for (std::size_t i = 0; i < nout; ++i) net.w[off + i] = value;
}

// control samples at the grid nodes
inline std::vector<Vector> net_grid_controls(const ControlNet& net,
                                             const TimeGrid& grid,
                                             double horizon) {
  std::vector<Vector> u;
  u.reserve(grid.nodes());
  for (std::size_t k = 0; k < grid.nodes(); ++k)
    u.push_back(net_forward(net, grid.node(k), horizon));
  return u;
}

inline double net_grid_energy(const ControlNet& net, const TimeGrid& grid,
                              double horizon) {
  return control_energy(grid, net_grid_controls(net, grid, horizon));
}

// Rescales the output layer (weights and biases) so the initial control
// energy on the grid lands inside [e_lo, e_hi]. The energy is exactly
// quadratic in the output scale, so bisection on the scale converges fast;
// bisection is still used rather than the closed form so the routine does
// not depend on that structure.
inline ControlNet calibrate_initial_energy(const ControlNet& net,
                                           const TimeGrid& grid,
                                           double horizon, double e_lo,
                                           double e_hi) {
  if (!(e_lo > 0.0) || !(e_hi > e_lo))
    throw ParamError("energy window must satisfy 0 < e_lo < e_hi");
  const double base = net_grid_energy(net, grid, horizon);
  if (base == 0.0)
    throw CalibrationError("initial network output is identically zero; cannot scale into energy window");
  if (base >= e_lo && base <= e_hi) return net;

  const double target = 0.5 * (e_lo + e_hi);
  auto energy_at = [&](double s) {
    ControlNet scaled = net;
    scale_output_layer(scaled, s);
    return net_grid_energy(scaled, grid, horizon);
  };

  double lo = 0.0, hi = 1.0;
  while (energy_at(hi) < target) {
    hi *= 2.0;
    if (hi > 1e12) throw CalibrationError("energy calibration failed to bracket the window");
  }
  double s = hi;
  for (int iter = 0; iter < 200; ++iter) {
    s = 0.5 * (lo + hi);
    const double e = energy_at(s);
    if (e >= e_lo && e <= e_hi) break;
    if (e < target)
      lo = s;
    else
      hi = s;
  }
  const double final_energy = energy_at(s);
  if (final_energy < e_lo || final_energy > e_hi)
    throw CalibrationError("energy calibration did not converge into the window");

  ControlNet out = net;
  scale_output_layer(out, s);
  return out;
}

}  // namespace nodec
