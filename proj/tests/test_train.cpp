#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nodec/linear_oc.hpp"
#include "nodec/train.hpp"

using namespace nodec;

namespace {

struct LinearTask {
  LinearControlProblem problem = two_node_problem();
  LinearSystem system = problem.system();
  TimeGrid grid{0.0, 1.0, 100};
  MseLoss loss{problem.x_target};

  ControlNet calibrated_net(std::uint64_t seed) const {
    ControlNet net = make_default_net(1, seed);
    return calibrate_initial_energy(net, grid, problem.horizon, 5.0, 7.0);
  }
};

}  // namespace

TEST_CASE("mse loss basics", "[train]") {
  REQUIRE(mse_loss({1.0, 2.0}, {1.0, 2.0}) == 0.0);
  REQUIRE(mse_loss({1.0, 0.0}, {0.0, 0.0}) == Catch::Approx(0.5));
  // invariant under a simultaneous permutation of both vectors
  REQUIRE(mse_loss({1.0, 2.0, -3.0}, {0.5, 0.0, 1.0}) ==
          Catch::Approx(mse_loss({2.0, -3.0, 1.0}, {0.0, 1.0, 0.5})));
  REQUIRE_THROWS_AS(mse_loss({1.0}, {1.0, 2.0}), DimensionError);
}

TEST_CASE("zero learning rate freezes the weights and the loss", "[train]") {
  LinearTask task;
  ControlNet net = task.calibrated_net(42);
  const Vector w0 = net.w;
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 5;
  auto [trained, log] = train(net, task.system, task.problem.x0, task.grid, task.loss, cfg);
  REQUIRE(trained.w == w0);
  REQUIRE(log.records.size() == 5);
  for (const TrainRecord& r : log.records) REQUIRE(r.loss == log.records.front().loss);
}

TEST_CASE("one epoch equals one manual gradient step", "[train]") {
  LinearTask task;
  ControlNet net = task.calibrated_net(42);
  GradientResult gr = loss_and_grad(net, task.system, task.problem.x0, task.grid, task.loss);
  Vector manual = net.w;
  for (std::size_t i = 0; i < manual.size(); ++i) manual[i] -= 0.02 * gr.grad_w[i];

  TrainConfig cfg;
  cfg.learning_rate = 0.02;
  cfg.epochs = 1;
  auto [trained, log] = train(net, task.system, task.problem.x0, task.grid, task.loss, cfg);
  REQUIRE(trained.w == manual);
  REQUIRE(log.records.size() == 1);
  REQUIRE(log.records[0].loss == gr.loss);
}

TEST_CASE("training is deterministic", "[train]") {
  LinearTask task;
  TrainConfig cfg;
  cfg.epochs = 50;
  auto [net_a, log_a] = train(task.calibrated_net(42), task.system, task.problem.x0,
                              task.grid, task.loss, cfg);
  auto [net_b, log_b] = train(task.calibrated_net(42), task.system, task.problem.x0,
                              task.grid, task.loss, cfg);
  REQUIRE(net_a.w == net_b.w);
  REQUIRE(log_a.records.size() == log_b.records.size());
  for (std::size_t i = 0; i < log_a.records.size(); ++i) {
    REQUIRE(log_a.records[i].loss == log_b.records[i].loss);
    REQUIRE(log_a.records[i].dw_norm2 == log_b.records[i].dw_norm2);
    REQUIRE(log_a.records[i].du_norm2 == log_b.records[i].du_norm2);
  }
}

TEST_CASE("loss is non-increasing after the early transient", "[train]") {
  LinearTask task;
  TrainConfig cfg;
  cfg.epochs = 400;
  auto [net, log] = train(task.calibrated_net(42), task.system, task.problem.x0,
                          task.grid, task.loss, cfg);
  REQUIRE_FALSE(log.diverged);
  for (std::size_t n = 100; n + 100 < log.records.size(); ++n)
    REQUIRE(log.records[n + 100].loss <= log.records[n].loss + 1e-12);
}

TEST_CASE("divergence aborts with a flagged partial log", "[train]") {
  LinearTask task;
  TrainConfig cfg;
  cfg.learning_rate = 1e9;
  cfg.epochs = 50;
  auto [net, log] = train(task.calibrated_net(42), task.system, task.problem.x0,
                          task.grid, task.loss, cfg);
  REQUIRE(log.diverged);
  REQUIRE(log.divergence_epoch >= 2);
  REQUIRE(log.records.size() < 50);
}

TEST_CASE("adam updates use bias-corrected moments", "[train]") {
  LinearTask task;
  ControlNet net = task.calibrated_net(7);
  GradientResult gr = loss_and_grad(net, task.system, task.problem.x0, task.grid, task.loss);

  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.epochs = 1;
  cfg.optimizer = Optimizer::adam;
  auto [trained, log] = train(net, task.system, task.problem.x0, task.grid, task.loss, cfg);
  // first Adam step moves each coordinate by lr * g/(|g| + eps), about lr
  for (std::size_t i = 0; i < net.w.size(); ++i) {
    const double delta = trained.w[i] - net.w[i];
    if (std::abs(gr.grad_w[i]) > 1e-12) {
      REQUIRE(std::abs(delta) <= 0.01 + 1e-9);
      REQUIRE(delta * gr.grad_w[i] < 0.0);
    }
  }
}

TEST_CASE("correlation of proportional series is one", "[train]") {
  TrainLog log;
  for (std::size_t i = 0; i < 20; ++i) {
    TrainRecord r;
    r.epoch = i + 1;
    r.dw_norm2 = 1.0 + 0.3 * static_cast<double>(i % 7);
    r.du_norm2 = 3.0 * r.dw_norm2;
    log.records.push_back(r);
  }
  auto windows = delta_correlations(log, 10);
  REQUIRE(windows.size() == 2);
  for (const CorrelationWindow& w : windows) {
    REQUIRE(w.defined);
    REQUIRE(w.r == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(w.p_value < 1e-6);
  }
}

TEST_CASE("correlation of anti-proportional series is minus one", "[train]") {
  TrainLog log;
  for (std::size_t i = 0; i < 12; ++i) {
    TrainRecord r;
    r.epoch = i + 1;
    r.dw_norm2 = static_cast<double>(i);
    r.du_norm2 = 10.0 - 2.0 * static_cast<double>(i);
    log.records.push_back(r);
  }
  auto windows = delta_correlations(log, 12);
  REQUIRE(windows.size() == 1);
  REQUIRE(windows[0].r == Catch::Approx(-1.0).margin(1e-12));
}

TEST_CASE("a zero-variance window is marked undefined, not fatal", "[train]") {
  TrainLog log;
  for (std::size_t i = 0; i < 6; ++i) {
    TrainRecord r;
    r.epoch = i + 1;
    r.dw_norm2 = 1.0;  // constant: no variance
    r.du_norm2 = static_cast<double>(i);
    log.records.push_back(r);
  }
  auto windows = delta_correlations(log, 6);
  REQUIRE(windows.size() == 1);
  REQUIRE_FALSE(windows[0].defined);
  REQUIRE_THROWS_AS(delta_correlations(log, 2), ParamError);
}

TEST_CASE("taylor residual vanishes for zero perturbation", "[train]") {
  ControlNet net = make_default_net(1, 3);
  REQUIRE(taylor_check(net, Vector(net.w.size(), 0.0), TimeGrid(0.0, 1.0, 20), 1.0) == 0.0);
}

TEST_CASE("taylor residual scales quadratically in the perturbation", "[train]") {
  ControlNet net = make_net({1, 16, 16, 1}, {Activation::tanh, Activation::tanh}, 5);
  TimeGrid grid(0.0, 1.0, 25);
  Rng rng(9);
  Vector dw(net.w.size());
  for (double& d : dw) d = 1e-3 * rng.uniform(-1.0, 1.0);
  Vector half = dw;
  for (double& d : half) d *= 0.5;
  const double r_full = taylor_check(net, dw, grid, 1.0);
  const double r_half = taylor_check(net, half, grid, 1.0);
  REQUIRE(r_full / r_half > 3.5);
  REQUIRE(r_full / r_half < 4.5);
}

TEST_CASE("a purely linear network has no taylor remainder", "[train]") {
  ControlNet net;
  net.layer_sizes = {1, 1};
  net.w = {0.7, -0.3};
  net.validate();
  Vector dw{0.42, -1.1};
  REQUIRE(taylor_check(net, dw, TimeGrid(0.0, 1.0, 10), 1.0) <= 1e-14);
}

TEST_CASE("the realized control update is first-order consistent", "[train]") {
  LinearTask task;
  TrainConfig cfg;
  cfg.epochs = 200;
  auto [net, log] = train(task.calibrated_net(42), task.system, task.problem.x0,
                          task.grid, task.loss, cfg);

  GradientResult gr = loss_and_grad(net, task.system, task.problem.x0, task.grid, task.loss);
  Vector dw(net.w.size());
  for (std::size_t i = 0; i < dw.size(); ++i) dw[i] = -0.02 * gr.grad_w[i];

  ControlNet moved = net;
  for (std::size_t i = 0; i < dw.size(); ++i) moved.w[i] += dw[i];
  double du_max = 0.0;
  for (std::size_t k = 0; k < task.grid.nodes(); ++k) {
    const double t = task.grid.node(k);
    du_max = std::max(du_max, std::abs(net_forward(moved, t, 1.0)[0] -
                                       net_forward(net, t, 1.0)[0]));
  }
  const double residual = taylor_check(net, dw, task.grid, 1.0);
  REQUIRE(residual <= 0.1 * du_max);
}
