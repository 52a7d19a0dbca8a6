#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nodec/matrix.hpp"
#include "nodec/ode.hpp"

using namespace nodec;

namespace {

Vector constant_control(double) { return Vector{}; }

}  // namespace

TEST_CASE("TimeGrid validates and exposes exact endpoints", "[ode]") {
  REQUIRE_THROWS_AS(TimeGrid(1.0, 1.0, 10), ParamError);
  REQUIRE_THROWS_AS(TimeGrid(0.0, 1.0, 0), ParamError);
  TimeGrid g(0.0, 3.0, 300);
  REQUIRE(g.node(0) == 0.0);
  REQUIRE(g.node(300) == 3.0);
  REQUIRE(g.h() == Catch::Approx(0.01));
}

TEST_CASE("zero right-hand side keeps the state constant", "[ode]") {
  auto rhs = [](double, const Vector& x, const Vector&) {
    return Vector(x.size(), 0.0);
  };
  Vector x0{1.5, -2.0};
  Trajectory traj = integrate_rk4(rhs, constant_control, x0, TimeGrid(0.0, 4.0, 17));
  REQUIRE(traj.states.size() == 18);
  REQUIRE(traj.states.front() == x0);
  for (const Vector& x : traj.states) {
    REQUIRE(x[0] == 1.5);
    REQUIRE(x[1] == -2.0);
  }
}

TEST_CASE("exponential growth reaches e at T=1", "[ode]") {
  auto rhs = [](double, const Vector& x, const Vector&) { return Vector{x[0]}; };
  Trajectory traj = integrate_rk4(rhs, constant_control, Vector{1.0}, TimeGrid(0.0, 1.0, 100));
  REQUIRE(std::abs(traj.states.back()[0] - std::exp(1.0)) < 1e-8);
}

TEST_CASE("uncontrolled two-node system follows e^{At} x0", "[ode]") {
  Matrix a(2, 2, {1.0, 0.0, 1.0, 0.0});
  auto rhs = [&](double, const Vector& x, const Vector&) { return a * x; };
  Trajectory traj = integrate_rk4(rhs, constant_control, Vector{1.0, 0.5}, TimeGrid(0.0, 1.0, 100));
  const double e = std::exp(1.0);
  REQUIRE(std::abs(traj.states.back()[0] - e) < 1e-7);
  REQUIRE(std::abs(traj.states.back()[1] - (e - 0.5)) < 1e-7);
}

TEST_CASE("halving the step shrinks the error about sixteenfold", "[ode]") {
  auto rhs = [](double, const Vector& x, const Vector&) { return Vector{x[0]}; };
  auto err_with = [&](std::size_t steps) {
    Trajectory t = integrate_rk4(rhs, constant_control, Vector{1.0}, TimeGrid(0.0, 1.0, steps));
    return std::abs(t.states.back()[0] - std::exp(1.0));
  };
  const double ratio = err_with(20) / err_with(40);
  REQUIRE(ratio > 12.0);
  REQUIRE(ratio < 20.0);
}

TEST_CASE("divergence reports the failing step", "[ode]") {
  auto rhs = [](double, const Vector& x, const Vector&) { return Vector{x[0] * x[0]}; };
  try {
    integrate_rk4(rhs, constant_control, Vector{1.0}, TimeGrid(0.0, 2.0, 100));
    FAIL("expected divergence");
  } catch (const DivergenceError& err) {
    REQUIRE(err.step < 100);
    REQUIRE(err.step > 20);  // finite well past t=0
  }
}

TEST_CASE("control energy of zero control is zero", "[ode]") {
  TimeGrid g(0.0, 2.0, 40);
  std::vector<Vector> u(g.nodes(), Vector{0.0});
  REQUIRE(control_energy(g, u) == 0.0);
}

TEST_CASE("control energy of a constant is exact", "[ode]") {
  TimeGrid g(0.0, 3.0, 13);
  std::vector<Vector> u(g.nodes(), Vector{-1.7});
  REQUIRE(control_energy(g, u) == Catch::Approx(1.7 * 1.7 * 3.0).epsilon(1e-14));
}

TEST_CASE("control energy of a ramp approximates one third", "[ode]") {
  TimeGrid g(0.0, 1.0, 100);
  std::vector<Vector> u;
  for (std::size_t k = 0; k < g.nodes(); ++k) u.push_back(Vector{g.node(k)});
  REQUIRE(std::abs(control_energy(g, u) - 1.0 / 3.0) < 1e-4);
}

TEST_CASE("control energy ignores the sign of the control", "[ode]") {
  TimeGrid g(0.0, 1.0, 50);
  std::vector<Vector> u, nu;
  for (std::size_t k = 0; k < g.nodes(); ++k) {
    const double v = std::sin(5.0 * g.node(k)) + 0.3;
    u.push_back(Vector{v});
    nu.push_back(Vector{-v});
  }
  REQUIRE(control_energy(g, u) == control_energy(g, nu));
}

TEST_CASE("control energy is additive under grid concatenation", "[ode]") {
  auto sample = [](double t) { return Vector{std::cos(3.0 * t) + 0.2 * t}; };
  TimeGrid left(0.0, 1.0, 50), right(1.0, 2.0, 50), whole(0.0, 2.0, 100);
  std::vector<Vector> ul, ur, uw;
  for (std::size_t k = 0; k < left.nodes(); ++k) ul.push_back(sample(left.node(k)));
  for (std::size_t k = 0; k < right.nodes(); ++k) ur.push_back(sample(right.node(k)));
  for (std::size_t k = 0; k < whole.nodes(); ++k) uw.push_back(sample(whole.node(k)));
  REQUIRE(control_energy(left, ul) + control_energy(right, ur) ==
          Catch::Approx(control_energy(whole, uw)).epsilon(1e-12));
}

TEST_CASE("prefix energies are non-decreasing", "[ode]") {
  TimeGrid g(0.0, 1.0, 64);
  std::vector<Vector> u;
  for (std::size_t k = 0; k < g.nodes(); ++k)
    u.push_back(Vector{std::sin(17.0 * g.node(k))});
  Vector e = prefix_energies(g, u);
  for (std::size_t k = 1; k < e.size(); ++k) REQUIRE(e[k] >= e[k - 1]);
}
