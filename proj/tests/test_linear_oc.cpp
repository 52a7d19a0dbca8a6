#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nodec/linear_oc.hpp"
#include "nodec/ode.hpp"

using namespace nodec;

namespace {

// closed-form Gramian of the two-node system at T=1, from the
// antiderivatives of e^{2t}, e^t (e^{At}B = (e^t, e^t - 1)^T)
Matrix two_node_gramian_closed_form() {
  const double e = std::exp(1.0);
  const double w11 = (e * e - 1.0) / 2.0;
  const double w12 = w11 - (e - 1.0);
  const double w22 = w11 - 2.0 * (e - 1.0) + 1.0;
  return Matrix(2, 2, {w11, w12, w12, w22});
}

}  // namespace

TEST_CASE("gramian of an integrator bank is T times the identity", "[linear_oc]") {
  LinearControlProblem p;
  p.A = Matrix(2, 2);
  p.B = Matrix::identity(2);
  p.x0 = {0.0, 0.0};
  p.x_target = {1.0, 1.0};
  p.horizon = 2.0;
  Matrix w = gramian(p, 1e-12);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      REQUIRE(w(i, j) == Catch::Approx(i == j ? 2.0 : 0.0).margin(1e-10));
}

TEST_CASE("gramian of the two-node system matches the closed form", "[linear_oc]") {
  Matrix w = gramian(two_node_problem(), 1e-10);
  Matrix want = two_node_gramian_closed_form();
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      REQUIRE(std::abs(w(i, j) - want(i, j)) < 1e-8);
}

TEST_CASE("gramian with zero input matrix is zero", "[linear_oc]") {
  LinearControlProblem p = two_node_problem();
  p.B = Matrix(2, 1);
  REQUIRE(gramian(p, 1e-10).max_abs() == 0.0);
}

TEST_CASE("gramian is symmetric", "[linear_oc]") {
  Matrix w = gramian(two_node_problem(), 1e-10);
  REQUIRE(std::abs(w(0, 1) - w(1, 0)) <= 1e-10);
}

TEST_CASE("a singular Gramian is refused", "[linear_oc]") {
  LinearControlProblem p = two_node_problem();
  p.B = Matrix(2, 1);  // nothing is controllable
  REQUIRE_THROWS_AS(make_minimum_energy_control(p), SingularError);
}

TEST_CASE("optimal control vanishes when free evolution reaches the target", "[linear_oc]") {
  LinearControlProblem p = two_node_problem();
  p.x_target = mat_exp(p.A, p.horizon) * p.x0;
  MinimumEnergyControl oc = make_minimum_energy_control(p);
  for (double t : {0.0, 0.4, 1.0}) REQUIRE(std::abs(oc(t)[0]) < 1e-9);
  REQUIRE(std::abs(oc.energy) < 1e-12);
}

TEST_CASE("optimal control of an integrator is the constant displacement rate", "[linear_oc]") {
  LinearControlProblem p;
  p.A = Matrix(2, 2);
  p.B = Matrix::identity(2);
  p.x0 = {1.0, -2.0};
  p.x_target = {3.0, 0.0};
  p.horizon = 4.0;
  MinimumEnergyControl oc = make_minimum_energy_control(p);
  for (double t : {0.0, 1.7, 4.0}) {
    const Vector u = oc(t);
    REQUIRE(u[0] == Catch::Approx(0.5).margin(1e-9));   // (3-1)/4
    REQUIRE(u[1] == Catch::Approx(0.5).margin(1e-9));   // (0+2)/4
  }
}

TEST_CASE("two-node optimal control matches an independently assembled formula", "[linear_oc]") {
  LinearControlProblem p = two_node_problem();
  MinimumEnergyControl oc = make_minimum_energy_control(p);

  // independent assembly: B^T e^{A^T s} = (e^s, e^s - 1); W and v in closed
  // form; 2x2 solve by Cramer's rule
  const double e = std::exp(1.0);
  Matrix w = two_node_gramian_closed_form();
  const double v1 = -e, v2 = -(e - 0.5);
  const double det = w(0, 0) * w(1, 1) - w(0, 1) * w(0, 1);
  const double y1 = (v1 * w(1, 1) - v2 * w(0, 1)) / det;
  const double y2 = (v2 * w(0, 0) - v1 * w(0, 1)) / det;
  for (double t : {0.0, 0.5, 1.0}) {
    const double es = std::exp(1.0 - t);
    const double want = es * y1 + (es - 1.0) * y2;
    REQUIRE(oc(t)[0] == Catch::Approx(want).margin(1e-7));
  }
}

TEST_CASE("optimal control steers the two-node system onto the target", "[linear_oc]") {
  LinearControlProblem p = two_node_problem();
  MinimumEnergyControl oc = make_minimum_energy_control(p);
  LinearSystem sys = p.system();
  auto rhs = [&](double t, const Vector& x, const Vector& u) { return sys.rhs(t, x, u); };
  Trajectory traj = integrate_rk4(rhs, oc, p.x0, TimeGrid(0.0, 1.0, 300));
  REQUIRE(std::abs(traj.states.back()[0]) <= 1e-5);
  REQUIRE(std::abs(traj.states.back()[1]) <= 1e-5);

  // the trapezoid energy of the realized trajectory agrees with v^T W^-1 v
  const double simulated = control_energy(traj);
  REQUIRE(std::abs(simulated - oc.energy) <= 1e-4 * oc.energy);
}

TEST_CASE("two-node minimum energy is about 14.5", "[linear_oc]") {
  const double energy = oc_energy(two_node_problem());
  REQUIRE(energy == Catch::Approx(14.52).margin(0.02));
}

TEST_CASE("scaling both endpoints scales the energy quadratically", "[linear_oc]") {
  LinearControlProblem p = two_node_problem();
  p.x_target = {0.3, -0.1};
  const double base = oc_energy(p);
  LinearControlProblem q = p;
  for (double& v : q.x0) v *= 2.5;
  for (double& v : q.x_target) v *= 2.5;
  REQUIRE(oc_energy(q) == Catch::Approx(2.5 * 2.5 * base).epsilon(1e-9));
}
