#include "doctest.h"

#include "kflow/collision_rates.hpp"
#include "kflow/errors.hpp"
#include "kflow/jko.hpp"

using namespace kflow;

namespace {

const VelocityNetwork& grid() {
  static const VelocityNetwork net = build_network(2, 3.0, 1.0, Kernel::constant(1.0));
  return net;
}

}  // namespace

TEST_CASE("equilibrium is a fixed point") {
  const DensityState feq = maxent_project(grid());
  const JkoStep s = jko_step(grid(), feq, 0.1);
  CHECK(l1_distance(grid(), s.state, feq) <= 1e-8);
  CHECK(s.distance2 <= 1e-12);
}

TEST_CASE("a very long step lands on the equilibrium") {
  const DensityState f0 = density_from_mixture(grid(), bimodal_mixture(2, 1.5, 0.6));
  const JkoStep s = jko_step(grid(), f0, 1e6);
  CHECK(l1_distance(grid(), s.state, maxent_project(grid())) <= 1e-4);
}

TEST_CASE("one step decreases entropy and keeps the moments") {
  const DensityState f0 = density_from_mixture(grid(), bimodal_mixture(2, 1.5, 0.6));
  const double tau = 0.05;
  const JkoStep s = jko_step(grid(), f0, tau);
  CHECK(s.entropy < entropy(grid(), f0));
  CHECK(s.entropy + s.distance2 / (2 * tau) <= entropy(grid(), f0));
  CHECK(s.objective == doctest::Approx(s.entropy + s.distance2 / (2 * tau)).epsilon(1e-12));
  CHECK(s.kkt_residual <= 1e-8);
  const Moments m = moments(grid(), s.state);
  CHECK(m.mass == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.energy == doctest::Approx(2.0).epsilon(1e-12));
  // The step follows the collision operator to first order.
  const DensityState rate = (s.state - f0) / tau;
  const Eigen::VectorXd Q = collision_operator(grid(), f0);
  CHECK((rate - Q).cwiseAbs().maxCoeff() <= 0.2 * Q.cwiseAbs().maxCoeff());
}

TEST_CASE("trajectory interpolant") {
  const DensityState f0 = density_from_mixture(grid(), bimodal_mixture(2, 1.0, 0.8));
  const JkoTrajectory tr = jko_trajectory(grid(), f0, 0.1, 0.3);
  REQUIRE(tr.states.size() == 4);
  CHECK(&tr.at(0.0) == &tr.states[0]);
  CHECK(&tr.at(0.05) == &tr.states[1]);
  CHECK(&tr.at(0.1) == &tr.states[1]);
  CHECK(&tr.at(0.1 + 1e-6) == &tr.states[2]);
  CHECK(&tr.at(0.3) == &tr.states[3]);
  CHECK_THROWS_AS(tr.at(0.31), ArgumentError);
  for (std::size_t n = 1; n < tr.states.size(); ++n)
    CHECK(entropy(grid(), tr.states[n]) < entropy(grid(), tr.states[n - 1]));
  const std::string csv = jko_csv(tr);
  CHECK(csv.rfind("n,t,H,distance2,objective,kkt\n", 0) == 0);
}

TEST_CASE("jko rejects bad input") {
  DensityState f = maxent_project(grid());
  CHECK_THROWS_AS(jko_step(grid(), f, 0.0), ArgumentError);
  f(0) = 0.0;
  CHECK_THROWS_AS(jko_step(grid(), f, 0.1), ArgumentError);
}
