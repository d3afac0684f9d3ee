#include "doctest.h"

#include "kflow/collision_rates.hpp"
#include "kflow/errors.hpp"
#include "kflow/forward.hpp"

using namespace kflow;

namespace {

const VelocityNetwork& grid() {
  static const VelocityNetwork net = build_network(2, 3.0, 1.0, Kernel::constant(1.0));
  return net;
}

}  // namespace

TEST_CASE("simpson") {
  std::vector<double> x{0.0, 0.5, 1.0, 1.5, 2.0};
  std::vector<double> y;
  for (double t : x) y.push_back(t * t * t - 2.0 * t + 1.0);
  CHECK(simpson(x, y) == doctest::Approx(4.0 - 4.0 + 2.0).epsilon(1e-14));

  // Nonuniform nodes and an odd leftover interval are exact on quadratics.
  x = {0.0, 0.1, 0.35, 0.4, 0.9, 1.0};
  y.clear();
  for (double t : x) y.push_back(3.0 * t * t - t + 2.0);
  CHECK(simpson(x, y) == doctest::Approx(1.0 - 0.5 + 2.0).epsilon(1e-14));
  CHECK_THROWS_AS(simpson(std::vector<double>{0.0, 1.0}, std::vector<double>{1.0, 1.0}), ArgumentError);
}

TEST_CASE("uniform stops") {
  const auto s = uniform_stops(1.0, 0.25);
  REQUIRE(s.size() == 4);
  CHECK(s.back() == 1.0);
  CHECK(s[1] == 0.5);
}

TEST_CASE("equilibrium is a fixed point") {
  const DensityState feq = maxent_project(grid());
  ForwardOptions opt;
  opt.T = 5.0;
  const ForwardTrajectory tr = solve_forward(grid(), feq, opt);
  CHECK((tr.states.back() - feq).cwiseAbs().maxCoeff() <= 1e-13);
  CHECK(tr.times.back() == 5.0);
}

TEST_CASE("forward run conserves and dissipates") {
  const DensityState f0 = density_from_mixture(grid(), bimodal_mixture(2, 1.5, 0.6));
  ForwardOptions opt;
  opt.T = 3.0;
  opt.stops = uniform_stops(3.0, 0.005);
  const ForwardTrajectory tr = solve_forward(grid(), f0, opt);
  REQUIRE(tr.stop_index.size() == opt.stops.size() + 1);
  for (std::size_t s = 0; s < opt.stops.size(); ++s) CHECK(tr.times[tr.stop_index[s + 1]] == opt.stops[s]);
  for (std::size_t k = 1; k < tr.size(); ++k) {
    CHECK(tr.entropy[k] <= tr.entropy[k - 1]);
    CHECK(std::abs(tr.moments[k].mass - 1.0) <= 1e-13);
    CHECK(std::abs(tr.moments[k].momentum[0]) <= 1e-13);
    CHECK(std::abs(tr.moments[k].energy - 2.0) <= 1e-12);
    CHECK(tr.speed2[k] == doctest::Approx(tr.dissipation[k]).epsilon(1e-10));
  }
  CHECK((tr.state_at(tr.times[7]) - tr.states[7]).norm() == 0.0);

  const EnergyIdentityReport rep = energy_identity_report(tr, tr.stop_index);
  CHECK(std::abs(rep.total_residual) <= 1e-6);
  CHECK(std::abs(rep.max_slope_residual) <= 1e-6);
  CHECK(rep.max_panel_residual <= 1e-6);
  CHECK(entropy_rate_residual(tr, std::vector<std::size_t>(tr.stop_index.begin() + 40, tr.stop_index.end())) <= 1e-6);
}

TEST_CASE("trajectory csv") {
  const DensityState f0 = density_from_mixture(grid(), bimodal_mixture(2, 1.0, 0.8));
  ForwardOptions opt;
  opt.T = 0.1;
  const ForwardTrajectory tr = solve_forward(grid(), f0, opt);
  const std::string csv = trajectory_csv(tr, 2);
  CHECK(csv.rfind("time,H,D,mass,px,py,energy\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == tr.size() + 1);
}

TEST_CASE("forward rejects bad input") {
  DensityState f = maxent_project(grid());
  f(0) = 0.0;
  CHECK_THROWS_AS(solve_forward(grid(), f, {}), ArgumentError);
}
