#include "doctest.h"

#include <numbers>
#include <random>

#include "kflow/errors.hpp"
#include "kflow/kinematics.hpp"

using namespace kflow;

namespace {

Velocity random_velocity(std::mt19937_64& gen, int d, double scale) {
  std::normal_distribution<double> g;
  Velocity v = Velocity::zero(d);
  for (int c = 0; c < d; ++c) v[c] = scale * g(gen);
  return v;
}

Velocity random_unit(std::mt19937_64& gen, int d) {
  Velocity w = random_velocity(gen, d, 1.0);
  return (1.0 / norm(w)) * w;
}

}  // namespace

TEST_CASE("collide: hand example") {
  const double r = 1.0 / std::sqrt(2.0);
  const auto [a, b] = collide({1.0, 0.0}, {-1.0, 0.0}, {r, r});
  CHECK(a[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(a[1] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(b[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(b[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("collide: head-on swap along omega") {
  const auto [a, b] = collide({2.0, 1.0, 0.0}, {0.0, 1.0, 0.0}, {1.0, 0.0, 0.0});
  CHECK(a == Velocity(0.0, 1.0, 0.0));
  CHECK(b == Velocity(2.0, 1.0, 0.0));
}

TEST_CASE("collide: even in omega, involution, conservation") {
  std::mt19937_64 gen(7);
  for (int s = 0; s < 2000; ++s) {
    const int d = 2 + s % 2;
    const Velocity v = random_velocity(gen, d, 2.0), w = random_velocity(gen, d, 2.0);
    const Velocity om = random_unit(gen, d);
    const auto [a, b] = collide(v, w, om);
    const auto [a2, b2] = collide(v, w, -om);
    const auto [c, e] = collide(a, b, om);
    CHECK(norm(a - a2) <= 1e-14);
    CHECK(norm(b - b2) <= 1e-14);
    CHECK(norm(c - v) <= 1e-13);
    CHECK(norm(e - w) <= 1e-13);
    CHECK(std::abs(norm2(a) + norm2(b) - norm2(v) - norm2(w)) <= 1e-13 * (norm2(v) + norm2(w)));
  }
}

TEST_CASE("collide rejects non-unit omega") {
  CHECK_THROWS_AS(collide({1.0, 0.0}, {0.0, 0.0}, {1.0, 1e-5}), ArgumentError);
  CHECK_NOTHROW(collide({1.0, 0.0}, {0.0, 0.0}, {1.0 + 1e-13, 0.0}));
}

TEST_CASE("collide_on_grid conserves momentum bit for bit") {
  std::mt19937_64 gen(11);
  const MomentumGrid grid = MomentumGrid::for_speed(40.0);
  CHECK(grid.range == 64.0);
  CHECK(grid.spacing == 0x1p-45);
  for (int s = 0; s < 5000; ++s) {
    const int d = 2 + s % 2;
    const Velocity v = grid.snap(random_velocity(gen, d, 3.0));
    const Velocity w = grid.snap(random_velocity(gen, d, 3.0));
    const auto [a, b] = collide_on_grid(v, w, random_unit(gen, d), grid);
    CHECK(a + b == v + w);
    CHECK(grid.on_grid(a));
    CHECK(std::abs(norm2(a) + norm2(b) - norm2(v) - norm2(w)) <= 1e-12 * (norm2(v) + norm2(w)));
  }
  const MomentumGrid unit = MomentumGrid::for_speed(1.0);
  CHECK(unit.range == 2.0);
  CHECK_THROWS_AS(collide_on_grid({0.1, 0.0}, {0.0, 0.0}, {1.0, 0.0}, unit), ArgumentError);
  CHECK_THROWS_AS(collide_on_grid({3.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}, unit), ArgumentError);
  CHECK_THROWS_AS(MomentumGrid::for_speed(0.0), ArgumentError);
}

TEST_CASE("kernels") {
  const Velocity k{1.0, 1.0}, w{1.0, 0.0};
  CHECK(Kernel::constant(2.5)(k, w) == 2.5);
  CHECK(Kernel::clamp(0.5, 1.2)(k, w) == 1.2);
  CHECK(Kernel::clamp(0.5, 1.2)(Velocity{0.1, 0.0}, w) == 0.5);
  const Kernel ang = Kernel::angular(1.0, 3.0);
  CHECK(ang(k, w) == doctest::Approx(2.5));
  CHECK(ang(k, -w) == ang(k, w));
  CHECK(ang(Velocity::zero(2), w) == doctest::Approx(2.5));
  CHECK(ang.lower_bound() == 1.0);
  CHECK(ang.upper_bound() == 4.0);
}

TEST_CASE("angular_integral matches periodic trapezoid on the circle") {
  const int n = 256;
  for (const Kernel& B : {Kernel::constant(1.3), Kernel::clamp(0.2, 2.0), Kernel::angular(1.0, 3.0)}) {
    for (const Velocity& k : {Velocity{1.0, 0.3}, Velocity{-0.2, 2.0}, Velocity{0.05, 0.0}}) {
      double sum = 0.0;
      for (int m = 0; m < n; ++m) {
        const double th = 2.0 * std::numbers::pi * m / n;
        sum += B(k, {std::cos(th), std::sin(th)});
      }
      sum *= 2.0 * std::numbers::pi / n;
      CHECK(angular_integral(B, k) == doctest::Approx(sum).epsilon(1e-13));
      CHECK(angular_integral(B, k) <= B.angular_bound(2) * (1 + 1e-14));
    }
  }
}

TEST_CASE("sphere areas") {
  CHECK(sphere_area(2) == doctest::Approx(2.0 * std::numbers::pi));
  CHECK(sphere_area(3) == doctest::Approx(4.0 * std::numbers::pi));
}

TEST_CASE("povzner: hand example") {
  const PovznerGap g = povzner_gap({1.0, 0.0}, {-3.0, 0.0}, {1.0, 0.0}, 2.0);
  CHECK(g.lhs == 0.0);
  CHECK(g.rhs == 6.0);
}

TEST_CASE("povzner: truncation cuts the energy balance") {
  // v = (2, 0), v* = 0 scatter to (1, 1), (1, -1); with R = 1.5 only v is cut.
  const double r = 1.0 / std::sqrt(2.0);
  const PovznerGap g = povzner_gap({2.0, 0.0}, {0.0, 0.0}, {r, -r}, 1.5);
  CHECK(g.lhs == doctest::Approx(std::abs(2.0 + 2.0 - 2.25)));
  CHECK(g.rhs == doctest::Approx(2.0));
  CHECK(g.lhs <= povzner_constant * g.rhs);
}
