#include "kflow/kinematics.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

#include "kflow/errors.hpp"

namespace kflow {

namespace {

void require_unit(const Velocity& omega) {
  if (std::abs(norm(omega) - 1.0) > 1e-12) {
    throw ArgumentError("collision parameter omega must be a unit vector");
  }
}

Velocity transfer(const Velocity& v, const Velocity& v_star, const Velocity& omega) {
  const double along = dot(v - v_star, omega);
  return along * omega;
}

}  // namespace

double sphere_area(int d) {
  switch (d) {
    case 2:
      return 2.0 * std::numbers::pi;
    case 3:
      return 4.0 * std::numbers::pi;
    default:
      throw ArgumentError("velocity dimension must be 2 or 3");
  }
}

std::pair<Velocity, Velocity> collide(const Velocity& v, const Velocity& v_star,
                                      const Velocity& omega) {
  require_unit(omega);
  const Velocity p = transfer(v, v_star, omega);
  return {v - p, v_star + p};
}

MomentumGrid MomentumGrid::for_speed(double max_speed) {
  if (!(max_speed > 0.0) || !std::isfinite(max_speed)) throw ArgumentError("MomentumGrid: speed must be positive and finite");
  int e = 0;
  std::frexp(max_speed, &e);
  MomentumGrid g;
  g.range = std::ldexp(1.0, e);
  g.spacing = std::ldexp(1.0, e - 51);
  return g;
}

bool MomentumGrid::on_grid(const Velocity& v) const {
  if (!(norm(v) <= range)) return false;
  for (int i = 0; i < v.dim; ++i)
    if (snap(v[i]) != v[i]) return false;
  return true;
}

std::array<std::int64_t, 3> MomentumGrid::total(const std::vector<Velocity>& v) const {
  std::array<std::int64_t, 3> sum{0, 0, 0};
  for (const auto& x : v)
    for (int i = 0; i < x.dim; ++i) sum[static_cast<std::size_t>(i)] += std::llround(x[i] / spacing);
  return sum;
}

std::pair<Velocity, Velocity> collide_on_grid(const Velocity& v, const Velocity& v_star,
                                              const Velocity& omega, const MomentumGrid& grid) {
  require_unit(omega);
  if (!grid.on_grid(v) || !grid.on_grid(v_star)) {
    throw ArgumentError("collide_on_grid: velocities must lie on the momentum grid");
  }
  // Among nearby grid points pick the transfer with the smallest energy
  // defect 2 p.(p - k); the exact transfer has p.(p - k) = 0.
  const Velocity exact = transfer(v, v_star, omega);
  const Velocity k = v - v_star;
  const int d = v.dim;
  std::array<double, 3> base{0.0, 0.0, 0.0};
  for (int c = 0; c < d; ++c) base[c] = std::floor(exact[c] / grid.spacing) - 1.0;
  int combos = 1;
  for (int c = 0; c < d; ++c) combos *= 4;
  Velocity best = grid.snap(exact);
  long double best_defect = std::numeric_limits<long double>::infinity();
  for (int m = 0; m < combos; ++m) {
    Velocity p = Velocity::zero(d);
    long double defect = 0.0L;
    for (int c = 0, code = m; c < d; ++c, code /= 4) {
      p[c] = (base[c] + code % 4) * grid.spacing;
      defect += static_cast<long double>(p[c]) * (static_cast<long double>(p[c]) - k[c]);
    }
    if (std::abs(defect) < best_defect) {
      best_defect = std::abs(defect);
      best = p;
    }
  }
  return {v - best, v_star + best};
}

Kernel Kernel::constant(double b) {
  if (!(b > 0.0) || !std::isfinite(b)) throw ArgumentError("constant kernel needs b > 0");
  return Kernel(KernelKind::constant, b, b);
}

Kernel Kernel::clamp(double lo, double hi) {
  if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi)) {
    throw ArgumentError("clamp kernel needs 0 < lo <= hi");
  }
  return Kernel(KernelKind::clamp, lo, hi);
}

Kernel Kernel::angular(double base, double amp) {
  if (!(base > 0.0) || !(amp >= 0.0) || !std::isfinite(amp)) {
    throw ArgumentError("angular kernel needs base > 0 and amp >= 0");
  }
  return Kernel(KernelKind::angular, base, amp);
}

double Kernel::operator()(const Velocity& k, const Velocity& omega) const {
  switch (kind_) {
    case KernelKind::constant:
      return p0_;
    case KernelKind::clamp:
      return std::clamp(norm(k), p0_, p1_);
    case KernelKind::angular: {
      const double speed = norm(k);
      if (speed == 0.0) return p0_ + p1_ / k.dim;
      const double c = std::clamp(dot(k, omega) / speed, -1.0, 1.0);
      return p0_ + p1_ * c * c;
    }
  }
  return p0_;
}

double Kernel::lower_bound() const { return p0_; }

double Kernel::upper_bound() const {
  switch (kind_) {
    case KernelKind::constant:
      return p0_;
    case KernelKind::clamp:
      return p1_;
    case KernelKind::angular:
      return p0_ + p1_;
  }
  return p1_;
}

double Kernel::angular_bound(int d) const {
  const double area = sphere_area(d);
  switch (kind_) {
    case KernelKind::constant:
      return p0_ * area;
    case KernelKind::clamp:
      return p1_ * area;
    case KernelKind::angular:
      return (p0_ + p1_ / d) * area;
  }
  return upper_bound() * area;
}

double angular_integral(const Kernel& kernel, const Velocity& k) {
  const int d = k.dim;
  const double area = sphere_area(d);
  switch (kernel.kind()) {
    case KernelKind::constant:
      return kernel.b() * area;
    case KernelKind::clamp:
      return std::clamp(norm(k), kernel.lo(), kernel.hi()) * area;
    case KernelKind::angular:
      return (kernel.base() + kernel.amp() / d) * area;
  }
  return 0.0;
}

PovznerGap povzner_gap(const Velocity& v, const Velocity& v_star, const Velocity& omega,
                       double R) {
  if (!(R > 0.0)) throw ArgumentError("povzner_gap: R must be positive");
  const auto [vp, vsp] = collide(v, v_star, omega);
  auto phi2 = [R](const Velocity& u) {
    const double s = std::min(norm(u), R);
    return s * s;
  };
  const double lhs = std::abs(phi2(vp) + phi2(vsp) - phi2(v) - phi2(v_star));
  const double rhs = norm(v) * norm(v_star) + norm(vp) * norm(vsp);
  return {lhs, rhs};
}

}  // namespace kflow
