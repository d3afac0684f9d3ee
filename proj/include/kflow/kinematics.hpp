#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>
#include <utility>

namespace kflow {

/// A velocity in d = 2 or 3 dimensions. Unused trailing components are zero.
struct Velocity {
  std::array<double, 3> c{0.0, 0.0, 0.0};
  int dim = 2;

  Velocity() = default;
  Velocity(double x, double y) : c{x, y, 0.0}, dim(2) {}
  Velocity(double x, double y, double z) : c{x, y, z}, dim(3) {}

  static Velocity zero(int d) {
    Velocity v;
    v.dim = d;
    return v;
  }

  double operator[](int i) const { return c[static_cast<std::size_t>(i)]; }
  double& operator[](int i) { return c[static_cast<std::size_t>(i)]; }

  friend Velocity operator+(Velocity a, const Velocity& b) {
    for (int i = 0; i < a.dim; ++i) a[i] += b[i];
    return a;
  }
  friend Velocity operator-(Velocity a, const Velocity& b) {
    for (int i = 0; i < a.dim; ++i) a[i] -= b[i];
    return a;
  }
  friend Velocity operator*(double s, Velocity a) {
    for (int i = 0; i < a.dim; ++i) a[i] *= s;
    return a;
  }
  friend Velocity operator-(Velocity a) { return -1.0 * a; }
  friend bool operator==(const Velocity& a, const Velocity& b) = default;
};

inline double dot(const Velocity& a, const Velocity& b) {
  double s = 0.0;
  for (int i = 0; i < a.dim; ++i) s += a[i] * b[i];
  return s;
}
inline double norm2(const Velocity& a) { return dot(a, a); }
inline double norm(const Velocity& a) { return std::sqrt(norm2(a)); }

/// Surface measure of the unit sphere S^{d-1}.
double sphere_area(int d);

/// Binary elastic collision with parameter omega.
///
/// Returns (v - <v - v*, w> w, v* + <v - v*, w> w). The transferred momentum
/// <v - v*, w> w is formed once, so v' + v'* reproduces v + v* up to the
/// rounding of the two additions only. Throws ArgumentError unless
/// | |w| - 1 | <= 1e-12.
std::pair<Velocity, Velocity> collide(const Velocity& v, const Velocity& v_star,
                                      const Velocity& omega);

enum class KernelKind { constant, clamp, angular };

/// Bounded collision kernel B(k, w), even in w.
///
///  - constant:  B = b
///  - clamp:     B = clamp(|k|, lo, hi)
///  - angular:   B = base + amp * (<k, w> / |k|)^2   (B = base + amp/d at k = 0)
class Kernel {
 public:
  static Kernel constant(double b);
  static Kernel clamp(double lo, double hi);
  static Kernel angular(double base, double amp);

  KernelKind kind() const { return kind_; }
  double operator()(const Velocity& k, const Velocity& omega) const;

  /// c1 <= B <= c2 on all inputs.
  double lower_bound() const;
  double upper_bound() const;
  /// Uniform bound C_B on the angular integral of B(k, .) over S^{d-1}.
  double angular_bound(int d) const;

  double b() const { return p0_; }
  double lo() const { return p0_; }
  double hi() const { return p1_; }
  double base() const { return p0_; }
  double amp() const { return p1_; }

 private:
  Kernel(KernelKind kind, double p0, double p1) : kind_(kind), p0_(p0), p1_(p1) {}
  KernelKind kind_;
  double p0_;
  double p1_;
};

/// Integral of B(k, .) over the unit sphere.
///
/// Closed form for every implemented kernel (constant and clamp kernels do
/// not depend on w; for the angular kernel the mean of cos^2 over S^{d-1}
/// is 1/d).
double angular_integral(const Kernel& kernel, const Velocity& k);

struct PovznerGap {
  double lhs;
  double rhs;
};

/// Truncated-energy defect of one collision.
///
/// lhs = |phi(v')^2 + phi(v'*)^2 - phi(v)^2 - phi(v*)^2| with phi = min(|.|, R),
/// rhs = |v||v*| + |v'||v'*|. The bound lhs <= 4 rhs holds for every R > 0.
PovznerGap povzner_gap(const Velocity& v, const Velocity& v_star, const Velocity& omega,
                       double R);

inline constexpr double povzner_constant = 4.0;

}  // namespace kflow

namespace kflow {

/// Dyadic fixed-point grid used where momentum must be conserved bit for bit.
///
/// Floating-point sums cannot in general reproduce v + v* after a collision
/// (cancellation leaves low-order bits that no pair of doubles near v', v'*
/// can carry). With spacing 2^-51 range every value below 4 range is an exact
/// double, so for speeds up to `range` quantising the momentum transfer makes
/// v' + v'* == v + v* hold exactly. Totals over many particles are formed in
/// integer grid units.
struct MomentumGrid {
  double range = 1.0;
  double spacing = 0x1p-51;

  /// Smallest power-of-two range covering max_speed.
  static MomentumGrid for_speed(double max_speed);

  double snap(double x) const { return std::nearbyint(x / spacing) * spacing; }
  Velocity snap(Velocity v) const {
    for (int i = 0; i < v.dim; ++i) v[i] = snap(v[i]);
    return v;
  }
  bool on_grid(const Velocity& v) const;
  /// Exact component sums in units of the spacing.
  std::array<std::int64_t, 3> total(const std::vector<Velocity>& v) const;
};

/// collide() with the transfer <v - v*, w> w moved to a nearby grid point,
/// chosen among the 4^d candidates around it to minimise the energy defect.
/// Inputs must lie on the grid (ArgumentError otherwise). The relative
/// energy error is O(2^-51).
std::pair<Velocity, Velocity> collide_on_grid(const Velocity& v, const Velocity& v_star,
                                              const Velocity& omega, const MomentumGrid& grid);

}  // namespace kflow
