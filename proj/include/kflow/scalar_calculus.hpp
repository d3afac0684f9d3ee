#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

namespace kflow {

/// Nonnegative extended real: a finite value or +infinity.
///
/// Used where a convex integrand legitimately takes the value +inf
/// (action density with vanishing mean, dissipation with one empty side).
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;
  constexpr explicit ExtendedReal(double v) : value_(v) {}
  static constexpr ExtendedReal infinity() {
    ExtendedReal r;
    r.infinite_ = true;
    return r;
  }

  constexpr bool is_infinite() const { return infinite_; }
  constexpr bool is_finite() const { return !infinite_; }
  /// Finite value, or +inf as an IEEE double.
  constexpr double value() const {
    return infinite_ ? std::numeric_limits<double>::infinity() : value_;
  }

  constexpr ExtendedReal& operator+=(const ExtendedReal& o) {
    infinite_ = infinite_ || o.infinite_;
    if (!infinite_) value_ += o.value_;
    return *this;
  }
  friend constexpr ExtendedReal operator+(ExtendedReal a, const ExtendedReal& b) { return a += b; }
  friend constexpr ExtendedReal operator*(double s, ExtendedReal a) {
    if (!a.infinite_) a.value_ *= s;
    return a;
  }

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

/// Logarithmic mean (s - t) / (log s - log t), with L(s, s) = s and
/// L(s, 0) = L(0, t) = 0. Throws ArgumentError on negative input.
///
/// Evaluated as sqrt(st) sinh(r/2)/(r/2) with r = log(s/t); below
/// |r| < 1e-5 the even series 1 + r^2/24 + r^4/1920 replaces the ratio.
double log_mean(double s, double t);

/// Log-mean together with its first and second partial derivatives.
/// Requires s, t > 0.
struct LogMeanJet {
  double value;
  double ds, dt;
  double dss, dst, dtt;
};
LogMeanJet log_mean_jet(double s, double t);

/// Action density u^2 / (4 L(s, t)); 0 when L = 0 and u = 0; +inf when
/// L = 0 and u != 0.
ExtendedReal action_density(double u, double s, double t);

/// (t - s)(log t - log s); 0 when s = t = 0 and +inf when exactly one
/// argument vanishes.
ExtendedReal dissipation_density(double s, double t);

/// Finite mixture of Gaussians on R^n.
struct GaussianComponent {
  double weight;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

class GaussianMixture {
 public:
  GaussianMixture() = default;
  explicit GaussianMixture(std::vector<GaussianComponent> components);

  /// Standard Gaussian N(0, I_n).
  static GaussianMixture standard(int n);

  int dim() const { return dim_; }
  const std::vector<GaussianComponent>& components() const { return components_; }

  double density(const Eigen::VectorXd& x) const;
  double log_density(const Eigen::VectorXd& x) const;

  /// Push-forward under the linear map x -> A x (A invertible); the density
  /// of the result at x is |det A|^{-1} p(A^{-1} x).
  GaussianMixture push_forward(const Eigen::MatrixXd& A) const;

 private:
  struct Factor {
    Eigen::LLT<Eigen::MatrixXd> chol;
    double log_norm;
  };
  void factorize();

  std::vector<GaussianComponent> components_;
  std::vector<Factor> factors_;
  int dim_ = 0;
};

/// Ornstein-Uhlenbeck semigroup on Gaussian mixtures:
/// (w, m, S) -> (w, e^{-t} m, e^{-2t} S + (1 - e^{-2t}) I). t = 0 is the identity.
GaussianMixture ou_evolve(const GaussianMixture& mix, double time);

/// The orthogonal involution (v, v*) -> (v', v'*) on R^{2d} as a matrix.
Eigen::MatrixXd collision_matrix(const Eigen::VectorXd& omega);

/// Max over the probe points of |S_t(F o T)(x) - ((S_t F) o T)(x)| with F a
/// mixture on R^{2d} and T the collision involution for omega.
double ou_commutation_residual(const GaussianMixture& mix, const Eigen::VectorXd& omega,
                               double time, const std::vector<Eigen::VectorXd>& probes);

}  // namespace kflow
