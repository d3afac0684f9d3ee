#include "kflow/scalar_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "kflow/errors.hpp"

namespace kflow {

namespace {

constexpr double kSeriesSeam = 1e-5;

double log_ratio(double s, double t) {
  const double q = s / t;
  if (std::isfinite(q) && q > 0.0) return std::log(q);
  return std::log(s) - std::log(t);
}

// g(r) = sinh(r/2) / (r/2) and its first two derivatives in r.
struct SinhcJet {
  double g, g1, g2;
};

SinhcJet sinhc_jet(double r) {
  const double r2 = r * r;
  if (std::abs(r) < 0.1) {
    // g = sum_k r^{2k} / (4^k (2k+1)!)
    const double c1 = 1.0 / 24.0, c2 = 1.0 / 1920.0, c3 = 1.0 / 322560.0,
                 c4 = 1.0 / 92897280.0;
    const double g = 1.0 + r2 * (c1 + r2 * (c2 + r2 * (c3 + r2 * c4)));
    const double g1 = r * (2 * c1 + r2 * (4 * c2 + r2 * (6 * c3 + r2 * 8 * c4)));
    const double g2 = 2 * c1 + r2 * (12 * c2 + r2 * (30 * c3 + r2 * 56 * c4));
    return {g, g1, g2};
  }
  const double y = 0.5 * r;
  const double sh = std::sinh(y), ch = std::cosh(y);
  const double g = sh / y;
  const double g1 = 0.5 * (ch / y - sh / (y * y));
  const double g2 = 0.25 * (sh / y - 2.0 * ch / (y * y) + 2.0 * sh / (y * y * y));
  return {g, g1, g2};
}

}  // namespace

double log_mean(double s, double t) {
  if (s < 0.0 || t < 0.0 || std::isnan(s) || std::isnan(t)) {
    throw ArgumentError("log_mean: arguments must be nonnegative");
  }
  if (s == 0.0 || t == 0.0) return 0.0;
  if (s == t) return s;
  const double geo = std::sqrt(s) * std::sqrt(t);
  const double r = log_ratio(s, t);
  if (std::abs(r) < kSeriesSeam) {
    const double r2 = r * r;
    return geo * (1.0 + r2 / 24.0 + r2 * r2 / 1920.0);
  }
  const double half = 0.5 * r;
  return geo * (std::sinh(half) / half);
}

LogMeanJet log_mean_jet(double s, double t) {
  if (!(s > 0.0) || !(t > 0.0)) throw ArgumentError("log_mean_jet: arguments must be positive");
  const double geo = std::sqrt(s) * std::sqrt(t);
  const double r = (s == t) ? 0.0 : log_ratio(s, t);
  const auto [g, g1, g2] = sinhc_jet(r);
  // Derivatives in (a, b) = (log s, log t), then chain to (s, t).
  const double la = geo * (0.5 * g + g1);
  const double lb = geo * (0.5 * g - g1);
  const double laa = geo * (0.25 * g + g1 + g2);
  const double lbb = geo * (0.25 * g - g1 + g2);
  const double lab = geo * (0.25 * g - g2);
  LogMeanJet jet{};
  jet.value = (r == 0.0) ? s : log_mean(s, t);
  jet.ds = la / s;
  jet.dt = lb / t;
  jet.dss = (laa - la) / (s * s);
  jet.dtt = (lbb - lb) / (t * t);
  jet.dst = lab / (s * t);
  return jet;
}

ExtendedReal action_density(double u, double s, double t) {
  const double lm = log_mean(s, t);
  if (lm > 0.0) return ExtendedReal(u * u / (4.0 * lm));
  if (u == 0.0) return ExtendedReal(0.0);
  return ExtendedReal::infinity();
}

ExtendedReal dissipation_density(double s, double t) {
  if (s < 0.0 || t < 0.0) throw ArgumentError("dissipation_density: arguments must be nonnegative");
  if (s == 0.0 && t == 0.0) return ExtendedReal(0.0);
  if (s == 0.0 || t == 0.0) return ExtendedReal::infinity();
  if (s == t) return ExtendedReal(0.0);
  return ExtendedReal((t - s) * log_ratio(t, s));
}

GaussianMixture::GaussianMixture(std::vector<GaussianComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw ArgumentError("GaussianMixture: no components");
  dim_ = static_cast<int>(components_.front().mean.size());
  double total = 0.0;
  for (const auto& c : components_) {
    if (c.mean.size() != dim_ || c.cov.rows() != dim_ || c.cov.cols() != dim_) {
      throw ArgumentError("GaussianMixture: inconsistent component dimensions");
    }
    if (!(c.weight > 0.0)) throw ArgumentError("GaussianMixture: weights must be positive");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ArgumentError("GaussianMixture: weights must sum to 1");
  factorize();
}

GaussianMixture GaussianMixture::standard(int n) {
  return GaussianMixture(
      {GaussianComponent{1.0, Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Identity(n, n)}});
}

void GaussianMixture::factorize() {
  factors_.clear();
  factors_.reserve(components_.size());
  for (const auto& c : components_) {
    Eigen::LLT<Eigen::MatrixXd> chol(c.cov);
    if (chol.info() != Eigen::Success) {
      throw ArgumentError("GaussianMixture: covariance is not positive definite");
    }
    const double log_det = 2.0 * chol.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const double log_norm = -0.5 * (dim_ * std::log(2.0 * std::numbers::pi) + log_det);
    factors_.push_back({std::move(chol), log_norm});
  }
}

double GaussianMixture::log_density(const Eigen::VectorXd& x) const {
  std::vector<double> terms(components_.size());
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < components_.size(); ++c) {
    const Eigen::VectorXd z = factors_[c].chol.matrixL().solve(x - components_[c].mean);
    terms[c] = std::log(components_[c].weight) + factors_[c].log_norm - 0.5 * z.squaredNorm();
    peak = std::max(peak, terms[c]);
  }
  double acc = 0.0;
  for (double term : terms) acc += std::exp(term - peak);
  return peak + std::log(acc);
}

double GaussianMixture::density(const Eigen::VectorXd& x) const {
  double acc = 0.0;
  for (std::size_t c = 0; c < components_.size(); ++c) {
    const Eigen::VectorXd z = factors_[c].chol.matrixL().solve(x - components_[c].mean);
    acc += components_[c].weight * std::exp(factors_[c].log_norm - 0.5 * z.squaredNorm());
  }
  return acc;
}

GaussianMixture GaussianMixture::push_forward(const Eigen::MatrixXd& A) const {
  std::vector<GaussianComponent> out;
  out.reserve(components_.size());
  for (const auto& c : components_) {
    out.push_back({c.weight, A * c.mean, A * c.cov * A.transpose()});
  }
  return GaussianMixture(std::move(out));
}

GaussianMixture ou_evolve(const GaussianMixture& mix, double time) {
  if (!(time >= 0.0)) throw ArgumentError("ou_evolve: time must be nonnegative");
  if (time == 0.0) return mix;
  const double decay = std::exp(-time);
  const double decay2 = std::exp(-2.0 * time);
  const double spread = -std::expm1(-2.0 * time);
  const int n = mix.dim();
  std::vector<GaussianComponent> out;
  out.reserve(mix.components().size());
  for (const auto& c : mix.components()) {
    out.push_back({c.weight, decay * c.mean,
                   decay2 * c.cov + spread * Eigen::MatrixXd::Identity(n, n)});
  }
  return GaussianMixture(std::move(out));
}

Eigen::MatrixXd collision_matrix(const Eigen::VectorXd& omega) {
  if (std::abs(omega.norm() - 1.0) > 1e-12) throw ArgumentError("collision_matrix: omega must be a unit vector");
  const auto d = omega.size();
  const Eigen::MatrixXd P = omega * omega.transpose();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd T(2 * d, 2 * d);
  T << I - P, P, P, I - P;
  return T;
}

double ou_commutation_residual(const GaussianMixture& mix, const Eigen::VectorXd& omega,
                               double time, const std::vector<Eigen::VectorXd>& probes) {
  if (mix.dim() != 2 * omega.size()) {
    throw ArgumentError("ou_commutation_residual: mixture must live on R^{2d}");
  }
  const Eigen::MatrixXd T = collision_matrix(omega);
  // F o T is the push-forward of F under T^{-1} = T.
  const GaussianMixture lhs = ou_evolve(mix.push_forward(T), time);
  const GaussianMixture rhs = ou_evolve(mix, time).push_forward(T);
  double worst = 0.0;
  for (const auto& x : probes) {
    if (x.size() != mix.dim()) throw ArgumentError("ou_commutation_residual: probe dimension mismatch");
    worst = std::max(worst, std::abs(lhs.density(x) - rhs.density(x)));
  }
  return worst;
}

}  // namespace kflow
