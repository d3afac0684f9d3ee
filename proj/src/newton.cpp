#include "kflow/newton.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kflow/errors.hpp"

namespace kflow {

namespace {

double projected_residual(const SliceModel& m, const Eigen::MatrixXd& basis) {
  double r = 0.0;
  for (const auto& g : m.grad) r = std::max(r, (basis.transpose() * g).cwiseAbs().maxCoeff());
  return r;
}

}  // namespace

NewtonResult minimize_slices(const SliceObjective& objective, std::vector<Eigen::VectorXd> x,
                             const Eigen::MatrixXd& basis, const NewtonOptions& opt) {
  const auto S = static_cast<int>(x.size());
  const auto p = static_cast<int>(basis.cols());
  NewtonResult res;
  if (S == 0 || p == 0) {
    res.x = std::move(x);
    res.value = objective.value(res.x);
    return res;
  }

  double mu = 0.0;
  for (int it = 0;; ++it) {
    const SliceModel m = objective.model(x);
    res.kkt = projected_residual(m, basis);
    res.value = m.value;
    res.iterations = it;
    if (res.kkt <= opt.tol) break;
    if (it >= opt.max_iter) throw ConvergenceError("modified Newton hit the iteration cap", res.kkt);

    const int dim = S * p;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd g(dim);
    for (int s = 0; s < S; ++s) {
      g.segment(s * p, p) = basis.transpose() * m.grad[s];
      H.block(s * p, s * p, p, p) = basis.transpose() * m.diag[s] * basis;
      if (s + 1 < S) {
        const Eigen::MatrixXd off = basis.transpose() * m.upper[s] * basis;
        H.block(s * p, (s + 1) * p, p, p) = off;
        H.block((s + 1) * p, s * p, p, p) = off.transpose();
      }
    }
    H = 0.5 * (H + H.transpose());

    const double scale = std::max(H.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    Eigen::LLT<Eigen::MatrixXd> llt;
    double shift = 0.0;
    for (int tries = 0;; ++tries) {
      llt.compute(H + shift * Eigen::MatrixXd::Identity(dim, dim));
      if (llt.info() == Eigen::Success) break;
      if (tries > 60) throw NumericalError("modified Newton: cannot regularise the reduced Hessian");
      shift = shift == 0.0 ? std::max(mu, 1e-10 * scale) : 10.0 * shift;
    }
    if (shift > 0.0) {
      ++res.shifted_iterations;
      mu = 0.1 * shift;
    } else {
      mu = 0.0;
    }
    const Eigen::VectorXd y = -llt.solve(g);

    std::vector<Eigen::VectorXd> d(static_cast<std::size_t>(S));
    double alpha = 1.0;
    for (int s = 0; s < S; ++s) {
      d[s] = basis * y.segment(s * p, p);
      for (int v = 0; v < d[s].size(); ++v)
        if (d[s](v) < 0.0) alpha = std::min(alpha, 0.995 * (x[s](v) - opt.floor) / -d[s](v));
    }
    alpha = std::max(alpha, 0.0);
    const double slope = g.dot(y);
    const bool tiny = -slope <= 1e-13 * (1.0 + std::abs(m.value));

    std::vector<Eigen::VectorXd> trial(x.size());
    bool accepted = false;
    for (int ls = 0; ls < 60 && alpha > 0.0; ++ls) {
      for (int s = 0; s < S; ++s) trial[s] = x[s] + alpha * d[s];
      const double f = objective.value(trial);
      if (std::isfinite(f) && (tiny || f <= m.value + 1e-4 * alpha * slope)) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) throw ConvergenceError("modified Newton: line search stalled", res.kkt);
    x.swap(trial);
  }
  res.x = std::move(x);
  return res;
}

}  // namespace kflow
