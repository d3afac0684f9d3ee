#include "kflow/collision_rates.hpp"

#include <cmath>
#include <string>

#include "kflow/errors.hpp"

namespace kflow {

namespace {

void require_nonnegative(const VelocityNetwork& net, const DensityState& f, const char* who) {
  if (f.size() != net.size()) throw ArgumentError(std::string(who) + ": density size mismatch");
  for (int v = 0; v < f.size(); ++v) {
    if (!(f(v) >= 0.0) || !std::isfinite(f(v))) {
      throw ArgumentError(std::string(who) + ": density must be finite and nonnegative");
    }
  }
}

}  // namespace

Eigen::VectorXd flux_divergence(const VelocityNetwork& net, const Eigen::VectorXd& flux) {
  const auto& quads = net.quadruples();
  if (flux.size() != static_cast<Eigen::Index>(quads.size())) {
    throw ArgumentError("flux_divergence: flux size mismatch");
  }
  Eigen::VectorXd div = Eigen::VectorXd::Zero(net.size());
  for (std::size_t q = 0; q < quads.size(); ++q) {
    const Quadruple& c = quads[q];
    const double x = c.weight * flux(static_cast<Eigen::Index>(q));
    div(c.i) += x;
    div(c.j) += x;
    div(c.k) -= x;
    div(c.l) -= x;
  }
  return div;
}

Eigen::VectorXd collision_operator(const VelocityNetwork& net, const DensityState& f) {
  require_nonnegative(net, f, "collision_operator");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(net.size());
  for (const auto& q : net.quadruples()) {
    const double rate = q.weight * q.kernel * (f(q.k) * f(q.l) - f(q.i) * f(q.j));
    out(q.i) += rate;
    out(q.j) += rate;
    out(q.k) -= rate;
    out(q.l) -= rate;
  }
  return out / net.node_weight();
}

double entropy(const VelocityNetwork& net, const DensityState& f) {
  require_nonnegative(net, f, "entropy");
  double h = 0.0;
  for (int v = 0; v < f.size(); ++v) {
    if (f(v) > 0.0) h += f(v) * std::log(f(v));
  }
  return net.node_weight() * h;
}

ExtendedReal dissipation(const VelocityNetwork& net, const DensityState& f) {
  require_nonnegative(net, f, "dissipation");
  ExtendedReal total(0.0);
  for (const auto& q : net.quadruples()) {
    total += (q.weight * q.kernel) * dissipation_density(f(q.i) * f(q.j), f(q.k) * f(q.l));
  }
  return total;
}

Eigen::VectorXd boltzmann_flux(const VelocityNetwork& net, const DensityState& f) {
  require_nonnegative(net, f, "boltzmann_flux");
  const auto& quads = net.quadruples();
  Eigen::VectorXd flux(static_cast<Eigen::Index>(quads.size()));
  for (std::size_t q = 0; q < quads.size(); ++q) {
    const Quadruple& c = quads[q];
    flux(static_cast<Eigen::Index>(q)) = c.kernel * (f(c.i) * f(c.j) - f(c.k) * f(c.l));
  }
  return flux;
}

ExtendedReal discrete_action(const VelocityNetwork& net, const DensityState& f,
                             const Eigen::VectorXd& flux) {
  require_nonnegative(net, f, "discrete_action");
  const auto& quads = net.quadruples();
  if (flux.size() != static_cast<Eigen::Index>(quads.size())) {
    throw ArgumentError("discrete_action: flux size mismatch");
  }
  ExtendedReal total(0.0);
  for (std::size_t q = 0; q < quads.size(); ++q) {
    const Quadruple& c = quads[q];
    const double s = c.kernel * f(c.i) * f(c.j);
    const double t = c.kernel * f(c.k) * f(c.l);
    total += (4.0 * c.weight) * action_density(flux(static_cast<Eigen::Index>(q)), s, t);
  }
  return total;
}

double cre_residual(const VelocityNetwork& net, const DensityPath& path, const FluxPath& flux,
                    double duration) {
  if (path.size() < 2 || flux.size() + 1 != path.size()) {
    throw ArgumentError("cre_residual: need K + 1 density slices and K flux vectors");
  }
  if (!(duration > 0.0)) throw ArgumentError("cre_residual: duration must be positive");
  const double dt = duration / static_cast<double>(flux.size());
  const double w = net.node_weight();
  double worst = 0.0;
  for (std::size_t m = 0; m < flux.size(); ++m) {
    if (path[m].size() != net.size() || path[m + 1].size() != net.size()) {
      throw ArgumentError("cre_residual: density size mismatch");
    }
    const Eigen::VectorXd r = w * (path[m + 1] - path[m]) / dt + flux_divergence(net, flux[m]);
    worst = std::max(worst, r.cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace kflow
