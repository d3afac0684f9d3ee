#pragma once

#include <Eigen/Dense>

#include "kflow/collision_rates.hpp"
#include "kflow/network.hpp"

namespace kflow {

/// Interval energy of a time-discrete path with the flux eliminated.
///
/// For densities u -> v over one interval of length dt, with midpoint
/// fbar = (u + v)/2 and mobility L = sum_q W_q B_q Lambda_q s_q s_q^T (s_q the
/// pre-minus-post incidence of q), the cheapest flux obeying the collision
/// rate equation is J_q = -B_q Lambda_q <s_q, psi> with L psi = w (v - u)/dt,
/// and the interval contributes dt * A = dt * psi^T L psi.
class PathEnergy {
 public:
  PathEnergy(const VelocityNetwork& net, double dt);

  struct Local {
    double value = 0.0;
    double action = 0.0;
    Eigen::VectorXd grad_u, grad_v;
    Eigen::MatrixXd uu, uv, vv;
  };

  /// dt * A; +inf unless u and v are strictly positive.
  double value(const DensityState& u, const DensityState& v) const;
  /// Value with analytic gradient and Hessian in (u, v).
  Local local(const DensityState& u, const DensityState& v) const;
  /// The optimal flux for the interval.
  Eigen::VectorXd flux(const DensityState& u, const DensityState& v) const;

  double dt() const { return dt_; }
  const VelocityNetwork& network() const { return *net_; }

 private:
  struct Mobility;
  Mobility mobility(const DensityState& fbar, bool jets) const;

  const VelocityNetwork* net_;
  double dt_;
};

/// Sum of interval energies along a path, i.e. the squared length estimate
/// sum_m dt A_m. +inf on nonpositive slices.
double path_energy(const VelocityNetwork& net, const DensityPath& path, double duration = 1.0);

}  // namespace kflow
