#pragma once

#include <Eigen/Dense>

#include "kflow/network.hpp"

namespace kflow {

/// Optimal plan and dual potentials of a balanced transportation problem.
struct TransportSolution {
  double cost = 0.0;
  Eigen::MatrixXd plan;
  /// u_i + v_j <= C_ij with equality on the support of the plan.
  Eigen::VectorXd u, v;
  int pivots = 0;
};

/// Exact transportation simplex (north-west corner start, MODI pricing).
/// Supplies and demands must be nonnegative with equal totals (relative
/// 1e-12); throws ArgumentError otherwise.
TransportSolution solve_transport(const Eigen::VectorXd& supply, const Eigen::VectorXd& demand,
                                  const Eigen::MatrixXd& cost);

/// W1 between two densities on the network with ground cost |v - u|.
double w1_distance(const VelocityNetwork& net, const DensityState& f0, const DensityState& f1);

}  // namespace kflow
