#pragma once

#include <string>
#include <vector>

#include "kflow/collision_rates.hpp"
#include "kflow/forward.hpp"
#include "kflow/network.hpp"

namespace kflow {

struct JkoOptions {
  int K = 8;
  double tol = 1e-8;
  int max_iter = 200;
  double floor = 1e-12;
};

struct JkoStep {
  DensityState state;
  double entropy = 0.0;
  /// Squared collision distance to the previous state (path estimate).
  double distance2 = 0.0;
  /// H(g) + W^2 / (2 tau) at the minimiser.
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// One minimizing-movement step: argmin_g H(g) + W(g, f_prev)^2 / (2 tau),
/// solved jointly over the path f_prev = f^0, ..., f^K = g. Throws
/// InvariantError if the objective exceeds H(f_prev) by more than 10 tol.
JkoStep jko_step(const VelocityNetwork& net, const DensityState& f_prev, double tau,
                 const JkoOptions& options = {});

struct JkoTrajectory {
  double tau = 0.0;
  std::vector<DensityState> states;  ///< f_0, f_1, ...
  std::vector<JkoStep> steps;        ///< steps[n - 1] produced states[n]

  /// Piecewise-constant interpolant: f_n on ((n - 1) tau, n tau], f_0 at t = 0.
  const DensityState& at(double t) const;
};

JkoTrajectory jko_trajectory(const VelocityNetwork& net, const DensityState& f0, double tau,
                             double T, const JkoOptions& options = {});

struct ComparisonRow {
  double time;
  double l1;
  double w1;
};

/// L1 (sum_v w |f - g|) and W1 between the interpolant and the forward state
/// at each probe time.
std::vector<ComparisonRow> compare_to_forward(const VelocityNetwork& net, const JkoTrajectory& jko,
                                              const ForwardTrajectory& fwd,
                                              const std::vector<double>& probe_times);

double l1_distance(const VelocityNetwork& net, const DensityState& f, const DensityState& g);

/// CSV: n,t,H,distance2,objective,kkt.
std::string jko_csv(const JkoTrajectory& traj);

}  // namespace kflow
