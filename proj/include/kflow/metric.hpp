#pragma once

#include <string>
#include <vector>

#include "kflow/collision_rates.hpp"
#include "kflow/network.hpp"
#include "kflow/newton.hpp"

namespace kflow {

struct MetricOptions {
  int K = 16;
  double tol = 1e-8;
  int max_iter = 200;
  double floor = 1e-12;
};

struct MetricSolution {
  double value = 0.0;
  /// Same path re-evaluated without the density floor.
  double value_no_floor = 0.0;
  DensityPath path;
  FluxPath flux;
  double kkt_residual = 0.0;
  int iterations = 0;
  /// A_m = |J^m|^2 at the midpoint of each interval.
  std::vector<double> slice_actions;
  double cre_residual = 0.0;
};

/// Collision distance between two strictly positive densities with equal
/// conserved quantities (DomainError otherwise, 1e-10 tolerance).
/// The path starts from the linear interpolation.
MetricSolution solve_distance(const VelocityNetwork& net, const DensityState& f0,
                              const DensityState& f1, const MetricOptions& options = {});

/// Max over slices of |U - P U| / |U| in the W B Lambda weighted norm, with
/// U_q = J_q / (B_q Lambda_q) and P the projection onto node gradients
/// phi_i + phi_j - phi_k - phi_l. Slices with zero flux are skipped; a
/// vanishing Lambda on a quadruple with flux throws DomainError.
double gradient_form_residual(const VelocityNetwork& net, const DensityPath& path,
                              const FluxPath& flux);

/// Relative spread (population std / mean) of the per-slice actions.
double action_spread(const std::vector<double>& actions);

std::string metric_json(const MetricSolution& sol);
/// CSV: slice,node,f.
std::string path_csv(const DensityPath& path);

}  // namespace kflow
