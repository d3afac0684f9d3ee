#pragma once

#include <span>
#include <string>
#include <vector>

#include "kflow/collision_rates.hpp"
#include "kflow/network.hpp"

namespace kflow {

struct ForwardOptions {
  double T = 10.0;
  double dt_init = 1e-2;
  double rtol = 1e-10;
  double atol = 1e-14;
  /// Times the integrator must land on exactly (sorted, within (0, T]).
  std::vector<double> stops;
  long max_steps = 10'000'000;
};

/// Uniform stops dt, 2 dt, ..., T.
std::vector<double> uniform_stops(double T, double dt);

/// Accepted states of an adaptive run with per-state diagnostics.
struct ForwardTrajectory {
  std::vector<double> times;
  std::vector<DensityState> states;
  std::vector<double> entropy;
  std::vector<double> dissipation;
  /// Action of the forward flux, i.e. the squared metric speed |f'|^2.
  std::vector<double> speed2;
  std::vector<Moments> moments;
  /// Record index of each requested stop (and 0 for t = 0).
  std::vector<std::size_t> stop_index;
  long rejected_steps = 0;
  long positivity_rejections = 0;

  std::size_t size() const { return times.size(); }
  /// State at time t: exact at recorded times, linear in between.
  DensityState state_at(double t) const;
};

/// Integrate df/dt = Q(f) with the Dormand-Prince 5(4) pair.
///
/// Steps producing a negative entry are rejected and halved. Every accepted
/// step is recorded. Throws InvariantError if H increases by more than
/// 1e-12 |H| over an accepted step, NumericalError on NaN or dt < 1e-12.
ForwardTrajectory solve_forward(const VelocityNetwork& net, const DensityState& f0,
                                const ForwardOptions& options);

struct EnergyIdentityReport {
  /// |H(t_b) - H(t_a) + int_a^b D| per Simpson panel.
  std::vector<double> panel_residuals;
  double max_panel_residual = 0.0;
  /// H(T) - H(0) + int_0^T D.
  double total_residual = 0.0;
  /// H(T) - H(0) + 1/2 int_0^T (D + |f'|^2).
  double max_slope_residual = 0.0;
};

/// Energy identity along a run, integrating the recorded D with composite
/// (nonuniform) Simpson. `indices` selects the records to use (all when
/// empty). Throws ArgumentError with fewer than three samples.
EnergyIdentityReport energy_identity_report(const ForwardTrajectory& traj,
                                            std::span<const std::size_t> indices = {});

/// Integral of samples y over (nonuniform) nodes x with composite Simpson.
double simpson(std::span<const double> x, std::span<const double> y);

/// max over interior points of |dH/dt + D| / D, dH/dt from the fourth-order
/// central difference on uniformly spaced records `indices`.
double entropy_rate_residual(const ForwardTrajectory& traj, std::span<const std::size_t> indices);

/// CSV: time,H,D,mass,px,py(,pz),energy.
std::string trajectory_csv(const ForwardTrajectory& traj, int dim);

}  // namespace kflow
