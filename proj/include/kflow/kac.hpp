#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kflow/kinematics.hpp"
#include "kflow/network.hpp"
#include "kflow/scalar_calculus.hpp"

namespace kflow {

/// N velocities on the Kac sphere: zero total momentum, total energy N d.
/// Components live on `grid` so collisions conserve momentum exactly.
struct ParticleState {
  int dim = 2;
  std::vector<Velocity> v;
  MomentumGrid grid;

  int size() const { return static_cast<int>(v.size()); }
};

/// Subtract the mean, rescale to sum |v|^2 = N d, snap to the momentum grid.
ParticleState project_to_sphere(std::vector<Velocity> v, int d);

/// N i.i.d. draws from a Gaussian mixture (or a node density, weights w f),
/// projected onto the sphere. Throws ArgumentError when N < 2.
ParticleState sample_initial(int N, const GaussianMixture& mix, std::uint64_t seed);
ParticleState sample_initial(int N, const VelocityNetwork& net, const DensityState& f, std::uint64_t seed);

struct KacEvent {
  double time;
  int i, j;
  Velocity omega;
  bool accepted;
};

struct EventLog {
  std::uint64_t seed = 0;
  std::string kernel;
  std::vector<KacEvent> events;
};

struct KacOptions {
  double T = 1.0;
  /// Snapshot times within [0, T], sorted.
  std::vector<double> snapshot_times;
  bool log_events = true;
  /// Called after every accepted collision with the updated state.
  std::function<void(const ParticleState&, const KacEvent&)> on_collision;
};

struct KacRun {
  ParticleState state;
  EventLog log;
  std::vector<ParticleState> snapshots;
  long proposals = 0;
  long accepted = 0;
};

/// Kac walk by thinning: proposals at total rate (N - 1)/2 c2 |S^{d-1}|, a
/// uniform pair and a uniform omega per proposal, acceptance B / c2.
KacRun simulate(ParticleState state, const Kernel& kernel, const KacOptions& options, std::uint64_t seed);

struct EmpiricalMoments {
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  double second = 0.0;
  double fourth = 0.0;  ///< mean of |v|^4
  std::array<double, 3> coord4{0.0, 0.0, 0.0};
};

EmpiricalMoments empirical_moments(const ParticleState& state);

struct EntropyEstimate {
  double value;
  double std_error;
};

/// Entropy of the OU-smoothed empirical measure S_delta L_N (equal-weight
/// Gaussians at e^-delta v_i with variance 1 - e^-2delta), by Monte Carlo
/// with `samples` draws from the mixture itself.
EntropyEstimate empirical_entropy(const ParticleState& state, double ou_time, std::uint64_t seed,
                                  int samples = 100000);

/// CSV: t,i,j,wx,wy(,wz),accepted.
std::string event_csv(const EventLog& log, int dim);
/// JSON array of velocity arrays.
std::string state_json(const ParticleState& state);

}  // namespace kflow
