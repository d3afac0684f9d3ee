#pragma once

#include <cstdint>
#include <vector>

#include "kflow/network.hpp"

namespace kflow {

/// Particle version of the network equation: N particles on the nodes, every
/// unordered particle pair on nodes {i, j} jumps to {k, l} at rate
/// c W_q B_q / (w^2 N) for each quadruple linking the two pairs (c = 2 when
/// the source pair sits on one node). Its empirical measure converges to the
/// solution of df/dt = Q(f) as N grows.
class LatticeWalk {
 public:
  explicit LatticeWalk(const VelocityNetwork& net);

  /// Node index of each of N particles drawn i.i.d. from the weights w f.
  std::vector<int> sample(int N, const DensityState& f, std::uint64_t seed) const;

  /// Node occupation counts at each snapshot time (sorted, within [0, T]).
  std::vector<std::vector<int>> simulate(std::vector<int> particles, double T,
                                         const std::vector<double>& snapshot_times,
                                         std::uint64_t seed) const;

  /// Largest total jump rate of a pair, times N.
  double max_rate() const { return max_rate_; }
  const VelocityNetwork& network() const { return *net_; }

 private:
  struct Reaction {
    int k, l;
    double rate;
  };
  int pair_index(int a, int b) const;

  const VelocityNetwork* net_;
  std::vector<std::vector<Reaction>> reactions_;  // by unordered node pair
  std::vector<double> total_;
  double max_rate_ = 0.0;
};

/// Moment sum_v c_v |v|^p / N of node counts.
double count_moment(const VelocityNetwork& net, const std::vector<int>& counts, int p);

}  // namespace kflow
