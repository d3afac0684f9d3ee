#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kflow/forward.hpp"
#include "kflow/network.hpp"

namespace kflow {

struct ConsistencyOptions {
  std::vector<int> particle_counts{16, 64, 256};
  int replicates = 32;
  std::vector<double> probe_times;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct MomentRow {
  double time;
  int N;
  std::string moment;  ///< "m2" or "m4"
  double kac_mean;
  double kac_ci;  ///< 95% half-width over replicates
  double fwd_value;
};

struct ParticleCountSummary {
  int N;
  /// Replicate mean of sup_t |m4_rep(t) - m4_fwd(t)| and its 95% half-width.
  double sup_mean;
  double sup_ci;
  std::vector<double> per_replicate;
  std::vector<std::uint64_t> seeds;
};

struct ConsistencyReport {
  std::vector<MomentRow> rows;
  std::vector<ParticleCountSummary> summary;
};

/// Lattice particle runs started from i.i.d. draws of f0, compared with the
/// forward trajectory `fwd` (started from the same f0) at the probe times.
ConsistencyReport consistency_report(const VelocityNetwork& net, const DensityState& f0,
                                     const ForwardTrajectory& fwd, const ConsistencyOptions& options);

/// CSV: time,N,moment,kac_mean,kac_ci,fwd_value.
std::string consistency_csv(const ConsistencyReport& report);

/// sum_v w f_v |v|^p.
double density_moment(const VelocityNetwork& net, const DensityState& f, int p);

/// Run body(r) for r in [0, count) on up to `threads` threads.
void parallel_for(int count, int threads, const std::function<void(int)>& body);

}  // namespace kflow
