#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "kflow/kinematics.hpp"
#include "kflow/network.hpp"
#include "kflow/scalar_calculus.hpp"

namespace kflow {

struct NetworkConfig {
  int d = 2;
  double V = 3.0;
  double h = 1.0;
};

/// Initial datum: a mixture sampled at the nodes (or explicit node values),
/// tilted to the moment targets.
struct InitialConfig {
  enum class Kind { maxwellian, bimodal, mixture, values } kind = Kind::bimodal;
  double offset = 1.5;
  double var = 0.6;
  std::vector<GaussianComponent> components;
  std::vector<double> values;
  MomentTargets targets;
};

struct ForwardExperiment {
  InitialConfig initial;
  double T = 10.0;
  double dt_init = 1e-2;
  double rtol = 1e-10;
  double atol = 1e-14;
  /// Spacing of the uniform diagnostic stops.
  double record_dt = 0.05;
};

struct DistanceExperiment {
  InitialConfig from;
  InitialConfig to;
  int K = 16;
  double tol = 1e-8;
  int max_iter = 200;
};

struct JkoExperiment {
  InitialConfig initial;
  double tau = 0.1;
  double T = 1.0;
  int K = 8;
  double tol = 1e-8;
  int max_iter = 200;
  std::vector<double> probe_times{0.25, 0.5, 1.0};
};

struct KacExperiment {
  InitialConfig initial;
  int N = 256;
  double T = 5.0;
  int replicates = 4;
  std::vector<double> snapshot_times{0.0, 0.5, 1.0, 2.0, 5.0};
  double ou_time = 0.3;
  int entropy_samples = 100000;
  bool log_events = true;
};

struct ConsistencyExperiment {
  InitialConfig initial;
  std::vector<int> N{16, 64, 256};
  int replicates = 32;
  double T = 4.0;
  double probe_dt = 0.25;
};

struct NetworkExperiment {};

using Experiment = std::variant<NetworkExperiment, ForwardExperiment, DistanceExperiment, JkoExperiment,
                                KacExperiment, ConsistencyExperiment>;

struct RunConfig {
  NetworkConfig network;
  Kernel kernel = Kernel::constant(1.0);
  Experiment experiment = ForwardExperiment{};
  std::string output = "out";
  std::uint64_t seed = 1;
};

/// Canonical JSON of a configuration with every default filled in.
std::string canonical_json(const RunConfig& config);

/// Name of the experiment: network, forward, distance, jko, kac, consistency.
std::string experiment_name(const Experiment& e);

/// Strict parse: unknown keys, wrong types and out-of-range values throw
/// ConfigError naming the field. `forced_type` (when not empty) selects the
/// experiment and must agree with experiment.type if that is given.
RunConfig parse_config_text(const std::string& text, const std::string& forced_type = "");
RunConfig parse_config(const std::filesystem::path& path, const std::string& forced_type = "");
/// Defaults for an experiment type.
RunConfig default_config(const std::string& type);

DensityState build_initial(const VelocityNetwork& net, const InitialConfig& init);

}  // namespace kflow
