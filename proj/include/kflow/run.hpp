#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "kflow/config.hpp"

namespace kflow {

inline constexpr const char* kflow_version = "0.1.0";

struct ManifestFile {
  std::string name;
  std::string sha256;
  std::uintmax_t bytes;
};

/// A hard invariant of a run: ok iff value <= limit.
struct InvariantCheck {
  std::string name;
  double value;
  double limit;
  bool ok() const { return value <= limit; }
};

struct RunManifest {
  std::string experiment;
  std::string config_hash;
  std::string version = kflow_version;
  std::uint64_t seed = 0;
  std::string started;
  double wall_seconds = 0.0;
  std::map<std::string, double> tolerances;
  std::vector<std::uint64_t> derived_seeds;
  std::vector<ManifestFile> files;
  std::vector<InvariantCheck> checks;

  bool ok() const;
};

/// Run the configured experiment, writing outputs and manifest.json into
/// `out`. Module errors propagate as exceptions.
RunManifest run(const RunConfig& config, const std::filesystem::path& out, int threads = 1);

std::string manifest_json(const RunManifest& manifest);

/// Recompute the checksums listed in out/manifest.json; false on mismatch.
bool verify_manifest(const std::filesystem::path& out);

/// Quick invariant suite (seconds).
std::vector<InvariantCheck> selftest(std::uint64_t seed);

}  // namespace kflow
