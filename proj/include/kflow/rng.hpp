#pragma once

#include <array>
#include <cstdint>

namespace kflow {

/// Philox4x64-10 counter-based generator (Salmon et al. 2011).
///
/// A stream is identified by its 128-bit key (seed, stream); blocks are
/// generated from an incrementing 256-bit counter, so streams are independent
/// and any position can be reached by setting the counter.
class Philox {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint64_t, 4>;

  Philox(std::uint64_t seed, std::uint64_t stream = 0) : key_{seed, stream} {}

  static Block block(Block counter, std::array<std::uint64_t, 2> key);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_open0() { return 1.0 - uniform(); }
  double normal();
  double exponential();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  const Block& counter() const { return counter_; }
  void set_counter(const Block& c) {
    counter_ = c;
    used_ = 4;
  }

 private:
  std::array<std::uint64_t, 2> key_;
  Block counter_{0, 0, 0, 0};
  Block buffer_{};
  int used_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Derived seed for replicate r of a run seeded with `seed` (SplitMix64 mix).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t r);

}  // namespace kflow
