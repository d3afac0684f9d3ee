#include "kflow/rng.hpp"

#include <cmath>
#include <numbers>

namespace kflow {

namespace {

constexpr std::uint64_t M0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t M1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t W0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t W1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
  const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

}  // namespace

Philox::Block Philox::block(Block x, std::array<std::uint64_t, 2> k) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k[0] += W0;
      k[1] += W1;
    }
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(M0, x[0], hi0, lo0);
    mulhilo(M1, x[2], hi1, lo1);
    x = {hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0};
  }
  return x;
}

Philox::result_type Philox::operator()() {
  if (used_ == 4) {
    buffer_ = block(counter_, key_);
    for (auto& c : counter_)
      if (++c != 0) break;
    used_ = 0;
  }
  return buffer_[static_cast<std::size_t>(used_++)];
}

double Philox::uniform() { return static_cast<double>((*this)() >> 11) * 0x1p-53; }

double Philox::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform_open0()));
  const double a = 2.0 * std::numbers::pi * uniform();
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

double Philox::exponential() { return -std::log(uniform_open0()); }

std::uint64_t Philox::below(std::uint64_t n) {
  // Lemire's multiply-shift with rejection.
  for (;;) {
    const std::uint64_t x = (*this)();
    const unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
    const auto low = static_cast<std::uint64_t>(m);
    if (low >= n || low >= (-n) % n) return static_cast<std::uint64_t>(m >> 64);
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t r) {
  std::uint64_t z = seed + (r + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace kflow
