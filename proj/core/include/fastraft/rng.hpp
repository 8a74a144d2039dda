#pragma once

#include <cstdint>
#include <random>

namespace fastraft {

/// SplitMix64 step; used only to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Purposes that draw randomness. Each gets its own stream so that, for
/// example, changing the loss rate does not perturb election timeouts.
enum class RngStream : std::uint64_t {
  kLoss = 1,
  kDelay = 2,
  kTimeouts = 3,
  kWorkload = 4,
  kFaults = 5,
};

/// Seedable generator with a fully specified bit stream: std::mt19937_64
/// (whose output sequence is fixed by the C++ standard) seeded through
/// SplitMix64. Variates are derived by hand rather than through the
/// implementation-defined std:: distributions.
class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(std::uint64_t seed) : engine_(derive(seed, 0)) {}
  Rng(std::uint64_t seed, RngStream stream, std::uint64_t sub = 0)
      : engine_(derive(seed, (static_cast<std::uint64_t>(stream) << 32) ^ sub)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [lo, hi] (inclusive). Rejection sampling keeps it unbiased.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    if (hi <= lo) return lo;
    const std::uint64_t span = hi - lo + 1;
    if (span == 0) return engine_();
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return lo + x % span;
  }

  bool bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return uniform01() < p;
  }

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t state = seed ^ (salt * 0xd1b54a32d192ed03ULL);
    splitmix64(state);
    return splitmix64(state);
  }

  std::mt19937_64 engine_;
};

}  // namespace fastraft
