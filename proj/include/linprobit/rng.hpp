#pragma once

#include <array>
#include <cstdint>

namespace linprobit {

/// Seedable xoshiro256** stream with SplitMix64 seeding.
///
/// Stream-splitting rule: every independent unit of work (trial, partition,
/// fold, chain) draws from `RandomStream::substream(seed, k0, k1, k2)` where
/// the key words identify the unit. Substreams are stable regardless of
/// thread scheduling, which keeps parallel runs bit-reproducible.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) { seed_state(seed, 0, 0, 0); }

  static RandomStream substream(std::uint64_t seed, std::uint64_t k0,
                                std::uint64_t k1 = 0, std::uint64_t k2 = 0) {
    RandomStream s(0);
    s.seed_state(seed, k0, k1, k2);
    return s;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1), 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via the Marsaglia polar method.
  double gaussian();

  /// Exp(1) by inversion.
  double exponential();

  /// Unbiased uniform integer in [0, bound) by rejection from the top.
  std::uint64_t uniform_below(std::uint64_t bound);

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  void seed_state(std::uint64_t seed, std::uint64_t k0, std::uint64_t k1,
                  std::uint64_t k2);

  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 mixing step, also used to fold key words into seeds.
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace linprobit
