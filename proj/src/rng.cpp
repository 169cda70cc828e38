#include "linprobit/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace linprobit {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void RandomStream::seed_state(std::uint64_t seed, std::uint64_t k0,
                              std::uint64_t k1, std::uint64_t k2) {
  std::uint64_t s = seed;
  std::uint64_t key = splitmix64(s);
  s ^= k0 + 0x9e3779b97f4a7c15ULL;
  key ^= splitmix64(s);
  s ^= k1 + 0xd1b54a32d192ed03ULL;
  key ^= splitmix64(s);
  s ^= k2 + 0x8ebc6af09c88c6e3ULL;
  key ^= splitmix64(s);

  std::uint64_t expand = key;
  for (auto& word : state_) word = splitmix64(expand);
  // xoshiro forbids the all-zero state; splitmix output makes it
  // astronomically unlikely, but guard anyway.
  if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
  has_spare_ = false;
}

double RandomStream::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform01() - 1.0;
    v = 2.0 * uniform01() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

double RandomStream::exponential() {
  // -log(1 - U) with U in [0,1); argument stays in (0,1].
  return -std::log1p(-uniform01());
}

std::uint64_t RandomStream::uniform_below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_below: zero bound");
  // 2^64 mod bound, computed in 64-bit arithmetic as (-bound) mod bound.
  const std::uint64_t threshold = (-bound) % bound;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

}  // namespace linprobit
