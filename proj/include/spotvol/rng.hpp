#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace spotvol {

// All randomness in the library flows through this generator. Streams are
// derived from a single master seed plus a stream tag (and optional counters),
// so runs are reproducible bit for bit and per-particle streams can be split
// without coordination between threads.

inline std::uint64_t splitmix64_next(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64_next(sm);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  // xoshiro256**
  result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Strictly inside (0,1); both endpoints are unreachable so log() and the
  // normal quantile stay finite.
  double u01() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1p-53;
  }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * u01(); }

  double exponential() { return -std::log(u01()); }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

// Derives an independent stream from (master seed, tag, counters). The same
// inputs always yield the same stream, regardless of call order or threading.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::uint64_t a = 0, std::uint64_t b = 0) noexcept {
  std::uint64_t sm = master ^ fnv1a64(tag);
  std::uint64_t h = splitmix64_next(sm);
  sm ^= a + 0x9e3779b97f4a7c15ULL;
  h ^= splitmix64_next(sm);
  sm ^= b + 0x637c835b17254619ULL;
  h ^= splitmix64_next(sm);
  return h;
}

inline Rng derive_rng(std::uint64_t master, std::string_view tag,
                      std::uint64_t a = 0, std::uint64_t b = 0) noexcept {
  return Rng(derive_seed(master, tag, a, b));
}

}  // namespace spotvol
