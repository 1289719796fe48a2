#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace stgsim {

// Deterministic 64-bit generator (splitmix64). We avoid <random> distributions
// because their output is implementation-defined; every stochastic choice in a
// run must be reproducible bit-for-bit from the configured seeds alone.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1): 53 mantissa bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound). Rejection sampling keeps it unbiased.
  uint64_t next_below(uint64_t bound) {
    uint64_t threshold = (0ULL - bound) % bound;
    for (;;) {
      uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  // Standard normal via Box-Muller; one value per call keeps the stream
  // position independent of caller pairing.
  double next_normal() {
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (size_t i = items.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(next_below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  uint64_t state_;
};

// Derives an independent stream from a base seed and a role tag, so that e.g.
// each (cloudlet, epoch) pair shuffles with its own reproducible stream.
inline uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
  Rng mix(base ^ 0x5d6dcb8c0f2f1c11ULL);
  uint64_t s = mix.next_u64();
  s ^= a + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
  Rng mix2(s);
  s = mix2.next_u64();
  s ^= b + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
  Rng mix3(s);
  s = mix3.next_u64();
  s ^= c + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
  Rng mix4(s);
  return mix4.next_u64();
}

}  // namespace stgsim
