#pragma once

#include <cstdint>

namespace ocralign {

// splitmix64 (Steele, Lea, Flood 2014). Small state, full 64-bit period,
// identical output on every platform, which is what the per-line seeding
// contract needs. std::uniform_real_distribution is not portable across
// standard libraries, so uniforms are derived from the raw bits directly.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53 bits of precision.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

// Order-sensitive combination of two seeds: mix_seed(a, b) != mix_seed(b, a).
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  SplitMix64 g(a);
  SplitMix64 h(g.next_u64() ^ b);
  return h.next_u64();
}

}  // namespace ocralign
