#pragma once

#include <cstdint>

namespace tbi {

// SplitMix64. Standard-library engines round-trip fine but the distributions
// are implementation-defined, and every randomized result in this project is
// contractually byte-reproducible across platforms, so we own the generator.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, n); n == 0 returns 0. Modulo bias is negligible for the
  // ranges used here and keeps the draw sequence platform-stable.
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

  // Uniform double in [0, 1).
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double range(double lo, double hi) { return lo + (hi - lo) * unit(); }

  // Uniform integer in [lo, hi] inclusive.
  std::int64_t int_range(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

private:
  std::uint64_t state_;
};

}  // namespace tbi
