#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace gaitnet {

// splitmix64; used to derive independent stream seeds from (base, tag) pairs.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
  return mix64(base ^ mix64(tag));
}

// Deterministic RNG: mt19937_64 engine with hand-rolled transforms so that
// draws are bit-reproducible regardless of the standard library's
// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // uniform in [0, 1)
  double u01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  // standard normal via Box-Muller; consumes exactly two engine draws
  double normal() {
    double u1 = u01();
    double u2 = u01();
    double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(6.28318530717958647692 * u2);
  }

  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    // multiply-shift; bias is negligible for n << 2^64 and fully deterministic
    return static_cast<std::uint64_t>((static_cast<__uint128_t>(eng_()) * n) >> 64);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace gaitnet
