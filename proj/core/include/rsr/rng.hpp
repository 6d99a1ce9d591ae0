#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace rsr {

/// SplitMix64 finalizer step. Used both to seed the engine and to mix
/// (base_seed, cell_index, trial_index) into independent streams. The exact
/// constants are the standard ones, so external tooling can reproduce the
/// stream assignment.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Mixes a base seed with up to two stream indices. mix(s) != s in general;
/// each added index yields a decorrelated stream.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a = 0,
                              std::uint64_t b = 0) {
  std::uint64_t z = splitmix64(base);
  z = splitmix64(z ^ (0x9E3779B97F4A7C15ULL * (a + 1)));
  z = splitmix64(z ^ (0xD1B54A32D192ED03ULL * (b + 1)));
  return z;
}

/// Deterministic random source. The engine (mt19937_64) and every derived
/// distribution below are fully specified, so identical seeds give identical
/// streams on any platform; this is what the byte-identical sweep contract
/// rests on. std::*_distribution is deliberately avoided (implementations
/// differ).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    std::uint64_t mask = ~std::uint64_t{0};
    mask >>= __builtin_clzll(n - 1 | 1);
    for (;;) {
      std::uint64_t v = next_u64() & mask;
      if (v < n) return v;
    }
  }

  /// Standard normal deviate via Box-Muller (cached pair).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// Derives an independent child stream; deterministic given this stream's
  /// past consumption.
  Rng split() { return Rng(mix_seed(next_u64(), 0x5B1CE, 0)); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace rsr
