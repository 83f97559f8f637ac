#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace medassist {

// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: draw n of stream `key` is splitmix64_mix(key + (n+1)*golden).
/// Every sample is a pure function of (key, counter), so logs reproduce across
/// implementations that follow the same recipe. Normals use Box-Muller on two
/// consecutive uniforms with no caching.
class CounterRng {
 public:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  constexpr explicit CounterRng(std::uint64_t seed = 0) : key_(splitmix64_mix(seed)) {}

  constexpr std::uint64_t key() const { return key_; }
  constexpr std::uint64_t counter() const { return counter_; }

  constexpr std::uint64_t next_u64() {
    ++counter_;
    return splitmix64_mix(key_ + counter_ * kGolden);
  }

  /// Uniform in [0, 1) with 53 bits.
  constexpr double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Multiply-shift; bias is below 2^-32 for the sizes used here.
  std::uint64_t below(std::uint64_t n) {
    const auto hi = static_cast<unsigned __int128>(next_u64()) * n;
    return static_cast<std::uint64_t>(hi >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

  double normal(double mean = 0.0, double sigma = 1.0) {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sigma * r * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  /// Independent child stream; the parent counter is not advanced.
  constexpr CounterRng fork(std::uint64_t stream) const {
    CounterRng child;
    child.key_ = splitmix64_mix(key_ ^ splitmix64_mix(stream + 0x632BE59BD9B4E019ULL));
    return child;
  }

  CounterRng fork(std::string_view label) const { return fork(fnv1a(label)); }

  static constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

 private:
  std::uint64_t key_{0};
  std::uint64_t counter_{0};
};

}  // namespace medassist
