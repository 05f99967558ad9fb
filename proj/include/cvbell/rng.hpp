#ifndef CVBELL_RNG_HPP
#define CVBELL_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>

namespace cvbell {

// Splittable stream contract: every sampler owns an RngStream keyed by
// (seed, stream). The engine is std::mt19937_64 (sequence fixed by the C++
// standard); the stream key is derived with SplitMix64 so distinct stream ids
// decorrelate even for adjacent seeds. All variate mappings below are our own
// fixed bit-level constructions, never std::*_distribution, so a given
// (seed, stream) reproduces the identical outcome sequence on any platform
// with IEEE-754 doubles.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : engine_(split_mix64(split_mix64(seed + 0x9e3779b97f4a7c15ull) ^
                            split_mix64(stream + 0xbf58476d1ce4e5b9ull))) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; generates pairs, second value cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    spare_ = mag * std::sin(ang);
    has_spare_ = true;
    return mag * std::cos(ang);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Index into a cumulative weight table (last entry is the total mass).
  // Consumes exactly one uniform.
  std::size_t categorical_from_cumulative(std::span<const double> cumulative) {
    const double u = uniform() * cumulative.back();
    std::size_t lo = 0, hi = cumulative.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (cumulative[mid] <= u)
        lo = mid + 1;
      else
        hi = mid;
    }
    return lo;
  }

  static std::uint64_t split_mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace cvbell

#endif
