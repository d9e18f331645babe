#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace fpclust {

// Counter-based generator built on the SplitMix64 finalizer.
//
// A stream is identified by (seed, stream_id). The i-th 64-bit output of a
// stream is mix(key + (i + 1) * GOLDEN) with key = mix(seed ^ mix(stream_id + GOLDEN)),
// so every output is addressable without replaying its predecessors and
// independent streams can be derived for restarts or replicates.
//
// uniform(): top 53 bits of one output scaled by 2^-53, in [0, 1).
// normal():  Box-Muller cosine branch over two consecutive uniforms.
class Stream {
 public:
  static constexpr std::uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL;

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  constexpr Stream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : key_(mix(seed ^ mix(stream_id + GOLDEN))) {}

  constexpr std::uint64_t at(std::uint64_t counter) const { return mix(key_ + (counter + 1) * GOLDEN); }

  std::uint64_t next_u64() { return at(counter_++); }

  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform integer in [0, n) by multiply-shift on one output.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace fpclust
