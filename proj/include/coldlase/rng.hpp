#pragma once

#include <cstdint>
#include <cmath>

namespace coldlase {

/// Deterministic random stream (splitmix64). Histories are seeded by a
/// counter construction over the master seed and a stream index, so
/// results do not depend on how histories are distributed over workers.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static Rng for_stream(std::uint64_t master_seed, std::uint64_t stream) {
    // Decorrelate the stream index before folding it into the seed.
    return Rng(mix(master_seed) ^ mix(0x5851f42d4c957f2dull * (stream + 1)));
  }

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix(state_);
  }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  /// Exponential deviate with the given rate (mean 1/rate).
  double exponential(double rate) {
    return -std::log1p(-uniform()) / rate;
  }

private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_ = 0;
};

} // namespace coldlase
