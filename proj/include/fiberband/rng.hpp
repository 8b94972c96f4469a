#pragma once

#include <cstdint>

namespace fiberband {

// splitmix64: tiny deterministic PRNG, identical stream on every platform.
// Used for inverse-iteration start vectors and randomized property tests.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : s_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (s_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double uniform() { return double(next() >> 11) * 0x1.0p-53; }  // [0,1)
  double symmetric() { return 2.0 * uniform() - 1.0; }           // [-1,1)

 private:
  std::uint64_t s_;
};

}  // namespace fiberband
