#pragma once

#include <cstdint>
#include <random>

namespace accel {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stable substream seed derivation: stream i of a master seed is the same on
/// every platform and does not depend on how other streams were consumed.
inline uint64_t derive_seed(uint64_t master, uint64_t stream) {
  uint64_t s = master ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
  return splitmix64(s);
}

/// Deterministic uniform generator. Uniforms are built directly from the
/// mt19937_64 word stream so the exact [0,1) sequence is pinned by the seed,
/// independent of any library's distribution implementation.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t raw() { return gen_(); }

  /// Uniform on [0, 1); never returns 1.
  double u01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  Rng fork() { return Rng(gen_()); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace accel
