#ifndef NSADMM_RNG_HPP_
#define NSADMM_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>

namespace nsadmm {

//! Mixes a 64-bit value into a well-distributed seed (splitmix64 finalizer).
inline std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

//! Derives an independent stream seed from a base seed and a stream id.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  return mix64(mix64(base) ^ mix64(stream + 0x632be59bd9b4e019ull));
}

//! Deterministic random source. All draws are implemented on top of raw
//! 64-bit output so that a seed fully determines every sequence the library
//! produces, independent of standard-library distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(mix64(seed)) {}

  std::uint64_t next_u64() { return gen_(); }

  //! Uniform integer in [0, n). n must be positive.
  std::int64_t uniform_index(std::int64_t n) {
    return static_cast<std::int64_t>(next_u64() % static_cast<std::uint64_t>(n));
  }

  //! Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  //! Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  //! Standard normal via Box-Muller (no state cached between calls).
  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  //! Child generator for an independent, reproducible substream.
  Rng fork(std::uint64_t stream) const { return Rng(derive_seed(state_hash(), stream)); }

 private:
  std::uint64_t state_hash() const {
    // Cheap stable tag for fork(); copies the engine so the parent stream is
    // not advanced.
    std::mt19937_64 copy = gen_;
    return copy();
  }

  std::mt19937_64 gen_;
};

}  // namespace nsadmm

#endif  // NSADMM_RNG_HPP_
