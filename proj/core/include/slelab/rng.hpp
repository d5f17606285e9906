#pragma once

#include <cstdint>
#include <random>

namespace slelab {

/// splitmix64 finalizer. Spreads nearby inputs across the full 64-bit space.
std::uint64_t mix_seed(std::uint64_t x) noexcept;

/// Seed for path `path_index` inside an ensemble seeded with `seed`.
/// The published convention is the XOR below; NormalSampler then mixes it.
inline std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path_index) noexcept {
  return seed ^ path_index;
}

/**
 * Deterministic standard normal stream.
 *
 * The algorithm is pinned ("normal/polar-v1"): mt19937_64 seeded through
 * mix_seed, uniforms taken as (x >> 11) * 2^-53, normals by the polar method
 * with one cached value. std::normal_distribution is implementation defined,
 * so it is not used; fixtures produced with one standard library must replay
 * bit-identically on another.
 */
class NormalSampler {
 public:
  static constexpr const char* kAlgorithm = "normal/polar-v1";

  explicit NormalSampler(std::uint64_t seed) : gen_(mix_seed(seed)) {}

  /// One U[0,1) draw with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  /// One N(0,1) draw.
  double operator()() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    cached_ = v * f;
    has_cached_ = true;
    return u * f;
  }

 private:
  std::mt19937_64 gen_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace slelab
