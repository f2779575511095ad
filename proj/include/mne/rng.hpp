#pragma once

// Seeded random streams.
//
// Every stochastic quantity is drawn from a std::mt19937_64 whose seed is
// derived from a master seed and a path of integers with splitmix64:
//
//   s = seed; for k in path: s = splitmix64(s ^ splitmix64(k + golden))
//
// Uniforms take the top 53 bits of one engine output; normals use the
// Marsaglia polar method on those uniforms. Both transforms are spelled out
// here (instead of std::normal_distribution) so streams are identical across
// standard library implementations.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

#include "mne/core.hpp"

namespace mne {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(seed);
  for (std::uint64_t k : path) s = splitmix64(s ^ splitmix64(k + 0x9E3779B97F4A7C15ULL));
  return s;
}

// Stream tags used with derive_seed. Values are part of the reproducibility
// contract; do not renumber.
namespace stream {
inline constexpr std::uint64_t kGameParams = 1;
inline constexpr std::uint64_t kInitX = 2;
inline constexpr std::uint64_t kInitY = 3;
inline constexpr std::uint64_t kNoiseX = 4;
inline constexpr std::uint64_t kNoiseY = 5;
inline constexpr std::uint64_t kNiSup = 6;
inline constexpr std::uint64_t kNiInf = 7;
}  // namespace stream

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  static Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    return Rng(derive_seed(seed, path));
  }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  Vector normal_vector(Index d) {
    Vector z(d);
    for (Index k = 0; k < d; ++k) z[k] = normal();
    return z;
  }

  bool operator==(const Rng& other) const = default;

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mne
