#pragma once

#include <cmath>
#include <cstdint>

namespace inbo {

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Key for an independent stream, e.g. (seed, inducing index, path index).
// Streams with distinct keys are statistically independent, so results do
// not depend on which thread simulates which path.
inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  constexpr std::uint64_t gamma = 0x9e3779b97f4a7c15ull;
  std::uint64_t k = mix64(seed + gamma * (a + 1));
  return mix64(k + gamma * (b + 1));
}

// Counter-based generator (splitmix64): output i is a pure function of
// key + i, so a stream can be reproduced from its key alone.
class Splitmix64 {
 public:
  explicit Splitmix64(std::uint64_t key) : state_(key) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix64(state_);
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n) via the multiply-shift bound (tiny bias for
  // astronomically large n only).
  std::uint64_t bounded(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

 private:
  std::uint64_t state_;
};

// Standard normal variates via the Marsaglia polar method on a Splitmix64
// stream. Rejection consumes a variable number of uniforms but is still a
// pure function of the stream key.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t key) : rng_(key) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * rng_.uniform() - 1.0;
      v = 2.0 * rng_.uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

 private:
  Splitmix64 rng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace inbo
