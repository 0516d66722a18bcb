#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

namespace lakegp {

// SplitMix64: tiny counter-style generator used everywhere randomness is needed.
// Streams are derived by hashing (seed, tag, indices), so parallel generation is
// independent of scheduling and results are identical across platforms.
struct SplitMix64 {
  uint64_t state;

  explicit SplitMix64(uint64_t seed) : state(seed) {}

  uint64_t next() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in (0,1); never returns 0 or 1 exactly.
  double uniform() {
    return (static_cast<double>(next() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  uint64_t below(uint64_t n) { return next() % n; }

  // Box-Muller; one value per call keeps the stream layout simple.
  double gauss() {
    double u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }
};

inline uint64_t mix_seed(uint64_t a, uint64_t b) {
  SplitMix64 r(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
  return r.next();
}

inline uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c) {
  return mix_seed(mix_seed(a, b), c);
}

inline uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c, uint64_t d) {
  return mix_seed(mix_seed(a, b, c), d);
}

// Latin hypercube sample of `n` points in [0,1]^k.
inline Eigen::MatrixXd latin_hypercube(int n, int k, uint64_t seed) {
  Eigen::MatrixXd out(n, k);
  SplitMix64 rng(seed);
  std::vector<int> perm(n);
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < n; ++i) perm[i] = i;
    for (int i = n - 1; i > 0; --i) {
      int s = static_cast<int>(rng.below(static_cast<uint64_t>(i + 1)));
      std::swap(perm[i], perm[s]);
    }
    for (int i = 0; i < n; ++i) out(i, j) = (perm[i] + rng.uniform()) / n;
  }
  return out;
}

}  // namespace lakegp
