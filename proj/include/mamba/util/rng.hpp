#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace mamba {

// Deterministic random stream. All distribution transforms are implemented
// here rather than via std:: distributions, so that a fixed seed produces the
// same draws on every platform and standard library.
class Rng {
public:
  explicit Rng(uint64_t seed = 0) : eng_(seed) {}

  // Derives an independent stream; safe to call repeatedly with distinct ids.
  Rng fork(uint64_t stream_id) const {
    std::mt19937_64 probe = eng_;
    uint64_t base = probe();
    return Rng(base ^ (0x9e3779b97f4a7c15ULL * (stream_id + 1)));
  }

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  uint64_t below(uint64_t n) {
    // Rejection sampling keeps the result exactly uniform.
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v;
    do {
      v = eng_();
    } while (v >= limit);
    return v % n;
  }

  // Standard normal via Box-Muller (no cached spare; state stays one engine).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Index sampled according to a vector of nonnegative weights.
  int categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform() * total;
    double acc = 0.0;
    for (size_t i = 0; i + 1 < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
  }

private:
  std::mt19937_64 eng_;
};

}  // namespace mamba
