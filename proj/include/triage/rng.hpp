#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace triage {

// SplitMix64 generator (Steele, Lea & Flood 2014). Chosen over <random>
// engines+distributions because every draw here is specified exactly in
// integer arithmetic: the same seed yields the same stream on every
// platform, compiler and library version. All randomness in the project
// flows through this class; substreams are opened with Rng::derive.
class Rng {
public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Unbiased uniform integer in [0, bound) via Lemire's method with
  // rejection. bound must be > 0.
  uint64_t below(uint64_t bound) {
    while (true) {
      uint64_t x = next_u64();
      __uint128_t m = static_cast<__uint128_t>(x) * bound;
      uint64_t lo = static_cast<uint64_t>(m);
      if (lo >= bound || lo >= (-bound) % bound)
        return static_cast<uint64_t>(m >> 64);
    }
  }

  bool bernoulli(double p) { return next_double() < p; }

  // Knuth's product method; for large means the draw is split so the
  // uniform-product never underflows.
  int poisson(double mean) {
    if (mean <= 0.0)
      return 0;
    int total = 0;
    while (mean > 30.0) {
      total += poisson_small(30.0);
      mean -= 30.0;
    }
    return total + poisson_small(mean);
  }

  // Marsaglia polar method (pairs cached).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * next_double() - 1.0;
      v = 2.0 * next_double() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  // Fisher-Yates, descending index order.
  template <class T> void shuffle(std::vector<T> &v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      using std::swap;
      swap(v[i - 1], v[j]);
    }
  }

  // Deterministic substream derivation: feeds (seed, stream) through one
  // SplitMix64 scramble. Used for per-tree, per-week and per-stage seeds.
  static uint64_t derive(uint64_t seed, uint64_t stream) {
    Rng r(seed ^ (0xD1B54A32D192ED03ull * (stream + 1)));
    return r.next_u64();
  }

private:
  int poisson_small(double mean) {
    double limit = std::exp(-mean);
    double prod = next_double();
    int n = 0;
    while (prod > limit) {
      prod *= next_double();
      ++n;
    }
    return n;
  }

  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

} // namespace triage
