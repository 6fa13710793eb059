#pragma once

#include <cmath>
#include <cstdint>

#include "qmetro/errors.hpp"

namespace qmetro {

// Deterministic, hand-rolled random stream. Standard-library distributions
// are implementation-defined sequences, so everything that feeds a dataset
// goes through this type: identical (seed, labels) must give bit-identical
// output on any platform.
//
// Independent streams for parallel work items are derived with fork(), which
// hashes the parent state with the given labels (splitmix64 finalizer).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed ^ 0x9e3779b97f4a7c15ULL) {
    // warm up so that small seeds decorrelate
    next_u64();
    next_u64();
  }

  RngStream fork(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const {
    std::uint64_t h = state_;
    h = mix(h ^ mix(a + 0x1ULL));
    h = mix(h ^ mix(b + 0x2ULL));
    h = mix(h ^ mix(c + 0x3ULL));
    return RngStream(h);
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // uniform in (0, 1], safe as a log argument
  double uniform_pos() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  // standard normal, Box-Muller with one cached value
  double gaussian() {
    if (have_cache_) {
      have_cache_ = false;
      return cache_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.28318530717958647692 * u2;
    cache_ = r * std::sin(a);
    have_cache_ = true;
    return r * std::cos(a);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Poisson by sequential inversion; exact and deterministic. Means used in
  // this project are O(25); guard against misuse far outside that regime.
  int poisson(double mean) {
    if (mean < 0.0) throw ValidationError("poisson: negative mean");
    if (mean == 0.0) return 0;
    if (mean > 600.0) throw ValidationError("poisson: mean too large for inversion sampler");
    const double limit = std::exp(-mean);
    double p = 1.0;
    int k = -1;
    do {
      ++k;
      p *= uniform_pos();
    } while (p > limit);
    return k;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  double cache_ = 0.0;
  bool have_cache_ = false;
};

}  // namespace qmetro
