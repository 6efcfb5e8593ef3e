#pragma once

#include <cstdint>
#include <random>

#include "contalg/state.hpp"

namespace contalg {

/// Seeded sampler with a platform-independent mapping to doubles, so that
/// seeded runs are reproducible across standard libraries.
class Sampler {
public:
  explicit Sampler(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

  Vector uniform_vector(int size, double lo, double hi) {
    Vector v(size);
    for (int i = 0; i < size; ++i) v(i) = uniform(lo, hi);
    return v;
  }

  /// A state whose every coordinate is center + U(-radius, radius).
  State around(const State& center, double radius) {
    State x = center;
    for (int i = 0; i < x.n(); ++i) x.q(i) += uniform(-radius, radius);
    for (int a = 0; a < x.m(); ++a) x.w(a) += uniform(-radius, radius);
    x.s += uniform(-radius, radius);
    return x;
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace contalg
