// Seeded random streams with pinned transforms.
//
// std::mt19937_64 output is specified exactly by the standard, but the
// standard distribution adaptors are not, so every variate transform is
// implemented here. Given a seed, each stream is reproducible bit-for-bit
// across compilers and platforms.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include "covren/math.hpp"

namespace covren {

// Cheap 64-bit engine (SplitMix64). Used where stream setup cost matters,
// e.g. one short-lived stream per codeword candidate.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<std::uint64_t>::max();
  }
  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

template <class Engine>
class BasicRng {
 public:
  explicit BasicRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe as a log argument.
  double uniform_open() { return 1.0 - uniform(); }

  double exponential(double rate) { return -std::log(uniform_open()) / rate; }

  // Marsaglia polar method, no cached spare (keeps the stream position a
  // pure function of the draw count).
  double normal() {
    for (;;) {
      const double u = 2.0 * uniform() - 1.0;
      const double v = 2.0 * uniform() - 1.0;
      const double s = u * u + v * v;
      if (s > 0.0 && s < 1.0) {
        return u * std::sqrt(-2.0 * std::log(s) / s);
      }
    }
  }

  // Gamma(shape, scale). Dispatch is fixed: small integer shapes sum
  // exponentials, shape >= 1 uses Marsaglia-Tsang, shape < 1 boosts.
  double gamma(double shape, double scale) {
    if (shape == std::floor(shape) && shape >= 1.0 && shape <= 8.0) {
      double acc = 0.0;
      const int k = static_cast<int>(shape);
      for (int i = 0; i < k; ++i) acc -= std::log(uniform_open());
      return positive(acc * scale);
    }
    if (shape < 1.0) {
      const double u = uniform_open();
      return positive(gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape));
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_open();
      if (u < 1.0 - 0.0331 * x * x * x * x) return positive(d * v * scale);
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
        return positive(d * v * scale);
      }
    }
  }

  double weibull(double shape, double scale) {
    return positive(scale * std::pow(-std::log(uniform_open()), 1.0 / shape));
  }

 private:
  // Inter-arrival times must be strictly positive; clamp the measure-zero
  // underflow cases away from 0.
  static double positive(double x) {
    return x > 0.0 ? x : std::numeric_limits<double>::min();
  }

  Engine engine_;
};

using Rng = BasicRng<std::mt19937_64>;
using FastRng = BasicRng<SplitMix64>;

}  // namespace covren
