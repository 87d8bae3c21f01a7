#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace cmdrnn::rng {

using Engine = std::mt19937_64;

// All draws below are hand-rolled on top of the engine's raw output so that
// streams are identical across standard library implementations.

// Uniform in [0, 1), 53-bit resolution.
inline double unit(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

inline double uniform(Engine& eng, double lo, double hi) {
  return lo + (hi - lo) * unit(eng);
}

// Box-Muller; consumes two engine draws per call.
inline double normal(Engine& eng, double mean = 0.0, double stddev = 1.0) {
  const double u1 = 1.0 - unit(eng);  // (0, 1], keeps log() finite
  const double u2 = unit(eng);
  const double r = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * r * std::cos(6.283185307179586476925286766559 * u2);
}

// Unbiased integer in [0, n) by rejection.
inline std::size_t index(Engine& eng, std::size_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = eng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % n);
}

// Inverse-CDF draw from nonnegative weights summing to ~1.
inline std::size_t categorical(Engine& eng, std::span<const double> weights) {
  const double u = unit(eng);
  double cum = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    cum += weights[k];
    if (u < cum) return k;
  }
  return weights.size() - 1;
}

template <typename T>
void shuffle(std::vector<T>& v, Engine& eng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[index(eng, i)]);
  }
}

}  // namespace cmdrnn::rng
