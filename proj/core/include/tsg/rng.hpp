#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tsg {

// splitmix64 finalizer; used to derive independent sub-streams from one seed.
std::uint64_t mix64(std::uint64_t x);

// Named sub-stream derivation. Every random draw in the pipeline flows from a
// single master seed through (name, index) pairs, e.g. substream(seed,
// "trace", episode). Stable across runs and platforms.
std::uint64_t substream(std::uint64_t master, std::string_view name,
                        std::uint64_t index = 0);

// mt19937_64 with hand-rolled distributions so draw sequences do not depend
// on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(mix64(seed)) {}

  std::uint64_t next() { return eng_(); }

  // [0, 1), 53-bit resolution
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller, one value per call
  double normal() {
    double u1 = 1.0 - uniform01();  // (0, 1]
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // [0, n)
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next() % n); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace tsg
