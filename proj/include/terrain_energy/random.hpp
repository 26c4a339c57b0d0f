#ifndef TERRAIN_ENERGY_RANDOM_HPP
#define TERRAIN_ENERGY_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <utility>

namespace terrain_energy {

// std::mt19937_64 output is fixed by the standard; the std distributions are
// not, so the few draws we need are built directly on the raw engine to keep
// generated worlds identical across standard libraries.
using Engine = std::mt19937_64;

inline double uniform01(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

inline double uniform(Engine& eng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(eng);
}

/// Uniform integer in [0, n).
inline std::uint64_t uniform_index(Engine& eng, std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t v = eng();
  while (v >= limit) v = eng();
  return v % n;
}

/// Standard normal draw (Box-Muller, one value per call).
inline double standard_normal(Engine& eng) {
  double u1 = uniform01(eng);
  while (u1 <= 0.0) u1 = uniform01(eng);
  const double u2 = uniform01(eng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

template <typename T>
void shuffle(std::span<T> items, Engine& eng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(eng, i));
    std::swap(items[i - 1], items[j]);
  }
}

/// Stateless 64-bit mix, used for random-access lattice noise.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace terrain_energy

#endif  // TERRAIN_ENERGY_RANDOM_HPP
