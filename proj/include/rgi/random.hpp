#pragma once

// Portable random number utilities.
//
// std::mt19937_64 has a fully specified output sequence, but the standard
// distributions do not. Every distribution used by the library is written out
// here so that datasets and training runs reproduce bit-for-bit on any
// conforming platform.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace rgi {

using Engine = std::mt19937_64;

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent sub-seed for a named pipeline stage:
/// splitmix64(master ^ fnv1a64(stage)).
constexpr std::uint64_t split_seed(std::uint64_t master, std::string_view stage) noexcept {
  return splitmix64(master ^ fnv1a64(stage));
}

/// Uniform integer in [0, bound). bound must be > 0. Uses rejection to avoid
/// modulo bias.
inline std::uint64_t uniform_below(Engine& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % bound;
}

/// Uniform double in [0, 1) with 53 bits of randomness.
inline double uniform01(Engine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Number of Bernoulli(p) trials up to and including the first success;
/// support {1, 2, ...} and mean 1/p.
inline std::uint64_t geometric(Engine& rng, double p) {
  std::uint64_t k = 1;
  while (uniform01(rng) >= p) ++k;
  return k;
}

/// Standard normal via Box-Muller (one value per call, the sine branch is
/// discarded so the stream position stays simple).
inline double standard_normal(Engine& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

template <typename T>
void shuffle(std::vector<T>& items, Engine& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

/// k distinct values from [0, n), in increasing order (Floyd's algorithm).
/// Requires k <= n.
inline std::vector<std::uint64_t> sample_distinct(Engine& rng, std::uint64_t n, std::uint64_t k) {
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(k * 2);
  for (std::uint64_t j = n - k; j < n; ++j) {
    const std::uint64_t r = uniform_below(rng, j + 1);
    if (!chosen.insert(r).second) chosen.insert(j);
  }
  std::vector<std::uint64_t> out(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace rgi
