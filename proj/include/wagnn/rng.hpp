#pragma once

// Counter-based random streams.
//
// Every draw in the library comes from a short-lived Stream keyed by
// (root seed, substream tag, time, node indices...). Draw order inside a
// step therefore never depends on evaluation order, and trajectories are
// identical whether entries are computed sequentially or in parallel.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <utility>

namespace wagnn::rng {

/// Named substreams derived from the root seed of an experiment.
enum class Tag : std::uint64_t {
  topology = 0x746f706fULL,
  fading = 0x66616469ULL,
  activation = 0x61637469ULL,
  policy = 0x706f6c69ULL,
  init = 0x696e6974ULL,
  demand = 0x64656d61ULL,
  baseline = 0x62617365ULL,
  trial = 0x74726961ULL,
  permutation = 0x7065726dULL,
};

constexpr std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = mix(seed);
  for (auto k : keys) h = mix(h ^ mix(k));
  return h;
}

constexpr std::uint64_t derive(std::uint64_t seed, Tag tag, std::initializer_list<std::uint64_t> keys = {}) {
  std::uint64_t h = mix(seed ^ mix(static_cast<std::uint64_t>(tag)));
  for (auto k : keys) h = mix(h ^ mix(k));
  return h;
}

/// SplitMix64 generator; satisfies UniformRandomBitGenerator.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Stream(std::uint64_t seed) : state_(seed) {}
  Stream(std::uint64_t seed, Tag tag, std::initializer_list<std::uint64_t> keys = {})
      : state_(derive(seed, tag, keys)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Pair of independent standard normals (Box-Muller). Implemented here
  /// rather than via std::normal_distribution so that trajectories match
  /// across standard library implementations.
  std::pair<double, double> normal_pair() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
  }

  double normal() { return normal_pair().first; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Poisson draw by CDF inversion; fine for the moderate means used here
  /// (exp(-mean) must not underflow, i.e. mean < ~700).
  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    const double u = uniform();
    double pmf = std::exp(-mean);
    double cdf = pmf;
    std::uint64_t k = 0;
    while (u >= cdf && pmf > 0.0) {
      ++k;
      pmf *= mean / static_cast<double>(k);
      cdf += pmf;
    }
    return k;
  }

 private:
  std::uint64_t state_;
};

}  // namespace wagnn::rng
