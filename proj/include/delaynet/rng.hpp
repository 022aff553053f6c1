#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace delaynet {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer. Used to derive independent replica streams.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of replica `replica` under master seed `seed`.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t replica) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(replica + 0x632be59bd9b4e019ULL));
}

inline Engine make_stream(std::uint64_t seed, std::uint64_t replica = 0) {
  return Engine(stream_seed(seed, replica));
}

// The conversions below are written out rather than taken from <random>
// distributions so that streams are reproducible across standard libraries.

/// Uniform on the open interval (0, 1).
template <class Rng>
double uniform_open(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Exponential(1).
template <class Rng>
double standard_exponential(Rng& rng) {
  return -std::log(uniform_open(rng));
}

/// Uniform integer in [0, k). Lemire's multiply-shift with rejection.
template <class Rng>
std::uint64_t uniform_index(Rng& rng, std::uint64_t k) {
  if (k <= 1) return 0;
  unsigned __int128 m = static_cast<unsigned __int128>(rng()) * k;
  auto low = static_cast<std::uint64_t>(m);
  if (low < k) {
    const std::uint64_t threshold = (0 - k) % k;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(rng()) * k;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

template <class Rng>
bool bernoulli_trial(Rng& rng, double p) {
  if (p >= 1.0) return true;
  if (p <= 0.0) return false;
  return uniform_open(rng) < p;
}

}  // namespace delaynet
