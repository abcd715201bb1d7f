#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "lspsim/error.hpp"

namespace lspsim {

// splitmix64 finalizer. Used to turn (root seed, stream id) into an engine
// seed so every stream is independent of event interleaving.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic random-variate stream. Identical (seed, stream_id) yields an
// identical draw sequence on every run and platform: mt19937_64 is pinned by
// the standard and all variates go through inverse transforms on uniform01()
// rather than through implementation-defined std distributions.
class RngStream {
 public:
  RngStream() : RngStream(1, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : eng_(mix64(seed ^ mix64(stream_id))) {}

  std::uint64_t bits() { return eng_(); }

  // [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // [a, b)
  double uniform(double a, double b) {
    if (!(a < b)) throw SimError("uniform: requires a < b");
    return a + uniform01() * (b - a);
  }

  double exponential(double mean) {
    if (!(mean > 0)) throw SimError("exponential: mean must be > 0");
    return -mean * std::log(1.0 - uniform01());
  }

  // Pareto with shape alpha > 1 (so the mean exists) and scale xm > 0;
  // result >= xm.
  double pareto(double shape, double scale) {
    if (!(shape > 1)) throw SimError("pareto: shape must be > 1");
    if (!(scale > 0)) throw SimError("pareto: scale must be > 0");
    return scale * std::pow(1.0 - uniform01(), -1.0 / shape);
  }

  // Inclusive on both ends.
  std::int64_t uniformInt(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw SimError("uniformInt: requires lo <= hi");
    auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(eng_() % span);
  }

 private:
  std::mt19937_64 eng_;
};

// Stream-id namespaces; entity ids are ORed into the low bits so a stream's
// identity never depends on creation order.
namespace streams {
inline constexpr std::uint64_t kGeneratorInterval = 1ULL << 32;
inline constexpr std::uint64_t kGeneratorPhase = 2ULL << 32;
inline constexpr std::uint64_t kHelloPhase = 3ULL << 32;
inline constexpr std::uint64_t kRefreshJitter = 4ULL << 32;
inline constexpr std::uint64_t kHarness = 5ULL << 32;
}  // namespace streams

}  // namespace lspsim
