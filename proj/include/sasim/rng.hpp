#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace sasim {

// Counter-based deterministic random stream. A draw is a pure function of
// (seed, stream name, counter), so replications can share substreams (e.g.
// paired runs reuse the spawn stream) without any sequencing coupling.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::string_view stream)
      : key_(mix64(seed ^ fnv1a(stream))) {}

  // k-th uniform draw in [0, 1) of this stream.
  double at(std::uint64_t k) const {
    return static_cast<double>(mix64(key_ + k * 0x9e3779b97f4a7c15ULL) >> 11) * 0x1.0p-53;
  }

  double next() { return at(counter_++); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next(); }

  // Exponential with the given mean (inverse-CDF, library-free for
  // bit-stable results across platforms).
  double exponential(double mean) { return -mean * std::log1p(-next()); }

  bool bernoulli(double p) { return next() < p; }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

 private:
  // splitmix64 finalizer.
  static std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace sasim
