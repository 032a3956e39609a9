#pragma once

#include <cstdint>
#include <string_view>

namespace fqf {

struct RngSeed {
  std::uint64_t value = 0;
};

std::uint64_t fnv1a64(std::string_view s);

// splitmix64 finalizer; bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Counter-based generator: output i depends only on (key, i), so any draw
// sequence is reproducible regardless of scheduling.  Streams are derived
// from a stage name plus an optional lane index; distinct lanes never share
// a key, which keeps per-particle and per-scatterer draws independent of
// worker count.
class CounterRng {
 public:
  CounterRng() = default;
  explicit CounterRng(std::uint64_t key) : key_(key) {}
  CounterRng(RngSeed seed, std::string_view stream, std::uint64_t lane = 0);

  std::uint64_t next_u64() { return mix64(key_ + 0x9e3779b97f4a7c15ull * ++counter_); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  // Standard normal via Box-Muller; the spare draw is cached so a pair of
  // uniforms yields two outputs in a fixed order.
  double normal();

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fqf
