#include "fqf/core/rng.hpp"

#include <cmath>
#include <numbers>

namespace fqf {

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

CounterRng::CounterRng(RngSeed seed, std::string_view stream, std::uint64_t lane) {
  std::uint64_t k = mix64(seed.value ^ fnv1a64(stream));
  key_ = mix64(k + 0x9e3779b97f4a7c15ull * (lane + 1));
}

double CounterRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

}  // namespace fqf
