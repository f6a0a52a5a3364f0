#include "fracheat/rng.hpp"

#include <cmath>

namespace fracheat {

uint64_t mix64(uint64_t z) {
  // splitmix64 finalizer
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

uint64_t stream_key(uint64_t seed, uint32_t a, uint32_t b, uint32_t c, uint32_t d) {
  uint64_t k = mix64(seed ^ 0x6a09e667f3bcc908ULL);
  k = mix64(k ^ ((uint64_t(a) << 32) | uint64_t(b)));
  k = mix64(k ^ ((uint64_t(c) << 32) | uint64_t(d)));
  return k;
}

double uniform01(uint64_t key) {
  // 53 random bits into (0,1); offset keeps the value strictly inside.
  uint64_t bits = mix64(key) >> 11;
  return (double(bits) + 0.5) * (1.0 / 9007199254740992.0);
}

complex standard_complex_gaussian(uint64_t seed, uint32_t a, uint32_t b, uint32_t c, uint32_t d) {
  uint64_t k = stream_key(seed, a, b, c, d);
  double u1 = uniform01(k);
  double u2 = uniform01(mix64(k ^ 0x243f6a8885a308d3ULL));
  // Box-Muller; variance 1/2 per component so E|g|^2 = 1.
  double r = std::sqrt(-std::log(u1));
  double th = 2.0 * pi * u2;
  return complex(r * std::cos(th), r * std::sin(th));
}

double standard_gaussian(uint64_t seed, uint32_t a, uint32_t b, uint32_t c, uint32_t d) {
  uint64_t k = stream_key(seed, a, b, c, d);
  double u1 = uniform01(k);
  double u2 = uniform01(mix64(k ^ 0x13198a2e03707344ULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * pi * u2);
}

} // namespace fracheat
