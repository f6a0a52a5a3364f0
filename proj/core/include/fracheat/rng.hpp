#ifndef FRACHEAT_RNG_HPP
#define FRACHEAT_RNG_HPP

#include <cstdint>

#include "fracheat/common.hpp"

namespace fracheat {

// Counter-based generator: every variate is a pure function of (seed, key).
// Draws are independent of evaluation order, so a realization restricted to a
// coarser frequency box reuses exactly the coefficients of the finer draw.
uint64_t mix64(uint64_t z);

// Combine a seed with up to four 32-bit indices into one stream key.
uint64_t stream_key(uint64_t seed, uint32_t a, uint32_t b, uint32_t c, uint32_t d);

// Uniform in (0,1), never exactly 0 or 1.
double uniform01(uint64_t key);

// Standard complex Gaussian: E[g] = 0, E[|g|^2] = 1, E[g^2] = 0.
complex standard_complex_gaussian(uint64_t seed, uint32_t a, uint32_t b, uint32_t c, uint32_t d);

// Standard real Gaussian keyed the same way.
double standard_gaussian(uint64_t seed, uint32_t a, uint32_t b, uint32_t c, uint32_t d);

} // namespace fracheat

#endif
