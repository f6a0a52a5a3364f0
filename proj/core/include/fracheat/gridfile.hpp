#ifndef FRACHEAT_GRIDFILE_HPP
#define FRACHEAT_GRIDFILE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "fracheat/parabolic.hpp"

namespace fracheat {

// Binary grid container: magic "FHGRID1", u32 dimension count, per axis
// (f64 min, f64 max, u64 node count), row-major little-endian f64 payload,
// trailing FNV-1a-64 checksum of everything before it.
struct GridFileData {
  std::vector<double> axis_min;
  std::vector<double> axis_max;
  std::vector<uint64_t> axis_count;
  std::vector<double> values; // row-major, axis 0 slowest
};

void write_grid_file(const std::string &path, const GridFileData &data);
GridFileData read_grid_file(const std::string &path);

void write_field(const std::string &path, const GriddedField &f);
GriddedField read_field(const std::string &path);

uint64_t fnv1a64(const void *bytes, size_t len, uint64_t seed = 14695981039346656037ULL);

} // namespace fracheat

#endif
