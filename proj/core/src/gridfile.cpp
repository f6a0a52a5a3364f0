#include "fracheat/gridfile.hpp"

#include <cstring>
#include <fstream>

namespace fracheat {

namespace {
constexpr char kMagic[7] = {'F', 'H', 'G', 'R', 'I', 'D', '1'};

void append(std::vector<unsigned char> &buf, const void *p, size_t len) {
  const auto *b = static_cast<const unsigned char *>(p);
  buf.insert(buf.end(), b, b + len);
}
} // namespace

uint64_t fnv1a64(const void *bytes, size_t len, uint64_t seed) {
  const auto *b = static_cast<const unsigned char *>(bytes);
  uint64_t h = seed;
  for (size_t i = 0; i < len; ++i) {
    h ^= uint64_t(b[i]);
    h *= 1099511628211ULL;
  }
  return h;
}

void write_grid_file(const std::string &path, const GridFileData &data) {
  size_t ndim = data.axis_count.size();
  require(data.axis_min.size() == ndim && data.axis_max.size() == ndim,
          "write_grid_file: inconsistent axis metadata");
  uint64_t total = 1;
  for (uint64_t c : data.axis_count) {
    require(c >= 1, "write_grid_file: empty axis");
    total *= c;
  }
  require(data.values.size() == total, "write_grid_file: payload size ", data.values.size(),
          " does not match axes (", total, ")");

  std::vector<unsigned char> buf;
  append(buf, kMagic, sizeof(kMagic));
  uint32_t nd = uint32_t(ndim);
  append(buf, &nd, sizeof(nd));
  for (size_t d = 0; d < ndim; ++d) {
    append(buf, &data.axis_min[d], sizeof(double));
    append(buf, &data.axis_max[d], sizeof(double));
    append(buf, &data.axis_count[d], sizeof(uint64_t));
  }
  append(buf, data.values.data(), data.values.size() * sizeof(double));
  uint64_t sum = fnv1a64(buf.data(), buf.size());
  append(buf, &sum, sizeof(sum));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), "write_grid_file: cannot open ", path);
  out.write(reinterpret_cast<const char *>(buf.data()), std::streamsize(buf.size()));
  require(out.good(), "write_grid_file: short write to ", path);
}

GridFileData read_grid_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "read_grid_file: cannot open ", path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  require(buf.size() >= sizeof(kMagic) + sizeof(uint32_t) + sizeof(uint64_t),
          "read_grid_file: ", path, " truncated");
  require(std::memcmp(buf.data(), kMagic, sizeof(kMagic)) == 0, "read_grid_file: ", path,
          " is not a FHGRID1 file");

  uint64_t stored_sum;
  std::memcpy(&stored_sum, buf.data() + buf.size() - sizeof(uint64_t), sizeof(uint64_t));
  uint64_t computed = fnv1a64(buf.data(), buf.size() - sizeof(uint64_t));
  require(stored_sum == computed, "read_grid_file: checksum mismatch in ", path);

  size_t off = sizeof(kMagic);
  uint32_t nd;
  std::memcpy(&nd, buf.data() + off, sizeof(nd));
  off += sizeof(nd);

  GridFileData data;
  uint64_t total = 1;
  for (uint32_t d = 0; d < nd; ++d) {
    require(off + 2 * sizeof(double) + sizeof(uint64_t) <= buf.size(), "read_grid_file: truncated header");
    double mn, mx;
    uint64_t cnt;
    std::memcpy(&mn, buf.data() + off, sizeof(double));
    off += sizeof(double);
    std::memcpy(&mx, buf.data() + off, sizeof(double));
    off += sizeof(double);
    std::memcpy(&cnt, buf.data() + off, sizeof(uint64_t));
    off += sizeof(uint64_t);
    data.axis_min.push_back(mn);
    data.axis_max.push_back(mx);
    data.axis_count.push_back(cnt);
    total *= cnt;
  }
  require(off + total * sizeof(double) + sizeof(uint64_t) == buf.size(),
          "read_grid_file: payload size mismatch in ", path);
  data.values.resize(total);
  std::memcpy(data.values.data(), buf.data() + off, total * sizeof(double));
  return data;
}

void write_field(const std::string &path, const GriddedField &f) {
  GridFileData d;
  const auto &g = f.grid();
  d.axis_min = {g.t_min(), g.x_min()};
  d.axis_max = {g.t_max(), g.x_max()};
  d.axis_count = {g.nt(), g.nx()};
  d.values = f.values();
  write_grid_file(path, d);
}

GriddedField read_field(const std::string &path) {
  GridFileData d = read_grid_file(path);
  require(d.axis_count.size() == 2, "read_field: expected a 2-D grid in ", path);
  SpaceTimeGrid g(d.axis_min[0], d.axis_max[0], d.axis_count[0], d.axis_min[1], d.axis_max[1],
                  d.axis_count[1]);
  return GriddedField(g, std::move(d.values));
}

} // namespace fracheat
