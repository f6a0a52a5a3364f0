#ifndef FRACHEAT_PARABOLIC_HPP
#define FRACHEAT_PARABOLIC_HPP

#include <vector>

#include "fracheat/common.hpp"

namespace fracheat {

// Space-time point under the parabolic scaling s = (2, 1): t counts twice.
struct ScaledPoint {
  double t = 0;
  double x = 0;
};

struct MultiIndex {
  unsigned k1 = 0;
  unsigned k2 = 0;
};

// ||(t,x)||_s = (|t| + x^2)^{1/2}
double scaled_norm(const ScaledPoint &p);

// |k|_s = 2 k1 + k2
unsigned scaled_degree(const MultiIndex &k);

// Closed rectangle [t0,t1] x [x0,x1].
struct Rect {
  double t0 = 0, t1 = 0;
  double x0 = 0, x1 = 0;
  bool contains(const ScaledPoint &p) const {
    return p.t >= t0 && p.t <= t1 && p.x >= x0 && p.x <= x1;
  }
};

// Uniform tensor grid; node (i, j) sits at (t_min + i*dt, x_min + j*dx).
class SpaceTimeGrid {
public:
  SpaceTimeGrid() = default;
  SpaceTimeGrid(double t_min, double t_max, size_t nt, double x_min, double x_max, size_t nx);

  double t_min() const { return t_min_; }
  double t_max() const { return t_max_; }
  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  size_t nt() const { return nt_; }
  size_t nx() const { return nx_; }
  double dt() const { return dt_; }
  double dx() const { return dx_; }

  double t_at(size_t i) const { return t_min_ + double(i) * dt_; }
  double x_at(size_t j) const { return x_min_ + double(j) * dx_; }

  // Nearest node index if the coordinate lies on a node (relative snap
  // tolerance); fails with a report naming the offending coordinate.
  size_t t_index(double t) const;
  size_t x_index(double x) const;

  bool operator==(const SpaceTimeGrid &o) const;

private:
  double t_min_ = 0, t_max_ = 1, x_min_ = 0, x_max_ = 1;
  size_t nt_ = 2, nx_ = 2;
  double dt_ = 1, dx_ = 1;
};

// Real field sampled on a SpaceTimeGrid, row-major with time as the row.
class GriddedField {
public:
  GriddedField() = default;
  GriddedField(SpaceTimeGrid grid, std::vector<double> values);
  explicit GriddedField(SpaceTimeGrid grid);

  const SpaceTimeGrid &grid() const { return grid_; }
  double at(size_t i, size_t j) const { return values_[i * grid_.nx() + j]; }
  double &at(size_t i, size_t j) { return values_[i * grid_.nx() + j]; }
  const std::vector<double> &values() const { return values_; }
  std::vector<double> &values() { return values_; }

  // Bilinear interpolation; node-exact on nodes.
  double value_at(double t, double x) const;

  void check_finite() const;

private:
  SpaceTimeGrid grid_;
  std::vector<double> values_;
};

// f(s+t, x+y) - f(s, x+y) - f(s+t, x) + f(s, x); all four corners must be
// grid nodes.
double rect_increment(const GriddedField &f, const ScaledPoint &base, const ScaledPoint &offset);

// All points (2^{-2n} k1, 2^{-n} k2) inside the region, time-major order.
std::vector<ScaledPoint> dyadic_lattice(unsigned n, const Rect &region);

// Discrete parabolic Hölder norm: sup |f| over region nodes plus the sup of
// |f(x)-f(y)| / ||x-y||_s^gamma over node pairs with ||x-y||_s <= 1. Pairs are
// scanned exhaustively on small grids and over a geometric offset ladder on
// large ones; either way the result is a lower bound of the continuum norm.
double holder_norm(const GriddedField &f, const Rect &region, double gamma);

} // namespace fracheat

#endif
