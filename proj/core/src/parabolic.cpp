#include "fracheat/parabolic.hpp"

#include <algorithm>
#include <cmath>

namespace fracheat {

double scaled_norm(const ScaledPoint &p) {
  require(finite(p.t) && finite(p.x), "scaled_norm: non-finite coordinate");
  return std::sqrt(std::abs(p.t) + p.x * p.x);
}

unsigned scaled_degree(const MultiIndex &k) { return 2 * k.k1 + k.k2; }

SpaceTimeGrid::SpaceTimeGrid(double t_min, double t_max, size_t nt, double x_min, double x_max,
                             size_t nx)
    : t_min_(t_min), t_max_(t_max), x_min_(x_min), x_max_(x_max), nt_(nt), nx_(nx) {
  require(nt >= 2 && nx >= 2, "SpaceTimeGrid: nt, nx must be >= 2, got ", nt, " x ", nx);
  require(t_max > t_min && x_max > x_min, "SpaceTimeGrid: degenerate extent");
  dt_ = (t_max_ - t_min_) / double(nt_ - 1);
  dx_ = (x_max_ - x_min_) / double(nx_ - 1);
}

namespace {
size_t snap_index(double v, double v_min, double dv, size_t count, const char *axis) {
  double u = (v - v_min) / dv;
  double r = std::round(u);
  if (std::abs(u - r) > 1e-9 * std::max(1.0, std::abs(u)) || r < 0 || r >= double(count)) {
    fail("coordinate ", v, " is not a grid node on the ", axis, " axis (min ", v_min, ", step ",
         dv, ", count ", count, ")");
  }
  return size_t(r);
}
} // namespace

size_t SpaceTimeGrid::t_index(double t) const { return snap_index(t, t_min_, dt_, nt_, "time"); }
size_t SpaceTimeGrid::x_index(double x) const { return snap_index(x, x_min_, dx_, nx_, "space"); }

bool SpaceTimeGrid::operator==(const SpaceTimeGrid &o) const {
  return t_min_ == o.t_min_ && t_max_ == o.t_max_ && x_min_ == o.x_min_ && x_max_ == o.x_max_ &&
         nt_ == o.nt_ && nx_ == o.nx_;
}

GriddedField::GriddedField(SpaceTimeGrid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  require(values_.size() == grid_.nt() * grid_.nx(), "GriddedField: value count ",
          values_.size(), " does not match grid ", grid_.nt(), " x ", grid_.nx());
}

GriddedField::GriddedField(SpaceTimeGrid grid)
    : grid_(grid), values_(grid.nt() * grid.nx(), 0.0) {}

double GriddedField::value_at(double t, double x) const {
  double u = (t - grid_.t_min()) / grid_.dt();
  double v = (x - grid_.x_min()) / grid_.dx();
  require(u > -1e-9 && u < double(grid_.nt() - 1) + 1e-9 && v > -1e-9 &&
              v < double(grid_.nx() - 1) + 1e-9,
          "value_at: point (", t, ", ", x, ") outside grid");
  u = std::clamp(u, 0.0, double(grid_.nt() - 1));
  v = std::clamp(v, 0.0, double(grid_.nx() - 1));
  size_t i = std::min(size_t(u), grid_.nt() - 2);
  size_t j = std::min(size_t(v), grid_.nx() - 2);
  double a = u - double(i), b = v - double(j);
  return (1 - a) * (1 - b) * at(i, j) + (1 - a) * b * at(i, j + 1) + a * (1 - b) * at(i + 1, j) +
         a * b * at(i + 1, j + 1);
}

void GriddedField::check_finite() const {
  for (double v : values_)
    require(finite(v), "GriddedField: non-finite entry");
}

double rect_increment(const GriddedField &f, const ScaledPoint &base, const ScaledPoint &offset) {
  const auto &g = f.grid();
  size_t i0 = g.t_index(base.t);
  size_t i1 = g.t_index(base.t + offset.t);
  size_t j0 = g.x_index(base.x);
  size_t j1 = g.x_index(base.x + offset.x);
  return f.at(i1, j1) - f.at(i0, j1) - f.at(i1, j0) + f.at(i0, j0);
}

std::vector<ScaledPoint> dyadic_lattice(unsigned n, const Rect &region) {
  require(finite(region.t0) && finite(region.t1) && finite(region.x0) && finite(region.x1),
          "dyadic_lattice: non-finite region");
  double ht = std::ldexp(1.0, -int(2 * n));
  double hx = std::ldexp(1.0, -int(n));
  long k1_lo = long(std::ceil(region.t0 / ht - 1e-12));
  long k1_hi = long(std::floor(region.t1 / ht + 1e-12));
  long k2_lo = long(std::ceil(region.x0 / hx - 1e-12));
  long k2_hi = long(std::floor(region.x1 / hx + 1e-12));
  std::vector<ScaledPoint> pts;
  if (k1_hi < k1_lo || k2_hi < k2_lo) return pts;
  pts.reserve(size_t(k1_hi - k1_lo + 1) * size_t(k2_hi - k2_lo + 1));
  for (long k1 = k1_lo; k1 <= k1_hi; ++k1)
    for (long k2 = k2_lo; k2 <= k2_hi; ++k2)
      pts.push_back({double(k1) * ht, double(k2) * hx});
  return pts;
}

namespace {

// Geometric ladder of index offsets, 0 and +/- {1, 2, 3, 4, 6, 8, 12, ...}.
std::vector<long> offset_ladder(size_t extent) {
  std::vector<long> offs = {0};
  long prev = 0;
  for (long v = 1; size_t(v) < extent;) {
    offs.push_back(v);
    offs.push_back(-v);
    long next = v + std::max<long>(1, v / 2);
    prev = v;
    v = next;
  }
  (void)prev;
  return offs;
}

} // namespace

double holder_norm(const GriddedField &f, const Rect &region, double gamma) {
  require(gamma > 0.0 && gamma < 1.0, "holder_norm: gamma must lie in (0,1), got ", gamma);
  const auto &g = f.grid();
  std::vector<size_t> is, js;
  for (size_t i = 0; i < g.nt(); ++i)
    if (g.t_at(i) >= region.t0 - 1e-12 && g.t_at(i) <= region.t1 + 1e-12) is.push_back(i);
  for (size_t j = 0; j < g.nx(); ++j)
    if (g.x_at(j) >= region.x0 - 1e-12 && g.x_at(j) <= region.x1 + 1e-12) js.push_back(j);
  require(is.size() * js.size() >= 2, "holder_norm: region intersects grid in fewer than 2 nodes");

  double sup_abs = 0;
  for (size_t i : is)
    for (size_t j : js) sup_abs = std::max(sup_abs, std::abs(f.at(i, j)));

  const size_t n_nodes = is.size() * js.size();
  const size_t exhaustive_cap = 32768;
  double sup_quot = 0;

  auto consider = [&](size_t ia, size_t ja, size_t ib, size_t jb) {
    double dtv = g.t_at(ib) - g.t_at(ia);
    double dxv = g.x_at(jb) - g.x_at(ja);
    double ns = std::sqrt(std::abs(dtv) + dxv * dxv);
    if (ns <= 0 || ns > 1.0) return;
    double q = std::abs(f.at(ib, jb) - f.at(ia, ja)) / std::pow(ns, gamma);
    sup_quot = std::max(sup_quot, q);
  };

  if (n_nodes <= exhaustive_cap) {
    for (size_t a = 0; a < n_nodes; ++a) {
      size_t ia = is[a / js.size()], ja = js[a % js.size()];
      for (size_t b = a + 1; b < n_nodes; ++b) {
        size_t ib = is[b / js.size()], jb = js[b % js.size()];
        consider(ia, ja, ib, jb);
      }
    }
  } else {
    auto dt_offs = offset_ladder(is.size());
    auto dx_offs = offset_ladder(js.size());
    for (size_t a = 0; a < is.size(); ++a) {
      for (size_t b = 0; b < js.size(); ++b) {
        for (long di : dt_offs) {
          long ia2 = long(a) + di;
          if (ia2 < 0 || size_t(ia2) >= is.size()) continue;
          for (long dj : dx_offs) {
            long jb2 = long(b) + dj;
            if (jb2 < 0 || size_t(jb2) >= js.size()) continue;
            if (di == 0 && dj == 0) continue;
            consider(is[a], js[b], is[size_t(ia2)], js[size_t(jb2)]);
          }
        }
      }
    }
  }
  return sup_abs + sup_quot;
}

} // namespace fracheat
