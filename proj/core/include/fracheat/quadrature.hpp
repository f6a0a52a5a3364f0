#ifndef FRACHEAT_QUADRATURE_HPP
#define FRACHEAT_QUADRATURE_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "fracheat/common.hpp"

namespace fracheat {

// One-sided graded mesh on (2^{j_lo}, 2^{j_hi}]: dyadic octaves [2^j, 2^{j+1})
// with midpoint nodes, denser from `fine_from` upward. Doubles as a quadrature
// rule (node/weight) and as the positive half of a spectral sampling lattice.
// Node identity (octave, slot) is stable across cutoffs, so meshes truncated
// at different j_hi share nodes exactly; that is what couples noise draws
// across truncation levels.
struct MeshDensity {
  int octave_lo = -12;        // lowest octave exponent (inner cutoff 2^{octave_lo})
  int fine_from = -4;         // octaves >= this get the fine count
  int nodes_coarse = 4;       // per octave below fine_from
  int nodes_fine = 8;         // per octave from fine_from up

  static MeshDensity fine();   // deterministic moment quadrature
  static MeshDensity mc();     // Monte Carlo sampling lattices
  static MeshDensity solver(); // per-step noise evaluation in the steppers
  static MeshDensity area();   // Lévy-area second-chaos pairings
};

struct AxisMesh {
  std::vector<double> node;    // increasing, all > 0
  std::vector<double> weight;  // midpoint octave weights
  std::vector<uint32_t> key;   // packed (octave, slot), stable across cutoffs
  double cutoff = 0;           // 2^{j_hi}

  size_t size() const { return node.size(); }
};

// Octaves j = density.octave_lo .. j_hi-1.
AxisMesh make_axis_mesh(int j_hi, const MeshDensity &density);

// Prefix length of `fine` shared with the mesh truncated at j_hi (same
// density). Nodes [0, len) of the finer mesh are exactly the coarser mesh.
size_t mesh_prefix_size(const AxisMesh &fine, int j_hi, const MeshDensity &density);

// sum over +/- nodes of f(node) * weight, i.e. a symmetric quadrature of
// \int_{|u| <= cutoff} f(u) du for f given on the positive axis only via
// f(u) + f(-u) = even_part(u).
double axis_quad_even(const AxisMesh &mesh, const std::function<double(double)> &f_even);

// Adaptive Simpson on [a, b].
double integrate_adaptive(const std::function<double(double)> &f, double a, double b, double tol,
                          int max_depth = 28);

// I(H) = \int_R |e^{i u} - 1|^2 |u|^{-2H-1} du, the normalizing integral for
// one axis of the spectral representation. Origin handled by the power
// substitution v = u^{2-2H}; the far tail by explicit integration-by-parts
// terms. `err` receives an estimate of the achieved accuracy.
double axis_variance_integral(double H, double *err = nullptr);

} // namespace fracheat

#endif
