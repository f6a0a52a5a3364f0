#ifndef FRACHEAT_SPECTRAL_FIELD_HPP
#define FRACHEAT_SPECTRAL_FIELD_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "fracheat/parabolic.hpp"
#include "fracheat/quadrature.hpp"

namespace fracheat {

// c_H > 0 with c_H^2 * \int_R |e^{iu}-1|^2 |u|^{-2H-1} du = 1. Throws if the
// two quadrature refinements disagree by more than 1e-8 relative.
double normalization_constant(double H);

// One truncated spectral approximation law: Hurst pair, truncation level n
// (frequency box D_n = [-2^{2n}, 2^{2n}] x [-2^n, 2^n]), per-axis graded
// frequency lattices with midpoint weights, and the unit-variance
// normalization c_{H1,H2} = c_{H1} * c_{H2}.
struct SheetSpec {
  double H1 = 0.5;
  double H2 = 0.5;
  unsigned n = 0;
  MeshDensity density;
  AxisMesh mesh_t; // positive time frequencies, cutoff 2^{2n}
  AxisMesh mesh_x; // positive space frequencies, cutoff 2^n
  double c1 = 0, c2 = 0, c_norm = 0;

  size_t lattice_size() const { return 4 * mesh_t.size() * mesh_x.size(); }
};

SheetSpec make_sheet_spec(double H1, double H2, unsigned n,
                          const MeshDensity &density = MeshDensity::mc());

// Signed spatial node indexing: qs < Q is +node[qs], qs >= Q is -node[qs-Q].
inline double signed_eta(const AxisMesh &mesh, size_t qs) {
  size_t q = qs < mesh.size() ? qs : qs - mesh.size();
  return qs < mesh.size() ? mesh.node[q] : -mesh.node[q];
}

// One seeded draw of the complex Gaussian spectral coefficients on the
// half-lattice {xi > 0} x {+/- eta}. Stored coefficients carry the sqrt of
// the quadrature weight; the (-xi, -eta) mirror is the complex conjugate, so
// every evaluated field is real. Coefficients are keyed per lattice node, so
// a draw at level n is bit-identical to the restriction of a level-m draw
// (m >= n) with the same seed and density.
struct NoiseRealization {
  SheetSpec spec;
  uint64_t seed = 0;
  std::vector<complex> coeff; // row p (xi node), column qs (signed eta node)

  complex at(size_t p, size_t qs) const { return coeff[p * 2 * spec.mesh_x.size() + qs]; }
};

NoiseRealization sample_noise(const SheetSpec &spec, uint64_t seed);

// X^n at the given points (direct per-point summation, the reference path).
std::vector<double> eval_sheet(const NoiseRealization &r, std::span<const ScaledPoint> points);

// xi^n = dt dx X^n at the given points (term-by-term differentiated sum).
std::vector<double> eval_noise_density(const NoiseRealization &r,
                                       std::span<const ScaledPoint> points);

// E[X^n(p) X^n(q)] by separable 1-D quadrature on the spec's lattice.
double exact_second_moment(const SheetSpec &spec, const ScaledPoint &p, const ScaledPoint &q);

// E[|rectangular increment of X^n over `offset`|^2]; base-independent.
double exact_increment_moment(const SheetSpec &spec, const ScaledPoint &offset);

// E[xi^n(t,x)^2], independent of (t,x).
double exact_noise_variance(const SheetSpec &spec);

// Fast evaluation of one realization on a tensor grid (factorized direct
// summation; agrees with eval_sheet/eval_noise_density to ~1e-12 relative).
enum class FieldKind { sheet, noise, theta };

class SpectralGridEvaluator {
public:
  // mode_factor: optional per-lattice-node multiplier (e.g. K-hat values for
  // theta = K * xi^n), laid out like NoiseRealization::coeff.
  SpectralGridEvaluator(const NoiseRealization &r, FieldKind kind, std::vector<double> xs,
                        std::vector<complex> mode_factor = {});

  // Field values at (t, xs); out has xs.size() entries.
  void eval_row(double t, double *out) const;

  GriddedField eval_grid(const SpaceTimeGrid &grid) const;

private:
  const NoiseRealization &r_;
  FieldKind kind_;
  std::vector<double> xs_;
  std::vector<complex> coeff_; // coefficients with kind/mode factors folded in
  std::vector<complex> fx_;    // [qs][j] spatial factors
  std::vector<double> xi_;     // time nodes
  std::vector<complex> ft_amp_; // per-p time amplitude (xi-power factors)
};

// Point evaluation of theta = K * xi^n and xi^n with a per-node mode factor
// (K-hat) supplied for theta; shared by the Levy-area constructions.
double eval_field_point(const NoiseRealization &r, FieldKind kind, const ScaledPoint &z,
                        std::span<const complex> mode_factor = {});

} // namespace fracheat

#endif
