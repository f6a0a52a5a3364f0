#ifndef FRACHEAT_BESOV_HPP
#define FRACHEAT_BESOV_HPP

#include <vector>

#include "fracheat/heat_kernel.hpp"
#include "fracheat/parabolic.hpp"
#include "fracheat/spectral_field.hpp"

namespace fracheat {

// 1-D piecewise-polynomial profiles on [-1,1]:
//   father: (1-u^2)^4, nonzero mean, C^3
//   mother: -d/du (1-u^2)^4 = 8u(1-u^2)^3, zero mean, C^2
// Both have closed-form transforms \int prof(u) e^{i u w} du.
enum class ProfileKind { father, mother };

struct TestProfile {
  ProfileKind kind = ProfileKind::father;

  double operator()(double u) const;
  complex ft(double w) const;
  double mean() const;
  double sup_deriv(int order) const; // order 0, 1, 2
};

// Tensor test function psi(t,x) = delta^{-3} A((t-c_t)/(delta^2 s_t))
// B((x-c_x)/(delta s_x)), supported in the scaled ball of radius delta
// around the center (s_t = 1/2, s_x = 1/sqrt(2)).
struct TestFunction {
  TestProfile time_profile{ProfileKind::father};
  TestProfile space_profile{ProfileKind::father};
  double delta = 1.0;
  ScaledPoint center{0.0, 0.0};

  static constexpr double s_t = 0.5;
  static constexpr double s_x = 0.70710678118654752440;

  double eval(double t, double x) const;
  complex ft(double xi, double eta) const; // \int psi(z) e^{i(t xi + x eta)} dz
  double mean() const;                     // delta-invariant
  bool zero_mean() const;
  double support_radius() const { return delta; }
  double c2_norm() const; // scaled C^2 norm of the scaled function
};

using TestFamily = std::vector<TestFunction>;

// father x father, father x mother, mother x father, mother x mother
TestFamily default_test_family();

// (S^delta_{s,center} psi); composes with any existing scaling of psi.
TestFunction scale_test(const TestFunction &psi, double delta, const ScaledPoint &center);

// Grid quadrature of \int field * psi. Requires >= 4 grid nodes per scaled
// support unit in each direction and the support inside the grid.
double pair(const GriddedField &field, const TestFunction &psi);

// Anything that can be paired against an (already scaled) test function.
class FieldPairing {
public:
  virtual ~FieldPairing() = default;
  virtual double pair_with(const TestFunction &scaled_psi) const = 0;
  // false when the test cannot be evaluated faithfully (e.g. support exits
  // the grid); such lattice points are skipped by the estimators.
  virtual bool admissible(const TestFunction &scaled_psi) const { return true; }
};

class GriddedPairing : public FieldPairing {
public:
  explicit GriddedPairing(const GriddedField &f) : f_(f) {}
  double pair_with(const TestFunction &scaled_psi) const override;
  bool admissible(const TestFunction &scaled_psi) const override;

private:
  const GriddedField &f_;
};

// Exact pairing of a spectral realization (xi^n, or theta = K * xi^n when a
// per-node K-hat factor is supplied) against a test function; no grid, no
// aliasing.
class SpectralPairing : public FieldPairing {
public:
  SpectralPairing(const NoiseRealization &r, FieldKind kind,
                  std::vector<complex> mode_factor = {});
  double pair_with(const TestFunction &scaled_psi) const override;

private:
  const NoiseRealization &r_;
  FieldKind kind_;
  std::vector<complex> mode_factor_;
};

// Discrete surrogate of the negative-order seminorm: sup over the family,
// levels l <= max_level and centers on dyadic_lattice(l) within the region of
// 2^{l alpha} |<field, S^{2^{-l}}_x psi>|.
double besov_estimate(const FieldPairing &field, const TestFamily &family, double alpha,
                      const Rect &region, unsigned max_level);

double besov_estimate(const GriddedField &field, const TestFamily &family, double alpha,
                      const Rect &region, unsigned max_level);

struct SlopeOptions {
  size_t max_centers_per_level = 256; // deterministic stride subsampling
  bool zero_mean_only = true;
};

// Least-squares fit of log2(RMS of level-l pairings) against -l; the fitted
// exponent estimates the parabolic regularity of the field.
double regularity_slope(const FieldPairing &field, const TestFamily &family, const Rect &region,
                        unsigned level_lo, unsigned level_hi, const SlopeOptions &opts = {});

double regularity_slope(const GriddedField &field, const TestFamily &family, const Rect &region,
                        unsigned level_lo, unsigned level_hi, const SlopeOptions &opts = {});

// Deterministic level curve: E[ |<xi^n, S^{2^{-level}}_{base} psi>|^2 ] via
// the separable lattice quadrature.
double exact_test_moment(const SheetSpec &spec, const TestFunction &psi, unsigned level,
                         const ScaledPoint &base);

} // namespace fracheat

#endif
