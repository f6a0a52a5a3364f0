#ifndef FRACHEAT_ROUGH_MODEL_HPP
#define FRACHEAT_ROUGH_MODEL_HPP

#include <optional>

#include "fracheat/besov.hpp"
#include "fracheat/heat_kernel.hpp"
#include "fracheat/spectral_field.hpp"

namespace fracheat {

// C^n_{H1,H2} = c_{H1,H2}^2 \int_{D_n} K-hat(xi,eta) |xi|^{1-2H1}
// |eta|^{1-2H2} d(xi,eta), real part, evaluated on a graded tensor mesh with
// the axis power singularities absorbed by the octave grading.
struct RenormConstant {
  unsigned n = 0;
  double H1 = 0, H2 = 0;
  double value = 0;
  double quad_rel_error = 0;  // refinement-based estimate
  double imag_residual = 0;   // |Im| / |Re| of the half-domain accumulation
  size_t mesh_nodes = 0;
};

struct RenormOptions {
  MeshDensity mesh{-20, -4, 6, 24};
  double error_threshold = 1e-4;
};

RenormConstant renorm_constant(unsigned n, double H1, double H2, const KernelDecomposition &kd,
                               const RenormOptions &opts = {});

// (C^n 2^{-2n(2-2H1-H2)},  c^2 \int_{[-1,1]^2} Re G-hat |xi|^{1-2H1}
// |eta|^{1-2H2}), the two routes to the same limit; requires
// 5/3 < 2 H1 + H2 < 2 strictly.
std::pair<double, double> renorm_limit_check(double H1, double H2, unsigned n,
                                             const KernelDecomposition &kd,
                                             const RenormOptions &opts = {});

// K-hat evaluated on a realization lattice, laid out like the coefficient
// array; reusable across seeds of the same spec.
std::vector<complex> khat_for_spec(const KernelDecomposition &kd, const SheetSpec &spec);

enum class AreaVariant { canonical, renormalized };

struct LevyAreaSlice {
  ScaledPoint base;
  GriddedField values;
  AreaVariant variant = AreaVariant::canonical;
  double renorm_value = 0; // 0 for the canonical variant
};

// A_base(z) = [theta(z) - theta(base)] xi^n(z)  (minus C^n if renormalized),
// theta = K * xi^n, evaluated spectrally on the window grid. The window must
// resolve the noise: dt <= 2^{-2n-2}, dx <= 2^{-n-2}.
LevyAreaSlice levy_area(const NoiseRealization &r, const KernelDecomposition &kd,
                        const ScaledPoint &base, const SpaceTimeGrid &window, AreaVariant variant,
                        const RenormConstant *c = nullptr);

// max over probes z of |(A_x(z) - A_y(z)) - [theta(y) - theta(x)] xi(z)|,
// relative to the magnitude scale of the participating terms. Left side goes
// through the slice formula at both bases, right side through fresh
// point evaluations.
double chen_defect(const NoiseRealization &r, const KernelDecomposition &kd, const ScaledPoint &x,
                   const ScaledPoint &y, std::span<const ScaledPoint> probes);

struct AreaMomentRow {
  unsigned level = 0;
  double moment = 0;           // MC mean of |<hat-xi^{2,n} - hat-xi^{2,m}, psi_l>|^2
  double std_err = 0;
  double canonical_moment = 0; // same without the renormalization constants
  double marginal_n = 0;       // MC mean of |<hat-xi^{2,n}, psi_l>|^2 alone
};

struct AreaMomentScan {
  unsigned n = 0, m = 0;
  size_t samples = 0;
  double c_n = 0, c_m = 0;
  std::vector<AreaMomentRow> rows;
  double level_slope = 0; // log2(moment) per level
};

// Coupled-truncation Monte Carlo of the second-level difference moments of
// Eq-(3.19) type: one master draw at level m per sample, the level-n path is
// its restriction to D_n.
AreaMomentScan area_moment_scan(double H1, double H2, unsigned n, unsigned m,
                                const TestFunction &psi, unsigned level_lo, unsigned level_hi,
                                const ScaledPoint &base, size_t samples, uint64_t master_seed,
                                const KernelDecomposition &kd,
                                const MeshDensity &density = MeshDensity::area());

} // namespace fracheat

#endif
