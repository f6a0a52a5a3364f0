#ifndef FRACHEAT_SOLVER_HPP
#define FRACHEAT_SOLVER_HPP

#include <functional>
#include <string>

#include "fracheat/parabolic.hpp"
#include "fracheat/rough_model.hpp"
#include "fracheat/spectral_field.hpp"

namespace fracheat {

// Nonlinearity F(x, y) with compact spatial support: F(x, .) = 0 for
// |x| > support_halfwidth. d1F/d2F are the partials in x and y; d2F is
// spot-checked against a central difference of F at construction.
struct VectorFieldSpec {
  std::function<double(double, double)> F;
  std::function<double(double, double)> d1F;
  std::function<double(double, double)> d2F;
  double support_halfwidth = 1.0;
};

VectorFieldSpec make_vector_field(std::function<double(double, double)> F,
                                  std::function<double(double, double)> d1F,
                                  std::function<double(double, double)> d2F,
                                  double support_halfwidth);

// F(x, y) = bump(x / a) sin(y), a smooth compactly supported standard case.
VectorFieldSpec bump_sin_field(double a);

// Periodic domain [-L, L), exponential-Euler mild stepping.
struct SolverConfig {
  double L = 2.0;
  size_t nx = 256;
  double T = 0.25;
  size_t nt = 256;
  std::function<double(double)> psi0 = [](double) { return 0.0; };
  size_t store_every = 1; // path keeps every k-th time slice

  double dt() const { return T / double(nt); }
  double dx() const { return 2.0 * L / double(nx); }
};

void validate_solver_config(const SolverConfig &cfg, double support_halfwidth);

struct SolutionPath {
  GriddedField path; // stored rows; first row is psi0 on the grid
  std::string equation;
  uint64_t seed = 0;
  unsigned level = 0;      // noise truncation level (fractional equations)
  double renorm_value = 0; // C^n used (renormalized variant)
  std::vector<std::string> warnings;
};

// Exact discrete heat semigroup on the periodic grid: mode k is multiplied
// by exp(-dt (pi k / L)^2).
std::vector<double> heat_step(std::span<const double> state, double dt, double L);

SolutionPath solve_young(const NoiseRealization &r, const VectorFieldSpec &F,
                         const SolverConfig &cfg);

SolutionPath solve_renormalized(const NoiseRealization &r, const RenormConstant &c,
                                const VectorFieldSpec &F, const SolverConfig &cfg);

// Euler-Maruyama reference for the Ito equation with white-in-time,
// |x-y|^{2H2-2}-correlated-in-space noise, sampled spectrally with density
// c_{H2}^2 |eta|^{1-2H2} up to cutoff 2^{eta_octave} (grid Nyquist when 0).
SolutionPath solve_ito_reference(double H2, const VectorFieldSpec &F, const SolverConfig &cfg,
                                 uint64_t seed, int eta_octave = 0);

enum class EquationVariant { young, renormalized };

struct ConvergenceRow {
  unsigned n = 0;        // the coarser of the compared pair (n, n+1)
  double sup_diff = 0;   // sup |Y^{n+1} - Y^n| over stored nodes
  double holder_diff = 0;
};

struct ConvergenceStudy {
  std::vector<unsigned> levels;
  std::vector<ConvergenceRow> rows;
  std::vector<double> drift;    // per level: sup |Y_{C=0} - Y_C| (renormalized)
  std::vector<double> c_values; // per level: C^n (renormalized)
};

// Coupled-seed truncation study: one master seed, levels realized as nested
// restrictions; all solves share cfg's grid.
ConvergenceStudy convergence_study(uint64_t master_seed, unsigned n_lo, unsigned n_hi,
                                   EquationVariant variant, double H1, double H2,
                                   const VectorFieldSpec &F, const SolverConfig &cfg, double gamma,
                                   const Rect &holder_region,
                                   const KernelDecomposition *kd = nullptr,
                                   const MeshDensity &density = MeshDensity::solver());

} // namespace fracheat

#endif
