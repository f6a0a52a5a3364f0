#ifndef FRACHEAT_HEAT_KERNEL_HPP
#define FRACHEAT_HEAT_KERNEL_HPP

#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "fracheat/parabolic.hpp"

namespace fracheat {

// Forward 1-D heat kernel: (4 pi t)^{-1/2} exp(-x^2 / 4t) for t > 0, else 0.
double heat_kernel(double t, double x);

struct KernelOptions {
  int n_max = 12;            // deepest dyadic level listed / resolved by grid ops
  double table_dxi = 0.25;   // K0-hat table spacing, time frequency
  double table_deta = 0.25;  // K0-hat table spacing, space frequency
  double table_xi_max = 1024;
  double table_eta_max = 384;
  int oversample = 4;        // oscillation oversampling in the table quadrature
};

struct KernelPieces {
  double k = 0;               // K = chi(||z||_s) G, support {t > 0} x {||z||_s <= 1}
  double g_sharp = 0;         // G - K, smooth, vanishes on ||z||_s <= 1/2 and t <= 0
  std::vector<double> kn;     // K_n = phi(2^{2n} t, 2^n x) G, n = 0..n_max
};

struct ConvolutionKernel {
  enum class Kind { full_k, g_sharp, level, level_deriv };
  Kind kind = Kind::full_k;
  int level = 0;       // for level / level_deriv
  MultiIndex deriv{};  // for level_deriv; supported |k|_s <= 2
};

// The split G = K + G^sharp of Lemma-2.1 type, realized constructively:
// chi is a smooth radial step (1 on [0,1/2], 0 on [1,inf), bump-profile
// transition), phi(z) = chi(||z||_s) - chi(2||z||_s), K = chi(||z||_s) G.
// Because G(lambda^2 t, lambda x) = lambda^{-1} G(t,x) exactly, the dyadic
// pieces satisfy K_n(t,x) = 2^n K_0(2^{2n} t, 2^n x) identically.
//
// Fourier convention, used consistently by every consumer (including the
// renormalization constant): F[f](xi,eta) = \int f(t,x) e^{-i(t xi + x eta)}.
class KernelDecomposition {
public:
  explicit KernelDecomposition(KernelOptions opts = {});

  const KernelOptions &options() const { return opts_; }
  int n_max() const { return opts_.n_max; }

  static double chi(double r);
  static double chi_prime(double r);
  static double chi_second(double r);
  double phi(double t, double x) const; // annulus cutoff, support 1/4 <= ||z||_s <= 1

  double K(double t, double x) const;
  double K0(double t, double x) const;
  double Kn(int n, double t, double x) const;
  double Gsharp(double t, double x) const;

  // D^deriv K_n pointwise, deriv in {(0,0),(1,0),(0,1),(0,2)}.
  double Kn_deriv(int n, MultiIndex deriv, double t, double x) const;

  // K with levels deeper than n_max removed; regular at the origin. This is
  // what grid convolution samples (omitted mass <= \int K_0 * 4^{-n_max}/3).
  double K_truncated(double t, double x) const;

  // Numerical transform of K via the self-similar sum over the tabulated
  // K0-hat: K-hat = sum_{k>=0} 2^{-2k} K0-hat(2^{-2k} xi, 2^{-k} eta).
  complex K0_hat(double xi, double eta) const;
  complex K_hat(double xi, double eta) const;

  // Same sum over all k in Z; converges to G-hat(xi,eta) = 1/(eta^2 + i xi).
  complex G_hat_sum(double xi, double eta) const;

  // Largest |K0_hat| sample on the far table edges (decay diagnostic).
  double table_edge_max() const;

private:
  void ensure_table() const;

  KernelOptions opts_;
  mutable std::vector<complex> table_; // [i_xi * n_eta + i_eta]
  mutable size_t n_xi_ = 0, n_eta_ = 0;
  mutable double edge_max_ = 0;
  mutable bool table_ready_ = false;
};

KernelPieces kernel_pieces(const KernelDecomposition &kd, double t, double x);

// Discrete space-time convolution on f's grid. Requires the grid to resolve
// the deepest participating level: dt <= 2^{-2L}, dx <= 2^{-L} with
// L = n_max for full_k / g_sharp and L = level otherwise.
GriddedField convolve(const KernelDecomposition &kd, const ConvolutionKernel &which,
                      const GriddedField &f);

std::vector<complex> fourier_K(const KernelDecomposition &kd,
                               std::span<const std::pair<double, double>> freq_points);

} // namespace fracheat

#endif
