#include "fracheat/heat_kernel.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

#include "fracheat/quadrature.hpp"

namespace fracheat {

double heat_kernel(double t, double x) {
  if (t <= 0) return 0.0;
  return std::exp(-x * x / (4.0 * t)) / std::sqrt(4.0 * pi * t);
}

namespace {

// bump profile on (-1,1)
inline double bump(double u) {
  if (std::abs(u) >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - u * u));
}

inline double bump_prime(double u) {
  if (std::abs(u) >= 1.0) return 0.0;
  double d = 1.0 - u * u;
  return bump(u) * (-2.0 * u / (d * d));
}

struct StepTable {
  std::vector<double> prefix; // W(u) on uniform grid over [-1,1]
  double z = 0;               // \int_{-1}^{1} bump
  static constexpr size_t n = 16385;

  StepTable() {
    prefix.resize(n);
    double h = 2.0 / double(n - 1);
    prefix[0] = 0.0;
    double prev = bump(-1.0);
    for (size_t i = 1; i < n; ++i) {
      double u = -1.0 + double(i) * h;
      double cur = bump(u);
      prefix[i] = prefix[i - 1] + 0.5 * h * (prev + cur);
      prev = cur;
    }
    z = prefix[n - 1];
    for (auto &v : prefix) v /= z;
    z = integrate_adaptive([](double u) { return bump(u); }, -1.0, 1.0, 1e-14);
  }

  double W(double u) const {
    if (u <= -1.0) return 0.0;
    if (u >= 1.0) return 1.0;
    double s = (u + 1.0) / 2.0 * double(n - 1);
    size_t i = std::min(size_t(s), n - 2);
    double f = s - double(i);
    auto at = [&](long k) {
      if (k < 0) return 0.0;
      if (size_t(k) >= n) return 1.0;
      return prefix[size_t(k)];
    };
    // Catmull-Rom through the prefix samples
    double p0 = at(long(i) - 1), p1 = at(long(i)), p2 = at(long(i) + 1), p3 = at(long(i) + 2);
    double f2 = f * f, f3 = f2 * f;
    return 0.5 * ((2 * p1) + (-p0 + p2) * f + (2 * p0 - 5 * p1 + 4 * p2 - p3) * f2 +
                  (-p0 + 3 * p1 - 3 * p2 + p3) * f3);
  }
};

const StepTable &step_table() {
  static StepTable t;
  return t;
}

// Heat kernel partials on t > 0.
inline double G_x(double t, double x) { return -x / (2.0 * t) * heat_kernel(t, x); }
inline double G_xx(double t, double x) {
  return (x * x / (4.0 * t * t) - 1.0 / (2.0 * t)) * heat_kernel(t, x);
}
inline double G_t(double t, double x) { return G_xx(t, x); }

} // namespace

double KernelDecomposition::chi(double r) {
  if (r <= 0.5) return 1.0;
  if (r >= 1.0) return 0.0;
  return step_table().W(3.0 - 4.0 * r);
}

double KernelDecomposition::chi_prime(double r) {
  if (r <= 0.5 || r >= 1.0) return 0.0;
  return -4.0 * bump(3.0 - 4.0 * r) / step_table().z;
}

double KernelDecomposition::chi_second(double r) {
  if (r <= 0.5 || r >= 1.0) return 0.0;
  return 16.0 * bump_prime(3.0 - 4.0 * r) / step_table().z;
}

KernelDecomposition::KernelDecomposition(KernelOptions opts) : opts_(opts) {
  require(opts_.n_max >= 0, "KernelDecomposition: n_max must be >= 0");
}

double KernelDecomposition::phi(double t, double x) const {
  double r = std::sqrt(std::abs(t) + x * x);
  return chi(r) - chi(2.0 * r);
}

double KernelDecomposition::K(double t, double x) const {
  if (t <= 0) return 0.0;
  double r = std::sqrt(t + x * x);
  if (r >= 1.0) return 0.0;
  return chi(r) * heat_kernel(t, x);
}

double KernelDecomposition::K0(double t, double x) const {
  if (t <= 0) return 0.0;
  return phi(t, x) * heat_kernel(t, x);
}

double KernelDecomposition::Kn(int n, double t, double x) const {
  if (t <= 0) return 0.0;
  return phi(std::ldexp(t, 2 * n), std::ldexp(x, n)) * heat_kernel(t, x);
}

double KernelDecomposition::Gsharp(double t, double x) const {
  return heat_kernel(t, x) - K(t, x);
}

double KernelDecomposition::K_truncated(double t, double x) const {
  if (t <= 0) return 0.0;
  double r = std::sqrt(t + x * x);
  double cut = chi(r) - chi(std::ldexp(r, opts_.n_max + 1));
  if (cut == 0.0) return 0.0;
  return cut * heat_kernel(t, x);
}

double KernelDecomposition::Kn_deriv(int n, MultiIndex deriv, double t, double x) const {
  if (t <= 0) return 0.0;
  double u = std::ldexp(t, 2 * n), v = std::ldexp(x, n);
  double rho = std::sqrt(u + v * v);
  if (rho <= 0) return 0.0;
  double p = chi(rho) - chi(2.0 * rho);
  double pr = chi_prime(rho) - 2.0 * chi_prime(2.0 * rho); // d/d rho
  double two_n = std::ldexp(1.0, n);
  double g = heat_kernel(t, x);

  unsigned code = deriv.k1 * 10 + deriv.k2;
  switch (code) {
    case 0:
      return p * g;
    case 10: { // d/dt
      double p_t = two_n * two_n * pr / (2.0 * rho);
      return p_t * g + p * G_t(t, x);
    }
    case 1: { // d/dx
      double p_x = two_n * pr * (v / rho);
      return p_x * g + p * G_x(t, x);
    }
    case 2: { // d^2/dx^2
      double prr = chi_second(rho) - 4.0 * chi_second(2.0 * rho);
      double p_x = two_n * pr * (v / rho);
      double p_xx =
          two_n * two_n * (prr * (v / rho) * (v / rho) + pr * (1.0 / rho - v * v / (rho * rho * rho)));
      return p_xx * g + 2.0 * p_x * G_x(t, x) + p * G_xx(t, x);
    }
    default:
      fail("Kn_deriv: unsupported multi-index (", deriv.k1, ",", deriv.k2, ")");
  }
}

KernelPieces kernel_pieces(const KernelDecomposition &kd, double t, double x) {
  KernelPieces out;
  out.k = kd.K(t, x);
  out.g_sharp = kd.Gsharp(t, x);
  out.kn.resize(size_t(kd.n_max()) + 1);
  for (int n = 0; n <= kd.n_max(); ++n) out.kn[size_t(n)] = kd.Kn(n, t, x);
  return out;
}

// ---------------------------------------------------------------------------
// K0-hat table: separable quadrature in x, FFT in t per eta sample.

namespace {
std::mutex fftw_plan_mutex;
}

void KernelDecomposition::ensure_table() const {
  if (table_ready_) return;

  const double dxi = opts_.table_dxi;
  const double deta = opts_.table_deta;
  n_xi_ = size_t(std::floor(opts_.table_xi_max / dxi)) + 1;
  n_eta_ = size_t(std::floor(opts_.table_eta_max / deta)) + 1;

  // FFT layout: xi_k = k * dxi requires period T_pad = 2 pi / dxi.
  const double t_pad = 2.0 * pi / dxi;
  double xi_top = double(n_xi_ - 1) * dxi;
  double dt_needed = 2.0 * pi / (xi_top * 2.0 * double(opts_.oversample));
  size_t n_fft = 64;
  while (t_pad / double(n_fft) > dt_needed || double(n_fft) < 2.2 * xi_top / dxi) n_fft *= 2;
  const double dt = t_pad / double(n_fft);
  const size_t rows = std::min(n_fft, size_t(std::ceil(1.0 / dt)) + 1);

  // x quadrature (K0 even in x): fixed midpoint rule on [0, 1].
  double eta_top = double(n_eta_ - 1) * deta;
  size_t n_x = size_t(std::ceil(eta_top * 2.0 * double(opts_.oversample) / (2.0 * pi)));
  n_x = std::max<size_t>(n_x, 256);
  const double dx = 1.0 / double(n_x);

  // Tabulate K0 once on the (t, x) quadrature grid.
  std::vector<double> k0(rows * n_x);
  for (size_t i = 0; i < rows; ++i) {
    double t = (double(i) + 0.5) * dt;
    for (size_t j = 0; j < n_x; ++j) {
      double x = (double(j) + 0.5) * dx;
      k0[i * n_x + j] = K0(t, x);
    }
  }

  table_.assign(n_xi_ * n_eta_, complex(0, 0));

  std::vector<double> in(n_fft);
  std::vector<complex> out(n_fft / 2 + 1);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex);
    plan = fftw_plan_dft_r2c_1d(int(n_fft), in.data(), reinterpret_cast<fftw_complex *>(out.data()),
                                FFTW_ESTIMATE);
  }

  std::vector<double> cos_row(n_x);
  for (size_t b = 0; b < n_eta_; ++b) {
    double eta = double(b) * deta;
    for (size_t j = 0; j < n_x; ++j) cos_row[j] = std::cos(((double(j) + 0.5) * dx) * eta);
    std::fill(in.begin(), in.end(), 0.0);
    for (size_t i = 0; i < rows; ++i) {
      double q = 0;
      const double *row = &k0[i * n_x];
      for (size_t j = 0; j < n_x; ++j) q += row[j] * cos_row[j];
      in[i] = 2.0 * q * dx; // even extension in x
    }
    fftw_execute(plan);
    for (size_t k = 0; k < n_xi_; ++k) {
      // midpoint offset phase: t_i = (i + 1/2) dt
      complex ph = std::polar(1.0, -pi * double(k) / double(n_fft));
      table_[k * n_eta_ + b] = dt * ph * out[k];
    }
  }
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex);
    fftw_destroy_plan(plan);
  }

  edge_max_ = 0;
  for (size_t b = 0; b < n_eta_; ++b)
    edge_max_ = std::max(edge_max_, std::abs(table_[(n_xi_ - 1) * n_eta_ + b]));
  for (size_t k = 0; k < n_xi_; ++k)
    edge_max_ = std::max(edge_max_, std::abs(table_[k * n_eta_ + (n_eta_ - 1)]));

  table_ready_ = true;
}

double KernelDecomposition::table_edge_max() const {
  ensure_table();
  return edge_max_;
}

namespace {

// Catmull-Rom weights for fractional offset f in [0,1].
inline void catmull_rom(double f, double w[4]) {
  double f2 = f * f, f3 = f2 * f;
  w[0] = 0.5 * (-f3 + 2 * f2 - f);
  w[1] = 0.5 * (3 * f3 - 5 * f2 + 2);
  w[2] = 0.5 * (-3 * f3 + 4 * f2 + f);
  w[3] = 0.5 * (f3 - f2);
}

} // namespace

complex KernelDecomposition::K0_hat(double xi, double eta) const {
  ensure_table();
  bool conj = xi < 0;
  xi = std::abs(xi);
  eta = std::abs(eta); // K0 even in x
  double sx = xi / opts_.table_dxi;
  double sy = eta / opts_.table_deta;
  if (sx > double(n_xi_ - 1) || sy > double(n_eta_ - 1)) return complex(0, 0);

  long i = long(sx), j = long(sy);
  i = std::min<long>(i, long(n_xi_) - 2);
  j = std::min<long>(j, long(n_eta_) - 2);
  double fx = sx - double(i), fy = sy - double(j);
  double wx[4], wy[4];
  catmull_rom(fx, wx);
  catmull_rom(fy, wy);

  auto sample = [&](long a, long b) -> complex {
    // reflect across the axes: Re even / Im odd in xi, even in eta
    bool cj = false;
    if (a < 0) {
      a = -a;
      cj = true;
    }
    if (b < 0) b = -b;
    if (a >= long(n_xi_) || b >= long(n_eta_)) return complex(0, 0);
    complex v = table_[size_t(a) * n_eta_ + size_t(b)];
    return cj ? std::conj(v) : v;
  };

  complex acc = 0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) acc += wx[a] * wy[b] * sample(i - 1 + a, j - 1 + b);
  return conj ? std::conj(acc) : acc;
}

namespace {

complex dyadic_hat_sum(const KernelDecomposition &kd, double xi, double eta, int k_lo_limit,
                       double xi_max, double eta_max, double dxi, double deta) {
  double axi = std::abs(xi), aeta = std::abs(eta);
  // first k (>= k_lo_limit) with both rescaled arguments inside the table
  int k_lo = k_lo_limit;
  if (axi > 0) k_lo = std::max(k_lo, int(std::ceil(0.5 * std::log2(axi / xi_max))));
  if (aeta > 0) k_lo = std::max(k_lo, int(std::ceil(std::log2(aeta / eta_max))));

  complex acc = 0;
  for (int k = k_lo; k < k_lo + 200; ++k) {
    double u = std::ldexp(axi, -2 * k);
    double v = std::ldexp(aeta, -k);
    double scale = std::ldexp(1.0, -2 * k);
    if (u < 0.5 * dxi && v < 0.5 * deta) {
      // remaining terms collapse onto K0_hat(0,0); geometric tail
      acc += kd.K0_hat(0.0, 0.0) * scale * (4.0 / 3.0);
      break;
    }
    acc += scale * kd.K0_hat(u, v);
  }
  return (xi < 0) ? std::conj(acc) : acc;
}

} // namespace

complex KernelDecomposition::K_hat(double xi, double eta) const {
  ensure_table();
  return dyadic_hat_sum(*this, xi, eta, 0, opts_.table_xi_max, opts_.table_eta_max, opts_.table_dxi,
                        opts_.table_deta);
}

complex KernelDecomposition::G_hat_sum(double xi, double eta) const {
  ensure_table();
  return dyadic_hat_sum(*this, xi, eta, -64, opts_.table_xi_max, opts_.table_eta_max,
                        opts_.table_dxi, opts_.table_deta);
}

std::vector<complex> fourier_K(const KernelDecomposition &kd,
                               std::span<const std::pair<double, double>> freq_points) {
  std::vector<complex> out;
  out.reserve(freq_points.size());
  for (const auto &[xi, eta] : freq_points) out.push_back(kd.K_hat(xi, eta));
  return out;
}

// ---------------------------------------------------------------------------

GriddedField convolve(const KernelDecomposition &kd, const ConvolutionKernel &which,
                      const GriddedField &f) {
  const auto &g = f.grid();
  int level = (which.kind == ConvolutionKernel::Kind::level ||
               which.kind == ConvolutionKernel::Kind::level_deriv)
                  ? which.level
                  : kd.n_max();
  double dt_req = std::ldexp(1.0, -2 * level);
  double dx_req = std::ldexp(1.0, -level);
  require(g.dt() <= dt_req * (1 + 1e-12) && g.dx() <= dx_req * (1 + 1e-12),
          "convolve: grid (dt=", g.dt(), ", dx=", g.dx(), ") does not resolve level ", level,
          "; need dt <= ", dt_req, " and dx <= ", dx_req);

  // kernel support window in index units
  double t_sup, x_sup;
  switch (which.kind) {
    case ConvolutionKernel::Kind::full_k:
      t_sup = 1.0;
      x_sup = 1.0;
      break;
    case ConvolutionKernel::Kind::g_sharp:
      t_sup = g.t_max() - g.t_min();
      x_sup = g.x_max() - g.x_min();
      break;
    default:
      t_sup = std::ldexp(1.0, -2 * which.level);
      x_sup = std::ldexp(1.0, -which.level);
      break;
  }
  long wt = long(std::ceil(t_sup / g.dt() - 1e-12));
  long wx = long(std::ceil(x_sup / g.dx() - 1e-12));

  auto kernel_at = [&](double dt_, double dx_) -> double {
    switch (which.kind) {
      case ConvolutionKernel::Kind::full_k:
        return kd.K_truncated(dt_, dx_);
      case ConvolutionKernel::Kind::g_sharp:
        return kd.Gsharp(dt_, dx_);
      case ConvolutionKernel::Kind::level:
        return kd.Kn(which.level, dt_, dx_);
      case ConvolutionKernel::Kind::level_deriv:
        return kd.Kn_deriv(which.level, which.deriv, dt_, dx_);
    }
    return 0.0;
  };

  // Tabulate the kernel once on offset indices (a >= 1: forward support).
  std::vector<double> ker(size_t(wt) * size_t(2 * wx + 1));
  for (long a = 1; a <= wt; ++a)
    for (long b = -wx; b <= wx; ++b)
      ker[size_t(a - 1) * size_t(2 * wx + 1) + size_t(b + wx)] =
          kernel_at(double(a) * g.dt(), double(b) * g.dx());

  GriddedField out(g);
  const double cell = g.dt() * g.dx();
  for (size_t i = 0; i < g.nt(); ++i) {
    for (size_t j = 0; j < g.nx(); ++j) {
      double acc = 0;
      long a_max = std::min<long>(wt, long(i));
      for (long a = 1; a <= a_max; ++a) {
        const double *krow = &ker[size_t(a - 1) * size_t(2 * wx + 1)];
        size_t ia = i - size_t(a);
        long b_lo = std::max<long>(-wx, long(j) - long(g.nx() - 1));
        long b_hi = std::min<long>(wx, long(j));
        for (long b = b_lo; b <= b_hi; ++b) acc += krow[b + wx] * f.at(ia, size_t(long(j) - b));
      }
      out.at(i, j) = acc * cell;
    }
  }
  return out;
}

} // namespace fracheat
