#include <doctest.h>

#include <cmath>

#include "fracheat/heat_kernel.hpp"
#include "fracheat/quadrature.hpp"
#include "fracheat/rng.hpp"

using namespace fracheat;

namespace {

const KernelDecomposition &kd() {
  static KernelDecomposition k{KernelOptions{}};
  return k;
}

// deterministic points on the parabolic annulus 2^{-deep} <= ||z||_s < 1
std::vector<ScaledPoint> annulus_points(int deep, size_t count) {
  std::vector<ScaledPoint> pts;
  for (size_t i = 0; i < count; ++i) {
    double u1 = uniform01(stream_key(21, uint32_t(i), 0, 0, 0));
    double u2 = uniform01(stream_key(21, uint32_t(i), 1, 0, 0));
    double u3 = uniform01(stream_key(21, uint32_t(i), 2, 0, 0));
    double r = std::ldexp(1.0, -int(std::floor(u1 * deep))) * (0.5 + 0.5 * u2);
    double t = std::max(1e-12, r * r * u3);
    double x = std::sqrt(std::max(0.0, r * r - t)) * (u2 < 0.5 ? 1.0 : -1.0);
    pts.push_back({t, x});
  }
  return pts;
}

} // namespace

TEST_CASE("heat kernel basics") {
  SUBCASE("forward support") {
    CHECK(heat_kernel(0.0, 0.5) == 0.0);
    CHECK(heat_kernel(-1.0, 0.0) == 0.0);
    CHECK(heat_kernel(0.25, 0.0) > 0.0);
  }
  SUBCASE("unit mass for each t > 0") {
    for (double t : {0.05, 0.3, 1.0}) {
      double mass = 2.0 * integrate_adaptive([&](double x) { return heat_kernel(t, x); }, 0.0,
                                             30.0 * std::sqrt(t), 1e-9);
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
  SUBCASE("|d_x G| mass scales exactly like t^{-1/2}") {
    // closed form: integral = (pi t)^{-1/2}; check constancy of the ratio
    double prev = 0;
    for (double t : {0.1, 0.2, 0.4}) {
      double integral = 2.0 * integrate_adaptive(
                                  [&](double x) { return std::abs(x / (2.0 * t)) * heat_kernel(t, x); },
                                  0.0, 30.0 * std::sqrt(t), 1e-10);
      double c = integral * std::sqrt(t);
      if (prev != 0) CHECK(c == doctest::Approx(prev).epsilon(1e-4));
      prev = c;
    }
    CHECK(prev == doctest::Approx(1.0 / std::sqrt(pi)).epsilon(1e-6));
  }
  SUBCASE("exact parabolic self-similarity") {
    for (const auto &z : annulus_points(6, 64)) {
      double lam = 0.5;
      CHECK(heat_kernel(lam * lam * z.t, lam * z.x) ==
            doctest::Approx(heat_kernel(z.t, z.x) / lam).epsilon(1e-14));
    }
  }
}

TEST_CASE("cutoff function") {
  CHECK(KernelDecomposition::chi(0.3) == 1.0);
  CHECK(KernelDecomposition::chi(0.5) == 1.0);
  CHECK(KernelDecomposition::chi(1.0) == 0.0);
  CHECK(KernelDecomposition::chi(1.7) == 0.0);
  double prev = 1.0;
  for (double r = 0.5; r <= 1.0; r += 0.01) {
    double v = KernelDecomposition::chi(r);
    CHECK(v <= prev + 1e-12);
    CHECK(v >= 0.0);
    prev = v;
  }
  // derivatives consistent with central differences
  for (double r : {0.6, 0.75, 0.9}) {
    double h = 1e-5;
    double cd = (KernelDecomposition::chi(r + h) - KernelDecomposition::chi(r - h)) / (2 * h);
    CHECK(KernelDecomposition::chi_prime(r) == doctest::Approx(cd).epsilon(1e-6));
    double cd2 = (KernelDecomposition::chi_prime(r + h) - KernelDecomposition::chi_prime(r - h)) /
                 (2 * h);
    CHECK(KernelDecomposition::chi_second(r) == doctest::Approx(cd2).epsilon(1e-5));
  }
}

TEST_CASE("kernel decomposition identities") {
  SUBCASE("supports") {
    CHECK(kd().K(0.5, 1.0) == 0.0);       // ||z|| > 1
    CHECK(kd().K(-0.1, 0.1) == 0.0);      // t <= 0
    CHECK(kd().Gsharp(0.5, 1.0) == doctest::Approx(heat_kernel(0.5, 1.0)));
    CHECK(kd().Gsharp(0.1, 0.1) == 0.0);  // ||z|| < 1/2
    CHECK(kd().Gsharp(-0.5, 0.3) == 0.0); // t <= 0
    CHECK(kd().phi(0.05, 0.0) == 0.0);    // ||z|| < 1/4
    CHECK(kd().phi(0.36, 0.0) > 0.0);     // inside the annulus
    CHECK(kd().phi(1.2, 0.3) == 0.0);     // ||z|| > 1
  }
  SUBCASE("partition of unity on 0 < ||z|| <= 1/2") {
    for (const auto &z : annulus_points(8, 128)) {
      double r = scaled_norm(z);
      if (r > 0.5) continue;
      double sum = 0;
      for (int n = 0; n <= 40; ++n) sum += kd().phi(std::ldexp(z.t, 2 * n), std::ldexp(z.x, n));
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("finite telescoping: sum of K_n equals K on the resolved annulus") {
    for (const auto &z : annulus_points(8, 128)) {
      auto pieces = kernel_pieces(kd(), z.t, z.x);
      double sum = 0;
      for (double v : pieces.kn) sum += v;
      CHECK(sum == doctest::Approx(pieces.k).epsilon(1e-12));
      CHECK(pieces.k + pieces.g_sharp == doctest::Approx(heat_kernel(z.t, z.x)).epsilon(1e-12));
    }
  }
  SUBCASE("exact dyadic self-similarity") {
    for (const auto &z : annulus_points(6, 64)) {
      for (int n : {1, 2, 4, 7}) {
        double lhs = kd().Kn(n, z.t, z.x);
        double rhs = std::ldexp(kd().K0(std::ldexp(z.t, 2 * n), std::ldexp(z.x, n)), n);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
      }
    }
  }
  SUBCASE("derivatives against central differences") {
    for (const auto &z : annulus_points(3, 24)) {
      for (int n : {0, 2}) {
        double h = 2e-7;
        double dt = (kd().Kn(n, z.t + h, z.x) - kd().Kn(n, z.t - h, z.x)) / (2 * h);
        double dx = (kd().Kn(n, z.t, z.x + h) - kd().Kn(n, z.t, z.x - h)) / (2 * h);
        double dxx = (kd().Kn_deriv(n, {0, 1}, z.t, z.x + h) -
                      kd().Kn_deriv(n, {0, 1}, z.t, z.x - h)) /
                     (2 * h);
        double scale = std::abs(kd().Kn(n, z.t, z.x)) + 1.0;
        CHECK(kd().Kn_deriv(n, {1, 0}, z.t, z.x) == doctest::Approx(dt).epsilon(1e-3).scale(scale));
        CHECK(kd().Kn_deriv(n, {0, 1}, z.t, z.x) == doctest::Approx(dx).epsilon(1e-3).scale(scale));
        CHECK(kd().Kn_deriv(n, {0, 2}, z.t, z.x) ==
              doctest::Approx(dxx).epsilon(1e-3).scale(scale));
      }
    }
  }
}

TEST_CASE("fourier transform of K") {
  SUBCASE("reality: K-hat(-xi,-eta) is the conjugate") {
    for (auto [xi, eta] : {std::pair<double, double>{1.5, 2.0}, {7.0, 0.5}, {30.0, 4.0}}) {
      complex a = kd().K_hat(xi, eta);
      complex b = kd().K_hat(-xi, -eta);
      CHECK(std::abs(b - std::conj(a)) <= 1e-10 * std::abs(a));
    }
  }
  SUBCASE("K-hat(0,0) equals the kernel mass (direct quadrature oracle)") {
    double k0_mass = integrate_adaptive(
        [&](double t) {
          return 2.0 * integrate_adaptive([&](double x) { return kd().K0(t, x); }, 0.0, 1.0, 1e-10);
        },
        0.0, 1.0, 1e-9);
    double mass = 4.0 / 3.0 * k0_mass; // exact dyadic scaling of the piece masses
    CHECK(kd().K_hat(0.0, 0.0).real() == doctest::Approx(mass).epsilon(1e-6));
    CHECK(kd().K_hat(0.0, 0.0).imag() == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("table edge decay") { CHECK(kd().table_edge_max() < 1e-5); }
  SUBCASE("decay along eta = 0 beats every a < 1") {
    std::vector<double> lx, ly;
    for (int k = 2; k <= 10; ++k) {
      lx.push_back(double(k));
      ly.push_back(std::log2(std::abs(kd().K_hat(std::ldexp(1.0, k), 0.0))));
    }
    double fitted = -fit_slope(lx, ly);
    for (double a : {0.5, 0.8, 0.95}) CHECK(fitted >= a);
  }
  SUBCASE("two-sided dyadic sum reproduces G-hat = 1/(eta^2 + i xi)") {
    for (auto [xi, eta] :
         {std::pair<double, double>{0.7, 1.3}, {2.5, 0.6}, {9.0, 2.0}, {0.3, 3.0}, {200.0, 10.0}}) {
      complex ident = 1.0 / complex(eta * eta, xi);
      complex got = kd().G_hat_sum(xi, eta);
      CHECK(std::abs(got - ident) <= 2e-3 * std::abs(ident));
    }
  }
  SUBCASE("vector interface matches pointwise calls") {
    std::vector<std::pair<double, double>> freqs = {{0.0, 0.0}, {3.0, 1.0}, {-3.0, -1.0}};
    auto vals = fourier_K(kd(), freqs);
    REQUIRE(vals.size() == 3);
    CHECK(vals[1] == kd().K_hat(3.0, 1.0));
    CHECK(std::abs(vals[2] - std::conj(vals[1])) < 1e-14);
  }
}

TEST_CASE("grid convolution") {
  KernelDecomposition small(KernelOptions{.n_max = 3});

  SUBCASE("resolution precondition enforced with the requirement named") {
    SpaceTimeGrid coarse(0, 1, 9, -1, 1, 9);
    GriddedField f(coarse);
    CHECK_THROWS_WITH_AS(convolve(small, {}, f), doctest::Contains("does not resolve"), Error);
  }
  SUBCASE("zero in, zero out") {
    SpaceTimeGrid g(0, 0.5, 33, -1, 1, 17);
    GriddedField f(g);
    auto out = convolve(small, {ConvolutionKernel::Kind::full_k, 0, {}}, f);
    for (double v : out.values()) CHECK(v == 0.0);
  }
  SUBCASE("constant input reproduces the kernel mass in the interior") {
    // oracle: \int K (truncated at n_max) by direct quadrature
    double k0_mass = integrate_adaptive(
        [&](double t) {
          return 2.0 *
                 integrate_adaptive([&](double x) { return small.K0(t, x); }, 0.0, 1.0, 1e-10);
        },
        0.0, 1.0, 1e-9);
    double mass_trunc = k0_mass * (4.0 / 3.0) * (1.0 - std::pow(4.0, -(small.n_max() + 1.0)));
    SpaceTimeGrid g(0, 2.0, 257, -3, 3, 49);
    GriddedField ones(g);
    for (auto &v : ones.values()) v = 1.0;
    auto out = convolve(small, {ConvolutionKernel::Kind::full_k, 0, {}}, ones);
    // interior: t > 1 (one kernel width from the start), |x| < 2
    double dev = 0;
    for (size_t i = 0; i < g.nt(); ++i) {
      if (g.t_at(i) <= 1.0) continue;
      for (size_t j = 0; j < g.nx(); ++j) {
        if (std::abs(g.x_at(j)) >= 2.0) continue;
        dev = std::max(dev, std::abs(out.at(i, j) - mass_trunc));
      }
    }
    CHECK(dev < 0.02 * mass_trunc);
  }
  SUBCASE("rescaled pairing identity for D^l K_n on smooth input") {
    // [D^l K_n * eta](z) = 2^{(|l|_s - 2) n} <eta, S^{2^-n}_{s,z} (D^l K_0)>
    auto eta_fn = [](double t, double x) {
      return std::exp(-2.0 * t) * std::exp(-x * x) * (1.0 + 0.5 * std::sin(3.0 * x + t));
    };
    SpaceTimeGrid g(0, 0.75, 193, -1.5, 1.5, 97);
    GriddedField f(g);
    for (size_t i = 0; i < g.nt(); ++i)
      for (size_t j = 0; j < g.nx(); ++j) f.at(i, j) = eta_fn(g.t_at(i), g.x_at(j));

    const int level = 1;
    for (MultiIndex l : {MultiIndex{0, 1}, MultiIndex{1, 0}}) {
      auto conv = convolve(small, {ConvolutionKernel::Kind::level_deriv, level, l}, f);
      ScaledPoint z{0.5, 0.25};
      size_t zi = g.t_index(z.t), zj = g.x_index(z.x);

      // right side: quadrature of the rescaled pairing on a fine local grid;
      // the kernel argument is z - y, so D^l K0 appears at the negated
      // rescaled offset with the parity sign of the derivative order
      double delta = std::ldexp(1.0, -level);
      double acc = 0;
      size_t n_steps = 400;
      double t_lo = z.t - delta * delta, t_hi = z.t;
      double x_lo = z.x - delta, x_hi = z.x + delta;
      double ht = (t_hi - t_lo) / double(n_steps), hx = (x_hi - x_lo) / double(n_steps);
      for (size_t a = 0; a < n_steps; ++a)
        for (size_t b = 0; b < n_steps; ++b) {
          double ty = t_lo + (double(a) + 0.5) * ht;
          double xy = x_lo + (double(b) + 0.5) * hx;
          double arg_t = (z.t - ty) / (delta * delta);
          double arg_x = (z.x - xy) / delta;
          acc += eta_fn(ty, xy) * small.Kn_deriv(0, l, arg_t, arg_x);
        }
      acc *= ht * hx / (delta * delta * delta);
      double rhs = std::ldexp(acc, (int(scaled_degree(l)) - 2) * level);
      CHECK(conv.at(zi, zj) == doctest::Approx(rhs).epsilon(0.02));
    }
  }
}
