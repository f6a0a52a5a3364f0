#include <doctest.h>

#include <cmath>

#include "fracheat/quadrature.hpp"
#include "fracheat/spectral_field.hpp"

using namespace fracheat;

namespace {

// Independent oracle for I(H) = \int_R |e^{iu}-1|^2 |u|^{-2H-1} du:
// closed form -4 Gamma(-2H) cos(pi H) for H != 1/2, and 2 pi at H = 1/2.
double variance_integral_oracle(double H) {
  if (std::abs(H - 0.5) < 1e-12) return 2.0 * pi;
  return -4.0 * std::tgamma(-2.0 * H) * std::cos(pi * H);
}

} // namespace

TEST_CASE("adaptive integrator sanity") {
  CHECK(integrate_adaptive([](double x) { return x * x; }, 0, 1, 1e-12) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-10));
  CHECK(integrate_adaptive([](double x) { return std::sin(x); }, 0, 10 * pi, 1e-12) ==
        doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("axis variance integral against the closed form") {
  for (double H : {0.2, 0.35, 0.5, 0.65, 0.8, 0.9}) {
    double got = axis_variance_integral(H);
    double want = variance_integral_oracle(H);
    CHECK(got == doctest::Approx(want).epsilon(1e-8));
  }
}

TEST_CASE("normalization constant") {
  SUBCASE("H = 1/2 gives (2 pi)^{-1/2}") {
    // oracle quadrature of \int |e^{iu}-1|^2 / u^2 du computed up front: 2 pi
    CHECK(normalization_constant(0.5) == doctest::Approx(0.3989422804014327).epsilon(1e-8));
  }
  SUBCASE("defining identity c_H^2 I_H = 1") {
    for (double H : {0.2, 0.5, 0.8}) {
      double c = normalization_constant(H);
      CHECK(c * c * variance_integral_oracle(H) == doctest::Approx(1.0).epsilon(1e-8));
    }
  }
  SUBCASE("distinct positive values across H") {
    double c_low = normalization_constant(0.2);
    double c_high = normalization_constant(0.8);
    CHECK(c_low > 0);
    CHECK(c_high > 0);
    CHECK(c_low != doctest::Approx(c_high).epsilon(1e-3));
  }
}

TEST_CASE("axis meshes") {
  MeshDensity d = MeshDensity::mc();
  AxisMesh mesh = make_axis_mesh(6, d);

  SUBCASE("positive nodes only, increasing, zero excluded") {
    CHECK(mesh.node.front() > 0);
    for (size_t i = 1; i < mesh.size(); ++i) CHECK(mesh.node[i] > mesh.node[i - 1]);
    CHECK(mesh.node.back() < mesh.cutoff);
  }
  SUBCASE("midpoint weights tile (2^{octave_lo}, cutoff]") {
    double sum = 0;
    for (double w : mesh.weight) {
      CHECK(w > 0);
      sum += w;
    }
    CHECK(sum == doctest::Approx(mesh.cutoff - std::ldexp(1.0, d.octave_lo)).epsilon(1e-13));
  }
  SUBCASE("coarser cutoffs are prefixes (coupling across truncation levels)") {
    AxisMesh coarse = make_axis_mesh(3, d);
    size_t prefix = mesh_prefix_size(mesh, 3, d);
    REQUIRE(prefix == coarse.size());
    for (size_t i = 0; i < prefix; ++i) {
      CHECK(mesh.node[i] == coarse.node[i]);
      CHECK(mesh.key[i] == coarse.key[i]);
    }
  }
  SUBCASE("power-law integration accuracy on the graded mesh") {
    // \int_{|u| <= 64} |u|^{0.4} du against the mc mesh (midpoint, octaves)
    AxisMesh fine = make_axis_mesh(6, MeshDensity::fine());
    double exact = 2.0 * std::pow(64.0, 1.4) / 1.4;
    double got = axis_quad_even(fine, [](double u) { return 2.0 * std::pow(u, 0.4); });
    CHECK(got == doctest::Approx(exact).epsilon(2e-4));
  }
}
