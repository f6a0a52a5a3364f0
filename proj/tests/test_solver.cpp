#include <doctest.h>

#include <cmath>

#include "fracheat/rng.hpp"
#include "fracheat/solver.hpp"
#include "test_shared.hpp"

using namespace fracheat;
using fracheat_test::shared_kd;

namespace {

VectorFieldSpec zero_field(double a) {
  auto z = [](double, double) { return 0.0; };
  return make_vector_field(z, z, z, a);
}

SolverConfig basic_cfg() {
  SolverConfig cfg;
  cfg.L = 2.0;
  cfg.nx = 256;
  cfg.T = 1.0 / 16.0;
  cfg.nt = 64;
  return cfg;
}

} // namespace

TEST_CASE("vector field construction") {
  SUBCASE("bump * sin passes its own consistency checks") {
    VectorFieldSpec F = bump_sin_field(0.5);
    CHECK(F.F(0.0, pi / 2) == doctest::Approx(1.0));
    CHECK(F.F(0.7, 1.0) == 0.0);
  }
  SUBCASE("inconsistent d2F rejected") {
    auto F = [](double x, double y) { return (std::abs(x) < 1 ? 1.0 : 0.0) * y; };
    auto d1 = [](double, double) { return 0.0; };
    auto bad_d2 = [](double, double) { return 3.0; }; // should be 1
    CHECK_THROWS_WITH_AS(make_vector_field(F, d1, bad_d2, 1.0), doctest::Contains("d2F"), Error);
  }
  SUBCASE("support violation rejected") {
    auto F = [](double, double y) { return std::sin(y); }; // no spatial cutoff
    auto d1 = [](double, double) { return 0.0; };
    auto d2 = [](double, double y) { return std::cos(y); };
    CHECK_THROWS_WITH_AS(make_vector_field(F, d1, d2, 1.0), doctest::Contains("vanish"), Error);
  }
}

TEST_CASE("heat step") {
  const double L = 2.0;
  const size_t nx = 128;

  SUBCASE("constant vector unchanged") {
    std::vector<double> y(nx, 3.25);
    auto out = heat_step(y, 0.01, L);
    for (double v : out) CHECK(v == doctest::Approx(3.25).epsilon(1e-14));
  }
  SUBCASE("single cosine mode is an eigenvector") {
    for (int k : {1, 5, 17}) {
      std::vector<double> y(nx);
      for (size_t j = 0; j < nx; ++j) {
        double x = -L + 2.0 * L * double(j) / double(nx);
        y[j] = std::cos(pi * double(k) * x / L);
      }
      double dt = 0.01;
      auto out = heat_step(y, dt, L);
      double lam = std::exp(-dt * std::pow(pi * double(k) / L, 2));
      for (size_t j = 0; j < nx; j += 13) CHECK(out[j] == doctest::Approx(lam * y[j]).epsilon(1e-12));
    }
  }
  SUBCASE("semigroup property") {
    std::vector<double> y(nx);
    for (size_t j = 0; j < nx; ++j) y[j] = standard_gaussian(8, uint32_t(j), 0, 0, 0);
    auto once = heat_step(y, 0.02, L);
    auto twice = heat_step(heat_step(y, 0.01, L), 0.01, L);
    for (size_t j = 0; j < nx; ++j) CHECK(once[j] == doctest::Approx(twice[j]).epsilon(1e-12));
  }
}

TEST_CASE("young solver") {
  SheetSpec spec = make_sheet_spec(0.9, 0.9, 2, MeshDensity::solver());
  NoiseRealization r = sample_noise(spec, 21);

  SUBCASE("F = 0 reduces to the heat flow of psi0 (Gaussian closed form)") {
    SolverConfig cfg = basic_cfg();
    cfg.T = 1.0 / 32.0;
    cfg.nx = 512;
    cfg.nt = 64;
    double sigma = 0.2;
    cfg.psi0 = [sigma](double x) { return std::exp(-x * x / (2 * sigma * sigma)); };
    SolutionPath sol = solve_young(r, zero_field(0.5), cfg);
    const auto &g = sol.path.grid();
    double var_T = sigma * sigma + 2.0 * cfg.T;
    for (size_t j = 0; j < g.nx(); j += 7) {
      double x = g.x_at(j);
      if (std::abs(x) > 0.5) continue;
      double expect = sigma / std::sqrt(var_T) * std::exp(-x * x / (2 * var_T));
      CHECK(sol.path.at(g.nt() - 1, j) == doctest::Approx(expect).epsilon(1e-6));
    }
  }
  SUBCASE("zero initial condition and F(x,0) = 0 stays identically zero") {
    SolverConfig cfg = basic_cfg();
    cfg.psi0 = [](double) { return 0.0; };
    SolutionPath sol = solve_young(r, bump_sin_field(0.5), cfg); // sin(0) = 0
    for (double v : sol.path.values()) CHECK(v == 0.0);
  }
  SUBCASE("refinement order at least one in dt") {
    VectorFieldSpec F = bump_sin_field(0.5);
    auto run = [&](size_t nt, size_t nx) {
      SolverConfig cfg = basic_cfg();
      cfg.nt = nt;
      cfg.nx = nx;
      cfg.store_every = nt; // final slice only
      cfg.psi0 = [](double x) { return std::exp(-2.0 * x * x); };
      return solve_young(r, F, cfg);
    };
    auto a = run(32, 128), b = run(64, 256), c = run(128, 512);
    // compare final rows on the shared coarse nodes
    auto diff = [](const SolutionPath &u, const SolutionPath &v, size_t stride) {
      double d = 0;
      size_t row_u = u.path.grid().nt() - 1, row_v = v.path.grid().nt() - 1;
      for (size_t j = 0; j < u.path.grid().nx(); ++j)
        d = std::max(d, std::abs(u.path.at(row_u, j) - v.path.at(row_v, j * stride)));
      return d;
    };
    double d1 = diff(a, b, 2), d2 = diff(b, c, 2);
    CHECK(d2 < d1);
    CHECK(std::log2(d1 / d2) > 0.8);
  }
  SUBCASE("out-of-regime warning") {
    SheetSpec rough = make_sheet_spec(0.5, 0.8, 2, MeshDensity::solver());
    NoiseRealization rr = sample_noise(rough, 3);
    SolverConfig cfg = basic_cfg();
    SolutionPath sol = solve_young(rr, bump_sin_field(0.5), cfg);
    bool has_regime_warning = false;
    for (const auto &w : sol.warnings) has_regime_warning |= w.find("regime") != std::string::npos;
    CHECK(has_regime_warning);
  }
}

TEST_CASE("renormalized solver") {
  SheetSpec spec = make_sheet_spec(0.5, 0.8, 2, MeshDensity::solver());
  NoiseRealization r = sample_noise(spec, 31);
  SolverConfig cfg = basic_cfg();
  cfg.psi0 = [](double x) { return 0.5 * std::exp(-4.0 * x * x); };

  SUBCASE("C = 0 equals the young solve bit for bit") {
    RenormConstant zero;
    zero.value = 0.0;
    SolutionPath a = solve_renormalized(r, zero, bump_sin_field(0.5), cfg);
    SolutionPath b = solve_young(r, bump_sin_field(0.5), cfg);
    CHECK(a.path.values() == b.path.values());
  }
  SUBCASE("solution-independent F makes the correction vanish") {
    // F(x, y) = bump(x): d2F = 0, so the renormalized equation is the young one
    auto bump = [](double x) {
      double u = x / 0.5;
      return std::abs(u) < 1 ? std::exp(1.0 - 1.0 / (1.0 - u * u)) : 0.0;
    };
    VectorFieldSpec F = make_vector_field([&](double x, double) { return bump(x); },
                                          [](double, double) { return 0.0; },
                                          [](double, double) { return 0.0; }, 0.5);
    // d1F spot check is skipped for this F (only d2F consistency is enforced)
    RenormConstant c = renorm_constant(2, 0.5, 0.8, shared_kd());
    SolutionPath a = solve_renormalized(r, c, F, cfg);
    SolutionPath b = solve_young(r, F, cfg);
    CHECK(a.path.values() == b.path.values());
  }
  SUBCASE("finite and stable under refinement") {
    RenormConstant c = renorm_constant(2, 0.5, 0.8, shared_kd());
    VectorFieldSpec F = bump_sin_field(0.5);
    SolutionPath sol = solve_renormalized(r, c, F, cfg);
    sol.path.check_finite();
    SolverConfig fine = cfg;
    fine.nt *= 2;
    fine.nx *= 2;
    SolutionPath sol2 = solve_renormalized(r, c, F, fine);
    double d = 0;
    size_t last_a = sol.path.grid().nt() - 1, last_b = sol2.path.grid().nt() - 1;
    for (size_t j = 0; j < cfg.nx; ++j)
      d = std::max(d, std::abs(sol.path.at(last_a, j) - sol2.path.at(last_b, 2 * j)));
    CHECK(d < 0.05);
  }
}

TEST_CASE("ito reference solver") {
  SolverConfig cfg = basic_cfg();
  cfg.psi0 = [](double x) { return std::exp(-4.0 * x * x); };

  SUBCASE("H2 domain guard") {
    CHECK_THROWS_AS(solve_ito_reference(0.5, bump_sin_field(0.5), cfg, 1), Error);
  }
  SUBCASE("F = 0 is the deterministic heat evolution") {
    SolutionPath a = solve_ito_reference(0.8, zero_field(0.5), cfg, 5);
    std::vector<double> y(cfg.nx);
    for (size_t j = 0; j < cfg.nx; ++j) y[j] = cfg.psi0(-cfg.L + double(j) * cfg.dx());
    for (size_t k = 0; k < cfg.nt; ++k) y = heat_step(y, cfg.dt(), cfg.L);
    size_t last = a.path.grid().nt() - 1;
    for (size_t j = 0; j < cfg.nx; j += 11)
      CHECK(a.path.at(last, j) == doctest::Approx(y[j]).epsilon(1e-10));
  }
  SUBCASE("martingale property: path mean equals the heat flow") {
    const size_t paths = 400;
    SolverConfig small = cfg;
    small.nx = 128;
    small.nt = 32;
    small.store_every = 32;
    VectorFieldSpec F = bump_sin_field(0.5);
    std::vector<double> heat(small.nx);
    for (size_t j = 0; j < small.nx; ++j) heat[j] = small.psi0(-small.L + double(j) * small.dx());
    for (size_t k = 0; k < small.nt; ++k) heat = heat_step(heat, small.dt(), small.L);
    size_t j0 = small.nx / 2;
    double sum = 0, sum_sq = 0;
    for (size_t p = 0; p < paths; ++p) {
      SolutionPath sol = solve_ito_reference(0.8, F, small, 100 + p);
      double v = sol.path.at(sol.path.grid().nt() - 1, j0);
      sum += v;
      sum_sq += v * v;
    }
    double mean = sum / paths;
    double se = std::sqrt((sum_sq / paths - mean * mean) / paths);
    CHECK(std::abs(mean - heat[j0]) < 3 * se);
  }
  SUBCASE("spatial increment covariance against the quadrature oracle") {
    // pool the independent per-step increments of a current-free run
    double H2 = 0.8;
    double c2 = normalization_constant(H2);
    int octave = 4;
    AxisMesh mesh = make_axis_mesh(octave, MeshDensity::solver());
    auto oracle = [&](double lag) {
      double s = 0;
      for (size_t q = 0; q < mesh.size(); ++q)
        s += mesh.weight[q] * 2.0 * std::cos(lag * mesh.node[q]) *
             std::pow(mesh.node[q], 1.0 - 2.0 * H2);
      return c2 * c2 * s;
    };
    // reconstruct increments through a unit-F solve on a flat state: one
    // step of the solver with F = 1 on the support and psi0 = 0 gives dW
    // directly, so sample the same spectral increments the solver draws
    const size_t reps = 3000, nxs = 64;
    double dx = 4.0 / double(nxs);
    std::vector<double> xs(nxs);
    for (size_t j = 0; j < nxs; ++j) xs[j] = -2.0 + double(j) * dx;
    std::vector<size_t> lags = {1, 4, 16};
    std::vector<double> acc(lags.size(), 0.0), acc_sq(lags.size(), 0.0);
    for (size_t rep = 0; rep < reps; ++rep) {
      std::vector<double> dw(nxs, 0.0);
      for (size_t q = 0; q < mesh.size(); ++q) {
        complex g = std::sqrt(mesh.weight[q]) *
                    standard_complex_gaussian(911, uint32_t(rep), mesh.key[q], 0xD37A, 0);
        complex amp = complex(0.0, mesh.node[q]) * std::pow(mesh.node[q], -H2 - 0.5);
        for (size_t j = 0; j < nxs; ++j) {
          complex v = g * amp * std::polar(1.0, xs[j] * mesh.node[q]);
          dw[j] += 2.0 * c2 * v.real();
        }
      }
      for (size_t li = 0; li < lags.size(); ++li) {
        double prod = dw[8] * dw[8 + lags[li]];
        acc[li] += prod;
        acc_sq[li] += prod * prod;
      }
    }
    for (size_t li = 0; li < lags.size(); ++li) {
      double mean = acc[li] / reps;
      double se = std::sqrt((acc_sq[li] / reps - mean * mean) / reps);
      CHECK(std::abs(mean - oracle(double(lags[li]) * dx)) < 3.5 * se);
    }
  }
}

TEST_CASE("mild residual against a Duhamel quadrature") {
  // deterministic forcing: the stepper must satisfy the integral equation up
  // to O(dt + dx^2), measured by a fine independent Duhamel quadrature
  auto forcing = [](double t, double x) {
    return std::sin(3.0 * x) * std::exp(-t) * std::exp(-x * x);
  };
  const double L = 2.0, T = 0.25;
  const size_t nx = 256;
  auto solve_with_nt = [&](size_t nt) {
    double dt = T / double(nt);
    std::vector<double> y(nx, 0.0);
    for (size_t k = 0; k < nt; ++k) {
      for (size_t j = 0; j < nx; ++j) {
        double x = -L + 2.0 * L * double(j) / double(nx);
        y[j] += dt * forcing(double(k) * dt, x);
      }
      y = heat_step(y, dt, L);
    }
    return y;
  };
  // Duhamel reference: u(T) = int_0^T e^{(T-s) Lap} f(s) ds, Simpson in s
  const size_t M = 256;
  std::vector<double> ref(nx, 0.0);
  double hs = T / double(M);
  for (size_t m = 0; m <= M; ++m) {
    double s = double(m) * hs;
    std::vector<double> slice(nx);
    for (size_t j = 0; j < nx; ++j) {
      double x = -L + 2.0 * L * double(j) / double(nx);
      slice[j] = forcing(s, x);
    }
    slice = heat_step(slice, T - s, L);
    double w = (m == 0 || m == M) ? 1.0 : (m % 2 == 1 ? 4.0 : 2.0);
    for (size_t j = 0; j < nx; ++j) ref[j] += w * slice[j];
  }
  for (size_t j = 0; j < nx; ++j) ref[j] *= hs / 3.0;

  auto resid = [&](size_t nt) {
    auto y = solve_with_nt(nt);
    double d = 0;
    for (size_t j = 0; j < nx; ++j) d = std::max(d, std::abs(y[j] - ref[j]));
    return d;
  };
  double r1 = resid(64), r2 = resid(128);
  CHECK(r2 < r1);
  CHECK(std::log2(r1 / r2) > 0.8); // first order in dt
}

TEST_CASE("support confinement near the periodic boundary") {
  SheetSpec spec = make_sheet_spec(0.9, 0.9, 2, MeshDensity::solver());
  NoiseRealization r = sample_noise(spec, 17);
  SolverConfig cfg;
  cfg.L = 2.5;
  cfg.nx = 320;
  cfg.T = 1.0 / 64.0;
  cfg.nt = 64;
  cfg.psi0 = [](double x) {
    double u = x / 0.5;
    return std::abs(u) < 1 ? std::exp(1.0 - 1.0 / (1.0 - u * u)) : 0.0;
  };
  SolutionPath with_f = solve_young(r, bump_sin_field(0.5), cfg);
  SolutionPath pure = solve_young(r, zero_field(0.5), cfg);
  double heat_width = 4.0 * std::sqrt(cfg.T);
  double dev = 0;
  const auto &g = with_f.path.grid();
  for (size_t i = 0; i < g.nt(); ++i)
    for (size_t j = 0; j < g.nx(); ++j) {
      if (std::abs(g.x_at(j)) < cfg.L - heat_width) continue;
      dev = std::max(dev, std::abs(with_f.path.at(i, j) - pure.path.at(i, j)));
    }
  CHECK(dev < 1e-8);
}

TEST_CASE("convergence study") {
  VectorFieldSpec F = bump_sin_field(0.5);
  SolverConfig cfg;
  cfg.L = 2.0;
  cfg.nx = 256;
  cfg.T = 1.0 / 32.0;
  cfg.nt = 128;
  cfg.store_every = 8;
  cfg.psi0 = [](double x) { return 0.5 * std::exp(-4.0 * x * x); };
  Rect region{cfg.T / 4, cfg.T, -1.0, 1.0};

  SUBCASE("bit-reproducible under a fixed master seed") {
    auto a = convergence_study(99, 1, 3, EquationVariant::young, 0.9, 0.9, F, cfg, 0.5, region);
    auto b = convergence_study(99, 1, 3, EquationVariant::young, 0.9, 0.9, F, cfg, 0.5, region);
    REQUIRE(a.rows.size() == b.rows.size());
    for (size_t i = 0; i < a.rows.size(); ++i) {
      CHECK(a.rows[i].sup_diff == b.rows[i].sup_diff);
      CHECK(a.rows[i].holder_diff == b.rows[i].holder_diff);
    }
  }
  SUBCASE("renormalized variant carries drift and constants") {
    auto study = convergence_study(7, 1, 2, EquationVariant::renormalized, 0.5, 0.8, F, cfg, 0.7,
                                   region, &shared_kd());
    REQUIRE(study.levels.size() == 2);
    CHECK(study.c_values[1] > study.c_values[0]);
    CHECK(study.drift[0] > 0);
    CHECK(study.drift[1] > 0);
    REQUIRE(study.rows.size() == 1);
    CHECK(study.rows[0].sup_diff > 0);
  }
}
