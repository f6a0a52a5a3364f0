#include "fracheat/solver.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

#include "fracheat/rng.hpp"

namespace fracheat {

namespace {
std::mutex fftw_mutex;

// exp(-1/(1-u^2)) normalized to peak 1
double smooth_bump(double u) {
  if (std::abs(u) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - u * u));
}

double smooth_bump_prime(double u) {
  if (std::abs(u) >= 1.0) return 0.0;
  double d = 1.0 - u * u;
  return smooth_bump(u) * (-2.0 * u / (d * d));
}

} // namespace

VectorFieldSpec make_vector_field(std::function<double(double, double)> F,
                                  std::function<double(double, double)> d1F,
                                  std::function<double(double, double)> d2F,
                                  double support_halfwidth) {
  require(support_halfwidth > 0, "make_vector_field: support half-width must be positive");
  VectorFieldSpec v{std::move(F), std::move(d1F), std::move(d2F), support_halfwidth};
  // d2F consistency spot check on deterministic pseudo-random points
  for (int i = 0; i < 32; ++i) {
    double x = (uniform01(stream_key(7, uint32_t(i), 0, 0, 0)) * 2.0 - 1.0) * support_halfwidth;
    double y = (uniform01(stream_key(7, uint32_t(i), 1, 0, 0)) * 2.0 - 1.0) * 3.0;
    double h = 1e-5;
    double cd = (v.F(x, y + h) - v.F(x, y - h)) / (2.0 * h);
    double an = v.d2F(x, y);
    double scale = std::max({std::abs(an), std::abs(cd), 1.0});
    require(std::abs(cd - an) <= 1e-6 * scale + 1e-8,
            "make_vector_field: d2F inconsistent with F at (", x, ", ", y, "): analytic ", an,
            " vs central difference ", cd);
  }
  // support check
  for (int i = 0; i < 8; ++i) {
    double x = support_halfwidth * (1.01 + i);
    require(v.F(x, 0.7) == 0.0 && v.F(-x, -0.3) == 0.0,
            "make_vector_field: F must vanish for |x| > support half-width");
  }
  return v;
}

VectorFieldSpec bump_sin_field(double a) {
  auto F = [a](double x, double y) { return smooth_bump(x / a) * std::sin(y); };
  auto d1F = [a](double x, double y) { return smooth_bump_prime(x / a) / a * std::sin(y); };
  auto d2F = [a](double x, double y) { return smooth_bump(x / a) * std::cos(y); };
  return make_vector_field(F, d1F, d2F, a);
}

void validate_solver_config(const SolverConfig &cfg, double support_halfwidth) {
  require(cfg.nx >= 4 && cfg.nt >= 1, "SolverConfig: nx >= 4 and nt >= 1 required");
  require(cfg.T > 0 && cfg.L > 0, "SolverConfig: positive horizon and half-width required");
  require(cfg.nt % cfg.store_every == 0, "SolverConfig: nt must be a multiple of store_every");
  double needed = 2.0 * support_halfwidth + 4.0 * std::sqrt(cfg.T);
  require(cfg.L >= needed - 1e-12, "SolverConfig: L = ", cfg.L,
          " too small for support separation; need L >= 2a + 4 sqrt(T) = ", needed);
}

// --------------------------------------------------------------------------

namespace {

class HeatStepper {
public:
  HeatStepper(size_t nx, double L) : nx_(nx), L_(L) {
    in_ = fftw_alloc_real(nx);
    spec_ = fftw_alloc_complex(nx / 2 + 1);
    std::lock_guard<std::mutex> lock(fftw_mutex);
    fwd_ = fftw_plan_dft_r2c_1d(int(nx), in_, spec_, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_c2r_1d(int(nx), spec_, in_, FFTW_ESTIMATE);
  }
  ~HeatStepper() {
    std::lock_guard<std::mutex> lock(fftw_mutex);
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(in_);
    fftw_free(spec_);
  }
  HeatStepper(const HeatStepper &) = delete;
  HeatStepper &operator=(const HeatStepper &) = delete;

  void step(std::vector<double> &state, double dt) {
    std::copy(state.begin(), state.end(), in_);
    fftw_execute(fwd_);
    for (size_t k = 0; k <= nx_ / 2; ++k) {
      double lam = pi * double(k) / L_;
      double m = std::exp(-dt * lam * lam) / double(nx_);
      spec_[k][0] *= m;
      spec_[k][1] *= m;
    }
    fftw_execute(bwd_);
    std::copy(in_, in_ + nx_, state.begin());
  }

private:
  size_t nx_;
  double L_;
  double *in_;
  fftw_complex *spec_;
  fftw_plan fwd_, bwd_;
};

SpaceTimeGrid stored_grid(const SolverConfig &cfg) {
  size_t rows = cfg.nt / cfg.store_every + 1;
  double dx = cfg.dx();
  return SpaceTimeGrid(0.0, cfg.T, rows, -cfg.L, cfg.L - dx, cfg.nx);
}

struct FractionalRun {
  const NoiseRealization *noise = nullptr;
  double renorm = 0;
};

SolutionPath run_mild_solver(const VectorFieldSpec &F, const SolverConfig &cfg,
                             const FractionalRun &frac, const char *equation,
                             std::vector<std::string> warnings) {
  validate_solver_config(cfg, F.support_halfwidth);
  const size_t nx = cfg.nx;
  const double dt = cfg.dt();
  std::vector<double> xs(nx);
  for (size_t j = 0; j < nx; ++j) xs[j] = -cfg.L + double(j) * cfg.dx();

  const auto &r = *frac.noise;
  double dt_req = std::ldexp(1.0, -2 * int(r.spec.n) - 2);
  double dx_req = std::ldexp(1.0, -int(r.spec.n) - 2);
  if (dt > dt_req * (1 + 1e-12) || cfg.dx() > dx_req * (1 + 1e-12))
    warnings.push_back("grid under-resolves the level-" + std::to_string(r.spec.n) +
                       " noise: want dt <= " + std::to_string(dt_req) +
                       ", dx <= " + std::to_string(dx_req));

  SpectralGridEvaluator noise_eval(r, FieldKind::noise, xs);
  HeatStepper stepper(nx, cfg.L);

  SolutionPath out;
  out.equation = equation;
  out.seed = r.seed;
  out.level = r.spec.n;
  out.renorm_value = frac.renorm;
  out.warnings = std::move(warnings);
  out.path = GriddedField(stored_grid(cfg));

  std::vector<double> y(nx), xi_row(nx);
  for (size_t j = 0; j < nx; ++j) y[j] = cfg.psi0(xs[j]);
  for (size_t j = 0; j < nx; ++j) out.path.at(0, j) = y[j];

  size_t stored = 1;
  for (size_t k = 0; k < cfg.nt; ++k) {
    double t = double(k) * dt;
    noise_eval.eval_row(t, xi_row.data());
    for (size_t j = 0; j < nx; ++j) {
      double f = F.F(xs[j], y[j]);
      double force = f * xi_row[j];
      if (frac.renorm != 0.0) force -= frac.renorm * f * F.d2F(xs[j], y[j]);
      y[j] += dt * force;
    }
    stepper.step(y, dt);
    double sup = 0;
    for (double v : y) sup = std::max(sup, std::abs(v));
    if (sup > 1e6)
      fail(equation, ": divergence guard tripped at t = ", t + dt, " (sup |Y| = ", sup, ")");
    if ((k + 1) % cfg.store_every == 0) {
      for (size_t j = 0; j < nx; ++j) out.path.at(stored, j) = y[j];
      ++stored;
    }
  }
  return out;
}

} // namespace

std::vector<double> heat_step(std::span<const double> state, double dt, double L) {
  std::vector<double> out(state.begin(), state.end());
  HeatStepper stepper(out.size(), L);
  stepper.step(out, dt);
  return out;
}

SolutionPath solve_young(const NoiseRealization &r, const VectorFieldSpec &F,
                         const SolverConfig &cfg) {
  std::vector<std::string> warnings;
  if (2.0 * r.spec.H1 + r.spec.H2 <= 2.0)
    warnings.push_back("young solver outside the Young regime (2 H1 + H2 <= 2)");
  FractionalRun run{&r, 0.0};
  return run_mild_solver(F, cfg, run, "young", std::move(warnings));
}

SolutionPath solve_renormalized(const NoiseRealization &r, const RenormConstant &c,
                                const VectorFieldSpec &F, const SolverConfig &cfg) {
  std::vector<std::string> warnings;
  double s = 2.0 * r.spec.H1 + r.spec.H2;
  if (!(s > 5.0 / 3.0 && s <= 2.0))
    warnings.push_back("renormalized solver outside 5/3 < 2 H1 + H2 <= 2");
  FractionalRun run{&r, c.value};
  return run_mild_solver(F, cfg, run, "renormalized", std::move(warnings));
}

SolutionPath solve_ito_reference(double H2, const VectorFieldSpec &F, const SolverConfig &cfg,
                                 uint64_t seed, int eta_octave) {
  require(H2 > 2.0 / 3.0 && H2 < 1.0, "solve_ito_reference: H2 must lie in (2/3, 1), got ", H2);
  validate_solver_config(cfg, F.support_halfwidth);

  const size_t nx = cfg.nx;
  const double dt = cfg.dt();
  std::vector<double> xs(nx);
  for (size_t j = 0; j < nx; ++j) xs[j] = -cfg.L + double(j) * cfg.dx();

  if (eta_octave == 0)
    eta_octave = int(std::ceil(std::log2(pi / cfg.dx()))); // grid Nyquist
  MeshDensity density = MeshDensity::solver();
  AxisMesh mesh = make_axis_mesh(eta_octave, density);
  double c2 = normalization_constant(H2);

  // spatial mode factors (i eta) |eta|^{-H2-1/2} e^{i x eta} on the half mesh
  const size_t Q = mesh.size();
  std::vector<complex> fx(Q * nx);
  std::vector<double> sqw(Q);
  for (size_t q = 0; q < Q; ++q) {
    double eta = mesh.node[q];
    sqw[q] = std::sqrt(mesh.weight[q]);
    complex amp = complex(0.0, eta) * std::pow(eta, -H2 - 0.5);
    for (size_t j = 0; j < nx; ++j) fx[q * nx + j] = amp * std::polar(1.0, xs[j] * eta);
  }

  HeatStepper stepper(nx, cfg.L);
  SolutionPath out;
  out.equation = "ito";
  out.seed = seed;
  out.level = unsigned(std::max(eta_octave, 0));
  out.path = GriddedField(stored_grid(cfg));

  std::vector<double> y(nx), dw(nx);
  std::vector<complex> g(Q);
  for (size_t j = 0; j < nx; ++j) y[j] = cfg.psi0(xs[j]);
  for (size_t j = 0; j < nx; ++j) out.path.at(0, j) = y[j];

  size_t stored = 1;
  const double amp = std::sqrt(dt) * c2;
  for (size_t k = 0; k < cfg.nt; ++k) {
    for (size_t q = 0; q < Q; ++q)
      g[q] = sqw[q] * standard_complex_gaussian(seed, uint32_t(k), mesh.key[q], 0xD37A, 0);
    std::fill(dw.begin(), dw.end(), 0.0);
    for (size_t q = 0; q < Q; ++q) {
      const complex *row = &fx[q * nx];
      complex gq = g[q];
      for (size_t j = 0; j < nx; ++j) {
        complex v = gq * row[j];
        dw[j] += 2.0 * v.real();
      }
    }
    for (size_t j = 0; j < nx; ++j) y[j] += F.F(xs[j], y[j]) * amp * dw[j];
    stepper.step(y, dt);
    double sup = 0;
    for (double v : y) sup = std::max(sup, std::abs(v));
    if (sup > 1e6) fail("ito: divergence guard tripped at step ", k, " (sup |Y| = ", sup, ")");
    if ((k + 1) % cfg.store_every == 0) {
      for (size_t j = 0; j < nx; ++j) out.path.at(stored, j) = y[j];
      ++stored;
    }
  }
  return out;
}

ConvergenceStudy convergence_study(uint64_t master_seed, unsigned n_lo, unsigned n_hi,
                                   EquationVariant variant, double H1, double H2,
                                   const VectorFieldSpec &F, const SolverConfig &cfg, double gamma,
                                   const Rect &holder_region, const KernelDecomposition *kd,
                                   const MeshDensity &density) {
  require(n_hi > n_lo, "convergence_study: need at least two levels");
  require(variant != EquationVariant::renormalized || kd != nullptr,
          "convergence_study: the renormalized variant needs a kernel decomposition");

  ConvergenceStudy study;
  std::vector<SolutionPath> paths;
  for (unsigned n = n_lo; n <= n_hi; ++n) {
    SheetSpec spec = make_sheet_spec(H1, H2, n, density);
    NoiseRealization r = sample_noise(spec, master_seed);
    if (variant == EquationVariant::young) {
      paths.push_back(solve_young(r, F, cfg));
      study.drift.push_back(0.0);
      study.c_values.push_back(0.0);
    } else {
      RenormConstant c = renorm_constant(n, H1, H2, *kd);
      SolutionPath ren = solve_renormalized(r, c, F, cfg);
      SolutionPath ctrl = solve_young(r, F, cfg); // C = 0 control, same noise
      double drift = 0;
      for (size_t i = 0; i < ren.path.values().size(); ++i)
        drift = std::max(drift, std::abs(ren.path.values()[i] - ctrl.path.values()[i]));
      study.drift.push_back(drift);
      study.c_values.push_back(c.value);
      paths.push_back(std::move(ren));
    }
    study.levels.push_back(n);
  }

  for (size_t i = 0; i + 1 < paths.size(); ++i) {
    const auto &a = paths[i].path, &b = paths[i + 1].path;
    GriddedField diff(a.grid());
    double sup = 0;
    for (size_t k = 0; k < a.values().size(); ++k) {
      diff.values()[k] = b.values()[k] - a.values()[k];
      sup = std::max(sup, std::abs(diff.values()[k]));
    }
    ConvergenceRow row;
    row.n = study.levels[i];
    row.sup_diff = sup;
    row.holder_diff = holder_norm(diff, holder_region, gamma);
    study.rows.push_back(row);
  }
  return study;
}

} // namespace fracheat
