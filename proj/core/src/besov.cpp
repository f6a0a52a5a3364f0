#include "fracheat/besov.hpp"

#include <algorithm>
#include <cmath>

namespace fracheat {

namespace {

constexpr int profile_power = 4; // (1-u^2)^4

// I_p(w) = \int_{-1}^{1} (1-u^2)^p e^{iuw} du, real and even in w.
double poly_bump_ft(double w) {
  const int p = profile_power;
  double aw = std::abs(w);
  if (aw <= 12.0) {
    // Taylor series: sum_k (-1)^k w^{2k}/(2k)! * \int u^{2k}(1-u^2)^p du
    double m = 0.81269841269841270; // 256/315 = B(1/2, p+1)
    double term = m;
    double sum = term;
    for (int k = 0; k < 60; ++k) {
      double kk = double(k);
      term *= -w * w * (kk + 0.5) / ((2 * kk + 1.0) * (2 * kk + 2.0) * (kk + double(p) + 1.5));
      sum += term;
      if (std::abs(term) < 1e-17 * (1.0 + std::abs(sum))) break;
    }
    return sum;
  }
  // I_p(w) = p! 2^{p+1} w^{-p} j_p(w), spherical Bessel by upward recurrence
  double j0 = std::sin(aw) / aw;
  double j1 = j0 / aw - std::cos(aw) / aw;
  double jn = j1, jm = j0;
  for (int k = 1; k < p; ++k) {
    double jnext = (2.0 * k + 1.0) / aw * jn - jm;
    jm = jn;
    jn = jnext;
  }
  const double fact_p = 24.0; // 4!
  return fact_p * std::ldexp(1.0, p + 1) * std::pow(aw, -double(p)) * jn;
}

struct ProfileSups {
  double s0, s1, s2;
};

ProfileSups scan_sups(ProfileKind kind) {
  // dense scan of the profile and its first two derivatives
  auto f = [&](double u, int d) -> double {
    double c = 1.0 - u * u;
    switch (d) {
      case 0:
        return kind == ProfileKind::father ? c * c * c * c : 8.0 * u * c * c * c;
      case 1:
        return kind == ProfileKind::father ? -8.0 * u * c * c * c
                                           : 8.0 * c * c * (c - 6.0 * u * u);
      default:
        return kind == ProfileKind::father ? 8.0 * c * c * (6.0 * u * u - c)
                                           : 48.0 * u * c * (4.0 * u * u - 3.0 * c);
    }
  };
  ProfileSups s{0, 0, 0};
  for (int i = 0; i <= 20000; ++i) {
    double u = -1.0 + 2.0 * double(i) / 20000.0;
    s.s0 = std::max(s.s0, std::abs(f(u, 0)));
    s.s1 = std::max(s.s1, std::abs(f(u, 1)));
    s.s2 = std::max(s.s2, std::abs(f(u, 2)));
  }
  return s;
}

const ProfileSups &profile_sups(ProfileKind kind) {
  static ProfileSups father = scan_sups(ProfileKind::father);
  static ProfileSups mother = scan_sups(ProfileKind::mother);
  return kind == ProfileKind::father ? father : mother;
}

} // namespace

double TestProfile::operator()(double u) const {
  if (std::abs(u) >= 1.0) return 0.0;
  double c = 1.0 - u * u;
  double c3 = c * c * c;
  return kind == ProfileKind::father ? c3 * c : 8.0 * u * c3;
}

complex TestProfile::ft(double w) const {
  double base = poly_bump_ft(w);
  if (kind == ProfileKind::father) return complex(base, 0.0);
  return complex(0.0, w * base); // FT of -d/du of the father
}

double TestProfile::mean() const { return kind == ProfileKind::father ? 0.81269841269841270 : 0.0; }

double TestProfile::sup_deriv(int order) const {
  const auto &s = profile_sups(kind);
  return order == 0 ? s.s0 : order == 1 ? s.s1 : s.s2;
}

double TestFunction::eval(double t, double x) const {
  double d3 = delta * delta * delta;
  double ut = (t - center.t) / (delta * delta * s_t);
  double ux = (x - center.x) / (delta * s_x);
  return time_profile(ut) * space_profile(ux) / d3;
}

complex TestFunction::ft(double xi, double eta) const {
  complex phase = std::polar(1.0, center.t * xi + center.x * eta);
  return phase * (s_t * s_x) * time_profile.ft(s_t * delta * delta * xi) *
         space_profile.ft(s_x * delta * eta);
}

double TestFunction::mean() const { return s_t * s_x * time_profile.mean() * space_profile.mean(); }

bool TestFunction::zero_mean() const {
  return time_profile.kind == ProfileKind::mother || space_profile.kind == ProfileKind::mother;
}

double TestFunction::c2_norm() const {
  double d3 = delta * delta * delta;
  auto dsup = [&](int kt, int kx) {
    double scale = 1.0 / (d3 * std::pow(delta * delta * s_t, kt) * std::pow(delta * s_x, kx));
    return scale * time_profile.sup_deriv(kt) * space_profile.sup_deriv(kx);
  };
  // multi-indices with |k|_s <= 2: (0,0), (0,1), (1,0), (0,2)
  return dsup(0, 0) + dsup(0, 1) + dsup(1, 0) + dsup(0, 2);
}

TestFamily default_test_family() {
  TestFamily fam(4);
  fam[0].time_profile.kind = ProfileKind::father;
  fam[0].space_profile.kind = ProfileKind::father;
  fam[1].time_profile.kind = ProfileKind::father;
  fam[1].space_profile.kind = ProfileKind::mother;
  fam[2].time_profile.kind = ProfileKind::mother;
  fam[2].space_profile.kind = ProfileKind::father;
  fam[3].time_profile.kind = ProfileKind::mother;
  fam[3].space_profile.kind = ProfileKind::mother;
  return fam;
}

TestFunction scale_test(const TestFunction &psi, double delta, const ScaledPoint &center) {
  require(delta > 0 && delta <= 1.0, "scale_test: delta must lie in (0,1], got ", delta);
  TestFunction out = psi;
  out.delta = psi.delta * delta;
  out.center = {center.t + delta * delta * psi.center.t, center.x + delta * psi.center.x};
  return out;
}

namespace {

struct SupportWindow {
  double t_lo, t_hi, x_lo, x_hi;
};

SupportWindow support_of(const TestFunction &psi) {
  double ht = TestFunction::s_t * psi.delta * psi.delta;
  double hx = TestFunction::s_x * psi.delta;
  return {psi.center.t - ht, psi.center.t + ht, psi.center.x - hx, psi.center.x + hx};
}

} // namespace

bool GriddedPairing::admissible(const TestFunction &psi) const {
  auto w = support_of(psi);
  const auto &g = f_.grid();
  return w.t_lo >= g.t_min() - 1e-12 && w.t_hi <= g.t_max() + 1e-12 &&
         w.x_lo >= g.x_min() - 1e-12 && w.x_hi <= g.x_max() + 1e-12;
}

double GriddedPairing::pair_with(const TestFunction &psi) const {
  const auto &g = f_.grid();
  double ext_t = 2.0 * TestFunction::s_t * psi.delta * psi.delta;
  double ext_x = 2.0 * TestFunction::s_x * psi.delta;
  require(g.dt() <= ext_t / 4.0 * (1 + 1e-12) && g.dx() <= ext_x / 4.0 * (1 + 1e-12),
          "pair: test support under-resolved; need dt <= ", ext_t / 4.0, " and dx <= ",
          ext_x / 4.0, ", grid has dt = ", g.dt(), ", dx = ", g.dx());
  require(admissible(psi), "pair: test support exits the field grid");

  auto w = support_of(psi);
  size_t i0 = size_t(std::max(0.0, std::floor((w.t_lo - g.t_min()) / g.dt())));
  size_t i1 = std::min(g.nt() - 1, size_t(std::ceil((w.t_hi - g.t_min()) / g.dt())));
  size_t j0 = size_t(std::max(0.0, std::floor((w.x_lo - g.x_min()) / g.dx())));
  size_t j1 = std::min(g.nx() - 1, size_t(std::ceil((w.x_hi - g.x_min()) / g.dx())));

  // The test function is analytic, so it is supersampled against the
  // bilinear interpolant of the field; the quadrature error is then set by
  // the field resolution alone (second order), not by the test's fine scale.
  const int sub = 4;
  double acc = 0;
  for (size_t i = i0; i < i1; ++i) {
    for (int a = 0; a < sub; ++a) {
      double t = g.t_at(i) + (double(a) + 0.5) / double(sub) * g.dt();
      for (size_t j = j0; j < j1; ++j) {
        double row = 0;
        for (int b = 0; b < sub; ++b) {
          double x = g.x_at(j) + (double(b) + 0.5) / double(sub) * g.dx();
          double psi_v = psi.eval(t, x);
          if (psi_v != 0.0) row += f_.value_at(t, x) * psi_v;
        }
        acc += row;
      }
    }
  }
  return acc * g.dt() * g.dx() / double(sub * sub);
}

double pair(const GriddedField &field, const TestFunction &psi) {
  return GriddedPairing(field).pair_with(psi);
}

SpectralPairing::SpectralPairing(const NoiseRealization &r, FieldKind kind,
                                 std::vector<complex> mode_factor)
    : r_(r), kind_(kind), mode_factor_(std::move(mode_factor)) {
  require(kind_ == FieldKind::noise || kind_ == FieldKind::theta,
          "SpectralPairing: supports the noise density and theta = K * xi^n");
  require(kind_ != FieldKind::theta || mode_factor_.size() == r.coeff.size(),
          "SpectralPairing: theta requires a per-node mode factor");
}

double SpectralPairing::pair_with(const TestFunction &psi) const {
  const auto &spec = r_.spec;
  const size_t P = spec.mesh_t.size();
  const size_t Q2 = 2 * spec.mesh_x.size();
  double d2 = psi.delta * psi.delta;

  std::vector<complex> at(P), ax(Q2);
  for (size_t p = 0; p < P; ++p) {
    double xi = spec.mesh_t.node[p];
    at[p] = complex(0.0, xi) * std::pow(xi, -spec.H1 - 0.5) *
            psi.time_profile.ft(TestFunction::s_t * d2 * xi) *
            std::polar(1.0, psi.center.t * xi);
  }
  for (size_t qs = 0; qs < Q2; ++qs) {
    double eta = signed_eta(spec.mesh_x, qs);
    ax[qs] = complex(0.0, eta) * std::pow(std::abs(eta), -spec.H2 - 0.5) *
             psi.space_profile.ft(TestFunction::s_x * psi.delta * eta) *
             std::polar(1.0, psi.center.x * eta);
  }
  complex acc = 0;
  for (size_t p = 0; p < P; ++p) {
    const complex *c = &r_.coeff[p * Q2];
    complex row = 0;
    if (mode_factor_.empty()) {
      for (size_t qs = 0; qs < Q2; ++qs) row += c[qs] * ax[qs];
    } else {
      const complex *m = &mode_factor_[p * Q2];
      for (size_t qs = 0; qs < Q2; ++qs) row += c[qs] * m[qs] * ax[qs];
    }
    acc += at[p] * row;
  }
  return 2.0 * spec.c_norm * (TestFunction::s_t * TestFunction::s_x) * acc.real();
}

double besov_estimate(const FieldPairing &field, const TestFamily &family, double alpha,
                      const Rect &region, unsigned max_level) {
  require(alpha < 0, "besov_estimate: alpha must be negative, got ", alpha);
  require(!family.empty(), "besov_estimate: empty test family");
  double best = 0;
  bool any = false;
  for (unsigned l = 0; l <= max_level; ++l) {
    double delta = std::ldexp(1.0, -int(l));
    double w = std::pow(2.0, double(l) * alpha);
    for (const auto &x : dyadic_lattice(l, region)) {
      for (const auto &psi : family) {
        TestFunction scaled = scale_test(psi, delta, x);
        if (!field.admissible(scaled)) continue;
        any = true;
        best = std::max(best, w * std::abs(field.pair_with(scaled)));
      }
    }
  }
  require(any, "besov_estimate: no admissible lattice point; enlarge the field grid");
  return best;
}

double besov_estimate(const GriddedField &field, const TestFamily &family, double alpha,
                      const Rect &region, unsigned max_level) {
  return besov_estimate(GriddedPairing(field), family, alpha, region, max_level);
}

double regularity_slope(const FieldPairing &field, const TestFamily &family, const Rect &region,
                        unsigned level_lo, unsigned level_hi, const SlopeOptions &opts) {
  require(level_hi >= level_lo + 2, "regularity_slope: need at least 3 levels");
  TestFamily used;
  for (const auto &psi : family)
    if (!opts.zero_mean_only || psi.zero_mean()) used.push_back(psi);
  if (used.empty()) used = family;

  std::vector<double> xs, ys;
  for (unsigned l = level_lo; l <= level_hi; ++l) {
    double delta = std::ldexp(1.0, -int(l));
    auto centers = dyadic_lattice(l, region);
    size_t stride = std::max<size_t>(1, centers.size() / opts.max_centers_per_level);
    double sq = 0;
    size_t count = 0;
    for (size_t i = 0; i < centers.size(); i += stride) {
      for (const auto &psi : used) {
        TestFunction scaled = scale_test(psi, delta, centers[i]);
        if (!field.admissible(scaled)) continue;
        double v = field.pair_with(scaled);
        sq += v * v;
        ++count;
      }
    }
    require(count > 0, "regularity_slope: no admissible centers at level ", l);
    double rms = std::sqrt(sq / double(count));
    if (rms <= 0) fail("regularity_slope: degenerate fit (zero RMS at level ", l, ")");
    xs.push_back(-double(l));
    ys.push_back(std::log2(rms));
  }
  return fit_slope(xs, ys);
}

double regularity_slope(const GriddedField &field, const TestFamily &family, const Rect &region,
                        unsigned level_lo, unsigned level_hi, const SlopeOptions &opts) {
  return regularity_slope(GriddedPairing(field), family, region, level_lo, level_hi, opts);
}

double exact_test_moment(const SheetSpec &spec, const TestFunction &psi, unsigned level,
                         const ScaledPoint &base) {
  TestFunction scaled = scale_test(psi, std::ldexp(1.0, -int(level)), base);
  double d2 = scaled.delta * scaled.delta;
  auto axis = [](const AxisMesh &mesh, double H, double arg_scale, const TestProfile &prof) {
    double s = 0;
    for (size_t i = 0; i < mesh.size(); ++i) {
      double u = mesh.node[i];
      double a = std::abs(prof.ft(arg_scale * u));
      s += mesh.weight[i] * 2.0 * u * u * std::pow(u, -2.0 * H - 1.0) * a * a;
    }
    return s;
  };
  double it = axis(spec.mesh_t, spec.H1, TestFunction::s_t * d2, scaled.time_profile);
  double ix = axis(spec.mesh_x, spec.H2, TestFunction::s_x * scaled.delta, scaled.space_profile);
  double st2 = TestFunction::s_t * TestFunction::s_t;
  double sx2 = TestFunction::s_x * TestFunction::s_x;
  return spec.c_norm * spec.c_norm * st2 * sx2 * it * ix;
}

} // namespace fracheat
