#include "fracheat/rough_model.hpp"

#include <algorithm>
#include <cmath>

#include "fracheat/threading.hpp"

namespace fracheat {

namespace {

struct QuadAccum {
  complex half_sum{0, 0}; // sum over the xi>0, eta>0 quarter (complex K-hat)
};

// Quarter-domain tensor quadrature of K-hat(xi,eta) |xi|^{1-2H1}
// |eta|^{1-2H2}; by the Hermitian and x-even symmetries the full-domain
// integral is 4 Re of the quarter sum.
QuadAccum renorm_quarter_sum(const KernelDecomposition &kd, const AxisMesh &mx, const AxisMesh &my,
                             double H1, double H2, bool limit_ghat) {
  QuadAccum acc;
  std::vector<double> sx(mx.size()), sy(my.size());
  for (size_t a = 0; a < mx.size(); ++a)
    sx[a] = mx.weight[a] * std::pow(mx.node[a], 1.0 - 2.0 * H1);
  for (size_t b = 0; b < my.size(); ++b)
    sy[b] = my.weight[b] * std::pow(my.node[b], 1.0 - 2.0 * H2);
  for (size_t a = 0; a < mx.size(); ++a) {
    complex row = 0;
    for (size_t b = 0; b < my.size(); ++b) {
      complex kh = limit_ghat ? kd.G_hat_sum(mx.node[a], my.node[b])
                              : kd.K_hat(mx.node[a], my.node[b]);
      // four mirror quadrants folded pointwise: K-hat is even in eta and
      // Hermitian overall, so the quadrant bracket is 2(kh + conj kh); the
      // imaginary part cancels here and any residual left in the accumulated
      // sum is a floating-point symmetry diagnostic
      row += sy[b] * 2.0 * (kh + std::conj(kh));
    }
    acc.half_sum += sx[a] * row;
  }
  return acc;
}

double sum_exponent(double H1, double H2) { return 2.0 * (2.0 - 2.0 * H1 - H2); }

} // namespace

RenormConstant renorm_constant(unsigned n, double H1, double H2, const KernelDecomposition &kd,
                               const RenormOptions &opts) {
  double s = 2.0 * H1 + H2;
  require(s > 5.0 / 3.0 && s <= 2.0,
          "renorm_constant: requires 5/3 < 2 H1 + H2 <= 2, got 2 H1 + H2 = ", s);

  double c1 = normalization_constant(H1), c2 = normalization_constant(H2);
  double c_sq = (c1 * c2) * (c1 * c2);

  auto evaluate = [&](const MeshDensity &d) {
    AxisMesh mx = make_axis_mesh(int(2 * n), d);
    AxisMesh my = make_axis_mesh(int(n), d);
    auto acc = renorm_quarter_sum(kd, mx, my, H1, H2, false);
    RenormConstant r;
    r.n = n;
    r.H1 = H1;
    r.H2 = H2;
    r.value = c_sq * acc.half_sum.real();
    r.imag_residual = std::abs(acc.half_sum.imag()) /
                      std::max(std::abs(acc.half_sum.real()), 1e-300);
    r.mesh_nodes = mx.size() * my.size();
    return r;
  };

  MeshDensity coarse = opts.mesh;
  coarse.nodes_fine = std::max(2, opts.mesh.nodes_fine / 2);
  coarse.nodes_coarse = std::max(1, opts.mesh.nodes_coarse / 2);

  // Richardson estimate for the second-order midpoint rule: the defect of the
  // finer mesh is about a third of the difference against the halved mesh.
  RenormConstant fine = evaluate(opts.mesh);
  RenormConstant half = evaluate(coarse);
  fine.quad_rel_error =
      std::abs(fine.value - half.value) / (3.0 * std::max(std::abs(fine.value), 1e-300));

  if (fine.quad_rel_error > opts.error_threshold) {
    MeshDensity denser = opts.mesh;
    denser.nodes_fine *= 2;
    denser.nodes_coarse *= 2;
    RenormConstant refined = evaluate(denser);
    refined.quad_rel_error =
        std::abs(refined.value - fine.value) / (3.0 * std::max(std::abs(refined.value), 1e-300));
    if (refined.quad_rel_error > opts.error_threshold)
      fail("renorm_constant: quadrature error estimate ", refined.quad_rel_error,
           " above threshold ", opts.error_threshold, " (value ", refined.value, ")");
    return refined;
  }
  return fine;
}

std::pair<double, double> renorm_limit_check(double H1, double H2, unsigned n,
                                             const KernelDecomposition &kd,
                                             const RenormOptions &opts) {
  double s = 2.0 * H1 + H2;
  require(s > 5.0 / 3.0 && s < 2.0,
          "renorm_limit_check: requires 5/3 < 2 H1 + H2 < 2 strictly, got ", s);

  RenormConstant cn = renorm_constant(n, H1, H2, kd, opts);
  double rescaled = cn.value * std::pow(2.0, -double(n) * sum_exponent(H1, H2));

  double c1 = normalization_constant(H1), c2 = normalization_constant(H2);
  double c_sq = (c1 * c2) * (c1 * c2);
  AxisMesh unit_x = make_axis_mesh(0, opts.mesh);
  AxisMesh unit_y = make_axis_mesh(0, opts.mesh);
  auto acc = renorm_quarter_sum(kd, unit_x, unit_y, H1, H2, true);
  double limit = c_sq * acc.half_sum.real();
  return {rescaled, limit};
}

std::vector<complex> khat_for_spec(const KernelDecomposition &kd, const SheetSpec &spec) {
  const size_t P = spec.mesh_t.size();
  const size_t Q2 = 2 * spec.mesh_x.size();
  std::vector<complex> out(P * Q2);
  for (size_t p = 0; p < P; ++p) {
    double xi = spec.mesh_t.node[p];
    for (size_t qs = 0; qs < Q2; ++qs) out[p * Q2 + qs] = kd.K_hat(xi, signed_eta(spec.mesh_x, qs));
  }
  return out;
}

namespace {

void check_window_resolution(const SpaceTimeGrid &w, unsigned n) {
  double dt_req = std::ldexp(1.0, -2 * int(n) - 2);
  double dx_req = std::ldexp(1.0, -int(n) - 2);
  require(w.dt() <= dt_req * (1 + 1e-12) && w.dx() <= dx_req * (1 + 1e-12),
          "levy_area: window does not resolve the level-", n, " noise; need dt <= ", dt_req,
          " and dx <= ", dx_req);
}

} // namespace

LevyAreaSlice levy_area(const NoiseRealization &r, const KernelDecomposition &kd,
                        const ScaledPoint &base, const SpaceTimeGrid &window, AreaVariant variant,
                        const RenormConstant *c) {
  require((variant == AreaVariant::renormalized) == (c != nullptr),
          "levy_area: a renormalization constant is required exactly for the renormalized variant");
  check_window_resolution(window, r.spec.n);

  auto khat = khat_for_spec(kd, r.spec);

  std::vector<double> xs(window.nx());
  for (size_t j = 0; j < window.nx(); ++j) xs[j] = window.x_at(j);
  SpectralGridEvaluator theta_eval(r, FieldKind::theta, xs, khat);
  SpectralGridEvaluator noise_eval(r, FieldKind::noise, xs);

  // When the base is a window node, take theta(base) from the same factorized
  // sweep so the bracket vanishes identically at the base point.
  double theta_base;
  bool base_on_grid = true;
  size_t bi = 0, bj = 0;
  try {
    bi = window.t_index(base.t);
    bj = window.x_index(base.x);
  } catch (const Error &) {
    base_on_grid = false;
  }
  if (base_on_grid) {
    std::vector<double> row(window.nx());
    theta_eval.eval_row(window.t_at(bi), row.data());
    theta_base = row[bj];
  } else {
    theta_base = eval_field_point(r, FieldKind::theta, base, khat);
  }

  double shift = (variant == AreaVariant::renormalized) ? c->value : 0.0;
  LevyAreaSlice out;
  out.base = base;
  out.variant = variant;
  out.renorm_value = shift;
  out.values = GriddedField(window);
  std::vector<double> theta_row(window.nx()), noise_row(window.nx());
  for (size_t i = 0; i < window.nt(); ++i) {
    double t = window.t_at(i);
    theta_eval.eval_row(t, theta_row.data());
    noise_eval.eval_row(t, noise_row.data());
    for (size_t j = 0; j < window.nx(); ++j)
      out.values.at(i, j) = (theta_row[j] - theta_base) * noise_row[j] - shift;
  }
  return out;
}

double chen_defect(const NoiseRealization &r, const KernelDecomposition &kd, const ScaledPoint &x,
                   const ScaledPoint &y, std::span<const ScaledPoint> probes) {
  auto khat = khat_for_spec(kd, r.spec);
  // slice path: A_b(z) = (theta(z) - theta(b)) xi(z)
  double theta_x = eval_field_point(r, FieldKind::theta, x, khat);
  double theta_y = eval_field_point(r, FieldKind::theta, y, khat);

  // independent path for the right side
  double rhs_factor = eval_field_point(r, FieldKind::theta, y, khat) -
                      eval_field_point(r, FieldKind::theta, x, khat);

  double worst = 0;
  for (const auto &z : probes) {
    double theta_z = eval_field_point(r, FieldKind::theta, z, khat);
    double xi_z = eval_field_point(r, FieldKind::noise, z);
    double a_x = (theta_z - theta_x) * xi_z;
    double a_y = (theta_z - theta_y) * xi_z;
    double lhs = a_x - a_y;
    double rhs = rhs_factor * xi_z;
    double scale = std::max({std::abs(a_x), std::abs(a_y), std::abs(rhs), 1e-300});
    worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Second-level difference moments via the full-lattice chain
//   T1 = sum_{j,k} alpha_j beta_k A-hat(s_t d^2 (xi_j+xi_k)) B-hat(s_x d (eta_j+eta_k))

namespace {

struct FullLattice {
  std::vector<double> xi;  // 2P signed time frequencies (+ then -)
  std::vector<double> eta; // 2Q signed space frequencies (the qs layout)
  size_t P = 0, Q2 = 0;
};

FullLattice full_lattice(const SheetSpec &spec) {
  FullLattice L;
  L.P = spec.mesh_t.size();
  L.Q2 = 2 * spec.mesh_x.size();
  L.xi.resize(2 * L.P);
  for (size_t p = 0; p < L.P; ++p) {
    L.xi[p] = spec.mesh_t.node[p];
    L.xi[L.P + p] = -spec.mesh_t.node[p];
  }
  L.eta.resize(L.Q2);
  for (size_t qs = 0; qs < L.Q2; ++qs) L.eta[qs] = signed_eta(spec.mesh_x, qs);
  return L;
}

// value of a per-half-lattice array extended to the full lattice
inline complex full_entry(const std::vector<complex> &half, size_t P, size_t Q2, size_t pp,
                          size_t qq) {
  if (pp < P) return half[pp * Q2 + qq];
  size_t mirror = (qq + Q2 / 2) % Q2;
  return std::conj(half[(pp - P) * Q2 + mirror]);
}

struct ChainWorkspace {
  std::vector<complex> alpha, beta; // (2P) x (2Q)
  std::vector<complex> m1;          // (2P) x (2Q), alpha * F2
};

// T1 over the sub-lattice given by row index set rows (size R <= 2P) and
// column subset mask cols (size C <= 2Q).
complex chain_t1(const std::vector<complex> &alpha, const std::vector<complex> &beta,
                 const std::vector<complex> &f1, const std::vector<complex> &f2,
                 const std::vector<size_t> &rows, const std::vector<size_t> &cols, size_t q2_full,
                 ChainWorkspace &ws) {
  const size_t R = rows.size(), C = cols.size();
  ws.m1.assign(R * C, complex(0, 0));
  // m1[r][s] = sum_q alpha[r][q] f2[q][s]
  for (size_t r = 0; r < R; ++r) {
    const complex *arow = &alpha[rows[r] * q2_full];
    complex *mrow = &ws.m1[r * C];
    for (size_t q = 0; q < C; ++q) {
      complex a = arow[cols[q]];
      if (a == complex(0, 0)) continue;
      const complex *frow = &f2[q * C];
      for (size_t s = 0; s < C; ++s) mrow[s] += a * frow[s];
    }
  }
  complex t1 = 0;
  for (size_t r = 0; r < R; ++r) {
    const complex *mrow = &ws.m1[r * C];
    const complex *f1row = &f1[r * R];
    for (size_t r2 = 0; r2 < R; ++r2) {
      const complex *brow = &beta[rows[r2] * q2_full];
      complex dot = 0;
      for (size_t s = 0; s < C; ++s) dot += mrow[s] * brow[cols[s]];
      t1 += f1row[r2] * dot;
    }
  }
  return t1;
}

} // namespace

AreaMomentScan area_moment_scan(double H1, double H2, unsigned n, unsigned m,
                                const TestFunction &psi, unsigned level_lo, unsigned level_hi,
                                const ScaledPoint &base, size_t samples, uint64_t master_seed,
                                const KernelDecomposition &kd, const MeshDensity &density) {
  double s = 2.0 * H1 + H2;
  require(s > 5.0 / 3.0 && s <= 2.0, "area_moment_scan: requires 5/3 < 2 H1 + H2 <= 2");
  require(m >= n, "area_moment_scan: m must be >= n");
  require(samples >= 1000, "area_moment_scan: needs at least 1e3 samples, got ", samples);
  require(level_hi >= level_lo, "area_moment_scan: bad level range");

  SheetSpec spec_m = make_sheet_spec(H1, H2, m, density);
  const size_t P = spec_m.mesh_t.size();
  const size_t Q2 = 2 * spec_m.mesh_x.size();
  const size_t Pn = mesh_prefix_size(spec_m.mesh_t, int(2 * n), density);
  const size_t Qn = mesh_prefix_size(spec_m.mesh_x, int(n), density);

  RenormOptions ropt;
  RenormConstant c_n = renorm_constant(n, H1, H2, kd, ropt);
  RenormConstant c_m = renorm_constant(m, H1, H2, kd, ropt);

  auto khat = khat_for_spec(kd, spec_m);
  FullLattice L = full_lattice(spec_m);

  // index sets: the m-run uses everything, the n-run the D_n restriction
  std::vector<size_t> rows_m(2 * P), rows_n;
  for (size_t i = 0; i < 2 * P; ++i) rows_m[i] = i;
  for (size_t p = 0; p < Pn; ++p) rows_n.push_back(p);
  for (size_t p = 0; p < Pn; ++p) rows_n.push_back(P + p);
  std::vector<size_t> cols_m(Q2), cols_n;
  for (size_t i = 0; i < Q2; ++i) cols_m[i] = i;
  for (size_t q = 0; q < Qn; ++q) cols_n.push_back(q);
  for (size_t q = 0; q < Qn; ++q) cols_n.push_back(Q2 / 2 + q);

  const unsigned n_levels = level_hi - level_lo + 1;

  // level-dependent profile matrices on the needed index sets
  auto build_f1 = [&](const std::vector<size_t> &rows, double delta) {
    std::vector<complex> f1(rows.size() * rows.size());
    double sc = TestFunction::s_t * delta * delta;
    for (size_t a = 0; a < rows.size(); ++a)
      for (size_t b = 0; b < rows.size(); ++b)
        f1[a * rows.size() + b] = psi.time_profile.ft(sc * (L.xi[rows[a]] + L.xi[rows[b]]));
    return f1;
  };
  auto build_f2 = [&](const std::vector<size_t> &cols, double delta) {
    std::vector<complex> f2(cols.size() * cols.size());
    double sc = TestFunction::s_x * delta;
    for (size_t a = 0; a < cols.size(); ++a)
      for (size_t b = 0; b < cols.size(); ++b)
        f2[a * cols.size() + b] = psi.space_profile.ft(sc * (L.eta[cols[a]] + L.eta[cols[b]]));
    return f2;
  };

  std::vector<std::vector<complex>> f1_m(n_levels), f2_m(n_levels), f1_n(n_levels), f2_n(n_levels);
  std::vector<double> deltas(n_levels);
  for (unsigned li = 0; li < n_levels; ++li) {
    double delta = std::ldexp(psi.delta, -int(level_lo + li));
    deltas[li] = delta;
    f1_m[li] = build_f1(rows_m, delta);
    f2_m[li] = build_f2(cols_m, delta);
    f1_n[li] = build_f1(rows_n, delta);
    f2_n[li] = build_f2(cols_n, delta);
  }

  const double st_sx = TestFunction::s_t * TestFunction::s_x;
  const double psi_mean = psi.mean();

  // per-sample | per-level squared pairings
  std::vector<double> sq_ren(samples * n_levels), sq_can(samples * n_levels);
  std::vector<double> sq_marg(samples * n_levels);
  const bool same_level = (m == n);

  parallel_for(samples, [&](size_t sample) {
    NoiseRealization r = sample_noise(spec_m, master_seed + sample);
    // full-lattice alpha (theta modes) and beta (noise modes), base phases in
    ChainWorkspace ws;
    std::vector<complex> alpha(2 * P * Q2), beta(2 * P * Q2);
    for (size_t pp = 0; pp < 2 * P; ++pp) {
      double xi = L.xi[pp];
      double amp_t = std::pow(std::abs(xi), -H1 - 0.5);
      complex phase_t = std::polar(1.0, base.t * xi);
      for (size_t qq = 0; qq < Q2; ++qq) {
        double eta = L.eta[qq];
        complex c = full_entry(r.coeff, P, Q2, pp, qq);
        complex kh = full_entry(khat, P, Q2, pp, qq);
        complex mode = complex(0.0, xi) * complex(0.0, eta) * amp_t *
                       std::pow(std::abs(eta), -H2 - 0.5) * phase_t *
                       std::polar(1.0, base.x * eta) * spec_m.c_norm;
        beta[pp * Q2 + qq] = c * mode;
        alpha[pp * Q2 + qq] = c * mode * kh;
      }
    }
    complex theta_base_m = 0, theta_base_n = 0;
    for (size_t pp = 0; pp < 2 * P; ++pp)
      for (size_t qq = 0; qq < Q2; ++qq) theta_base_m += alpha[pp * Q2 + qq];
    for (size_t rr : rows_n)
      for (size_t qq : cols_n) theta_base_n += alpha[rr * Q2 + qq];

    for (unsigned li = 0; li < n_levels; ++li) {
      double delta = deltas[li];
      auto t2 = [&](const std::vector<size_t> &rows, const std::vector<size_t> &cols) {
        complex acc = 0;
        for (size_t rr : rows) {
          complex ft_t = psi.time_profile.ft(TestFunction::s_t * delta * delta * L.xi[rr]);
          complex rowsum = 0;
          for (size_t qq : cols)
            rowsum += beta[rr * Q2 + qq] *
                      psi.space_profile.ft(TestFunction::s_x * delta * L.eta[qq]);
          acc += ft_t * rowsum;
        }
        return acc;
      };
      complex t1n = chain_t1(alpha, beta, f1_n[li], f2_n[li], rows_n, cols_n, Q2, ws);
      complex t1m = same_level ? t1n
                               : chain_t1(alpha, beta, f1_m[li], f2_m[li], rows_m, cols_m, Q2, ws);
      complex pair_m = st_sx * (t1m - theta_base_m * t2(rows_m, cols_m));
      complex pair_n = st_sx * (t1n - theta_base_n * t2(rows_n, cols_n));
      // pairings of real fields; imaginary parts cancel pairwise
      double diff_can = same_level ? 0.0 : (pair_n - pair_m).real();
      double diff_ren = diff_can - (c_n.value - c_m.value) * psi_mean;
      double marg_n = pair_n.real() - c_n.value * psi_mean;
      sq_can[sample * n_levels + li] = diff_can * diff_can;
      sq_ren[sample * n_levels + li] = diff_ren * diff_ren;
      sq_marg[sample * n_levels + li] = marg_n * marg_n;
    }
  });

  AreaMomentScan out;
  out.n = n;
  out.m = m;
  out.samples = samples;
  out.c_n = c_n.value;
  out.c_m = c_m.value;
  std::vector<double> xs, ys;
  for (unsigned li = 0; li < n_levels; ++li) {
    double mean = 0, mean_can = 0, mean_marg = 0;
    for (size_t s2 = 0; s2 < samples; ++s2) {
      mean += sq_ren[s2 * n_levels + li];
      mean_can += sq_can[s2 * n_levels + li];
      mean_marg += sq_marg[s2 * n_levels + li];
    }
    mean /= double(samples);
    mean_can /= double(samples);
    mean_marg /= double(samples);
    double var = 0;
    for (size_t s2 = 0; s2 < samples; ++s2) {
      double d = sq_ren[s2 * n_levels + li] - mean;
      var += d * d;
    }
    var /= double(samples > 1 ? samples - 1 : 1);
    AreaMomentRow row;
    row.level = level_lo + li;
    row.moment = mean;
    row.std_err = std::sqrt(var / double(samples));
    row.canonical_moment = mean_can;
    row.marginal_n = mean_marg;
    out.rows.push_back(row);
    if (mean > 0) {
      xs.push_back(double(row.level));
      ys.push_back(log2_safe(mean));
    }
  }
  out.level_slope = (xs.size() >= 2) ? fit_slope(xs, ys) : 0.0;
  return out;
}

} // namespace fracheat
