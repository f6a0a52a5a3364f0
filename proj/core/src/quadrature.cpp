#include "fracheat/quadrature.hpp"

#include <cmath>

namespace fracheat {

MeshDensity MeshDensity::fine() { return {-24, -4, 4, 32}; }
MeshDensity MeshDensity::mc() { return {-12, -4, 4, 8}; }
MeshDensity MeshDensity::solver() { return {-10, -4, 4, 6}; }
MeshDensity MeshDensity::area() { return {-8, -4, 2, 4}; }

AxisMesh make_axis_mesh(int j_hi, const MeshDensity &d) {
  require(j_hi > d.octave_lo, "make_axis_mesh: cutoff octave ", j_hi, " must exceed octave_lo ",
          d.octave_lo);
  AxisMesh m;
  m.cutoff = std::ldexp(1.0, j_hi);
  for (int j = d.octave_lo; j < j_hi; ++j) {
    int count = (j >= d.fine_from) ? d.nodes_fine : d.nodes_coarse;
    double lo = std::ldexp(1.0, j);
    double h = lo / double(count); // octave width is 2^j
    for (int i = 0; i < count; ++i) {
      m.node.push_back(lo + (double(i) + 0.5) * h);
      m.weight.push_back(h);
      m.key.push_back((uint32_t(j + 512) << 16) | uint32_t(i));
    }
  }
  return m;
}

size_t mesh_prefix_size(const AxisMesh &fine, int j_hi, const MeshDensity &density) {
  size_t count = 0;
  for (int j = density.octave_lo; j < j_hi; ++j)
    count += size_t((j >= density.fine_from) ? density.nodes_fine : density.nodes_coarse);
  require(count <= fine.size(), "mesh_prefix_size: requested cutoff exceeds the fine mesh");
  return count;
}

double axis_quad_even(const AxisMesh &mesh, const std::function<double(double)> &f_even) {
  double s = 0;
  for (size_t i = 0; i < mesh.size(); ++i) s += mesh.weight[i] * f_even(mesh.node[i]);
  return s;
}

namespace {

double simpson(const std::function<double(double)> &f, double a, double fa, double m, double fm,
               double b, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const std::function<double(double)> &f, double a, double fa, double b,
                     double fb, double m, double fm, double whole, double tol, int depth) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = simpson(f, a, fa, lm, flm, m, fm);
  double right = simpson(f, m, fm, rm, frm, b, fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

} // namespace

double integrate_adaptive(const std::function<double(double)> &f, double a, double b, double tol,
                          int max_depth) {
  if (a == b) return 0.0;
  double m = 0.5 * (a + b);
  double fa = f(a), fb = f(b), fm = f(m);
  double whole = simpson(f, a, fa, m, fm, b, fb);
  return adaptive_step(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

double axis_variance_integral(double H, double *err) {
  require(H > 0.0 && H < 1.0, "axis_variance_integral: H must lie in (0,1), got ", H);
  // Origin piece: 4 * int_0^1 (1 - cos u) u^{-2H-1} du with v = u^{2-2H}.
  const double p = 2.0 - 2.0 * H;
  auto origin_integrand = [&](double v) {
    if (v <= 0) return 0.0;
    double u = std::pow(v, 1.0 / p);
    // (1 - cos u) / u^2, extended smoothly through u = 0
    double c = (u < 1e-4) ? 0.5 - u * u / 24.0 : (1.0 - std::cos(u)) / (u * u);
    return 4.0 * c / p;
  };
  double origin = integrate_adaptive(origin_integrand, 0.0, 1.0, 1e-13);

  // Middle piece on [1, X], oscillatory but resolved adaptively.
  const double X = 4096.0;
  auto mid_integrand = [&](double u) {
    return 4.0 * (1.0 - std::cos(u)) * std::pow(u, -2.0 * H - 1.0);
  };
  double mid = integrate_adaptive(mid_integrand, 1.0, X, 1e-13);

  // Tail beyond X: DC part exactly, cosine part by integration by parts.
  double a1 = 2.0 * H + 1.0;
  double dc = 4.0 / (2.0 * H) * std::pow(X, -2.0 * H);
  double osc = -4.0 * (-std::sin(X) * std::pow(X, -a1) + a1 * std::cos(X) * std::pow(X, -a1 - 1) +
                       a1 * (a1 + 1) * std::sin(X) * std::pow(X, -a1 - 2));
  double tail_bound = 4.0 * a1 * (a1 + 1) * (a1 + 2) * std::pow(X, -a1 - 2);

  if (err) *err = tail_bound + 1e-12;
  return origin + mid + dc + osc;
}

} // namespace fracheat
