#include "fracheat/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "fracheat/besov.hpp"
#include "fracheat/rng.hpp"
#include "fracheat/gridfile.hpp"
#include "fracheat/rough_model.hpp"
#include "fracheat/solver.hpp"
#include "fracheat/spectral_field.hpp"
#include "fracheat/threading.hpp"

namespace fracheat {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// configuration

std::string ExperimentConfig::get(const std::string &k, const std::string &fallback) const {
  auto it = keys.find(k);
  return it == keys.end() ? fallback : it->second;
}

double ExperimentConfig::get_double(const std::string &k, double fallback) const {
  auto it = keys.find(k);
  if (it == keys.end()) return fallback;
  return std::stod(it->second);
}

double ExperimentConfig::require_double(const std::string &k) const {
  require(has(k), "config: missing required key '", k, "' for kind '", kind, "'");
  return std::stod(keys.at(k));
}

long ExperimentConfig::get_long(const std::string &k, long fallback) const {
  auto it = keys.find(k);
  if (it == keys.end()) return fallback;
  return std::stol(it->second);
}

std::string ExperimentConfig::require_str(const std::string &k) const {
  require(has(k), "config: missing required key '", k, "' for kind '", kind, "'");
  return keys.at(k);
}

namespace {

std::string trim(const std::string &s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

} // namespace

ExperimentConfig parse_config_text(const std::string &text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      require(t.back() == ']', "config line ", lineno, ": malformed section header");
      section = trim(t.substr(1, t.size() - 2));
      require(!section.empty(), "config line ", lineno, ": empty section name");
      continue;
    }
    size_t eq = t.find('=');
    require(eq != std::string::npos, "config line ", lineno, ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    require(!key.empty(), "config line ", lineno, ": empty key");
    if (section.empty()) {
      if (key == "kind")
        cfg.kind = val;
      else if (key == "seed")
        cfg.seed = std::stoull(val);
      else if (key == "out")
        cfg.out_dir = val;
      else if (key == "threads")
        cfg.threads = std::stoi(val);
      else
        fail("config line ", lineno, ": unknown top-level key '", key, "'");
    } else {
      std::string full = section + "." + key;
      require(!cfg.keys.count(full), "config line ", lineno, ": duplicate key '", full, "'");
      cfg.keys[full] = val;
    }
  }
  require(!cfg.kind.empty(), "config: missing 'kind'");
  return cfg;
}

ExperimentConfig parse_config_file(const std::string &path) {
  std::ifstream in(path);
  require(in.good(), "cannot open config file ", path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

MeshDensity density_by_name(const std::string &name) {
  if (name == "fine") return MeshDensity::fine();
  if (name == "mc") return MeshDensity::mc();
  if (name == "mclight") return MeshDensity{-10, -4, 3, 6};
  if (name == "solver") return MeshDensity::solver();
  if (name == "area") return MeshDensity::area();
  fail("unknown mesh density '", name, "' (fine|mc|mclight|solver|area)");
}

const KernelDecomposition &shared_kernel() {
  static KernelDecomposition kd{KernelOptions{}};
  return kd;
}

// ---------------------------------------------------------------------------
// output helpers

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
public:
  CsvWriter(const std::string &path, const std::string &provenance,
            const std::vector<std::string> &columns)
      : out_(path, std::ios::trunc) {
    require(out_.good(), "cannot open ", path, " for writing");
    out_ << "# " << artifact_version << "; " << provenance << "\n";
    for (size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << "\n";
  }
  void row(const std::vector<double> &vals) {
    for (size_t i = 0; i < vals.size(); ++i) out_ << (i ? "," : "") << fmt(vals[i]);
    out_ << "\n";
  }
  void raw_row(const std::vector<std::string> &vals) {
    for (size_t i = 0; i < vals.size(); ++i) out_ << (i ? "," : "") << vals[i];
    out_ << "\n";
  }

private:
  std::ofstream out_;
};

void write_manifest(const ExperimentConfig &cfg, const std::string &path) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), "cannot write manifest ", path);
  out << "# manifest; regenerate with: fracheat " << cfg.kind << " --config <this file>\n";
  out << "# version = " << artifact_version << "\n";
  out << "kind = " << cfg.kind << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "out = " << cfg.out_dir << "\n";
  out << "threads = " << cfg.threads << "\n";
  std::string section;
  for (const auto &[k, v] : cfg.keys) {
    std::string sec = k.substr(0, k.find('.'));
    if (sec != section) {
      out << "[" << sec << "]\n";
      section = sec;
    }
    out << k.substr(k.find('.') + 1) << " = " << v << "\n";
  }
}

std::vector<double> parse_list(const std::string &s, char sep = ',') {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

std::vector<std::string> split(const std::string &s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double pearson(const std::vector<double> &x, const std::vector<double> &y) {
  double n = double(x.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

double limit_covariance(double H1, double H2, const ScaledPoint &p, const ScaledPoint &q) {
  auto R = [](double H, double s, double t) {
    return 0.5 * (std::pow(std::abs(s), 2 * H) + std::pow(std::abs(t), 2 * H) -
                  std::pow(std::abs(t - s), 2 * H));
  };
  return R(H1, p.t, q.t) * R(H2, p.x, q.x);
}

TestFunction psi_by_name(const std::string &name) {
  auto fam = default_test_family();
  if (name == "ff") return fam[0];
  if (name == "fm") return fam[1];
  if (name == "mf") return fam[2];
  if (name == "mm") return fam[3];
  fail("unknown test function '", name, "' (ff|fm|mf|mm)");
}

std::function<double(double)> psi0_by_name(const std::string &name, double halfwidth,
                                           double amplitude) {
  if (name == "zero") return [](double) { return 0.0; };
  if (name == "bump")
    return [halfwidth, amplitude](double x) {
      double u = x / halfwidth;
      if (std::abs(u) >= 1.0) return 0.0;
      return amplitude * std::exp(1.0 - 1.0 / (1.0 - u * u));
    };
  if (name == "gauss")
    return [halfwidth, amplitude](double x) {
      return amplitude * std::exp(-x * x / (2.0 * halfwidth * halfwidth));
    };
  fail("unknown psi0 '", name, "' (zero|bump|gauss)");
}

// ---------------------------------------------------------------------------
// experiment runners

RunResult run_sample(const ExperimentConfig &cfg) {
  double H1 = cfg.require_double("sample.H1");
  double H2 = cfg.require_double("sample.H2");
  unsigned n = unsigned(cfg.get_long("sample.n", 4));
  MeshDensity density = density_by_name(cfg.get("sample.density", "mc"));
  std::string field = cfg.get("sample.field", "sheet");
  SpaceTimeGrid grid(cfg.get_double("sample.t0", 0.0), cfg.get_double("sample.t1", 1.0),
                     size_t(cfg.get_long("sample.nt", 65)), cfg.get_double("sample.x0", 0.0),
                     cfg.get_double("sample.x1", 1.0), size_t(cfg.get_long("sample.nx", 65)));

  SheetSpec spec = make_sheet_spec(H1, H2, n, density);
  NoiseRealization r = sample_noise(spec, cfg.seed);
  std::vector<double> xs(grid.nx());
  for (size_t j = 0; j < grid.nx(); ++j) xs[j] = grid.x_at(j);
  FieldKind kind = field == "sheet" ? FieldKind::sheet
                   : field == "noise" ? FieldKind::noise
                                      : (fail("sample.field must be sheet|noise"), FieldKind::sheet);
  SpectralGridEvaluator eval(r, kind, xs);
  GriddedField f = eval.eval_grid(grid);

  std::string path = cfg.out_dir + "/field.fhgrid";
  write_field(path, f);

  RunResult res;
  res.files.push_back(path);
  double sup = 0, mean = 0;
  for (double v : f.values()) {
    sup = std::max(sup, std::abs(v));
    mean += v;
  }
  res.scalars["sup_abs"] = sup;
  res.scalars["mean"] = mean / double(f.values().size());
  return res;
}

RunResult run_moments(const ExperimentConfig &cfg) {
  std::string mode = cfg.require_str("moments.mode");
  RunResult res;

  if (mode == "covariance") {
    double H1 = cfg.require_double("moments.H1");
    double H2 = cfg.require_double("moments.H2");
    unsigned n = unsigned(cfg.get_long("moments.n", 8));
    MeshDensity density = density_by_name(cfg.get("moments.density", "mclight"));
    size_t mc_samples = size_t(cfg.get_long("moments.mc_samples", 0));

    std::vector<std::array<double, 4>> pairs;
    std::string spec_str = cfg.get("moments.pairs", "1,1,1,1; 1,1,0.5,0.75; 0.5,0.25,0.25,0.75; 0.75,0.5,0.25,0.25");
    for (const auto &ps : split(spec_str, ';')) {
      auto v = parse_list(ps);
      require(v.size() == 4, "moments.pairs: each entry needs s,x,t,y");
      pairs.push_back({v[0], v[1], v[2], v[3]});
    }

    SheetSpec spec = make_sheet_spec(H1, H2, n, density);
    std::vector<ScaledPoint> pts;
    for (auto &pr : pairs) {
      pts.push_back({pr[0], pr[1]});
      pts.push_back({pr[2], pr[3]});
    }

    std::vector<double> exact(pairs.size()), limit(pairs.size());
    for (size_t i = 0; i < pairs.size(); ++i) {
      ScaledPoint a{pairs[i][0], pairs[i][1]}, b{pairs[i][2], pairs[i][3]};
      exact[i] = exact_second_moment(spec, a, b);
      limit[i] = limit_covariance(H1, H2, a, b);
    }

    std::vector<double> mc(pairs.size(), 0.0), mc_se(pairs.size(), 0.0);
    if (mc_samples > 0) {
      std::vector<double> prod_sum(pairs.size() * 2, 0.0); // sum and sum of squares
      std::vector<double> vals(pts.size());
      std::vector<std::vector<double>> per_seed(mc_samples);
      parallel_for(mc_samples, [&](size_t s) {
        NoiseRealization r = sample_noise(spec, cfg.seed + s);
        per_seed[s] = eval_sheet(r, pts);
      }, cfg.threads);
      for (size_t s = 0; s < mc_samples; ++s) {
        for (size_t i = 0; i < pairs.size(); ++i) {
          double prod = per_seed[s][2 * i] * per_seed[s][2 * i + 1];
          prod_sum[2 * i] += prod;
          prod_sum[2 * i + 1] += prod * prod;
        }
      }
      for (size_t i = 0; i < pairs.size(); ++i) {
        double m1 = prod_sum[2 * i] / double(mc_samples);
        double m2 = prod_sum[2 * i + 1] / double(mc_samples);
        mc[i] = m1;
        mc_se[i] = std::sqrt(std::max(0.0, m2 - m1 * m1) / double(mc_samples));
      }
    }

    std::string path = cfg.out_dir + "/covariance.csv";
    CsvWriter csv(path,
                  "experiment=moments/covariance; cols: s,x,t,y [coords], exact [lattice "
                  "quadrature], limit [R_H1 R_H2 product], mc, mc_se [sample statistics]",
                  {"s", "x", "t", "y", "exact", "limit", "mc", "mc_se"});
    double max_rel_dev = 0, max_z = 0;
    for (size_t i = 0; i < pairs.size(); ++i) {
      csv.row({pairs[i][0], pairs[i][1], pairs[i][2], pairs[i][3], exact[i], limit[i], mc[i],
               mc_se[i]});
      max_rel_dev = std::max(max_rel_dev, std::abs(exact[i] - limit[i]) / std::abs(limit[i]));
      if (mc_samples > 0) max_z = std::max(max_z, std::abs(mc[i] - exact[i]) / mc_se[i]);
    }
    res.files.push_back(path);
    res.scalars["limit_max_rel_dev"] = max_rel_dev;
    res.scalars["mc_max_z"] = max_z;
    return res;
  }

  if (mode == "increment") {
    unsigned n = unsigned(cfg.get_long("moments.n", 8));
    int k_lo = int(cfg.get_long("moments.k_lo", 1));
    int k_hi = int(cfg.get_long("moments.k_hi", 6));
    MeshDensity density = density_by_name(cfg.get("moments.density", "fine"));
    auto hp = split(cfg.require_str("moments.H_pairs"), ';');

    std::string path = cfg.out_dir + "/increments.csv";
    CsvWriter csv(path,
                  "experiment=moments/increment; moment = E|rect increment|^2 [field^2] by "
                  "separable lattice quadrature",
                  {"H1", "H2", "axis", "offset", "moment"});
    double dev_t = 0, dev_x = 0;
    for (const auto &pair_str : hp) {
      auto v = parse_list(pair_str);
      require(v.size() == 2, "moments.H_pairs entries need H1,H2");
      SheetSpec spec = make_sheet_spec(v[0], v[1], n, density);
      std::vector<double> lx, ly_t, ly_x;
      for (int k = k_hi; k >= k_lo; --k) {
        double off = std::ldexp(1.0, -k);
        double mt = exact_increment_moment(spec, {off, 1.0});
        double mx = exact_increment_moment(spec, {1.0, off});
        csv.row({v[0], v[1], 0, off, mt});
        csv.row({v[0], v[1], 1, off, mx});
        lx.push_back(std::log2(off));
        ly_t.push_back(log2_safe(mt));
        ly_x.push_back(log2_safe(mx));
      }
      double st = fit_slope(lx, ly_t), sx2 = fit_slope(lx, ly_x);
      dev_t = std::max(dev_t, std::abs(st - 2.0 * v[0]));
      dev_x = std::max(dev_x, std::abs(sx2 - 2.0 * v[1]));
    }
    res.files.push_back(path);
    res.scalars["slope_t_dev_max"] = dev_t;
    res.scalars["slope_x_dev_max"] = dev_x;
    return res;
  }

  if (mode == "testmoment") {
    double H1 = cfg.require_double("moments.H1");
    double H2 = cfg.require_double("moments.H2");
    unsigned n = unsigned(cfg.get_long("moments.n", 10));
    unsigned l_lo = unsigned(cfg.get_long("moments.l_lo", 0));
    unsigned l_hi = unsigned(cfg.get_long("moments.l_hi", 6));
    MeshDensity density = density_by_name(cfg.get("moments.density", "fine"));
    TestFunction psi = psi_by_name(cfg.get("moments.psi", "ff"));

    SheetSpec spec = make_sheet_spec(H1, H2, n, density);
    std::string path = cfg.out_dir + "/testmoment.csv";
    CsvWriter csv(path, "experiment=moments/testmoment; moment = E|<xi^n, S^{2^-l} psi>|^2",
                  {"level", "moment"});
    std::vector<double> xs, ys;
    for (unsigned l = l_lo; l <= l_hi; ++l) {
      double m = exact_test_moment(spec, psi, l, {0.0, 0.0});
      csv.row({double(l), m});
      xs.push_back(double(l));
      ys.push_back(log2_safe(m));
    }
    double slope = fit_slope(xs, ys);
    res.files.push_back(path);
    res.scalars["slope"] = slope;
    res.scalars["slope_dev"] = std::abs(slope - 2.0 * (3.0 - 2.0 * H1 - H2));
    // log-linearity residual per level
    double max_resid = 0;
    double icept = 0;
    for (size_t i = 0; i < xs.size(); ++i) icept += ys[i] - slope * xs[i];
    icept /= double(xs.size());
    for (size_t i = 0; i < xs.size(); ++i)
      max_resid = std::max(max_resid, std::abs(ys[i] - slope * xs[i] - icept));
    res.scalars["max_residual"] = max_resid;
    return res;
  }

  fail("moments.mode must be covariance|increment|testmoment, got '", mode, "'");
}

RunResult run_kernel(const ExperimentConfig &cfg) {
  const KernelDecomposition &kd = shared_kernel();
  RunResult res;
  unsigned probes = unsigned(cfg.get_long("kernel.probes", 256));

  // partition telescoping and self-similarity on deterministic sample points
  double partition_dev = 0, selfsim_dev = 0, split_dev = 0;
  int deep = std::min(kd.n_max(), 8);
  for (unsigned i = 0; i < probes; ++i) {
    double u1 = uniform01(stream_key(11, i, 0, 0, 0));
    double u2 = uniform01(stream_key(11, i, 1, 0, 0));
    double u3 = uniform01(stream_key(11, i, 2, 0, 0));
    // parabolic radius in [2^-deep, 1), direction split between t and x
    double r = std::ldexp(1.0, -int(std::floor(u1 * deep)));
    r *= 0.5 + 0.5 * u2;
    double t = r * r * u3;
    double x = std::sqrt(std::max(0.0, r * r - t)) * (u2 < 0.5 ? 1.0 : -1.0);
    if (t <= 0) t = r * r * 0.5;

    auto pieces = kernel_pieces(kd, t, x);
    double sum = 0;
    for (double v : pieces.kn) sum += v;
    partition_dev = std::max(partition_dev, std::abs(sum - pieces.k));
    split_dev = std::max(split_dev, std::abs(pieces.k + pieces.g_sharp - heat_kernel(t, x)));
    for (int lev : {1, 3, 5}) {
      double lhs = kd.Kn(lev, t, x);
      double rhs = std::ldexp(kd.K0(std::ldexp(t, 2 * lev), std::ldexp(x, lev)), lev);
      selfsim_dev = std::max(selfsim_dev, std::abs(lhs - rhs));
    }
  }

  // |d_x G(t,.)| mass law: sqrt(pi t) * integral == 1 exactly
  double mass_dev = 0;
  for (double t : {0.1, 0.2, 0.4, 1.0}) {
    double integral =
        2.0 * integrate_adaptive([&](double x) { return std::abs(-x / (2.0 * t) * heat_kernel(t, x)); },
                                 0.0, 20.0 * std::sqrt(t), 1e-10);
    mass_dev = std::max(mass_dev, std::abs(integral * std::sqrt(pi * t) - 1.0));
  }

  // K-hat identities
  double khat00 = kd.K_hat(0.0, 0.0).real();
  // reference: \int K = 4/3 \int K0 with \int K0 by direct 2-D quadrature
  double k0_mass = integrate_adaptive(
      [&](double t) {
        return 2.0 * integrate_adaptive([&](double x) { return kd.K0(t, x); }, 0.0, 1.0, 1e-11);
      },
      0.0, 1.0, 1e-10);
  double k_mass = 4.0 / 3.0 * k0_mass;
  double khat00_dev = std::abs(khat00 - k_mass);

  std::vector<double> lx, ly;
  for (int k = 2; k <= 10; ++k) {
    double xi = std::ldexp(1.0, k);
    lx.push_back(double(k));
    ly.push_back(std::log2(std::abs(kd.K_hat(xi, 0.0))));
  }
  double decay_exponent = -fit_slope(lx, ly);

  double ghat_dev = 0;
  for (auto [xi, eta] : {std::pair<double, double>{0.7, 1.3}, {2.5, 0.6}, {9.0, 2.0}, {0.3, 3.0}}) {
    complex ident = 1.0 / complex(eta * eta, xi);
    complex got = kd.G_hat_sum(xi, eta);
    ghat_dev = std::max(ghat_dev, std::abs(got - ident) / std::abs(ident));
  }

  std::string path = cfg.out_dir + "/kernel.csv";
  CsvWriter csv(path, "experiment=kernel; residuals of the decomposition identities",
                {"check", "value"});
  csv.raw_row({"partition_max_dev", fmt(partition_dev)});
  csv.raw_row({"selfsim_max_dev", fmt(selfsim_dev)});
  csv.raw_row({"split_max_dev", fmt(split_dev)});
  csv.raw_row({"mass_max_rel_dev", fmt(mass_dev)});
  csv.raw_row({"khat00_abs_dev", fmt(khat00_dev)});
  csv.raw_row({"khat_decay_exponent", fmt(decay_exponent)});
  csv.raw_row({"ghat_identity_rel_dev", fmt(ghat_dev)});
  csv.raw_row({"table_edge_max", fmt(kd.table_edge_max())});
  res.files.push_back(path);

  res.scalars["partition_max_dev"] = partition_dev;
  res.scalars["selfsim_max_dev"] = selfsim_dev;
  res.scalars["split_max_dev"] = split_dev;
  res.scalars["mass_max_rel_dev"] = mass_dev;
  res.scalars["khat00_abs_dev"] = khat00_dev;
  res.scalars["khat_decay_exponent"] = decay_exponent;
  res.scalars["ghat_identity_rel_dev"] = ghat_dev;
  return res;
}

RunResult run_renorm(const ExperimentConfig &cfg) {
  const KernelDecomposition &kd = shared_kernel();
  unsigned n_lo = unsigned(cfg.get_long("renorm.n_lo", 4));
  unsigned n_hi = unsigned(cfg.get_long("renorm.n_hi", 10));
  bool limit_check = cfg.get_long("renorm.limit_check", 0) != 0;
  unsigned limit_n = unsigned(cfg.get_long("renorm.limit_n", n_hi));
  auto hp = split(cfg.require_str("renorm.H_pairs"), ';');

  RunResult res;
  std::string path = cfg.out_dir + "/renorm.csv";
  CsvWriter csv(path,
                "experiment=renorm; c_n = renormalization constant [field^2], rescaled = c_n "
                "2^{-2n(2-2H1-H2)}",
                {"H1", "H2", "n", "c_n", "quad_rel_err", "rescaled", "ratio_n"});

  double slope_dev_max = 0, boundary_var = 0, monotone = 1, imag_max = 0;
  for (const auto &pair_str : hp) {
    auto v = parse_list(pair_str);
    require(v.size() == 2, "renorm.H_pairs entries need H1,H2");
    double H1 = v[0], H2 = v[1];
    double s = 2.0 * H1 + H2;
    std::vector<double> ns, logc, ratios;
    double prev = 0;
    for (unsigned n = n_lo; n <= n_hi; ++n) {
      RenormConstant c = renorm_constant(n, H1, H2, kd);
      imag_max = std::max(imag_max, c.imag_residual);
      double rescaled = c.value * std::pow(2.0, -2.0 * double(n) * (2.0 - 2.0 * H1 - H2));
      double ratio_n = c.value / double(std::max(1u, n));
      csv.row({H1, H2, double(n), c.value, c.quad_rel_error, rescaled, ratio_n});
      if (n > n_lo && c.value <= prev) monotone = 0;
      prev = c.value;
      ns.push_back(double(n));
      logc.push_back(log2_safe(c.value));
      ratios.push_back(ratio_n);
    }
    if (s < 2.0 - 1e-9) {
      double slope = fit_slope(ns, logc);
      slope_dev_max = std::max(slope_dev_max, std::abs(slope - 2.0 * (2.0 - 2.0 * H1 - H2)));
    } else {
      // boundary case: successive variation of c_n / n over the last levels
      for (size_t i = ratios.size() >= 3 ? ratios.size() - 3 : 0; i + 1 < ratios.size(); ++i)
        boundary_var = std::max(boundary_var, std::abs(ratios[i + 1] / ratios[i] - 1.0));
    }
    if (limit_check && s < 2.0 - 1e-9) {
      auto [rescaled, limit] = renorm_limit_check(H1, H2, limit_n, kd);
      res.scalars["limit_rescaled"] = rescaled;
      res.scalars["limit_integral"] = limit;
      res.scalars["limit_rel_dev"] = std::abs(rescaled - limit) / std::abs(limit);
      // Cauchy behaviour of the rescaled sequence
      double d_prev = 0, cauchy = 1;
      for (unsigned n = std::max(6u, n_lo); n + 1 <= n_hi; ++n) {
        auto a = renorm_constant(n, H1, H2, kd).value *
                 std::pow(2.0, -2.0 * double(n) * (2.0 - 2.0 * H1 - H2));
        auto b = renorm_constant(n + 1, H1, H2, kd).value *
                 std::pow(2.0, -2.0 * double(n + 1) * (2.0 - 2.0 * H1 - H2));
        double d = std::abs(b - a);
        if (n > std::max(6u, n_lo) && d > d_prev * (1 + 1e-9)) cauchy = 0;
        d_prev = d;
      }
      res.scalars["rescaled_cauchy"] = cauchy;
    }
  }
  res.files.push_back(path);
  res.scalars["slope_dev_max"] = slope_dev_max;
  res.scalars["boundary_var"] = boundary_var;
  res.scalars["monotone"] = monotone;
  res.scalars["imag_residual_max"] = imag_max;
  return res;
}

RunResult run_levy(const ExperimentConfig &cfg) {
  const KernelDecomposition &kd = shared_kernel();
  std::string mode = cfg.require_str("levy.mode");
  RunResult res;

  if (mode == "chen") {
    double H1 = cfg.require_double("levy.H1");
    double H2 = cfg.require_double("levy.H2");
    unsigned n = unsigned(cfg.get_long("levy.n", 3));
    size_t seeds = size_t(cfg.get_long("levy.seeds", 10));
    size_t pairs = size_t(cfg.get_long("levy.pairs", 100));
    size_t probes = size_t(cfg.get_long("levy.probes", 4));
    MeshDensity density = density_by_name(cfg.get("levy.density", "area"));

    SheetSpec spec = make_sheet_spec(H1, H2, n, density);
    RenormConstant c = renorm_constant(n, H1, H2, kd);
    auto khat = khat_for_spec(kd, spec);

    double worst = 0;
    for (size_t s = 0; s < seeds; ++s) {
      NoiseRealization r = sample_noise(spec, cfg.seed + s);
      for (size_t ppair = 0; ppair < pairs; ++ppair) {
        auto u = [&](uint32_t tag) {
          return uniform01(stream_key(cfg.seed, uint32_t(s), uint32_t(ppair), tag, 0));
        };
        ScaledPoint x{u(0) * 0.5, u(1) * 2.0 - 1.0};
        ScaledPoint y{u(2) * 0.5, u(3) * 2.0 - 1.0};
        std::vector<ScaledPoint> zs(probes);
        for (size_t k = 0; k < probes; ++k)
          zs[k] = ScaledPoint{u(10 + uint32_t(k)) * 0.5, u(20 + uint32_t(k)) * 2.0 - 1.0};
        worst = std::max(worst, chen_defect(r, kd, x, y, zs));
        // renormalized variant: constants cancel in the defect by definition;
        // verify through the slice values at a shifted constant
        (void)c;
      }
    }
    std::string path = cfg.out_dir + "/chen.csv";
    CsvWriter csv(path, "experiment=levy/chen; worst relative K-Chen defect", {"check", "value"});
    csv.raw_row({"chen_max", fmt(worst)});
    res.files.push_back(path);
    res.scalars["chen_max"] = worst;
    return res;
  }

  if (mode == "moments") {
    double H1 = cfg.require_double("levy.H1");
    double H2 = cfg.require_double("levy.H2");
    auto n_list = parse_list(cfg.get("levy.n_list", "2,3,4"));
    unsigned m_off = unsigned(cfg.get_long("levy.m_offset", 4));
    unsigned l_lo = unsigned(cfg.get_long("levy.l_lo", 0));
    unsigned l_hi = unsigned(cfg.get_long("levy.l_hi", 4));
    size_t samples = size_t(cfg.get_long("levy.samples", 1000));
    TestFunction psi = psi_by_name(cfg.get("levy.psi", "ff"));
    ScaledPoint base{cfg.get_double("levy.base_t", 0.25), cfg.get_double("levy.base_x", 0.0)};

    std::string path = cfg.out_dir + "/area_moments.csv";
    CsvWriter csv(path,
                  "experiment=levy/moments; moment = E|<hat xi^{2,n} - hat xi^{2,m}, S^{2^-l} "
                  "psi>|^2 over coupled draws",
                  {"n", "m", "level", "moment", "std_err", "canonical_moment"});
    double slope = 0;
    std::vector<double> dn, dmoment;
    unsigned ref_level = (l_lo + l_hi) / 2;
    for (size_t ni = 0; ni < n_list.size(); ++ni) {
      unsigned n = unsigned(n_list[ni]);
      // the level slope comes from the deepest pair; the other pairs only
      // feed the n-decay fit at the reference level
      bool full = (ni + 1 == n_list.size());
      unsigned lo = full ? l_lo : ref_level, hi = full ? l_hi : ref_level;
      auto scan = area_moment_scan(H1, H2, n, n + m_off, psi, lo, hi, base, samples, cfg.seed, kd);
      for (const auto &row : scan.rows) {
        csv.row({double(n), double(n + m_off), double(row.level), row.moment, row.std_err,
                 row.canonical_moment});
        if (row.level == ref_level) {
          dn.push_back(double(n));
          dmoment.push_back(log2_safe(row.moment));
        }
      }
      if (full) slope = scan.level_slope;
    }
    res.files.push_back(path);
    res.scalars["level_slope"] = slope;
    res.scalars["level_slope_dev"] = std::abs(slope - 2.0 * (4.0 - 4.0 * H1 - 2.0 * H2));
    if (dn.size() >= 2) res.scalars["n_decay"] = -fit_slope(dn, dmoment);
    return res;
  }

  if (mode == "slice") {
    double H1 = cfg.require_double("levy.H1");
    double H2 = cfg.require_double("levy.H2");
    unsigned n = unsigned(cfg.get_long("levy.n", 3));
    MeshDensity density = density_by_name(cfg.get("levy.density", "mc"));
    std::string variant = cfg.get("levy.variant", "renormalized");
    SheetSpec spec = make_sheet_spec(H1, H2, n, density);
    NoiseRealization r = sample_noise(spec, cfg.seed);
    double dt = std::ldexp(1.0, -2 * int(n) - 2);
    double dx = std::ldexp(1.0, -int(n) - 2);
    size_t nt = size_t(cfg.get_long("levy.window_nt", 33));
    size_t nx = size_t(cfg.get_long("levy.window_nx", 33));
    SpaceTimeGrid window(0.25, 0.25 + dt * double(nt - 1), nt, -dx * double(nx / 2), dx * double(nx / 2), nx);
    ScaledPoint base{cfg.get_double("levy.base_t", 0.25), cfg.get_double("levy.base_x", 0.0)};
    LevyAreaSlice slice;
    if (variant == "canonical") {
      slice = levy_area(r, kd, base, window, AreaVariant::canonical);
    } else {
      RenormConstant c = renorm_constant(n, H1, H2, kd);
      slice = levy_area(r, kd, base, window, AreaVariant::renormalized, &c);
    }
    std::string path = cfg.out_dir + "/area_slice.fhgrid";
    write_field(path, slice.values);
    res.files.push_back(path);
    double sup = 0;
    for (double v : slice.values.values()) sup = std::max(sup, std::abs(v));
    res.scalars["sup_abs"] = sup;
    res.scalars["renorm_value"] = slice.renorm_value;
    return res;
  }

  fail("levy.mode must be chen|moments|slice, got '", mode, "'");
}

RunResult run_solve(const ExperimentConfig &cfg) {
  const std::string mode = cfg.get("solve.mode", "single");
  RunResult res;

  double a = cfg.get_double("solve.a", 0.5);
  VectorFieldSpec F = bump_sin_field(a);
  SolverConfig scfg;
  scfg.L = cfg.get_double("solve.L", 2.0);
  scfg.nx = size_t(cfg.get_long("solve.nx", 256));
  scfg.T = cfg.get_double("solve.T", 0.0625);
  scfg.nt = size_t(cfg.get_long("solve.nt", 256));
  scfg.store_every = size_t(cfg.get_long("solve.store_every", 1));
  scfg.psi0 = psi0_by_name(cfg.get("solve.psi0", "bump"), cfg.get_double("solve.psi0_width", 1.0),
                           cfg.get_double("solve.psi0_amp", 1.0));

  if (mode == "single") {
    std::string variant = cfg.require_str("solve.variant");
    SolutionPath sol;
    if (variant == "ito") {
      double H2 = cfg.require_double("solve.H2");
      sol = solve_ito_reference(H2, F, scfg, cfg.seed, int(cfg.get_long("solve.eta_octave", 0)));
    } else {
      double H1 = cfg.require_double("solve.H1");
      double H2 = cfg.require_double("solve.H2");
      unsigned n = unsigned(cfg.get_long("solve.n", 4));
      MeshDensity density = density_by_name(cfg.get("solve.density", "solver"));
      SheetSpec spec = make_sheet_spec(H1, H2, n, density);
      NoiseRealization r = sample_noise(spec, cfg.seed);
      if (variant == "young") {
        sol = solve_young(r, F, scfg);
      } else if (variant == "renormalized") {
        RenormConstant c = renorm_constant(n, H1, H2, shared_kernel());
        sol = solve_renormalized(r, c, F, scfg);
      } else {
        fail("solve.variant must be young|renormalized|ito");
      }
    }
    std::string path = cfg.out_dir + "/path.fhgrid";
    write_field(path, sol.path);
    res.files.push_back(path);
    res.warnings = sol.warnings;
    double sup = 0;
    for (double v : sol.path.values()) sup = std::max(sup, std::abs(v));
    res.scalars["sup_abs"] = sup;
    res.scalars["renorm_value"] = sol.renorm_value;
    res.scalars["warning_count"] = double(sol.warnings.size());
    return res;
  }

  if (mode == "ito_compare") {
    double H2 = cfg.require_double("solve.H2");
    unsigned n = unsigned(cfg.get_long("solve.n", 4));
    size_t paths = size_t(cfg.get_long("solve.paths", 1000));
    MeshDensity density = density_by_name(cfg.get("solve.density", "solver"));
    int eta_octave = int(cfg.get_long("solve.eta_octave", long(n)));

    SheetSpec spec = make_sheet_spec(0.5, H2, n, density);
    RenormConstant c = renorm_constant(n, 0.5, H2, shared_kernel());
    size_t j0 = scfg.nx / 2; // x = 0 node

    std::vector<double> frac_vals(paths), ito_vals(paths);
    scfg.store_every = scfg.nt; // keep only the final slice
    parallel_for(paths, [&](size_t p) {
      NoiseRealization r = sample_noise(spec, cfg.seed + p);
      SolutionPath sol = solve_renormalized(r, c, F, scfg);
      frac_vals[p] = sol.path.at(sol.path.grid().nt() - 1, j0);
    }, cfg.threads);
    parallel_for(paths, [&](size_t p) {
      SolutionPath sol = solve_ito_reference(H2, F, scfg, cfg.seed + 0x17051995 + p, eta_octave);
      ito_vals[p] = sol.path.at(sol.path.grid().nt() - 1, j0);
    }, cfg.threads);

    auto stats = [](const std::vector<double> &v) {
      double m1 = 0, m2 = 0, m4 = 0;
      for (double x : v) {
        m1 += x;
        m2 += x * x;
      }
      m1 /= double(v.size());
      m2 /= double(v.size());
      for (double x : v) {
        double d = x * x - m2;
        m4 += d * d;
      }
      m4 /= double(v.size());
      double var = 0;
      for (double x : v) var += (x - m1) * (x - m1);
      var /= double(v.size());
      double se_mean = std::sqrt(var / double(v.size()));
      double se_m2 = std::sqrt(m4 / double(v.size()));
      return std::array<double, 4>{m1, se_mean, m2, se_m2};
    };
    auto fs = stats(frac_vals), is = stats(ito_vals);
    double z_mean = std::abs(fs[0] - is[0]) / std::hypot(fs[1], is[1]);
    double z_second = std::abs(fs[2] - is[2]) / std::hypot(fs[3], is[3]);

    std::string path = cfg.out_dir + "/ito_compare.csv";
    CsvWriter csv(path,
                  "experiment=solve/ito_compare; Y(T,0) statistics, renormalized fractional vs "
                  "Ito reference",
                  {"arm", "mean", "se_mean", "second_moment", "se_second"});
    csv.raw_row({"fractional", fmt(fs[0]), fmt(fs[1]), fmt(fs[2]), fmt(fs[3])});
    csv.raw_row({"ito", fmt(is[0]), fmt(is[1]), fmt(is[2]), fmt(is[3])});
    res.files.push_back(path);
    res.scalars["z_mean"] = z_mean;
    res.scalars["z_second"] = z_second;
    res.scalars["renorm_value"] = c.value;
    return res;
  }

  fail("solve.mode must be single|ito_compare, got '", mode, "'");
}

RunResult run_converge(const ExperimentConfig &cfg) {
  std::string variant_str = cfg.require_str("converge.variant");
  EquationVariant variant =
      variant_str == "young" ? EquationVariant::young : EquationVariant::renormalized;
  double H1 = cfg.require_double("converge.H1");
  double H2 = cfg.require_double("converge.H2");
  unsigned n_lo = unsigned(cfg.get_long("converge.n_lo", 3));
  unsigned n_hi = unsigned(cfg.get_long("converge.n_hi", 6));
  double gamma = cfg.get_double("converge.gamma", 0.5);
  double a = cfg.get_double("converge.a", 0.5);
  VectorFieldSpec F = bump_sin_field(a);

  SolverConfig scfg;
  scfg.L = cfg.get_double("converge.L", 2.0);
  scfg.nx = size_t(cfg.get_long("converge.nx", 1024));
  scfg.T = cfg.get_double("converge.T", 0.0625);
  scfg.nt = size_t(cfg.get_long("converge.nt", 1024));
  scfg.store_every = size_t(cfg.get_long("converge.store_every", 8));
  scfg.psi0 = psi0_by_name(cfg.get("converge.psi0", "bump"), cfg.get_double("converge.psi0_width", 1.0),
                           cfg.get_double("converge.psi0_amp", 1.0));

  Rect region{cfg.get_double("converge.region_t0", scfg.T / 4.0),
              cfg.get_double("converge.region_t1", scfg.T),
              cfg.get_double("converge.region_x0", -1.0), cfg.get_double("converge.region_x1", 1.0)};

  const KernelDecomposition *kd =
      variant == EquationVariant::renormalized ? &shared_kernel() : nullptr;
  MeshDensity density = density_by_name(cfg.get("converge.density", "solver"));
  ConvergenceStudy study =
      convergence_study(cfg.seed, n_lo, n_hi, variant, H1, H2, F, scfg, gamma, region, kd, density);

  std::string path = cfg.out_dir + "/convergence.csv";
  CsvWriter csv(path,
                "experiment=converge; sup_diff = sup |Y^{n+1} - Y^n|, holder_diff = parabolic "
                "Holder norm of the difference, drift = sup |Y_C - Y_{C=0}|",
                {"n", "sup_diff", "holder_diff", "drift_n", "c_n"});
  RunResult res;
  double sup_ratio_max = 0, holder_ratio_max = 0;
  for (size_t i = 0; i < study.rows.size(); ++i) {
    const auto &row = study.rows[i];
    csv.row({double(row.n), row.sup_diff, row.holder_diff, study.drift[i], study.c_values[i]});
    if (i > 0) {
      sup_ratio_max = std::max(sup_ratio_max, row.sup_diff / study.rows[i - 1].sup_diff);
      holder_ratio_max = std::max(holder_ratio_max, row.holder_diff / study.rows[i - 1].holder_diff);
    }
  }
  // last level's drift / constant
  if (variant == EquationVariant::renormalized) {
    csv.row({double(study.levels.back()), 0.0, 0.0, study.drift.back(), study.c_values.back()});
    std::vector<double> lc, ld;
    for (size_t i = 0; i < study.levels.size(); ++i) {
      lc.push_back(std::log2(study.c_values[i]));
      ld.push_back(log2_safe(study.drift[i]));
    }
    res.scalars["drift_corr"] = pearson(lc, ld);
    res.scalars["drift_vs_c_slope"] = fit_slope(lc, ld);
  }
  res.files.push_back(path);
  res.scalars["sup_ratio_max"] = sup_ratio_max;
  res.scalars["holder_ratio_max"] = holder_ratio_max;
  return res;
}

RunResult run_besov(const ExperimentConfig &cfg) {
  std::string target = cfg.require_str("besov.target");
  double H1 = cfg.require_double("besov.H1");
  double H2 = cfg.require_double("besov.H2");
  unsigned n = unsigned(cfg.get_long("besov.n", 8));
  unsigned l_lo = unsigned(cfg.get_long("besov.l_lo", 0));
  unsigned l_hi = unsigned(cfg.get_long("besov.l_hi", 6));
  Rect region{cfg.get_double("besov.region_t0", 0.0), cfg.get_double("besov.region_t1", 4.0),
              cfg.get_double("besov.region_x0", -4.0), cfg.get_double("besov.region_x1", 4.0)};
  TestFamily family = default_test_family();
  RunResult res;

  // deterministic level curve on the fine lattice
  SheetSpec fine_spec = make_sheet_spec(H1, H2, n, density_by_name(cfg.get("besov.density_exact", "fine")));
  TestFunction psi = psi_by_name(cfg.get("besov.psi", "mm"));
  std::vector<double> xs, ys;
  std::string path = cfg.out_dir + "/besov.csv";
  CsvWriter csv(path,
                "experiment=besov; exact_moment = E|<xi^n, S^{2^-l} psi>|^2 (lattice quadrature); "
                "realization slopes from spectral pairings",
                {"level", "exact_moment"});
  for (unsigned l = l_lo; l <= l_hi; ++l) {
    double m = exact_test_moment(fine_spec, psi, l, {0.0, 0.0});
    csv.row({double(l), m});
    xs.push_back(double(l));
    ys.push_back(log2_safe(m));
  }
  double exact_slope = fit_slope(xs, ys);
  res.scalars["exact_slope"] = exact_slope;
  res.scalars["exact_slope_dev"] = std::abs(exact_slope - 2.0 * (3.0 - 2.0 * H1 - H2));

  // one-realization estimates on the Monte Carlo lattice
  SheetSpec spec = make_sheet_spec(H1, H2, n, density_by_name(cfg.get("besov.density", "mc")));
  NoiseRealization r = sample_noise(spec, cfg.seed);
  SlopeOptions sopts;
  sopts.max_centers_per_level = size_t(cfg.get_long("besov.max_centers", 192));

  SpectralPairing noise_pair(r, FieldKind::noise);
  double alpha_noise = regularity_slope(noise_pair, family, region, l_lo, l_hi, sopts);
  res.scalars["alpha_noise"] = alpha_noise;
  res.scalars["alpha_noise_dev"] = std::abs(alpha_noise - (2.0 * H1 + H2 - 3.0));

  if (target == "gain") {
    auto khat = khat_for_spec(shared_kernel(), spec);
    SpectralPairing theta_pair(r, FieldKind::theta, khat);
    double alpha_theta = regularity_slope(theta_pair, family, region, l_lo, l_hi, sopts);
    res.scalars["alpha_theta"] = alpha_theta;
    res.scalars["gain"] = alpha_theta - alpha_noise;
  } else {
    require(target == "noise", "besov.target must be noise|gain");
  }
  res.files.push_back(path);
  return res;
}

} // namespace

RunResult run(const ExperimentConfig &cfg) {
  static const std::map<std::string, std::set<std::string>> schemas = {
      {"sample", {"H1", "H2", "n", "density", "field", "t0", "t1", "nt", "x0", "x1", "nx"}},
      {"moments",
       {"mode", "H1", "H2", "n", "density", "pairs", "mc_samples", "H_pairs", "k_lo", "k_hi",
        "l_lo", "l_hi", "psi"}},
      {"kernel", {"probes"}},
      {"renorm", {"H_pairs", "n_lo", "n_hi", "limit_check", "limit_n"}},
      {"levy",
       {"mode", "H1", "H2", "n", "seeds", "pairs", "probes", "density", "n_list", "m_offset",
        "l_lo", "l_hi", "samples", "psi", "base_t", "base_x", "variant", "window_nt", "window_nx"}},
      {"solve",
       {"mode", "variant", "H1", "H2", "n", "density", "L", "nx", "T", "nt", "store_every", "a",
        "psi0", "psi0_width", "psi0_amp", "eta_octave", "paths"}},
      {"converge",
       {"variant", "H1", "H2", "n_lo", "n_hi", "gamma", "a", "L", "nx", "T", "nt", "store_every",
        "psi0", "psi0_width", "psi0_amp", "region_t0", "region_t1", "region_x0", "region_x1",
        "density"}},
      {"besov",
       {"target", "H1", "H2", "n", "l_lo", "l_hi", "region_t0", "region_t1", "region_x0",
        "region_x1", "density", "density_exact", "psi", "max_centers"}},
  };

  auto schema = schemas.find(cfg.kind);
  require(schema != schemas.end(), "unknown experiment kind '", cfg.kind, "'");
  for (const auto &[k, v] : cfg.keys) {
    std::string sec = k.substr(0, k.find('.'));
    std::string key = k.substr(k.find('.') + 1);
    require(sec == cfg.kind, "config: section [", sec, "] does not match kind '", cfg.kind, "'");
    require(schema->second.count(key), "config: unknown key '", k, "' for kind '", cfg.kind, "'");
    (void)v;
  }

  fs::create_directories(cfg.out_dir);

  RunResult res;
  if (cfg.kind == "sample")
    res = run_sample(cfg);
  else if (cfg.kind == "moments")
    res = run_moments(cfg);
  else if (cfg.kind == "kernel")
    res = run_kernel(cfg);
  else if (cfg.kind == "renorm")
    res = run_renorm(cfg);
  else if (cfg.kind == "levy")
    res = run_levy(cfg);
  else if (cfg.kind == "solve")
    res = run_solve(cfg);
  else if (cfg.kind == "converge")
    res = run_converge(cfg);
  else if (cfg.kind == "besov")
    res = run_besov(cfg);

  // manifest and scalar summary land only after the experiment succeeded,
  // so a rejected configuration leaves no partial outputs behind
  write_manifest(cfg, cfg.out_dir + "/manifest.txt");
  std::string spath = cfg.out_dir + "/summary.csv";
  CsvWriter csv(spath, "experiment=" + cfg.kind + "; scalar summary", {"name", "value"});
  for (const auto &[k, v] : res.scalars) csv.raw_row({k, fmt(v)});
  res.files.push_back(spath);
  return res;
}

} // namespace fracheat
