#include <benchmark/benchmark.h>

#include "fracheat/heat_kernel.hpp"
#include "fracheat/rough_model.hpp"
#include "fracheat/solver.hpp"
#include "fracheat/spectral_field.hpp"

using namespace fracheat;

namespace {

const SheetSpec &bench_spec() {
  static SheetSpec spec = make_sheet_spec(0.5, 0.8, 5, MeshDensity::mc());
  return spec;
}

void BM_SampleNoise(benchmark::State &state) {
  const auto &spec = bench_spec();
  uint64_t seed = 1;
  for (auto _ : state) {
    NoiseRealization r = sample_noise(spec, seed++);
    benchmark::DoNotOptimize(r.coeff.data());
  }
  state.SetItemsProcessed(int64_t(state.iterations()) * int64_t(spec.lattice_size() / 2));
}
BENCHMARK(BM_SampleNoise);

void BM_EvalSheetPoint(benchmark::State &state) {
  NoiseRealization r = sample_noise(bench_spec(), 7);
  ScaledPoint p{0.37, 0.21};
  for (auto _ : state) {
    double v = eval_field_point(r, FieldKind::sheet, p);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(BM_EvalSheetPoint);

void BM_NoiseGridRow(benchmark::State &state) {
  NoiseRealization r = sample_noise(bench_spec(), 7);
  size_t nx = size_t(state.range(0));
  std::vector<double> xs(nx), out(nx);
  for (size_t j = 0; j < nx; ++j) xs[j] = -2.0 + 4.0 * double(j) / double(nx);
  SpectralGridEvaluator eval(r, FieldKind::noise, xs);
  double t = 0;
  for (auto _ : state) {
    eval.eval_row(t, out.data());
    t += 1e-4;
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(int64_t(state.iterations()) * int64_t(nx));
}
BENCHMARK(BM_NoiseGridRow)->Arg(256)->Arg(1024);

void BM_HeatStep(benchmark::State &state) {
  size_t nx = size_t(state.range(0));
  std::vector<double> y(nx, 1.0);
  for (size_t j = 0; j < nx; ++j) y[j] = std::sin(2.0 * pi * double(j) / double(nx));
  for (auto _ : state) {
    y = heat_step(y, 1e-4, 2.0);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_HeatStep)->Arg(256)->Arg(2048);

void BM_KHat(benchmark::State &state) {
  static KernelDecomposition kd{KernelOptions{}};
  kd.table_edge_max(); // force the table build outside the timed loop
  double xi = 3.0, eta = 1.5;
  for (auto _ : state) {
    complex v = kd.K_hat(xi, eta);
    benchmark::DoNotOptimize(v);
    xi = xi < 1e5 ? xi * 1.01 : 3.0;
  }
}
BENCHMARK(BM_KHat);

void BM_RenormConstant(benchmark::State &state) {
  static KernelDecomposition kd{KernelOptions{}};
  kd.table_edge_max();
  for (auto _ : state) {
    RenormConstant c = renorm_constant(unsigned(state.range(0)), 0.5, 0.8, kd);
    benchmark::DoNotOptimize(c.value);
  }
}
BENCHMARK(BM_RenormConstant)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
