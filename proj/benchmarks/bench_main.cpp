#include <benchmark/benchmark.h>

#include "tsig/cylinder_aps.hpp"
#include "tsig/heat_kernel.hpp"
#include "tsig/signature.hpp"
#include "tsig/spectral.hpp"

namespace {

using namespace tsig;

FluxForm flux123(double h) { return FluxForm::constant(3, MultiIndex::from_axes({1, 2, 3}, 3), h); }

void BM_Betti(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(twisted_cohomology(FlatMetric::identity(3), FlatBundle::trivial(3), flux123(0.5), k));
  }
}
BENCHMARK(BM_Betti)->DenseRange(1, 4)->Unit(benchmark::kMillisecond);

void BM_Laplacian(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(twisted_laplacian(FlatMetric::identity(n), FlatBundle::trivial(n), FluxForm(n), 1));
  }
}
BENCHMARK(BM_Laplacian)->DenseRange(2, 5)->Unit(benchmark::kMillisecond);

void BM_EtaFinitePart(benchmark::State& state) {
  const OddSignatureOperator op(FlatMetric::identity(3), FlatBundle::trivial(3), flux123(0.5),
                                static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(eta_invariant(op, EtaMethod::ZetaFinitePart));
}
BENCHMARK(BM_EtaFinitePart)->Arg(3)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_SpectralFlow(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        spectral_flow(FlatMetric::identity(3), FlatBundle::trivial(3), flux123(0.5), static_cast<int>(state.range(0))));
  }
}
BENCHMARK(BM_SpectralFlow)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_ApsIndex(benchmark::State& state) {
  const CylinderProblem p{FlatMetric::identity(3), FlatBundle::trivial(3), flux123(0.5), 1.0, 2};
  for (auto _ : state) benchmark::DoNotOptimize(aps_cylinder_index(p));
}
BENCHMARK(BM_ApsIndex)->Unit(benchmark::kMillisecond);

void BM_HeatEigen(benchmark::State& state) {
  const std::vector<double> t = default_heat_grid();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        heat_trace_eigen(FlatMetric::identity(3), FlatBundle::trivial(3), FluxForm(3), t, static_cast<int>(state.range(0))));
  }
}
BENCHMARK(BM_HeatEigen)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_HeatImages(benchmark::State& state) {
  const std::vector<double> t = default_heat_grid();
  for (auto _ : state) benchmark::DoNotOptimize(heat_trace_images(FlatMetric::identity(3), FlatBundle::trivial(3), t));
}
BENCHMARK(BM_HeatImages)->Unit(benchmark::kMillisecond);

void BM_SignatureForm(benchmark::State& state) {
  const FluxForm h = FluxForm::constant(4, MultiIndex::from_axes({1, 2, 3}, 4), cplx{0.0, 0.4});
  for (auto _ : state) {
    benchmark::DoNotOptimize(hermitian_form(FlatMetric::identity(4), FlatBundle::trivial(4), h, 1.0, 1));
  }
}
BENCHMARK(BM_SignatureForm)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
