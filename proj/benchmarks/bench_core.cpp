#include <benchmark/benchmark.h>

#include "rsr/diagnostics.hpp"
#include "rsr/estimators.hpp"
#include "rsr/oracles.hpp"

using namespace rsr;

namespace {

LabeledDataset bench_dataset(int D, int d, int n_in, int n_out) {
  Rng rng(0xBE7C);
  Subspace truth = random_subspace(D, d, rng);
  LabeledDataset inliers = gen_general_position(truth, n_in, rng);
  if (n_out == 0) return inliers;
  Vector dir(D);
  for (int i = 0; i < D; ++i) dir(i) = rng.normal();
  return with_outliers(inliers, gen_adversarial_line(dir, n_out, 1e6));
}

void BM_PrincipalAngles(benchmark::State& state) {
  const int D = static_cast<int>(state.range(0));
  Rng rng(1);
  Subspace a = random_subspace(D, 5, rng);
  Subspace b = random_subspace(D, 5, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(largest_principal_angle(a, b));
  }
}
BENCHMARK(BM_PrincipalAngles)->Arg(20)->Arg(100);

void BM_GeodesicStep(benchmark::State& state) {
  const int D = static_cast<int>(state.range(0));
  Rng rng(2);
  Subspace s = random_subspace(D, 5, rng);
  TangentDirection h = random_tangent(s, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(geodesic_step(s, h, 0.1));
  }
}
BENCHMARK(BM_GeodesicStep)->Arg(20)->Arg(100);

void BM_LadGradient(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  LabeledDataset ds = bench_dataset(50, 5, n, n / 5);
  const Matrix sph = spherize(ds.points());
  Rng rng(3);
  Subspace s = random_in_ball(*ds.truth(), 0.5, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lad_gradient(sph, s));
  }
}
BENCHMARK(BM_LadGradient)->Arg(200)->Arg(1000);

void BM_Spca(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  LabeledDataset ds = bench_dataset(50, 5, n, n / 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(spca(ds.points(), 5));
  }
}
BENCHMARK(BM_Spca)->Arg(200)->Arg(1000);

void BM_SggdFit(benchmark::State& state) {
  LabeledDataset ds = bench_dataset(50, 3, 200, 30);
  const Subspace init = spca(ds.points(), 3).subspace;
  SggdConfig cfg;
  cfg.max_iter = static_cast<int>(state.range(0));
  cfg.converge_tol = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sggd(ds.points(), 3, init, cfg));
  }
}
BENCHMARK(BM_SggdFit)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_RansacFit(benchmark::State& state) {
  LabeledDataset ds = bench_dataset(10, 3, 160, 40);
  RansacConfig cfg;
  cfg.max_trials = 10000;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    cfg.seed = ++seed;
    benchmark::DoNotOptimize(ransac_rsr(ds.points(), 3, cfg));
  }
}
BENCHMARK(BM_RansacFit);

void BM_L0BruteForce(benchmark::State& state) {
  const int n_in = static_cast<int>(state.range(0));
  LabeledDataset ds = bench_dataset(5, 3, n_in, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(l0_bruteforce(ds.points(), 3));
  }
}
BENCHMARK(BM_L0BruteForce)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_StabilityReport(benchmark::State& state) {
  LabeledDataset ds = bench_dataset(50, 5, 1000, 200);
  for (auto _ : state) {
    benchmark::DoNotOptimize(stability_lower_bound(ds));
  }
}
BENCHMARK(BM_StabilityReport)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
