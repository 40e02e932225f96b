#include "heisen/ifs.hpp"
#include "heisen/metrics.hpp"
#include "heisen/mra.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

using namespace heisen;

namespace {

std::vector<GroupPoint> random_points(std::size_t n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<GroupPoint> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back(GroupPoint::polarized(u(rng), u(rng), u(rng)));
  return pts;
}

void BM_CcDistanceClosedForm(benchmark::State& state) {
  const auto pts = random_points(256);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cc_distance(pts[i % 256], pts[(i + 1) % 256]));
    ++i;
  }
}
BENCHMARK(BM_CcDistanceClosedForm);

void BM_ContractionDistanceClosedForm(benchmark::State& state) {
  const auto pts = random_points(256);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(contraction_distance_exact(pts[i % 256], pts[(i + 1) % 256]));
    ++i;
  }
}
BENCHMARK(BM_ContractionDistanceClosedForm);

void BM_CcDistanceShoot(benchmark::State& state) {
  const auto pts = random_points(32);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cc_distance_shoot(pts[i % 32], pts[(i + 1) % 32]));
    ++i;
  }
}
BENCHMARK(BM_CcDistanceShoot)->Unit(benchmark::kMillisecond);

void BM_CcDistanceOracle(benchmark::State& state) {
  const auto pts = random_points(8);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cc_distance_upper(pts[i % 8], pts[(i + 1) % 8]));
    ++i;
  }
}
BENCHMARK(BM_CcDistanceOracle)->Unit(benchmark::kMillisecond);

void BM_ApplyIfs(benchmark::State& state) {
  const IfsSystem sys = build_ifs(0.5);
  const VoxelSet seed = unit_cube_seed(attractor_grid(sys, static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(apply_ifs(sys, seed, 1));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(seed.grid().size()));
}
BENCHMARK(BM_ApplyIfs)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ProjectGaussian(benchmark::State& state) {
  const IfsSystem sys = build_ifs(0.5);
  const ScalingFunction phi(attractor_fixed_point(sys, unit_cube_seed(attractor_grid(sys, 32)), 40, 0.0, 1).voxels,
                            2.0, 1);
  const TestFunction t = gaussian_test({0.5, 0.5, 0.6}, 0.3, 32);
  const SampledFunction f = SampledFunction::sample(t.grid, t.f, 1);
  const int level = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(project_onto_level(f, level, phi, 1));
}
BENCHMARK(BM_ProjectGaussian)->Arg(-1)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
