#include <benchmark/benchmark.h>

#include "basisgen/layers.hpp"
#include "basisgen/linalg.hpp"
#include "basisgen/lowrank.hpp"

using namespace basisgen;

static void BM_GenerateBasis(benchmark::State& state) {
  Rng rng(1);
  BasisGeneratorParams gen = BasisGeneratorParams::init(64, 64, 3, 7, rng);
  const Tensor z = sample_latent(rng, 64);
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate_basis(gen, z).data());
  }
}
BENCHMARK(BM_GenerateBasis);

static void BM_ReconstructFilters(benchmark::State& state) {
  const std::int64_t c = state.range(0);
  Rng rng(2);
  Tensor psi = Tensor::randn({3, 3, 7}, rng);
  Tensor a = Tensor::randn({7, c, c}, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(reconstruct_filters(psi, a).data());
  }
}
BENCHMARK(BM_ReconstructFilters)->Arg(16)->Arg(64);

static void BM_StochasticConv(benchmark::State& state) {
  Rng rng(3);
  StochasticConvLayer layer = StochasticConvLayer::init(16, 16, 3, 7, 64, 64, 1, rng);
  Tensor x = Tensor::randn({16, 16, 16}, rng);
  Rng draw(4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(stochastic_conv(x, layer, draw).data());
  }
}
BENCHMARK(BM_StochasticConv);

static void BM_EffectiveRank(benchmark::State& state) {
  const std::int64_t n = state.range(0);
  Rng rng(5);
  Tensor m = Tensor::randn({n, n / 2}, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(effective_rank(m, 1e-3));
  }
}
BENCHMARK(BM_EffectiveRank)->Arg(64)->Arg(128);

static void BM_StackFilters(benchmark::State& state) {
  Rng rng(6);
  std::vector<Tensor> banks;
  for (int i = 0; i < 200; ++i) banks.push_back(Tensor::randn({8, 8, 3, 3}, rng));
  for (auto _ : state) {
    benchmark::DoNotOptimize(stack_filters(banks).data());
  }
}
BENCHMARK(BM_StackFilters);

BENCHMARK_MAIN();
