#include <benchmark/benchmark.h>

#include "basisgen/graph.hpp"
#include "basisgen/optim.hpp"
#include "basisgen/rng.hpp"

using namespace basisgen;

static void BM_Conv2dForward(benchmark::State& state) {
  const std::int64_t c = state.range(0);
  Rng rng(1);
  Tensor x = Tensor::randn({c, 16, 16}, rng);
  Tensor w = Tensor::randn({c, c, 3, 3}, rng);
  for (auto _ : state) {
    Graph g;
    benchmark::DoNotOptimize(conv2d(g.leaf(x), g.leaf(w), 1).value().data());
  }
}
BENCHMARK(BM_Conv2dForward)->Arg(8)->Arg(16)->Arg(32);

static void BM_Conv2dBackward(benchmark::State& state) {
  const std::int64_t c = state.range(0);
  Rng rng(2);
  Tensor x = Tensor::randn({c, 16, 16}, rng);
  Tensor w = Tensor::randn({c, c, 3, 3}, rng);
  for (auto _ : state) {
    Graph g;
    Tensor wc = w;
    Var wv = g.param(wc);
    Var loss = sum(conv2d(g.leaf(x), wv, 1));
    g.backward(loss);
    benchmark::DoNotOptimize(wc.grad().data());
  }
}
BENCHMARK(BM_Conv2dBackward)->Arg(8)->Arg(16)->Arg(32);

static void BM_AdamStep(benchmark::State& state) {
  const std::int64_t n = state.range(0);
  Rng rng(3);
  Tensor p = Tensor::randn({n}, rng);
  std::vector<double> g(static_cast<std::size_t>(n), 0.01);
  AdamState s = AdamState::for_tensor(p);
  for (auto _ : state) {
    adam_step(p, g, s);
    benchmark::DoNotOptimize(p.data());
  }
}
BENCHMARK(BM_AdamStep)->Arg(1024)->Arg(65536);

BENCHMARK_MAIN();
