#include <benchmark/benchmark.h>

#include "evit/kernels.hpp"
#include "evit/random.hpp"

namespace {

evit::Tensor2D filled(std::size_t r, std::size_t c, std::uint64_t seed) {
  evit::Rng rng(seed);
  evit::Tensor2D t(r, c);
  for (double& v : t.values()) v = evit::uniform(rng, -1, 1);
  return t;
}

// Token-count by width by output, the shapes of one encoder layer.
void BM_Matmul(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const auto p = static_cast<std::size_t>(state.range(2));
  const auto a = filled(m, k, 1), b = filled(k, p, 2);
  for (auto _ : state) benchmark::DoNotOptimize(evit::matmul(a, b));
  state.counters["GFLOPS"] =
      benchmark::Counter(2.0 * m * k * p, benchmark::Counter::kIsIterationInvariantRate,
                         benchmark::Counter::kIs1000);
}
BENCHMARK(BM_Matmul)
    ->Args({181, 768, 64})
    ->Args({91, 768, 64})
    ->Args({181, 768, 3072})
    ->Args({181, 3072, 768})
    ->Args({181, 2304, 768})
    ->Unit(benchmark::kMicrosecond);

void BM_Attention(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto q = filled(n, 64, 3), k = filled(n, 64, 4), v = filled(n, 64, 5);
  for (auto _ : state) benchmark::DoNotOptimize(evit::attention(q, k, v));
}
BENCHMARK(BM_Attention)->RangeMultiplier(2)->Range(16, 256)->Unit(benchmark::kMicrosecond);

void BM_LayerNorm(benchmark::State& state) {
  const auto x = filled(181, 768, 6);
  const std::vector<double> gain(768, 1.0), bias(768, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(evit::layer_norm(x, gain, bias));
}
BENCHMARK(BM_LayerNorm)->Unit(benchmark::kMicrosecond);

void BM_Gelu(benchmark::State& state) {
  const auto x = filled(181, 3072, 7);
  for (auto _ : state) benchmark::DoNotOptimize(evit::gelu(x));
}
BENCHMARK(BM_Gelu)->Unit(benchmark::kMicrosecond);

}  // namespace
