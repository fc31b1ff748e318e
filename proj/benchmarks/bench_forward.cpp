#include <benchmark/benchmark.h>

#include <algorithm>
#include <numeric>

#include "evit/cost_model.hpp"
#include "evit/dataset.hpp"
#include "evit/patches.hpp"
#include "evit/random.hpp"
#include "evit/vit.hpp"
#include "evit/voxel.hpp"

namespace {

evit::PatchSet patch_set(const evit::ViTConfig& cfg, std::size_t n, std::uint64_t seed) {
  evit::Rng rng(seed);
  std::vector<std::size_t> pos(cfg.slots());
  std::iota(pos.begin(), pos.end(), 0);
  std::shuffle(pos.begin(), pos.end(), rng);
  pos.resize(n);
  std::sort(pos.begin(), pos.end());
  evit::PatchSet set;
  set.grid = {cfg.patch, cfg.frame_height / cfg.patch, cfg.frame_width / cfg.patch, cfg.channels};
  set.vectors = evit::Tensor2D(n, cfg.patch_len());
  for (double& v : set.vectors.values()) v = evit::uniform(rng, -1, 1);
  set.positions = std::move(pos);
  return set;
}

// Paper-sized forward pass at n active patches.
void BM_ForwardPaper(benchmark::State& state) {
  const auto cfg = evit::ViTConfig::paper();
  static const auto params = evit::init_params(cfg, 1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto set = patch_set(cfg, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(evit::forward(set, params, cfg));
  state.counters["GMACs"] = evit::model_macs(n, cfg) / 1e9;
}
BENCHMARK(BM_ForwardPaper)->Arg(30)->Arg(60)->Arg(90)->Arg(120)->Arg(180)->Unit(benchmark::kMillisecond)
    ->Iterations(2);

void BM_ForwardToy(benchmark::State& state) {
  const auto cfg = evit::ViTConfig::toy();
  const auto params = evit::init_params(cfg, 1);
  const auto set = patch_set(cfg, static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(evit::forward(set, params, cfg));
}
BENCHMARK(BM_ForwardToy)->Arg(8)->Arg(32)->Arg(64)->Unit(benchmark::kMicrosecond);

// Voxelize, resize, normalize and select for one bench-corpus recording.
void BM_Preprocess(benchmark::State& state) {
  auto spec = evit::bench_corpus(1, 4);
  const auto rec = evit::synth_corpus(spec).front();
  for (auto _ : state) {
    const auto frame = evit::normalize_nonzero(evit::frame_from_recording(rec, 9, 192, 240));
    benchmark::DoNotOptimize(evit::select_active(frame, 0.35));
  }
}
BENCHMARK(BM_Preprocess)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
