#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

namespace evit::cli {

struct VoxelizeArgs {
  std::string input;
  std::string out;
  std::size_t channels = 9;
  std::size_t height = 192;
  std::size_t width = 240;
  // Text recordings carry no sensor size.
  std::uint16_t sensor_width = 0;
  std::uint16_t sensor_height = 0;
};

struct StatsArgs {
  std::string dataset;
  double threshold = 0.35;
  std::string hist_out;
  std::size_t bins = 18;
  std::string config = "paper";
};

struct SweepArgs {
  std::string dataset;
  std::string checkpoint;
  std::string thresholds = "0.0:0.7:0.05";
  std::string out;
  std::size_t time_repeat = 0;
};

struct TrainArgs {
  std::string dataset;
  std::string test_dataset;
  std::string mode = "fixed:0";
  std::string config = "toy";
  std::size_t epochs = 50;
  std::uint64_t seed = 0;
  std::optional<double> lr;
  std::optional<double> augment;
  std::string out;
  std::string metrics;
};

struct BenchArgs {
  std::string checkpoint;
  std::string random_config;
  std::uint64_t seed = 0;
  std::string dataset;
  double threshold = 0.35;
  std::size_t repeat = 5;
  std::size_t frames = 0;
};

struct SynthArgs {
  std::string out;
  std::string preset = "toy";
  std::size_t per_class = 40;
  std::uint64_t seed = 0;
};

struct CostArgs {
  std::uint64_t n = 180;
  std::string config = "paper";
  std::string mode = "paper";
};

int run_voxelize(const VoxelizeArgs& args);
int run_stats(const StatsArgs& args);
int run_sweep(const SweepArgs& args);
int run_train(const TrainArgs& args);
int run_bench(const BenchArgs& args);
int run_synth(const SynthArgs& args);
int run_cost(const CostArgs& args);

}  // namespace evit::cli
