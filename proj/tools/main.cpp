#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "evit/error.hpp"

namespace {

constexpr int kUsageOrInputError = 2;

}  // namespace

int main(int argc, char** argv) {
  using namespace evit::cli;

  CLI::App app{"Sparse-patch event-vision transformer toolkit"};
  app.require_subcommand(1);

  VoxelizeArgs vox;
  auto* voxelize = app.add_subcommand("voxelize", "Event recording to a normalized voxel-grid dump");
  voxelize->add_option("--input", vox.input, "EVT1 or text recording")->required();
  voxelize->add_option("--channels", vox.channels, "Temporal bins")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1024}));
  voxelize->add_option("--out", vox.out, "Grid dump path")->required();
  voxelize->add_option("--height", vox.height, "Frame height after padding");
  voxelize->add_option("--width", vox.width, "Frame width after padding");
  voxelize->add_option("--sensor-width", vox.sensor_width, "Sensor width for text input");
  voxelize->add_option("--sensor-height", vox.sensor_height, "Sensor height for text input");

  StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "Active-patch histogram over a dataset");
  stats_cmd->add_option("--dataset", stats.dataset, "Dataset directory")->required();
  stats_cmd->add_option("--threshold", stats.threshold, "Active ratio threshold")
      ->check(CLI::Range(0.0, 1.0));
  stats_cmd->add_option("--hist-out", stats.hist_out, "Histogram CSV path");
  stats_cmd->add_option("--bins", stats.bins, "Histogram bins")->check(CLI::PositiveNumber);
  stats_cmd->add_option("--config", stats.config, "Frame geometry: paper or toy");

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Evaluate a checkpoint across thresholds");
  sweep_cmd->add_option("--dataset", sw.dataset, "Dataset directory")->required();
  sweep_cmd->add_option("--checkpoint", sw.checkpoint, "VITC checkpoint")->required();
  sweep_cmd->add_option("--thresholds", sw.thresholds, "lo:hi:step");
  sweep_cmd->add_option("--out", sw.out, "CSV path (stdout if omitted)");
  sweep_cmd->add_option("--time-repeat", sw.time_repeat,
                        "Also time each threshold with this many repeats");

  TrainArgs tr;
  double lr = 0.0, aug = 0.0;
  auto* train = app.add_subcommand("train", "Train from scratch with batch size one");
  train->add_option("--dataset", tr.dataset, "Training dataset directory")->required();
  train->add_option("--test-dataset", tr.test_dataset, "Held-out dataset directory");
  train->add_option("--mode", tr.mode, "fixed:<tau> or mixed");
  train->add_option("--config", tr.config, "Model size: toy or paper");
  train->add_option("--epochs", tr.epochs, "Epochs");
  train->add_option("--seed", tr.seed, "Seed for initialization and shuffling");
  auto* lr_opt = train->add_option("--lr", lr, "AdamW learning rate");
  auto* aug_opt = train->add_option("--augment", aug, "Share of samples augmented")
                      ->check(CLI::Range(0.0, 1.0));
  train->add_option("--out", tr.out, "Checkpoint path")->required();
  train->add_option("--metrics", tr.metrics, "Metrics CSV path (default <out>.metrics.csv)");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Single-threaded forward throughput");
  auto* ckpt_opt = bench_cmd->add_option("--checkpoint", bench.checkpoint, "VITC checkpoint");
  bench_cmd->add_option("--random", bench.random_config, "Random weights for paper or toy")
      ->excludes(ckpt_opt);
  bench_cmd->add_option("--seed", bench.seed, "Seed for --random");
  bench_cmd->add_option("--dataset", bench.dataset, "Dataset directory")->required();
  bench_cmd->add_option("--threshold", bench.threshold, "Active ratio threshold");
  bench_cmd->add_option("--repeat", bench.repeat, "Timed repetitions")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--frames", bench.frames, "Use at most this many recordings");

  SynthArgs syn;
  auto* synth = app.add_subcommand("synth", "Write a synthetic three-shape dataset");
  synth->add_option("--out", syn.out, "Output directory")->required();
  synth->add_option("--preset", syn.preset, "toy or bench");
  synth->add_option("--per-class", syn.per_class, "Recordings per class");
  synth->add_option("--seed", syn.seed, "Corpus seed");

  CostArgs cost;
  auto* cost_cmd = app.add_subcommand("cost", "Analytic FLOPs/MACs report as JSON");
  cost_cmd->add_option("--n", cost.n, "Active patches");
  cost_cmd->add_option("--config", cost.config, "paper or toy");
  cost_cmd->add_option("--mode", cost.mode, "paper or full");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageOrInputError;
  }
  if (*lr_opt) tr.lr = lr;
  if (*aug_opt) tr.augment = aug;

  try {
    if (*voxelize) return run_voxelize(vox);
    if (*stats_cmd) return run_stats(stats);
    if (*sweep_cmd) return run_sweep(sw);
    if (*train) return run_train(tr);
    if (*bench_cmd) return run_bench(bench);
    if (*synth) return run_synth(syn);
    if (*cost_cmd) return run_cost(cost);
  } catch (const evit::Error& e) {
    std::cerr << "evit: " << evit::to_string(e.code()) << ": " << e.what() << '\n';
    return kUsageOrInputError;
  } catch (const std::exception& e) {
    std::cerr << "evit: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
