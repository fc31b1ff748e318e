#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <vector>

#include "evit/checkpoint.hpp"
#include "evit/cost_model.hpp"
#include "evit/dataset.hpp"
#include "evit/error.hpp"
#include "evit/events.hpp"
#include "evit/patches.hpp"
#include "evit/throughput.hpp"
#include "evit/train.hpp"
#include "evit/voxel.hpp"

namespace evit::cli {
namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "short write to " + path);
}

// Writes to `path`, or to stdout when the path is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_file(path, text);
  }
}

ViTConfig named_config(const std::string& name) {
  if (name == "paper") return ViTConfig::paper();
  if (name == "toy") return ViTConfig::toy();
  throw Error(ErrorCode::InvalidArgument, "unknown config '" + name + "' (expected paper or toy)");
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

EventRecording read_any_recording(const VoxelizeArgs& args) {
  const std::string bytes = read_file(args.input);
  if (bytes.rfind("EVT1", 0) == 0) return read_binary(bytes);
  if (has_suffix(args.input, ".txt") || has_suffix(args.input, ".csv")) {
    if (args.sensor_width == 0 || args.sensor_height == 0) {
      throw Error(ErrorCode::InvalidArgument,
                  "text recordings need --sensor-width and --sensor-height");
    }
    return parse_text_recording(bytes, args.sensor_width, args.sensor_height);
  }
  return read_binary(bytes);  // reports BadMagic
}

// The model's class count follows the dataset.
void check_labels(const LabeledCorpus& corpus, const ViTConfig& cfg) {
  if (corpus.class_names.size() > cfg.num_classes) {
    throw Error(ErrorCode::ShapeMismatch,
                "dataset has " + std::to_string(corpus.class_names.size()) +
                    " classes but the model predicts " + std::to_string(cfg.num_classes));
  }
}

}  // namespace

int run_voxelize(const VoxelizeArgs& args) {
  const EventRecording rec = read_any_recording(args);
  VoxelGrid grid = build_voxel_grid(rec, args.channels);
  grid = normalize_nonzero(resize_pad(grid, args.height, args.width));
  write_file(args.out, write_grid_dump(grid));
  std::cerr << "wrote " << grid.height() << "x" << grid.width() << "x" << grid.channels()
            << " grid, " << grid.count_nonzero() << " nonzero entries\n";
  return 0;
}

int run_stats(const StatsArgs& args) {
  const ViTConfig cfg = named_config(args.config);
  const LabeledCorpus corpus = load_dataset_dir(args.dataset);
  std::vector<std::size_t> counts;
  counts.reserve(corpus.recordings.size());
  for (const auto& rec : corpus.recordings) {
    const VoxelGrid frame = normalize_nonzero(
        frame_from_recording(rec, cfg.channels, cfg.frame_height, cfg.frame_width));
    counts.push_back(select_active(frame, args.threshold, cfg.patch).size());
  }
  const ActiveHistogram hist = active_histogram(counts, cfg.slots(), args.bins);
  if (!args.hist_out.empty()) write_file(args.hist_out, histogram_csv(hist));
  std::printf("recordings %zu\nthreshold %.4f\nmean_active_fraction %.6f\n", counts.size(),
              args.threshold, hist.mean_active_fraction.value_or(0.0));
  return 0;
}

int run_sweep(const SweepArgs& args) {
  const Checkpoint ckpt = load_checkpoint_file(args.checkpoint);
  const LabeledCorpus corpus = load_dataset_dir(args.dataset);
  check_labels(corpus, ckpt.config);
  const Model model{ckpt.config, ckpt.params};
  const std::vector<Sample> samples = make_samples(corpus.recordings, model.config);
  const std::vector<double> thresholds = parse_threshold_range(args.thresholds);
  std::vector<SweepRow> rows = sweep(model, samples, thresholds);
  if (args.time_repeat > 0) {
    for (auto& row : rows) {
      row.frames_per_second = measure_throughput(corpus.recordings, model.params, model.config,
                                                 row.threshold, args.time_repeat)
                                  .frames_per_second;
    }
  }
  emit(args.out, sweep_csv(rows));
  return 0;
}

int run_train(const TrainArgs& args) {
  const LabeledCorpus corpus = load_dataset_dir(args.dataset);
  ViTConfig cfg = named_config(args.config);
  cfg.num_classes = corpus.class_names.size();

  const ThresholdMode mode = ThresholdMode::parse(args.mode);
  TrainConfig tc = args.config == "toy" ? TrainConfig::toy(mode, args.seed) : TrainConfig{};
  tc.threshold_mode = mode;
  tc.seed = args.seed;
  tc.epochs = args.epochs;
  if (args.lr) tc.lr = *args.lr;
  if (args.augment) tc.augment_probability = *args.augment;

  const std::vector<Sample> train_set = make_samples(corpus.recordings, cfg);
  std::vector<Sample> test_set;
  if (!args.test_dataset.empty()) {
    const LabeledCorpus test = load_dataset_dir(args.test_dataset);
    check_labels(test, cfg);
    test_set = make_samples(test.recordings, cfg);
  }
  const double eval_tau = mode.kind == ThresholdMode::Kind::Fixed ? mode.tau : 0.35;

  Trainer trainer(Model{cfg, init_params(cfg, args.seed)}, tc);
  std::ostringstream csv;
  csv << metrics_csv_header();
  for (std::size_t e = 0; e < tc.epochs; ++e) {
    const EpochMetrics m = trainer.train_epoch(train_set);
    csv << metrics_csv_row(m.epoch, "train", m.loss, m.accuracy, m.mean_active_fraction,
                           m.mean_macs);
    std::fprintf(stderr, "epoch %zu loss %.4f acc %.4f", m.epoch, m.loss, m.accuracy);
    if (!test_set.empty()) {
      const EvalMetrics t = evaluate(trainer.model(), test_set, eval_tau);
      csv << metrics_csv_row(m.epoch, "test", t.loss, t.accuracy, t.mean_active_fraction,
                             t.mean_macs);
      std::fprintf(stderr, "  test acc %.4f", t.accuracy);
    }
    std::fputc('\n', stderr);
  }

  const EvalMetrics final_train = evaluate(trainer.model(), train_set, eval_tau);
  save_checkpoint_file(trainer.model().params, cfg, args.out);
  write_file(args.metrics.empty() ? args.out + ".metrics.csv" : args.metrics, csv.str());
  std::printf("mode %s\nepochs %zu\ntrain_accuracy %.6f\n", mode.to_string().c_str(), tc.epochs,
              final_train.accuracy);
  if (!test_set.empty()) {
    std::printf("test_accuracy %.6f\n", evaluate(trainer.model(), test_set, eval_tau).accuracy);
  }
  return 0;
}

int run_bench(const BenchArgs& args) {
  ViTConfig cfg;
  ViTParams params;
  if (!args.checkpoint.empty()) {
    Checkpoint ckpt = load_checkpoint_file(args.checkpoint);
    cfg = ckpt.config;
    params = std::move(ckpt.params);
  } else if (!args.random_config.empty()) {
    cfg = named_config(args.random_config);
    params = init_params(cfg, args.seed);
  } else {
    throw Error(ErrorCode::InvalidArgument, "bench needs --checkpoint or --random");
  }
  LabeledCorpus corpus = load_dataset_dir(args.dataset);
  if (args.frames > 0 && corpus.recordings.size() > args.frames) {
    corpus.recordings.resize(args.frames);
  }
  const ThroughputResult r =
      measure_throughput(corpus.recordings, params, cfg, args.threshold, args.repeat);
  std::printf("threshold,frames,repeats,mean_active_fraction,frames_per_second,"
              "preprocess_ms_per_frame\n");
  std::printf("%.4f,%zu,%zu,%.6f,%.4f,%.4f\n", r.threshold, r.frames, r.repeats,
              r.mean_active_fraction, r.frames_per_second, r.preprocess_ms_per_frame);
  return 0;
}

int run_synth(const SynthArgs& args) {
  CorpusSpec spec;
  if (args.preset == "toy") {
    spec = toy_corpus(args.per_class, args.seed);
  } else if (args.preset == "bench") {
    spec = bench_corpus(args.per_class, args.seed);
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown preset '" + args.preset + "'");
  }
  const std::vector<EventRecording> recs = synth_corpus(spec);
  write_dataset_dir(args.out, recs, synthetic_class_names());
  std::printf("wrote %zu recordings to %s\n", recs.size(), args.out.c_str());
  return 0;
}

int run_cost(const CostArgs& args) {
  CountingMode mode;
  if (args.mode == "paper") {
    mode = CountingMode::Paper;
  } else if (args.mode == "full") {
    mode = CountingMode::Full;
  } else {
    throw Error(ErrorCode::InvalidArgument, "mode must be paper or full");
  }
  std::cout << to_json(cost_report(args.n, named_config(args.config), mode)) << '\n';
  return 0;
}

}  // namespace evit::cli
