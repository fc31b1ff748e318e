#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evit/cost_model.hpp"
#include "evit/events.hpp"
#include "evit/vit.hpp"
#include "evit/voxel.hpp"

namespace evit {

struct ThresholdMode {
  enum class Kind { Fixed, Mixed };
  Kind kind = Kind::Fixed;
  double tau = 0.0;
  double lo = kMixedThresholdLow;
  double hi = kMixedThresholdHigh;

  static ThresholdMode fixed(double tau) { return {Kind::Fixed, tau}; }
  static ThresholdMode mixed() { return {Kind::Mixed}; }

  // "fixed:<tau>" or "mixed".
  static ThresholdMode parse(const std::string& text);
  std::string to_string() const;
};

struct TrainConfig {
  std::size_t epochs = 50;
  double lr = 1e-5;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;
  ThresholdMode threshold_mode;
  std::uint64_t seed = 0;
  double augment_probability = 0.0;  // share of samples given a random flip/affine warp

  void validate() const;

  // Recipe for training the toy model from scratch: a larger constant
  // learning rate than fine-tuning needs, half of the samples augmented.
  static TrainConfig toy(ThresholdMode mode, std::uint64_t seed);
};

struct OptimizerState {
  ViTParams m;
  ViTParams v;
  std::uint64_t step = 0;

  static OptimizerState for_params(const ViTParams& params);
};

// Decoupled weight decay:
//   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
//   theta <- theta - lr (m_hat / (sqrt(v_hat) + eps) + wd theta)
void adamw_step(ViTParams& params, const ViTParams& grads, OptimizerState& state,
                const TrainConfig& cfg);

struct Model {
  ViTConfig config;
  ViTParams params;
};

// A labeled frame after voxelization and resize/pad, before normalization.
struct Sample {
  VoxelGrid frame;
  std::size_t label = 0;
};

Sample make_sample(const EventRecording& rec, const ViTConfig& cfg);
std::vector<Sample> make_samples(std::span<const EventRecording> recs, const ViTConfig& cfg);

struct EpochMetrics {
  std::size_t epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  double mean_active_fraction = 0.0;
  double mean_macs = 0.0;
};

// Batch-size-one training: each sample is (optionally) augmented,
// normalized, thresholded, and followed by one AdamW update. The epoch's
// shuffle, threshold draws and augmentation seeds all come from a stream
// derived from (seed, epoch).
class Trainer {
 public:
  Trainer(Model model, TrainConfig cfg);

  EpochMetrics train_epoch(std::span<const Sample> dataset);

  const Model& model() const noexcept { return model_; }
  const OptimizerState& optimizer() const noexcept { return state_; }
  const TrainConfig& config() const noexcept { return cfg_; }
  std::size_t epochs_done() const noexcept { return epoch_; }

 private:
  Model model_;
  TrainConfig cfg_;
  OptimizerState state_;
  std::size_t epoch_ = 0;
};

struct EvalMetrics {
  double loss = 0.0;
  double accuracy = 0.0;
  double mean_active_fraction = 0.0;
  double mean_macs = 0.0;  // paper counting mode, per sample's n
  std::vector<std::size_t> active_counts;
};

// Read-only; throws EmptyDataset on an empty span.
EvalMetrics evaluate(const Model& model, std::span<const Sample> dataset, double threshold);

// "epoch,split,loss,accuracy,mean_active_fraction,mean_macs"
std::string metrics_csv_header();
std::string metrics_csv_row(std::size_t epoch, const std::string& split, double loss,
                            double accuracy, double mean_active_fraction, double mean_macs);

struct SweepRow {
  double threshold = 0.0;
  double mean_active_fraction = 0.0;
  double mean_macs = 0.0;
  std::optional<double> accuracy;
  std::optional<double> frames_per_second;
};

// Inclusive "lo:hi:step" grid, ascending.
std::vector<double> parse_threshold_range(const std::string& text);

std::vector<SweepRow> sweep(const Model& model, std::span<const Sample> dataset,
                            std::span<const double> thresholds);
std::string sweep_csv(std::span<const SweepRow> rows);

}  // namespace evit
