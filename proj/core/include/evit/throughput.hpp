#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "evit/events.hpp"
#include "evit/vit.hpp"

namespace evit {

struct ThroughputResult {
  double threshold = 0.0;
  std::size_t frames = 0;
  std::size_t repeats = 0;
  double frames_per_second = 0.0;  // median over repeats, forward pass only
  double preprocess_ms_per_frame = 0.0;  // voxelize, resize, normalize, select
  double mean_active_fraction = 0.0;
  std::vector<std::size_t> predictions;
};

// Single-threaded. Preprocessing runs once outside the timed region; the
// forward passes over all frames are timed `repeat` times.
ThroughputResult measure_throughput(std::span<const EventRecording> recordings,
                                    const ViTParams& params, const ViTConfig& cfg,
                                    double threshold, std::size_t repeat);

}  // namespace evit
