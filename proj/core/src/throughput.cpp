#include "evit/throughput.hpp"

#include <algorithm>
#include <chrono>

#include "evit/error.hpp"
#include "evit/patches.hpp"
#include "evit/voxel.hpp"

namespace evit {

ThroughputResult measure_throughput(std::span<const EventRecording> recordings,
                                    const ViTParams& params, const ViTConfig& cfg,
                                    double threshold, std::size_t repeat) {
  if (recordings.empty()) throw Error(ErrorCode::EmptyDataset, "nothing to benchmark");
  if (repeat == 0) throw Error(ErrorCode::InvalidArgument, "repeat must be >= 1");
  using clock = std::chrono::steady_clock;

  ThroughputResult r;
  r.threshold = threshold;
  r.frames = recordings.size();
  r.repeats = repeat;

  std::vector<PatchSet> sets;
  sets.reserve(recordings.size());
  const auto p0 = clock::now();
  for (const auto& rec : recordings) {
    const VoxelGrid frame =
        normalize_nonzero(frame_from_recording(rec, cfg.channels, cfg.frame_height, cfg.frame_width));
    sets.push_back(select_active(frame, threshold, cfg.patch));
  }
  const auto p1 = clock::now();
  r.preprocess_ms_per_frame =
      std::chrono::duration<double, std::milli>(p1 - p0).count() / static_cast<double>(r.frames);
  for (const auto& s : sets) r.mean_active_fraction += s.active_fraction();
  r.mean_active_fraction /= static_cast<double>(r.frames);

  std::vector<double> rates;
  for (std::size_t rep = 0; rep < repeat; ++rep) {
    std::vector<std::size_t> predictions;
    predictions.reserve(sets.size());
    const auto t0 = clock::now();
    for (const auto& s : sets) predictions.push_back(argmax(forward(s, params, cfg)));
    const auto t1 = clock::now();
    const double seconds = std::chrono::duration<double>(t1 - t0).count();
    rates.push_back(static_cast<double>(r.frames) / std::max(seconds, 1e-12));
    if (rep == 0) r.predictions = std::move(predictions);
  }
  std::sort(rates.begin(), rates.end());
  const std::size_t mid = rates.size() / 2;
  r.frames_per_second = rates.size() % 2 == 1 ? rates[mid] : 0.5 * (rates[mid - 1] + rates[mid]);
  return r;
}

}  // namespace evit
