#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "evit/events.hpp"

namespace evit {

// H x W x C frame of signed reals stored in (y, x, c) order, channel fastest.
class VoxelGrid {
 public:
  VoxelGrid() = default;
  VoxelGrid(std::size_t height, std::size_t width, std::size_t channels);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::size_t index(std::size_t y, std::size_t x, std::size_t c) const noexcept {
    return (y * width_ + x) * channels_ + c;
  }
  double& at(std::size_t y, std::size_t x, std::size_t c) noexcept { return values_[index(y, x, c)]; }
  double at(std::size_t y, std::size_t x, std::size_t c) const noexcept {
    return values_[index(y, x, c)];
  }

  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  double sum() const noexcept;
  std::size_t count_nonzero() const noexcept;
  bool all_finite() const noexcept;

  friend bool operator==(const VoxelGrid&, const VoxelGrid&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t channels_ = 0;
  std::vector<double> values_;
};

inline constexpr std::size_t kDefaultChannels = 9;
inline constexpr std::size_t kFrameHeight = 192;
inline constexpr std::size_t kFrameWidth = 240;

// Temporal bilinear accumulation into `channels` bins. Channel anchors are
// t_1 + c*dT with dT = (t_N - t_1)/(C - 1); every event deposits a total
// weight of exactly one, split over at most two neighbouring channels.
// The first channel's window is closed at t_1, and a zero time span puts
// everything in channel 0.
VoxelGrid build_voxel_grid(const EventRecording& rec, std::size_t channels = kDefaultChannels);

// Aspect-preserving bilinear resize (half-pixel centres, edge clamp), then
// zero padding on the bottom and right up to target_h x target_w.
VoxelGrid resize_pad(const VoxelGrid& grid, std::size_t target_h = kFrameHeight,
                     std::size_t target_w = kFrameWidth);

// Standardizes the nonzero entries with their own mean and population
// standard deviation; zeros stay zero. If sigma < 1e-8 the nonzeros become 0.
VoxelGrid normalize_nonzero(const VoxelGrid& grid);

struct AffineDraw {
  bool flip = false;
  double rotation_deg = 0.0;
  double shift_x = 0.0;  // fraction of width
  double shift_y = 0.0;  // fraction of height
};

AffineDraw draw_augmentation(std::uint64_t seed);

// Flip, rotate about the frame centre, translate; bilinear resampling with
// zero fill. augment(grid, seed) == apply_affine(grid, draw_augmentation(seed)).
VoxelGrid apply_affine(const VoxelGrid& grid, const AffineDraw& draw);
VoxelGrid augment(const VoxelGrid& grid, std::uint64_t rng_seed);

// build -> resize_pad (no normalization).
VoxelGrid frame_from_recording(const EventRecording& rec, std::size_t channels,
                               std::size_t target_h, std::size_t target_w);

// Dump format: u32 height, u32 width, u32 channels, then float32 values in
// (y, x, c) order, all little-endian.
std::string write_grid_dump(const VoxelGrid& grid);
VoxelGrid read_grid_dump(std::string_view bytes);

}  // namespace evit
