#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evit/random.hpp"
#include "evit/tensor.hpp"
#include "evit/voxel.hpp"

namespace evit {

struct PatchGrid {
  std::size_t patch = 16;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t channels = 0;

  std::size_t slots() const noexcept { return rows * cols; }
  std::size_t patch_len() const noexcept { return patch * patch * channels; }

  friend bool operator==(const PatchGrid&, const PatchGrid&) = default;
};

// Throws DimensionNotDivisible unless the frame tiles exactly.
PatchGrid patch_grid_for(const VoxelGrid& grid, std::size_t patch);

// Selected patches: row j of `vectors` is the flattened patch at slot
// positions[j] (row-major slot index). Flattening is channel fastest, then
// x, then y.
struct PatchSet {
  Tensor2D vectors;
  std::vector<std::size_t> positions;
  PatchGrid grid;

  std::size_t size() const noexcept { return positions.size(); }
  double active_fraction() const noexcept {
    return grid.slots() == 0 ? 0.0 : static_cast<double>(size()) / static_cast<double>(grid.slots());
  }
};

double compute_active_ratio(std::span<const double> patch);

// Copies the patch at `slot` into `out` (length patch_len).
void extract_patch(const VoxelGrid& grid, const PatchGrid& pg, std::size_t slot,
                   std::span<double> out);

// Keeps every slot whose active ratio is >= threshold, in row-major order.
PatchSet select_active(const VoxelGrid& grid, double threshold, std::size_t patch = 16);

// Active ratio of every slot, row-major.
std::vector<double> active_ratios(const VoxelGrid& grid, std::size_t patch);

// Inverse of selection: zero frame with each selected patch written back.
VoxelGrid scatter_patches(const PatchSet& set);

struct HistogramBin {
  double low = 0.0;
  double high = 0.0;
  std::size_t count = 0;
};

struct ActiveHistogram {
  std::vector<HistogramBin> bins;
  std::optional<double> mean_active_fraction;
};

// Equal-width bins over [0, slots]; the last bin is closed. An empty input
// yields no bins and no mean.
ActiveHistogram active_histogram(std::span<const PatchSet> sets, std::size_t bins);
ActiveHistogram active_histogram(std::span<const std::size_t> counts, std::size_t slots,
                                 std::size_t bins);

// "bin_low,bin_high,count" rows, then "mean_active_fraction,<value>".
std::string histogram_csv(const ActiveHistogram& hist);

inline constexpr double kMixedThresholdLow = 0.0;
inline constexpr double kMixedThresholdHigh = 0.7;

// Uniform draw in [0.0, 0.7] for mixed-threshold training.
double sample_threshold_mixed(Rng& rng);

}  // namespace evit
