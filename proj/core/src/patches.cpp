#include "evit/patches.hpp"

#include <algorithm>
#include <sstream>

#include "evit/error.hpp"

namespace evit {

PatchGrid patch_grid_for(const VoxelGrid& grid, std::size_t patch) {
  if (patch == 0 || grid.height() % patch != 0 || grid.width() % patch != 0) {
    throw Error(ErrorCode::DimensionNotDivisible,
                std::to_string(grid.height()) + "x" + std::to_string(grid.width()) +
                    " frame is not divisible by patch size " + std::to_string(patch));
  }
  return PatchGrid{patch, grid.height() / patch, grid.width() / patch, grid.channels()};
}

double compute_active_ratio(std::span<const double> patch) {
  if (patch.empty()) return 0.0;
  const auto nonzero = std::count_if(patch.begin(), patch.end(), [](double v) { return v != 0.0; });
  return static_cast<double>(nonzero) / static_cast<double>(patch.size());
}

void extract_patch(const VoxelGrid& grid, const PatchGrid& pg, std::size_t slot,
                   std::span<double> out) {
  const std::size_t y0 = (slot / pg.cols) * pg.patch;
  const std::size_t x0 = (slot % pg.cols) * pg.patch;
  const std::size_t run = pg.patch * pg.channels;
  std::size_t k = 0;
  for (std::size_t dy = 0; dy < pg.patch; ++dy) {
    const double* src = grid.values().data() + grid.index(y0 + dy, x0, 0);
    std::copy(src, src + run, out.begin() + static_cast<std::ptrdiff_t>(k));
    k += run;
  }
}

std::vector<double> active_ratios(const VoxelGrid& grid, std::size_t patch) {
  const PatchGrid pg = patch_grid_for(grid, patch);
  std::vector<double> ratios(pg.slots());
  std::vector<double> buf(pg.patch_len());
  for (std::size_t s = 0; s < pg.slots(); ++s) {
    extract_patch(grid, pg, s, buf);
    ratios[s] = compute_active_ratio(buf);
  }
  return ratios;
}

PatchSet select_active(const VoxelGrid& grid, double threshold, std::size_t patch) {
  const PatchGrid pg = patch_grid_for(grid, patch);
  const std::vector<double> ratios = active_ratios(grid, patch);

  PatchSet set;
  set.grid = pg;
  for (std::size_t s = 0; s < pg.slots(); ++s) {
    if (ratios[s] >= threshold) set.positions.push_back(s);
  }
  set.vectors = Tensor2D(set.positions.size(), pg.patch_len());
  for (std::size_t j = 0; j < set.positions.size(); ++j) {
    extract_patch(grid, pg, set.positions[j], set.vectors.row(j));
  }
  return set;
}

VoxelGrid scatter_patches(const PatchSet& set) {
  const PatchGrid& pg = set.grid;
  VoxelGrid grid(pg.rows * pg.patch, pg.cols * pg.patch, pg.channels);
  const std::size_t run = pg.patch * pg.channels;
  for (std::size_t j = 0; j < set.size(); ++j) {
    const std::size_t slot = set.positions[j];
    const std::size_t y0 = (slot / pg.cols) * pg.patch;
    const std::size_t x0 = (slot % pg.cols) * pg.patch;
    auto src = set.vectors.row(j);
    for (std::size_t dy = 0; dy < pg.patch; ++dy) {
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(dy * run), run,
                  grid.values().begin() + static_cast<std::ptrdiff_t>(grid.index(y0 + dy, x0, 0)));
    }
  }
  return grid;
}

ActiveHistogram active_histogram(std::span<const std::size_t> counts, std::size_t slots,
                                 std::size_t bins) {
  ActiveHistogram hist;
  if (counts.empty()) return hist;
  if (bins == 0) throw Error(ErrorCode::InvalidArgument, "histogram needs at least one bin");
  const double width = static_cast<double>(slots) / static_cast<double>(bins);
  hist.bins.resize(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    hist.bins[b].low = width * static_cast<double>(b);
    hist.bins[b].high = b + 1 == bins ? static_cast<double>(slots) : width * static_cast<double>(b + 1);
  }
  double fraction_sum = 0.0;
  for (std::size_t n : counts) {
    const auto b = width > 0.0 ? static_cast<std::size_t>(static_cast<double>(n) / width) : 0;
    ++hist.bins[std::min(b, bins - 1)].count;
    fraction_sum += slots == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(slots);
  }
  hist.mean_active_fraction = fraction_sum / static_cast<double>(counts.size());
  return hist;
}

ActiveHistogram active_histogram(std::span<const PatchSet> sets, std::size_t bins) {
  if (sets.empty()) return {};
  const std::size_t slots = sets.front().grid.slots();
  std::vector<std::size_t> counts;
  counts.reserve(sets.size());
  for (const PatchSet& s : sets) {
    if (s.grid.slots() != slots) {
      throw Error(ErrorCode::ShapeMismatch, "patch sets come from different frame sizes");
    }
    counts.push_back(s.size());
  }
  return active_histogram(counts, slots, bins);
}

std::string histogram_csv(const ActiveHistogram& hist) {
  std::ostringstream out;
  out.precision(10);
  out << "bin_low,bin_high,count\n";
  for (const auto& b : hist.bins) out << b.low << ',' << b.high << ',' << b.count << '\n';
  out << "mean_active_fraction,";
  if (hist.mean_active_fraction) out << *hist.mean_active_fraction;
  out << '\n';
  return out.str();
}

double sample_threshold_mixed(Rng& rng) {
  return uniform(rng, kMixedThresholdLow, kMixedThresholdHigh);
}

}  // namespace evit
