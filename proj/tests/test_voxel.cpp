#include <gtest/gtest.h>

#include <cmath>

#include "evit/error.hpp"
#include "evit/voxel.hpp"
#include "support.hpp"

using namespace evit;

namespace {

EventRecording make(std::uint16_t w, std::uint16_t h, std::vector<Event> events) {
  EventRecording r;
  r.width = w;
  r.height = h;
  r.events = std::move(events);
  return r;
}

}  // namespace

TEST(VoxelGrid, HandWeightsThreeChannels) {
  // dT = 50; the event at t=25 sits halfway between the first two anchors.
  const auto rec = make(8, 8, {{0, 0, 0, 1}, {2, 3, 25, 1}, {7, 7, 100, 1}});
  const auto g = build_voxel_grid(rec, 3);
  EXPECT_DOUBLE_EQ(g.at(3, 2, 0), 0.5);
  EXPECT_DOUBLE_EQ(g.at(3, 2, 1), 0.5);
  EXPECT_DOUBLE_EQ(g.at(3, 2, 2), 0.0);
  EXPECT_DOUBLE_EQ(g.at(0, 0, 0), 1.0);  // t = t_1 lands in the first channel only
  EXPECT_DOUBLE_EQ(g.at(0, 0, 1), 0.0);
  EXPECT_DOUBLE_EQ(g.at(7, 7, 2), 1.0);
  EXPECT_DOUBLE_EQ(g.at(7, 7, 1), 0.0);
}

TEST(VoxelGrid, EventOnAnchorGoesToOneChannel) {
  const auto rec = make(4, 4, {{0, 0, 0, 1}, {1, 1, 50, -1}, {3, 3, 100, 1}});
  const auto g = build_voxel_grid(rec, 3);
  EXPECT_DOUBLE_EQ(g.at(1, 1, 1), -1.0);
  EXPECT_DOUBLE_EQ(g.at(1, 1, 0), 0.0);
  EXPECT_DOUBLE_EQ(g.at(1, 1, 2), 0.0);
}

TEST(VoxelGrid, OppositePolaritiesCancel) {
  const auto rec = make(4, 4, {{0, 0, 0, 1}, {2, 2, 40, 1}, {2, 2, 40, -1}, {3, 3, 90, 1}});
  const auto g = build_voxel_grid(rec, 4);
  for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(g.at(2, 2, c), 0.0);
}

TEST(VoxelGrid, DegenerateSpanUsesFirstChannel) {
  const auto rec = make(4, 4, {{0, 0, 7, 1}, {1, 0, 7, -1}, {1, 0, 7, -1}});
  const auto g = build_voxel_grid(rec, 5);
  EXPECT_DOUBLE_EQ(g.at(0, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(g.at(0, 1, 0), -2.0);
  EXPECT_DOUBLE_EQ(g.sum(), -1.0);
}

TEST(VoxelGrid, Errors) {
  EXPECT_THROW(build_voxel_grid(make(4, 4, {}), 3), Error);
  EXPECT_THROW(build_voxel_grid(make(4, 4, {{0, 0, 0, 1}}), 1), Error);
}

TEST(VoxelGrid, MatchesDefinitionOracle) {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t C = 2 + rng() % 9;
    const auto rec = ref::random_recording(rng, 12, 9, 1 + rng() % 400, 1 + rng() % 100'000);
    const auto got = build_voxel_grid(rec, C);
    const auto want = ref::oracle_voxel_grid(rec, C);
    for (std::size_t i = 0; i < got.size(); ++i) {
      ASSERT_NEAR(got.values()[i], want.values()[i], 1e-12) << "trial " << trial;
    }
  }
}

TEST(VoxelGrid, ConservesMassLocallyAndSupportsAtMostTwoChannels) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto rec = ref::random_recording(rng, 16, 16, 1 + rng() % 200, 1 + rng() % 1'000'000);
    const std::size_t C = 2 + rng() % 10;
    // Per-event mass: voxelize each event against the recording's time range.
    for (std::size_t i = 0; i < rec.events.size(); i += 7) {
      auto single = rec;
      single.events = {rec.events.front(), rec.events[i], rec.events.back()};
      // Move the anchors to a corner pixel so only the probe event remains.
      const auto g = build_voxel_grid(single, C);
      auto base = single;
      base.events = {rec.events.front(), rec.events.back()};
      const auto gb = build_voxel_grid(base, C);
      const Event& e = rec.events[i];
      double mass = 0.0;
      int touched = 0;
      for (std::size_t c = 0; c < C; ++c) {
        const double d = g.at(e.y, e.x, c) - gb.at(e.y, e.x, c);
        mass += d;
        touched += d != 0.0;
      }
      EXPECT_NEAR(mass, e.p, 1e-12);
      EXPECT_LE(touched, 2);
      // Nothing leaks to other pixels.
      for (std::size_t y = 0; y < 16; ++y)
        for (std::size_t x = 0; x < 16; ++x)
          if (y != e.y || x != e.x) {
            for (std::size_t c = 0; c < C; ++c) ASSERT_EQ(g.at(y, x, c), gb.at(y, x, c));
          }
    }
    double total = 0.0;
    for (const auto& e : rec.events) total += e.p;
    EXPECT_NEAR(build_voxel_grid(rec, C).sum(), total, 1e-6);
  }
}

TEST(ResizePad, IdentityAtTargetSize) {
  Rng rng(1);
  VoxelGrid g(192, 240, 2);
  for (double& v : g.values()) v = uniform(rng, -1, 1);
  EXPECT_EQ(resize_pad(g), g);
}

TEST(ResizePad, ZeroStaysZero) {
  const VoxelGrid g(96, 120, 3);
  const auto out = resize_pad(g);
  EXPECT_EQ(out.height(), 192u);
  EXPECT_EQ(out.width(), 240u);
  EXPECT_EQ(out.count_nonzero(), 0u);
}

TEST(ResizePad, OneHotDoublesInBothAxes) {
  VoxelGrid g(96, 120, 1);
  g.at(40, 50, 0) = 1.0;
  EXPECT_NEAR(resize_pad(g).sum(), 4.0, 1e-6);
  EXPECT_NEAR(ref::oracle_resize_pad(g, 192, 240).sum(), 4.0, 1e-6);
}

TEST(ResizePad, MatchesPerPixelOracle) {
  Rng rng(8);
  const std::pair<std::size_t, std::size_t> dims[] = {{96, 120}, {180, 240}, {50, 70}, {37, 61}, {240, 300}};
  for (auto [h, w] : dims) {
    VoxelGrid g(h, w, 2);
    for (double& v : g.values()) v = uniform01(rng) < 0.3 ? uniform(rng, -2, 2) : 0.0;
    const auto got = resize_pad(g, 192, 240);
    const auto want = ref::oracle_resize_pad(g, 192, 240);
    for (std::size_t i = 0; i < got.size(); ++i) ASSERT_NEAR(got.values()[i], want.values()[i], 1e-12);
  }
}

TEST(ResizePad, PadsBottomAndRight) {
  VoxelGrid g(64, 64, 1);
  g.values().assign(g.size(), 1.0);
  const auto out = resize_pad(g, 192, 240);  // s = 3, content 192 x 192
  EXPECT_DOUBLE_EQ(out.at(191, 191, 0), 1.0);
  for (std::size_t y = 0; y < 192; ++y)
    for (std::size_t x = 192; x < 240; ++x) ASSERT_EQ(out.at(y, x, 0), 0.0);
}

TEST(Normalize, ZeroGridUnchanged) {
  const VoxelGrid g(4, 4, 2);
  EXPECT_EQ(normalize_nonzero(g), g);
}

TEST(Normalize, TwoValues) {
  VoxelGrid g(2, 2, 1);
  g.at(0, 0, 0) = 1.0;
  g.at(1, 1, 0) = 3.0;
  const auto n = normalize_nonzero(g);
  EXPECT_DOUBLE_EQ(n.at(0, 0, 0), -1.0);
  EXPECT_DOUBLE_EQ(n.at(1, 1, 0), 1.0);
  EXPECT_EQ(n.at(0, 1, 0), 0.0);
}

TEST(Normalize, ConstantNonzerosCollapse) {
  VoxelGrid g(2, 2, 1);
  g.at(0, 0, 0) = 2.5;
  g.at(1, 0, 0) = 2.5;
  EXPECT_EQ(normalize_nonzero(g).count_nonzero(), 0u);
}

TEST(Normalize, MeanZeroAndSupportKept) {
  Rng rng(4);
  VoxelGrid g(20, 30, 3);
  for (double& v : g.values()) v = uniform01(rng) < 0.2 ? std::round(uniform(rng, -3, 3) * 8) / 8 + 0.03 : 0.0;
  const auto n = normalize_nonzero(g);
  double sum = 0.0, sq = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    ASSERT_EQ(g.values()[i] != 0.0, n.values()[i] != 0.0);
    if (n.values()[i] != 0.0) {
      sum += n.values()[i];
      sq += n.values()[i] * n.values()[i];
      ++k;
    }
  }
  EXPECT_NEAR(sum / k, 0.0, 1e-6);
  EXPECT_NEAR(sq / k, 1.0, 1e-6);
}

TEST(Augment, DeterministicPerSeed) {
  Rng rng(2);
  VoxelGrid g(24, 32, 2);
  for (double& v : g.values()) v = uniform(rng, -1, 1);
  EXPECT_EQ(augment(g, 99), augment(g, 99));
  EXPECT_NE(augment(g, 99), augment(g, 100));
}

TEST(Augment, IdentityDraw) {
  Rng rng(2);
  VoxelGrid g(24, 32, 2);
  for (double& v : g.values()) v = uniform(rng, -1, 1);
  const auto out = apply_affine(g, AffineDraw{});
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(out.values()[i], g.values()[i], 1e-6);
}

TEST(Augment, FlipMirrorsColumns) {
  VoxelGrid g(3, 5, 1);
  g.at(1, 0, 0) = 2.0;
  const auto out = apply_affine(g, AffineDraw{.flip = true});
  EXPECT_NEAR(out.at(1, 4, 0), 2.0, 1e-12);
  EXPECT_NEAR(out.sum(), 2.0, 1e-12);
}

TEST(Augment, IntegerShiftMovesContent) {
  VoxelGrid g(10, 10, 1);
  g.at(4, 4, 0) = 1.0;
  const auto out = apply_affine(g, AffineDraw{.shift_x = 0.2, .shift_y = -0.1});
  EXPECT_NEAR(out.at(3, 6, 0), 1.0, 1e-9);
}

TEST(Augment, DrawsWithinRanges) {
  for (std::uint64_t s = 0; s < 500; ++s) {
    const auto d = draw_augmentation(s);
    EXPECT_LE(std::abs(d.rotation_deg), 15.0);
    EXPECT_LE(std::abs(d.shift_x), 0.1);
    EXPECT_LE(std::abs(d.shift_y), 0.1);
  }
}

TEST(Augment, ZeroStaysZero) {
  const VoxelGrid g(16, 16, 3);
  for (std::uint64_t s = 0; s < 20; ++s) EXPECT_EQ(augment(g, s).count_nonzero(), 0u);
}

TEST(GridDump, LayoutAndRoundTrip) {
  VoxelGrid g(3, 4, 2);
  for (std::size_t i = 0; i < g.size(); ++i) g.values()[i] = static_cast<double>(i) * 0.25 - 1.0;
  const std::string bytes = write_grid_dump(g);
  EXPECT_EQ(bytes.size(), 12u + 4u * g.size());
  EXPECT_EQ(read_grid_dump(bytes), g);  // quarter steps are exact in float
  EXPECT_THROW(read_grid_dump(bytes.substr(0, bytes.size() - 1)), Error);
}
