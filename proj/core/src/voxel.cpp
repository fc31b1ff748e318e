#include "evit/voxel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "byte_io.hpp"
#include "evit/error.hpp"
#include "evit/random.hpp"

namespace evit {

VoxelGrid::VoxelGrid(std::size_t height, std::size_t width, std::size_t channels)
    : height_(height), width_(width), channels_(channels), values_(height * width * channels, 0.0) {}

double VoxelGrid::sum() const noexcept {
  double s = 0.0;
  for (double v : values_) s += v;
  return s;
}

std::size_t VoxelGrid::count_nonzero() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(values_.begin(), values_.end(), [](double v) { return v != 0.0; }));
}

bool VoxelGrid::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

VoxelGrid build_voxel_grid(const EventRecording& rec, std::size_t channels) {
  if (channels < 2) throw Error(ErrorCode::InvalidArgument, "channel count must be >= 2");
  if (rec.empty()) throw Error(ErrorCode::EmptyRecording, "cannot voxelize an empty recording");

  VoxelGrid grid(rec.height, rec.width, channels);
  const std::uint64_t t1 = rec.t_first();
  const double span = static_cast<double>(rec.t_last() - t1);

  auto deposit = [&](const Event& e, std::size_t c, double w) {
    if (e.x >= rec.width || e.y >= rec.height) {
      throw Error(ErrorCode::OutOfBounds, "event outside sensor");
    }
    grid.at(e.y, e.x, c) += w * e.p;
  };

  if (span == 0.0) {
    for (const Event& e : rec.events) deposit(e, 0, 1.0);
    return grid;
  }

  const auto last = static_cast<std::ptrdiff_t>(channels - 1);
  const double dt = span / static_cast<double>(last);
  std::vector<double> anchor(channels);
  for (std::size_t c = 0; c < channels; ++c) anchor[c] = static_cast<double>(c) * dt;
  anchor[channels - 1] = span;

  // Window of channel c is (anchor[c-1], anchor[c+1]], with anchor[-1] = 0
  // closed for c = 0 and anchor[C] = span.
  auto lower = [&](std::ptrdiff_t c) { return c == 0 ? 0.0 : anchor[c - 1]; };
  auto upper = [&](std::ptrdiff_t c) { return c == last ? span : anchor[c + 1]; };

  for (const Event& e : rec.events) {
    const double tau = static_cast<double>(e.t - t1);
    const auto base = std::clamp(static_cast<std::ptrdiff_t>(std::floor(tau / dt)),
                                 std::ptrdiff_t{0}, last);
    for (std::ptrdiff_t c = std::max<std::ptrdiff_t>(0, base - 1);
         c <= std::min(last, base + 2); ++c) {
      const bool inside = (c == 0 ? tau >= lower(c) : tau > lower(c)) && tau <= upper(c);
      if (!inside) continue;
      const double w = std::clamp(1.0 - std::abs(tau - anchor[c]) / dt, 0.0, 1.0);
      if (w > 0.0) deposit(e, static_cast<std::size_t>(c), w);
    }
  }
  return grid;
}

namespace {

struct Tap {
  std::size_t i0, i1;
  double w0, w1;
};

// Half-pixel-centre bilinear taps along one axis, clamped at the edges.
std::vector<Tap> resize_taps(std::size_t in, std::size_t out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t o = 0; o < out; ++o) {
    const double src = std::clamp((static_cast<double>(o) + 0.5) * scale - 0.5, 0.0,
                                  static_cast<double>(in - 1));
    const auto i0 = static_cast<std::size_t>(std::floor(src));
    const std::size_t i1 = std::min(i0 + 1, in - 1);
    const double f = src - static_cast<double>(i0);
    taps[o] = {i0, i1, 1.0 - f, f};
  }
  return taps;
}

}  // namespace

VoxelGrid resize_pad(const VoxelGrid& grid, std::size_t target_h, std::size_t target_w) {
  const std::size_t h = grid.height(), w = grid.width(), ch = grid.channels();
  if (h == 0 || w == 0 || target_h == 0 || target_w == 0) {
    throw Error(ErrorCode::InvalidArgument, "resize_pad needs non-degenerate dimensions");
  }
  const double s = std::min(static_cast<double>(target_h) / static_cast<double>(h),
                            static_cast<double>(target_w) / static_cast<double>(w));
  const std::size_t nh = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(static_cast<double>(h) * s)), 1, target_h);
  const std::size_t nw = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(static_cast<double>(w) * s)), 1, target_w);

  VoxelGrid out(target_h, target_w, ch);
  if (nh == h && nw == w) {
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        for (std::size_t c = 0; c < ch; ++c) out.at(y, x, c) = grid.at(y, x, c);
    return out;
  }

  const auto ty = resize_taps(h, nh);
  const auto tx = resize_taps(w, nw);
  for (std::size_t y = 0; y < nh; ++y) {
    const Tap& a = ty[y];
    for (std::size_t x = 0; x < nw; ++x) {
      const Tap& b = tx[x];
      for (std::size_t c = 0; c < ch; ++c) {
        out.at(y, x, c) = a.w0 * (b.w0 * grid.at(a.i0, b.i0, c) + b.w1 * grid.at(a.i0, b.i1, c)) +
                          a.w1 * (b.w0 * grid.at(a.i1, b.i0, c) + b.w1 * grid.at(a.i1, b.i1, c));
      }
    }
  }
  return out;
}

VoxelGrid normalize_nonzero(const VoxelGrid& grid) {
  VoxelGrid out = grid;
  std::size_t n = 0;
  double mean = 0.0;
  for (double v : grid.values()) {
    if (v != 0.0) {
      ++n;
      mean += v;
    }
  }
  if (n == 0) return out;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : grid.values()) {
    if (v != 0.0) var += (v - mean) * (v - mean);
  }
  const double sigma = std::sqrt(var / static_cast<double>(n));
  for (double& v : out.values()) {
    if (v == 0.0) continue;
    v = sigma < 1e-8 ? 0.0 : (v - mean) / sigma;
  }
  return out;
}

AffineDraw draw_augmentation(std::uint64_t seed) {
  Rng rng(seed);
  AffineDraw d;
  d.flip = uniform01(rng) < 0.5;
  d.rotation_deg = uniform(rng, -15.0, 15.0);
  d.shift_x = uniform(rng, -0.1, 0.1);
  d.shift_y = uniform(rng, -0.1, 0.1);
  return d;
}

VoxelGrid apply_affine(const VoxelGrid& grid, const AffineDraw& draw) {
  const std::size_t h = grid.height(), w = grid.width(), ch = grid.channels();
  VoxelGrid out(h, w, ch);
  const double cx = (static_cast<double>(w) - 1.0) / 2.0;
  const double cy = (static_cast<double>(h) - 1.0) / 2.0;
  const double th = draw.rotation_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(th), sn = std::sin(th);
  const double dx = draw.shift_x * static_cast<double>(w);
  const double dy = draw.shift_y * static_cast<double>(h);

  auto sample = [&](std::ptrdiff_t y, std::ptrdiff_t x, std::size_t c) {
    if (y < 0 || x < 0 || y >= static_cast<std::ptrdiff_t>(h) || x >= static_cast<std::ptrdiff_t>(w))
      return 0.0;
    return grid.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c);
  };

  for (std::size_t oy = 0; oy < h; ++oy) {
    for (std::size_t ox = 0; ox < w; ++ox) {
      // Invert translate, then rotate, then flip.
      const double qx = static_cast<double>(ox) - dx - cx;
      const double qy = static_cast<double>(oy) - dy - cy;
      double sx = cs * qx + sn * qy + cx;
      const double sy = -sn * qx + cs * qy + cy;
      if (draw.flip) sx = static_cast<double>(w) - 1.0 - sx;
      if (sx <= -1.0 || sy <= -1.0 || sx >= static_cast<double>(w) || sy >= static_cast<double>(h))
        continue;
      const auto x0 = static_cast<std::ptrdiff_t>(std::floor(sx));
      const auto y0 = static_cast<std::ptrdiff_t>(std::floor(sy));
      const double fx = sx - static_cast<double>(x0), fy = sy - static_cast<double>(y0);
      for (std::size_t c = 0; c < ch; ++c) {
        double v = (1.0 - fy) * (1.0 - fx) * sample(y0, x0, c);
        if (fx != 0.0) v += (1.0 - fy) * fx * sample(y0, x0 + 1, c);
        if (fy != 0.0) {
          v += fy * (1.0 - fx) * sample(y0 + 1, x0, c);
          if (fx != 0.0) v += fy * fx * sample(y0 + 1, x0 + 1, c);
        }
        out.at(oy, ox, c) = v;
      }
    }
  }
  return out;
}

VoxelGrid augment(const VoxelGrid& grid, std::uint64_t rng_seed) {
  return apply_affine(grid, draw_augmentation(rng_seed));
}

VoxelGrid frame_from_recording(const EventRecording& rec, std::size_t channels,
                               std::size_t target_h, std::size_t target_w) {
  return resize_pad(build_voxel_grid(rec, channels), target_h, target_w);
}

std::string write_grid_dump(const VoxelGrid& grid) {
  std::string out;
  out.reserve(12 + 4 * grid.size());
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(grid.height()));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(grid.width()));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(grid.channels()));
  for (double v : grid.values()) detail::put_f32(out, static_cast<float>(v));
  return out;
}

VoxelGrid read_grid_dump(std::string_view bytes) {
  detail::ByteReader in(bytes);
  const auto h = in.get_le<std::uint32_t>();
  const auto w = in.get_le<std::uint32_t>();
  const auto c = in.get_le<std::uint32_t>();
  VoxelGrid grid(h, w, c);
  if (in.remaining() != 4 * grid.size()) {
    throw Error(in.remaining() < 4 * grid.size() ? ErrorCode::TruncatedPayload
                                                  : ErrorCode::CountMismatch,
                "grid dump payload size");
  }
  for (double& v : grid.values()) v = in.get_f32();
  return grid;
}

}  // namespace evit
