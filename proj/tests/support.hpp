#pragma once

// Reference implementations and fixtures shared by the unit tests and the
// acceptance runner. Everything here is written independently of the
// library kernels: plain loops, no blocking, no shared helpers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "evit/events.hpp"
#include "evit/random.hpp"
#include "evit/tensor.hpp"
#include "evit/vit.hpp"
#include "evit/voxel.hpp"

namespace evit::ref {

inline Tensor2D random_tensor(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  Tensor2D t(rows, cols);
  for (double& v : t.values()) v = uniform(rng, -scale, scale);
  return t;
}

inline Tensor2D naive_matmul(const Tensor2D& a, const Tensor2D& b) {
  Tensor2D c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

// |a - b| / max(|a|, |b|), with the denominator floored so that entries
// that are zero up to rounding do not dominate.
inline double rel_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Central differences of a scalar function with respect to every entry of
// `x`, compared against `analytic`. Returns the largest relative error.
inline double check_gradient(Tensor2D& x, const Tensor2D& analytic,
                             const std::function<double()>& f, double h = 1e-5) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double& v = x.data()[i];
    const double saved = v;
    v = saved + h;
    const double up = f();
    v = saved - h;
    const double down = f();
    v = saved;
    worst = std::max(worst, rel_error(analytic.data()[i], (up - down) / (2.0 * h)));
  }
  return worst;
}

// Tiny model used by the gradient checks: D=8, D_h=4, k=2, L=1 over a 4x4x2
// frame cut into 2x2 patches (four slots).
inline ViTConfig gradcheck_config() {
  ViTConfig c;
  c.patch = 2;
  c.channels = 2;
  c.dim = 8;
  c.head_dim = 4;
  c.heads = 2;
  c.layers = 1;
  c.mlp_dim = 16;
  c.frame_height = 4;
  c.frame_width = 4;
  c.num_classes = 3;
  return c;
}

// Initialization with larger deviations than training uses so that every
// path carries a gradient well above rounding noise.
inline ViTParams lively_params(const ViTConfig& cfg, std::uint64_t seed) {
  ViTParams p = make_params(cfg);
  Rng rng(seed);
  for_each_tensor(p, [&](const std::string& name, Tensor2D& t) {
    const bool gain = name.find("gain") != std::string::npos;
    for (double& v : t.values()) v = gain ? 1.0 + uniform(rng, -0.3, 0.3) : uniform(rng, -0.5, 0.5);
  });
  return p;
}

// Random patch set with the given slots for a config.
inline PatchSet random_patch_set(const ViTConfig& cfg, std::vector<std::size_t> positions,
                                 Rng& rng) {
  PatchSet set;
  set.grid = {cfg.patch, cfg.frame_height / cfg.patch, cfg.frame_width / cfg.patch, cfg.channels};
  set.vectors = random_tensor(positions.size(), cfg.patch_len(), rng);
  set.positions = std::move(positions);
  return set;
}

// Recording whose events are uniformly spread over the sensor and time.
inline EventRecording random_recording(Rng& rng, std::uint16_t w, std::uint16_t h,
                                       std::size_t count, std::uint64_t t_max) {
  EventRecording r;
  r.width = w;
  r.height = h;
  std::vector<std::uint64_t> ts(count);
  for (auto& t : ts) t = rng() % (t_max + 1);
  std::sort(ts.begin(), ts.end());
  for (std::uint64_t t : ts) {
    r.events.push_back({static_cast<std::uint16_t>(rng() % w), static_cast<std::uint16_t>(rng() % h),
                        t, static_cast<std::int8_t>(rng() % 2 ? 1 : -1)});
  }
  return r;
}

// Straight from the definition: each channel c in 1..C has anchor
// t1 + (c-1) dT and window (t'_{c-1}, t'_{c+1}] with the outer anchors
// pinned to t1 and tN; channel 1 is closed below. Zero span -> channel 1.
inline VoxelGrid oracle_voxel_grid(const EventRecording& rec, std::size_t C) {
  VoxelGrid g(rec.height, rec.width, C);
  const double t1 = static_cast<double>(rec.events.front().t);
  const double tn = static_cast<double>(rec.events.back().t);
  if (tn == t1) {
    for (const auto& e : rec.events) g.at(e.y, e.x, 0) += e.p;
    return g;
  }
  const double dT = (tn - t1) / static_cast<double>(C - 1);
  auto anchor = [&](std::size_t c) {  // 0..C+1, 1-based channel anchors
    if (c == 0) return t1;
    if (c == C + 1 || c == C) return tn;
    return t1 + static_cast<double>(c - 1) * dT;
  };
  for (const auto& e : rec.events) {
    const double t = static_cast<double>(e.t);
    for (std::size_t c = 1; c <= C; ++c) {
      const bool above = c == 1 ? t >= anchor(0) : t > anchor(c - 1);
      if (!above || t > anchor(c + 1)) continue;
      const double w = std::clamp(1.0 - std::abs(t - anchor(c)) / dT, 0.0, 1.0);
      g.at(e.y, e.x, c - 1) += w * e.p;
    }
  }
  return g;
}

// Bilinear resize written per output pixel: sample the source at the
// half-pixel-aligned coordinate, clamping at the border.
inline double oracle_bilinear(const VoxelGrid& g, double sy, double sx, std::size_t c) {
  sy = std::clamp(sy, 0.0, static_cast<double>(g.height() - 1));
  sx = std::clamp(sx, 0.0, static_cast<double>(g.width() - 1));
  const auto y0 = static_cast<std::size_t>(sy), x0 = static_cast<std::size_t>(sx);
  const std::size_t y1 = std::min(y0 + 1, g.height() - 1), x1 = std::min(x0 + 1, g.width() - 1);
  const double fy = sy - static_cast<double>(y0), fx = sx - static_cast<double>(x0);
  return (1 - fy) * (1 - fx) * g.at(y0, x0, c) + (1 - fy) * fx * g.at(y0, x1, c) +
         fy * (1 - fx) * g.at(y1, x0, c) + fy * fx * g.at(y1, x1, c);
}

inline VoxelGrid oracle_resize_pad(const VoxelGrid& g, std::size_t th, std::size_t tw) {
  const double s = std::min(static_cast<double>(th) / static_cast<double>(g.height()),
                            static_cast<double>(tw) / static_cast<double>(g.width()));
  const auto nh = static_cast<std::size_t>(std::llround(static_cast<double>(g.height()) * s));
  const auto nw = static_cast<std::size_t>(std::llround(static_cast<double>(g.width()) * s));
  VoxelGrid out(th, tw, g.channels());
  const double ry = static_cast<double>(g.height()) / static_cast<double>(nh);
  const double rx = static_cast<double>(g.width()) / static_cast<double>(nw);
  for (std::size_t y = 0; y < nh; ++y)
    for (std::size_t x = 0; x < nw; ++x)
      for (std::size_t c = 0; c < g.channels(); ++c)
        out.at(y, x, c) = oracle_bilinear(g, (static_cast<double>(y) + 0.5) * ry - 0.5,
                                          (static_cast<double>(x) + 0.5) * rx - 0.5, c);
  return out;
}

}  // namespace evit::ref
