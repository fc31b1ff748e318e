#include "evit/events.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "byte_io.hpp"
#include "evit/error.hpp"
#include "evit/random.hpp"

namespace evit {

void validate(const EventRecording& rec) {
  for (std::size_t i = 0; i < rec.events.size(); ++i) {
    const Event& e = rec.events[i];
    if (e.x >= rec.width || e.y >= rec.height) {
      throw Error(ErrorCode::OutOfBounds, "event index " + std::to_string(i), i);
    }
    if (e.p != 1 && e.p != -1) {
      throw Error(ErrorCode::MalformedLine, "polarity must be +1 or -1", i);
    }
    if (i > 0 && e.t < rec.events[i - 1].t) {
      throw Error(ErrorCode::NonMonotoneTimestamp, "event index " + std::to_string(i), i);
    }
  }
}

namespace {

template <typename T>
bool parse_field(std::string_view s, T& out) {
  if (s.empty()) return false;
  if constexpr (std::is_signed_v<T>) {
    if (s.front() == '+') s.remove_prefix(1);
  }
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

EventRecording parse_text_recording(std::string_view text, std::uint16_t sensor_width,
                                    std::uint16_t sensor_height) {
  EventRecording rec;
  rec.width = sensor_width;
  rec.height = sensor_height;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool saw_header = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (!saw_header) {
      if (line != "x,y,t,p") throw Error(ErrorCode::MalformedLine, "expected header x,y,t,p", line_no);
      saw_header = true;
      continue;
    }

    std::array<std::string_view, 4> fields;
    std::size_t start = 0;
    for (std::size_t f = 0; f < 4; ++f) {
      const std::size_t comma = line.find(',', start);
      const bool last = f == 3;
      if (last != (comma == std::string_view::npos)) {
        throw Error(ErrorCode::MalformedLine, "expected 4 comma-separated fields", line_no);
      }
      fields[f] = line.substr(start, last ? std::string_view::npos : comma - start);
      start = comma + 1;
    }

    std::uint32_t x = 0, y = 0;
    std::uint64_t t = 0;
    int p = 0;
    if (!parse_field(fields[0], x) || !parse_field(fields[1], y) || !parse_field(fields[2], t) ||
        !parse_field(fields[3], p) || (p != 1 && p != -1)) {
      throw Error(ErrorCode::MalformedLine, std::string(line), line_no);
    }
    if (x >= sensor_width || y >= sensor_height) {
      throw Error(ErrorCode::OutOfBounds, std::string(line), line_no);
    }
    if (!rec.events.empty() && t < rec.events.back().t) {
      throw Error(ErrorCode::NonMonotoneTimestamp, std::string(line), line_no);
    }
    rec.events.push_back(Event{static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), t,
                               static_cast<std::int8_t>(p)});
  }
  if (!saw_header) throw Error(ErrorCode::MalformedLine, "missing header", 1);
  return rec;
}

std::string write_text_recording(const EventRecording& rec) {
  std::ostringstream out;
  out << "x,y,t,p\n";
  for (const Event& e : rec.events) {
    out << e.x << ',' << e.y << ',' << e.t << ',' << static_cast<int>(e.p) << '\n';
  }
  return out.str();
}

std::string write_binary(const EventRecording& rec) {
  std::string out;
  out.reserve(kEvt1HeaderBytes + kEvt1EventBytes * rec.events.size());
  out.append("EVT1");
  detail::put_le<std::uint16_t>(out, rec.width);
  detail::put_le<std::uint16_t>(out, rec.height);
  detail::put_le<std::uint64_t>(out, rec.events.size());
  for (const Event& e : rec.events) {
    detail::put_le<std::uint16_t>(out, e.x);
    detail::put_le<std::uint16_t>(out, e.y);
    detail::put_le<std::uint64_t>(out, e.t);
    detail::put_le<std::int8_t>(out, e.p);
  }
  return out;
}

EventRecording read_binary(std::string_view bytes) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != "EVT1") {
    throw Error(ErrorCode::BadMagic, "expected EVT1");
  }
  detail::ByteReader in(bytes.substr(4));
  EventRecording rec;
  rec.width = in.get_le<std::uint16_t>();
  rec.height = in.get_le<std::uint16_t>();
  const auto count = in.get_le<std::uint64_t>();
  if (in.remaining() / kEvt1EventBytes < count) {
    throw Error(ErrorCode::TruncatedPayload, "declared " + std::to_string(count) +
                                                 " events, payload holds " +
                                                 std::to_string(in.remaining() / kEvt1EventBytes));
  }
  if (in.remaining() != count * kEvt1EventBytes) {
    throw Error(ErrorCode::CountMismatch,
                std::to_string(in.remaining() - count * kEvt1EventBytes) + " trailing bytes");
  }
  rec.events.resize(count);
  for (auto& e : rec.events) {
    e.x = in.get_le<std::uint16_t>();
    e.y = in.get_le<std::uint16_t>();
    e.t = in.get_le<std::uint64_t>();
    e.p = in.get_le<std::int8_t>();
  }
  validate(rec);
  return rec;
}

EventRecording load_recording(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return read_binary(bytes);
}

void save_recording(const EventRecording& rec, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  const std::string bytes = write_binary(rec);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

namespace {

struct Vec2 {
  double x = 0, y = 0;
};

Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

std::vector<Vec2> shape_outline(ShapeClass shape, double r) {
  std::vector<Vec2> v;
  const double a = 0.3 * r;
  switch (shape) {
    case ShapeClass::Bar:
      v = {{-r, -a}, {r, -a}, {r, a}, {-r, a}};
      break;
    case ShapeClass::Disc:
      for (int i = 0; i < 48; ++i) {
        const double th = 2.0 * std::numbers::pi * i / 48.0;
        v.push_back({r * std::cos(th), r * std::sin(th)});
      }
      break;
    case ShapeClass::Cross:
      v = {{a, -r}, {a, -a}, {r, -a}, {r, a}, {a, a}, {a, r},
           {-a, r}, {-a, a}, {-r, a}, {-r, -a}, {-a, -a}, {-a, -r}};
      break;
  }
  return v;
}

// Perimeter sampler with outward edge normals.
class Outline {
 public:
  explicit Outline(std::vector<Vec2> vertices) : v_(std::move(vertices)) {
    double area2 = 0.0;
    for (std::size_t i = 0; i < v_.size(); ++i) {
      const Vec2 a = v_[i], b = v_[(i + 1) % v_.size()];
      area2 += a.x * b.y - b.x * a.y;
      cumulative_.push_back((cumulative_.empty() ? 0.0 : cumulative_.back()) + norm(b - a));
    }
    orientation_ = area2 >= 0 ? 1.0 : -1.0;
    for (const Vec2& p : v_) extent_ = std::max(extent_, norm(p));
  }

  double extent() const { return extent_; }

  void sample(Rng& rng, Vec2& point, Vec2& normal) const {
    const double s = uniform01(rng) * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
    const std::size_t i = std::min<std::size_t>(it - cumulative_.begin(), v_.size() - 1);
    const Vec2 a = v_[i], b = v_[(i + 1) % v_.size()];
    const double before = i == 0 ? 0.0 : cumulative_[i - 1];
    const double len = cumulative_[i] - before;
    const double f = len > 0 ? (s - before) / len : 0.0;
    point = a + f * (b - a);
    const Vec2 d = b - a;
    normal = (orientation_ / len) * Vec2{d.y, -d.x};
  }

 private:
  std::vector<Vec2> v_;
  std::vector<double> cumulative_;
  double orientation_ = 1.0;
  double extent_ = 0.0;
};

Vec2 rotate(Vec2 p, double th) {
  return {p.x * std::cos(th) - p.y * std::sin(th), p.x * std::sin(th) + p.y * std::cos(th)};
}

}  // namespace

EventRecording synth_recording(int class_id, std::uint64_t seed, std::uint16_t width,
                               std::uint16_t height, std::uint64_t duration_us,
                               double event_rate, const SynthOptions& options) {
  if (class_id < 0 || class_id >= kNumShapeClasses) {
    throw Error(ErrorCode::InvalidArgument, "class_id must be 0, 1 or 2");
  }
  if (width < 32 || height < 32) throw Error(ErrorCode::InvalidArgument, "sensor must be >= 32x32");
  if (!(event_rate >= 0.0)) throw Error(ErrorCode::InvalidArgument, "event_rate must be >= 0");

  EventRecording rec;
  rec.width = width;
  rec.height = height;
  rec.label = class_id;

  const auto count = static_cast<std::size_t>(
      std::llround(event_rate * static_cast<double>(duration_us) / 1e6));
  if (count == 0) return rec;

  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(class_id)));
  const double m = std::min(width, height);
  const double r = options.shape_scale * m * uniform(rng, 0.85, 1.15);
  const double tilt = uniform(rng, -20.0, 20.0) * std::numbers::pi / 180.0;
  std::vector<Vec2> vertices = shape_outline(static_cast<ShapeClass>(class_id), r);
  for (auto& p : vertices) p = rotate(p, tilt);
  const Outline outline(std::move(vertices));

  // Centers stay inside a box that keeps the whole outline on the sensor.
  const double margin = outline.extent() + 1.0;
  const double lo_x = std::min(margin, width / 2.0), hi_x = std::max(width - 1.0 - margin, width / 2.0);
  const double lo_y = std::min(margin, height / 2.0), hi_y = std::max(height - 1.0 - margin, height / 2.0);
  auto clamp_center = [&](Vec2 c) {
    return Vec2{std::clamp(c.x, lo_x, hi_x), std::clamp(c.y, lo_y, hi_y)};
  };

  const int segments = std::max(1, options.saccades);
  const double spread = std::clamp(options.start_spread, 0.0, 1.0);
  const double half_x = 0.5 * spread * (hi_x - lo_x), half_y = 0.5 * spread * (hi_y - lo_y);
  const double mid_x = 0.5 * (lo_x + hi_x), mid_y = 0.5 * (lo_y + hi_y);
  std::vector<Vec2> path{
      {uniform(rng, mid_x - half_x, mid_x + half_x), uniform(rng, mid_y - half_y, mid_y + half_y)}};
  for (int s = 0; s < segments; ++s) {
    const double heading = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double len = options.travel * m * uniform(rng, 0.7, 1.0);
    Vec2 next = clamp_center(path.back() + len * Vec2{std::cos(heading), std::sin(heading)});
    if (norm(next - path.back()) < 0.25 * len) {
      // Hit a wall; bounce the other way instead.
      next = clamp_center(path.back() - len * Vec2{std::cos(heading), std::sin(heading)});
    }
    path.push_back(next);
  }

  std::vector<std::uint64_t> times(count);
  for (auto& t : times) t = static_cast<std::uint64_t>(uniform01(rng) * (duration_us + 1));
  std::sort(times.begin(), times.end());
  times.front() = 0;
  if (count > 1) times.back() = duration_us;

  const double seg_dur = static_cast<double>(duration_us) / segments;
  rec.events.reserve(count);
  for (const std::uint64_t t : times) {
    const double tf = static_cast<double>(t);
    const int s = seg_dur > 0 ? std::min(segments - 1, static_cast<int>(tf / seg_dur)) : 0;
    const double frac = seg_dur > 0 ? std::clamp(tf / seg_dur - s, 0.0, 1.0) : 0.0;
    const Vec2 center = path[s] + frac * (path[s + 1] - path[s]);
    Vec2 velocity = path[s + 1] - path[s];
    const double speed = norm(velocity);
    if (speed > 0) velocity = (1.0 / speed) * velocity;

    Vec2 pos;
    std::int8_t polarity = 1;
    if (uniform01(rng) < options.noise_fraction) {
      pos = {uniform(rng, 0.0, width), uniform(rng, 0.0, height)};
      polarity = uniform01(rng) < 0.5 ? 1 : -1;
    } else {
      Vec2 point, normal;
      double facing = 0.0;
      for (int attempt = 0; attempt < 64; ++attempt) {
        outline.sample(rng, point, normal);
        facing = dot(normal, velocity);
        // Edges parallel to the motion barely change brightness.
        if (std::abs(facing) >= 0.25) break;
      }
      polarity = facing >= 0.0 ? 1 : -1;
      pos = center + point +
            Vec2{truncated_normal(rng, options.jitter_px), truncated_normal(rng, options.jitter_px)};
    }
    const auto px = static_cast<std::uint16_t>(std::clamp(std::floor(pos.x + 0.5), 0.0, width - 1.0));
    const auto py = static_cast<std::uint16_t>(std::clamp(std::floor(pos.y + 0.5), 0.0, height - 1.0));
    rec.events.push_back(Event{px, py, t, polarity});
  }
  return rec;
}

}  // namespace evit
