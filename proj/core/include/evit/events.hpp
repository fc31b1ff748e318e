#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace evit {

// One brightness-change event. Timestamps are microseconds.
struct Event {
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::uint64_t t = 0;
  std::int8_t p = 1;  // +1 or -1

  friend bool operator==(const Event&, const Event&) = default;
};

// An ordered event stream from one sensor. Construct through validate() or
// one of the readers so the ordering and bounds invariants hold.
struct EventRecording {
  std::vector<Event> events;
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::optional<int> label;

  bool empty() const noexcept { return events.empty(); }
  std::uint64_t t_first() const { return events.front().t; }
  std::uint64_t t_last() const { return events.back().t; }

  friend bool operator==(const EventRecording&, const EventRecording&) = default;
};

// Throws OutOfBounds / NonMonotoneTimestamp / MalformedLine (bad polarity),
// with the 0-based event index reported as the line.
void validate(const EventRecording& rec);

// Text format: header "x,y,t,p", then one "x,y,t,p" per line.
EventRecording parse_text_recording(std::string_view text, std::uint16_t sensor_width,
                                    std::uint16_t sensor_height);
std::string write_text_recording(const EventRecording& rec);

// EVT1 binary layout: "EVT1", u16 width, u16 height, u64 count, then
// 13 bytes per event (u16 x, u16 y, u64 t, i8 p), little-endian, unpadded.
inline constexpr std::size_t kEvt1HeaderBytes = 16;
inline constexpr std::size_t kEvt1EventBytes = 13;

std::string write_binary(const EventRecording& rec);
EventRecording read_binary(std::string_view bytes);

EventRecording load_recording(const std::string& path);
void save_recording(const EventRecording& rec, const std::string& path);

enum class ShapeClass { Bar = 0, Disc = 1, Cross = 2 };
inline constexpr int kNumShapeClasses = 3;

struct SynthOptions {
  double shape_scale = 0.22;     // shape half-extent as a fraction of min(width, height)
  double travel = 0.35;          // saccade amplitude as a fraction of min(width, height)
  int saccades = 3;              // straight motion segments
  double noise_fraction = 0.02;  // share of events placed uniformly at random
  double jitter_px = 0.6;        // spatial standard deviation around the contour
  double start_spread = 1.0;     // start position range as a fraction of the admissible box
};

// Labeled synthetic recording: the outline of a bar, disc or cross moving
// along a saccade path. Leading edges fire +1, trailing edges -1. Events are
// emitted at event_rate per second, the first at t=0 and the last at
// t=duration_us. Pure function of its arguments.
EventRecording synth_recording(int class_id, std::uint64_t seed, std::uint16_t width,
                               std::uint16_t height, std::uint64_t duration_us,
                               double event_rate, const SynthOptions& options = {});

}  // namespace evit
