#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evit/events.hpp"

namespace evit {

// Recordings from a directory with one subdirectory per class holding
// EVT1 files (*.evt). Labels follow the sorted subdirectory names.
struct LabeledCorpus {
  std::vector<EventRecording> recordings;
  std::vector<std::string> class_names;
};

LabeledCorpus load_dataset_dir(const std::string& dir);
void write_dataset_dir(const std::string& dir, std::span<const EventRecording> recordings,
                       std::span<const std::string> class_names);

std::vector<std::string> synthetic_class_names();

struct CorpusSpec {
  std::size_t per_class = 40;
  std::uint64_t seed = 0;
  std::uint16_t width = 64;
  std::uint16_t height = 64;
  std::uint64_t duration_us = 300'000;
  double event_rate = 60'000.0;
  SynthOptions options;
};

// 3-class corpus for the toy model: 64x64 sensor, centred start, short
// saccades, thick contours, quiet background.
CorpusSpec toy_corpus(std::size_t per_class, std::uint64_t seed);
// Full-frame corpus: a 120x96 sensor scaled x2 into the 192x240 frame,
// about half of the slots active at threshold 0.35.
CorpusSpec bench_corpus(std::size_t per_class, std::uint64_t seed);

// Classes interleaved (0, 1, 2, 0, 1, 2, ...); recording i of class c uses
// seed derive_seed(spec.seed, i).
std::vector<EventRecording> synth_corpus(const CorpusSpec& spec);

}  // namespace evit
