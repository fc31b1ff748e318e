#include "evit/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>

#include "evit/error.hpp"
#include "evit/random.hpp"

namespace fs = std::filesystem;

namespace evit {

LabeledCorpus load_dataset_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, dir + " is not a directory");
  LabeledCorpus corpus;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory()) corpus.class_names.push_back(entry.path().filename().string());
  }
  std::sort(corpus.class_names.begin(), corpus.class_names.end());
  for (std::size_t label = 0; label < corpus.class_names.size(); ++label) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(fs::path(dir) / corpus.class_names[label])) {
      if (entry.is_regular_file() && entry.path().extension() == ".evt") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      EventRecording rec = load_recording(f.string());
      rec.label = static_cast<int>(label);
      corpus.recordings.push_back(std::move(rec));
    }
  }
  if (corpus.recordings.empty()) throw Error(ErrorCode::EmptyDataset, "no .evt recordings under " + dir);
  return corpus;
}

void write_dataset_dir(const std::string& dir, std::span<const EventRecording> recordings,
                       std::span<const std::string> class_names) {
  std::vector<std::size_t> counters(class_names.size(), 0);
  for (const auto& name : class_names) fs::create_directories(fs::path(dir) / name);
  for (const auto& rec : recordings) {
    if (!rec.label || *rec.label < 0 || static_cast<std::size_t>(*rec.label) >= class_names.size()) {
      throw Error(ErrorCode::BadTarget, "recording without a usable label");
    }
    const auto label = static_cast<std::size_t>(*rec.label);
    char name[32];
    std::snprintf(name, sizeof(name), "%05zu.evt", counters[label]++);
    save_recording(rec, (fs::path(dir) / class_names[label] / name).string());
  }
}

std::vector<std::string> synthetic_class_names() { return {"0_bar", "1_disc", "2_cross"}; }

CorpusSpec toy_corpus(std::size_t per_class, std::uint64_t seed) {
  CorpusSpec spec;
  spec.per_class = per_class;
  spec.seed = seed;
  spec.width = 64;
  spec.height = 64;
  spec.event_rate = 120'000.0;
  spec.options.travel = 0.2;
  spec.options.noise_fraction = 0.005;
  spec.options.jitter_px = 1.5;
  spec.options.start_spread = 0.2;
  return spec;
}

CorpusSpec bench_corpus(std::size_t per_class, std::uint64_t seed) {
  CorpusSpec spec;
  spec.per_class = per_class;
  spec.seed = seed;
  spec.width = 120;
  spec.height = 96;
  spec.event_rate = 600'000.0;
  spec.options.shape_scale = 0.3;
  spec.options.travel = 0.3;
  spec.options.saccades = 6;
  return spec;
}

std::vector<EventRecording> synth_corpus(const CorpusSpec& spec) {
  std::vector<EventRecording> out;
  out.reserve(spec.per_class * kNumShapeClasses);
  for (std::size_t i = 0; i < spec.per_class; ++i) {
    for (int c = 0; c < kNumShapeClasses; ++c) {
      out.push_back(synth_recording(c, derive_seed(spec.seed, i), spec.width, spec.height,
                                    spec.duration_us, spec.event_rate, spec.options));
    }
  }
  return out;
}

}  // namespace evit
