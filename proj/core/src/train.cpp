#include "evit/train.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "evit/error.hpp"
#include "evit/patches.hpp"
#include "evit/random.hpp"

namespace evit {

ThresholdMode ThresholdMode::parse(const std::string& text) {
  if (text == "mixed") return mixed();
  if (text.starts_with("fixed:")) {
    double tau = 0.0;
    const char* b = text.data() + 6;
    const char* e = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(b, e, tau);
    if (ec == std::errc{} && ptr == e && tau >= 0.0 && tau <= 1.0) return fixed(tau);
  }
  throw Error(ErrorCode::InvalidArgument, "threshold mode must be fixed:<0..1> or mixed, got " + text);
}

std::string ThresholdMode::to_string() const {
  if (kind == Kind::Mixed) return "mixed";
  std::ostringstream s;
  s << "fixed:" << tau;
  return s.str();
}

void TrainConfig::validate() const {
  const bool ok = lr >= 0.0 && weight_decay >= 0.0 && beta1 >= 0.0 && beta1 < 1.0 &&
                  beta2 >= 0.0 && beta2 < 1.0 && eps_adam > 0.0 &&
                  threshold_mode.tau >= 0.0 && threshold_mode.tau <= 1.0 &&
                  threshold_mode.lo <= threshold_mode.hi && augment_probability >= 0.0 &&
                  augment_probability <= 1.0;
  if (!ok) throw Error(ErrorCode::InvalidArgument, "invalid training configuration");
}

TrainConfig TrainConfig::toy(ThresholdMode mode, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.lr = 1e-4;
  cfg.augment_probability = 0.5;
  cfg.threshold_mode = mode;
  cfg.seed = seed;
  return cfg;
}

OptimizerState OptimizerState::for_params(const ViTParams& params) {
  return {zeros_like(params), zeros_like(params), 0};
}

void adamw_step(ViTParams& params, const ViTParams& grads, OptimizerState& state,
                const TrainConfig& cfg) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);

  std::vector<Tensor2D*> ms, vs;
  for_each_tensor(state.m, [&](const std::string&, Tensor2D& x) { ms.push_back(&x); });
  for_each_tensor(state.v, [&](const std::string&, Tensor2D& x) { vs.push_back(&x); });
  std::size_t i = 0;
  for_each_tensor_pair(params, grads, [&](Tensor2D& theta, const Tensor2D& g) {
    Tensor2D& m = *ms.at(i);
    Tensor2D& v = *vs.at(i);
    ++i;
    if (m.size() != theta.size() || v.size() != theta.size()) {
      throw Error(ErrorCode::ShapeMismatch, "optimizer state does not mirror the parameters");
    }
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double gj = g.data()[j];
      double& mj = m.data()[j];
      double& vj = v.data()[j];
      mj = cfg.beta1 * mj + (1.0 - cfg.beta1) * gj;
      vj = cfg.beta2 * vj + (1.0 - cfg.beta2) * gj * gj;
      const double mhat = mj / c1;
      const double vhat = vj / c2;
      double& th = theta.data()[j];
      th -= cfg.lr * (mhat / (std::sqrt(vhat) + cfg.eps_adam) + cfg.weight_decay * th);
    }
  });
  if (i != ms.size()) throw Error(ErrorCode::ShapeMismatch, "optimizer state size");
}

Sample make_sample(const EventRecording& rec, const ViTConfig& cfg) {
  if (!rec.label || *rec.label < 0 || static_cast<std::size_t>(*rec.label) >= cfg.num_classes) {
    throw Error(ErrorCode::BadTarget, "recording has no valid label for this model");
  }
  return {frame_from_recording(rec, cfg.channels, cfg.frame_height, cfg.frame_width),
          static_cast<std::size_t>(*rec.label)};
}

std::vector<Sample> make_samples(std::span<const EventRecording> recs, const ViTConfig& cfg) {
  std::vector<Sample> out;
  out.reserve(recs.size());
  for (const auto& r : recs) out.push_back(make_sample(r, cfg));
  return out;
}

Trainer::Trainer(Model model, TrainConfig cfg)
    : model_(std::move(model)), cfg_(cfg), state_(OptimizerState::for_params(model_.params)) {
  cfg_.validate();
  model_.config.validate();
}

EpochMetrics Trainer::train_epoch(std::span<const Sample> dataset) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "cannot train on an empty dataset");
  const ViTConfig& mc = model_.config;
  Rng rng(derive_seed(cfg_.seed, epoch_));
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  EpochMetrics metrics;
  metrics.epoch = epoch_ + 1;
  std::size_t correct = 0;
  for (std::size_t idx : order) {
    const Sample& s = dataset[idx];
    const double tau = cfg_.threshold_mode.kind == ThresholdMode::Kind::Mixed
                           ? uniform(rng, cfg_.threshold_mode.lo, cfg_.threshold_mode.hi)
                           : cfg_.threshold_mode.tau;
    const bool warp = cfg_.augment_probability > 0.0 && uniform01(rng) < cfg_.augment_probability;
    VoxelGrid grid = warp ? augment(s.frame, rng()) : s.frame;
    grid = normalize_nonzero(grid);
    const PatchSet set = select_active(grid, tau, mc.patch);
    LossAndGrads lg = backward(set, s.label, model_.params, mc);
    if (argmax(lg.logits) == s.label) ++correct;
    metrics.loss += lg.loss;
    metrics.mean_active_fraction += set.active_fraction();
    metrics.mean_macs += model_macs(set.size(), mc, CountingMode::Paper);
    adamw_step(model_.params, lg.grads, state_, cfg_);
  }
  const double n = static_cast<double>(dataset.size());
  metrics.loss /= n;
  metrics.accuracy = static_cast<double>(correct) / n;
  metrics.mean_active_fraction /= n;
  metrics.mean_macs /= n;
  ++epoch_;
  return metrics;
}

EvalMetrics evaluate(const Model& model, std::span<const Sample> dataset, double threshold) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "cannot evaluate an empty dataset");
  EvalMetrics m;
  std::size_t correct = 0;
  for (const Sample& s : dataset) {
    const PatchSet set = select_active(normalize_nonzero(s.frame), threshold, model.config.patch);
    const std::vector<double> logits = forward(set, model.params, model.config);
    if (argmax(logits) == s.label) ++correct;
    m.loss += cross_entropy(logits, s.label).loss;
    m.mean_active_fraction += set.active_fraction();
    m.mean_macs += model_macs(set.size(), model.config, CountingMode::Paper);
    m.active_counts.push_back(set.size());
  }
  const double n = static_cast<double>(dataset.size());
  m.loss /= n;
  m.accuracy = static_cast<double>(correct) / n;
  m.mean_active_fraction /= n;
  m.mean_macs /= n;
  return m;
}

std::string metrics_csv_header() { return "epoch,split,loss,accuracy,mean_active_fraction,mean_macs\n"; }

std::string metrics_csv_row(std::size_t epoch, const std::string& split, double loss,
                            double accuracy, double mean_active_fraction, double mean_macs) {
  std::ostringstream s;
  s.precision(10);
  s << epoch << ',' << split << ',' << loss << ',' << accuracy << ',' << mean_active_fraction << ','
    << mean_macs << '\n';
  return s.str();
}

std::vector<double> parse_threshold_range(const std::string& text) {
  double parts[3] = {0, 0, 0};
  std::size_t start = 0;
  for (int i = 0; i < 3; ++i) {
    const std::size_t end = i < 2 ? text.find(':', start) : text.size();
    if (end == std::string::npos) break;
    const char* b = text.data() + start;
    const char* e = text.data() + end;
    auto [ptr, ec] = std::from_chars(b, e, parts[i]);
    if (ec != std::errc{} || ptr != e) {
      throw Error(ErrorCode::InvalidArgument, "threshold range must be lo:hi:step, got " + text);
    }
    start = end + 1;
    if (i == 2) {
      const double lo = parts[0], hi = parts[1], step = parts[2];
      if (!(step > 0.0) || hi < lo) throw Error(ErrorCode::InvalidArgument, "bad threshold range " + text);
      const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
      std::vector<double> out(count);
      for (std::size_t k = 0; k < count; ++k) {
        out[k] = std::round((lo + static_cast<double>(k) * step) * 1e12) / 1e12;
      }
      return out;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "threshold range must be lo:hi:step, got " + text);
}

std::vector<SweepRow> sweep(const Model& model, std::span<const Sample> dataset,
                            std::span<const double> thresholds) {
  std::vector<double> sorted(thresholds.begin(), thresholds.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<SweepRow> rows;
  for (double tau : sorted) {
    const EvalMetrics m = evaluate(model, dataset, tau);
    rows.push_back({tau, m.mean_active_fraction, m.mean_macs, m.accuracy, std::nullopt});
  }
  return rows;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::ostringstream s;
  s.precision(10);
  s << "threshold,mean_active_fraction,mean_macs,accuracy,frames_per_second\n";
  for (const auto& r : rows) {
    s << r.threshold << ',' << r.mean_active_fraction << ',' << r.mean_macs << ',';
    if (r.accuracy) s << *r.accuracy;
    s << ',';
    if (r.frames_per_second) s << *r.frames_per_second;
    s << '\n';
  }
  return s.str();
}

}  // namespace evit
