#include <gtest/gtest.h>

#include <cmath>
#include <utility>

#include "evit/dataset.hpp"
#include "evit/error.hpp"
#include "evit/train.hpp"
#include "support.hpp"

using namespace evit;

namespace {

TrainConfig plain(double lr, double wd) {
  TrainConfig c;
  c.lr = lr;
  c.weight_decay = wd;
  return c;
}

std::vector<Sample> small_set(std::size_t per_class, std::uint64_t seed) {
  const auto recs = synth_corpus(toy_corpus(per_class, seed));
  return make_samples(recs, ViTConfig::toy());
}

}  // namespace

TEST(AdamW, ZeroGradientWithoutDecayIsNoOp) {
  const auto cfg = ref::gradcheck_config();
  auto p = ref::lively_params(cfg, 1);
  const auto before = p;
  auto state = OptimizerState::for_params(p);
  adamw_step(p, zeros_like(p), state, plain(1e-3, 0.0));
  EXPECT_EQ(p, before);
  EXPECT_EQ(state.step, 1u);
}

TEST(AdamW, FirstStepMovesBySignOfGradient) {
  const auto cfg = ref::gradcheck_config();
  auto p = ref::lively_params(cfg, 2);
  const auto before = p;
  auto g = ref::lively_params(cfg, 3);  // no exact zeros
  auto state = OptimizerState::for_params(p);
  const double lr = 1e-3;
  adamw_step(p, g, state, plain(lr, 0.0));
  std::vector<const Tensor2D*> ps, bs, gs;
  for_each_tensor(std::as_const(p), [&](const std::string&, const Tensor2D& t) { ps.push_back(&t); });
  for_each_tensor(before, [&](const std::string&, const Tensor2D& t) { bs.push_back(&t); });
  for_each_tensor(std::as_const(g), [&](const std::string&, const Tensor2D& t) { gs.push_back(&t); });
  for (std::size_t i = 0; i < ps.size(); ++i)
    for (std::size_t j = 0; j < ps[i]->size(); ++j) {
      const double gj = gs[i]->data()[j];
      if (gj == 0.0) continue;
      const double step = bs[i]->data()[j] - ps[i]->data()[j];
      ASSERT_NEAR(step, lr * std::copysign(1.0, gj), 1e-6);
    }
}

TEST(AdamW, DecayOnlyShrinks) {
  const auto cfg = ref::gradcheck_config();
  auto p = ref::lively_params(cfg, 4);
  const auto before = p;
  auto state = OptimizerState::for_params(p);
  adamw_step(p, zeros_like(p), state, plain(0.1, 0.5));
  std::vector<const Tensor2D*> bs;
  for_each_tensor(before, [&](const std::string&, const Tensor2D& t) { bs.push_back(&t); });
  std::size_t i = 0;
  for_each_tensor(std::as_const(p), [&](const std::string&, const Tensor2D& t) {
    for (std::size_t j = 0; j < t.size(); ++j) ASSERT_NEAR(t.data()[j], bs[i]->data()[j] * 0.95, 1e-15);
    ++i;
  });
}

TEST(AdamW, ZeroLearningRateKeepsParameters) {
  const auto cfg = ref::gradcheck_config();
  auto p = ref::lively_params(cfg, 5);
  const auto before = p;
  auto state = OptimizerState::for_params(p);
  const auto g = ref::lively_params(cfg, 6);
  for (int s = 0; s < 3; ++s) adamw_step(p, g, state, plain(0.0, 0.01));
  EXPECT_EQ(p, before);
}

TEST(TrainConfig, Validation) {
  EXPECT_NO_THROW(TrainConfig{}.validate());
  EXPECT_NO_THROW(TrainConfig::toy(ThresholdMode::mixed(), 1).validate());
  TrainConfig bad;
  bad.lr = -1.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = TrainConfig{};
  bad.augment_probability = 1.5;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(ThresholdModeText, ParseAndPrint) {
  const auto f = ThresholdMode::parse("fixed:0.35");
  EXPECT_EQ(f.kind, ThresholdMode::Kind::Fixed);
  EXPECT_DOUBLE_EQ(f.tau, 0.35);
  EXPECT_EQ(f.to_string(), "fixed:0.35");
  const auto m = ThresholdMode::parse("mixed");
  EXPECT_EQ(m.kind, ThresholdMode::Kind::Mixed);
  EXPECT_DOUBLE_EQ(m.lo, 0.0);
  EXPECT_DOUBLE_EQ(m.hi, 0.7);
  for (const char* bad : {"fixed:", "fixed:1.5", "fixed:-0.1", "mix", "fixed:0.3x", ""}) {
    EXPECT_THROW(ThresholdMode::parse(bad), Error) << bad;
  }
}

TEST(ThresholdRange, Grid) {
  const auto g = parse_threshold_range("0.0:0.7:0.05");
  ASSERT_EQ(g.size(), 15u);
  EXPECT_DOUBLE_EQ(g.front(), 0.0);
  EXPECT_DOUBLE_EQ(g[7], 0.35);
  EXPECT_DOUBLE_EQ(g.back(), 0.7);
  EXPECT_EQ(parse_threshold_range("0.3:0.3:0.1").size(), 1u);
  for (const char* bad : {"0:1", "0:1:0", "1:0:0.1", "a:b:c", "0:1:0.1:2"}) {
    EXPECT_THROW(parse_threshold_range(bad), Error) << bad;
  }
}

TEST(Samples, LabelsChecked) {
  auto rec = synth_recording(1, 3, 64, 64, 100'000, 20'000);
  const auto cfg = ViTConfig::toy();
  const auto s = make_sample(rec, cfg);
  EXPECT_EQ(s.label, 1u);
  EXPECT_EQ(s.frame.height(), cfg.frame_height);
  rec.label.reset();
  EXPECT_THROW(make_sample(rec, cfg), Error);
  rec.label = 3;
  EXPECT_THROW(make_sample(rec, cfg), Error);
}

TEST(Trainer, BitDeterministicPerSeed) {
  const auto data = small_set(2, 11);
  const auto cfg = ViTConfig::toy();
  auto run = [&](std::uint64_t seed) {
    Trainer t({cfg, init_params(cfg, 1)}, TrainConfig::toy(ThresholdMode::mixed(), seed));
    t.train_epoch(data);
    t.train_epoch(data);
    return t.model().params;
  };
  const auto a = run(7);
  EXPECT_EQ(a, run(7));
  EXPECT_NE(a, run(8));
}

TEST(Trainer, LossFallsOnOneSample) {
  const auto data = small_set(1, 12);
  const std::vector<Sample> one{data[0]};
  const auto cfg = ViTConfig::toy();
  TrainConfig tc = plain(1e-3, 0.0);
  Trainer t({cfg, init_params(cfg, 2)}, tc);
  double prev = INFINITY;
  for (int e = 0; e < 5; ++e) {
    const auto m = t.train_epoch(one);
    EXPECT_LT(m.loss, prev) << "epoch " << e;
    EXPECT_EQ(m.mean_active_fraction, 1.0);
    prev = m.loss;
  }
  EXPECT_EQ(t.epochs_done(), 5u);
  EXPECT_EQ(t.optimizer().step, 5u);
}

TEST(Trainer, EmptyDataset) {
  const auto cfg = ViTConfig::toy();
  Trainer t({cfg, init_params(cfg, 3)}, TrainConfig{});
  EXPECT_THROW(t.train_epoch({}), Error);
  EXPECT_THROW(evaluate(t.model(), {}, 0.0), Error);
}

TEST(Evaluate, ReadOnlyAndConsistent) {
  const auto data = small_set(2, 13);
  const auto cfg = ViTConfig::toy();
  const Model model{cfg, init_params(cfg, 4)};
  const auto before = model.params;
  const auto a = evaluate(model, data, 0.35);
  const auto b = evaluate(model, data, 0.35);
  EXPECT_EQ(model.params, before);
  EXPECT_EQ(a.loss, b.loss);
  ASSERT_EQ(a.active_counts.size(), data.size());
  double frac = 0.0;
  for (auto c : a.active_counts) frac += static_cast<double>(c) / cfg.slots();
  EXPECT_NEAR(a.mean_active_fraction, frac / data.size(), 1e-12);
  EXPECT_DOUBLE_EQ(evaluate(model, data, 0.0).mean_active_fraction, 1.0);
}

TEST(Sweep, AscendingAndMonotone) {
  const auto data = small_set(2, 14);
  const auto cfg = ViTConfig::toy();
  const Model model{cfg, init_params(cfg, 5)};
  const std::vector<double> taus = {0.5, 0.0, 0.25};
  const auto rows = sweep(model, data, taus);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].threshold, 0.0);
  EXPECT_EQ(rows[2].threshold, 0.5);
  EXPECT_GE(rows[0].mean_active_fraction, rows[1].mean_active_fraction);
  EXPECT_GE(rows[1].mean_active_fraction, rows[2].mean_active_fraction);
  EXPECT_GE(rows[0].mean_macs, rows[2].mean_macs);
  const auto csv = sweep_csv(rows);
  EXPECT_EQ(csv.rfind("threshold,mean_active_fraction,mean_macs,accuracy,frames_per_second\n", 0), 0u);
}

TEST(MetricsCsv, Format) {
  EXPECT_EQ(metrics_csv_header(), "epoch,split,loss,accuracy,mean_active_fraction,mean_macs\n");
  EXPECT_EQ(metrics_csv_row(3, "test", 0.5, 0.75, 0.25, 100.0), "3,test,0.5,0.75,0.25,100\n");
}
