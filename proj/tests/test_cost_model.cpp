#include <gtest/gtest.h>

#include "evit/cost_model.hpp"
#include "evit/error.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace evit;

TEST(CostModel, PaperCoefficients) {
  const auto cfg = ViTConfig::paper();
  const auto c = msa_coefficients(cfg);
  EXPECT_EQ(c.quadratic, 3108u);
  EXPECT_EQ(c.linear, 4'718'592u);
  EXPECT_EQ(mlp_coefficient(cfg), 9'437'184u);
}

TEST(CostModel, ZeroTokensCostNothing) {
  const auto cfg = ViTConfig::paper();
  EXPECT_EQ(msa_flops(0, cfg), 0u);
  EXPECT_EQ(mlp_flops(0, cfg), 0u);
  EXPECT_EQ(model_macs(0, cfg), 0.0);
}

TEST(CostModel, ValuesAtFullFrame) {
  const auto cfg = ViTConfig::paper();
  EXPECT_EQ(msa_flops(180, cfg), 950'045'760u);
  EXPECT_EQ(mlp_flops(180, cfg), 1'698'693'120u);
  EXPECT_EQ(model_macs(180, cfg), 15'892'433'280.0);
}

TEST(CostModel, Crossover) {
  const auto cfg = ViTConfig::paper();
  const auto n = crossover_n(cfg);
  EXPECT_EQ(n, 1519u);
  EXPECT_GE(msa_flops(n, cfg), mlp_flops(n, cfg));
  for (std::uint64_t m = 1; m < n; ++m) ASSERT_LT(msa_flops(m, cfg), mlp_flops(m, cfg)) << m;
}

TEST(CostModel, CrossoverOfOtherShapes) {
  // Brute force over small configurations.
  for (std::size_t heads : {1u, 2u, 4u}) {
    for (std::size_t dh : {4u, 16u}) {
      ViTConfig cfg = ViTConfig::toy();
      cfg.heads = heads;
      cfg.head_dim = dh;
      cfg.dim = heads * dh;
      cfg.mlp_dim = 4 * cfg.dim;
      std::uint64_t n = 1;
      while (msa_flops(n, cfg) < mlp_flops(n, cfg)) ++n;
      EXPECT_EQ(crossover_n(cfg), n);
    }
  }
}

TEST(CostModel, HalfFrameRatio) {
  const auto cfg = ViTConfig::paper();
  EXPECT_NEAR(model_macs(90, cfg) / model_macs(180, cfg), 0.4905, 0.0005);
}

TEST(CostModel, MonotoneInN) {
  const auto cfg = ViTConfig::paper();
  for (std::uint64_t n = 0; n < 400; ++n) {
    ASSERT_LT(model_macs(n, cfg), model_macs(n + 1, cfg));
    ASSERT_LT(model_macs(n, cfg, CountingMode::Full), model_macs(n + 1, cfg, CountingMode::Full));
  }
}

TEST(CostModel, ReportModes) {
  const auto cfg = ViTConfig::paper();
  const auto paper = cost_report(180, cfg, CountingMode::Paper);
  ASSERT_EQ(paper.per_layer.size(), 12u);
  EXPECT_EQ(paper.flops_embedding, 0u);
  EXPECT_EQ(paper.flops_head, 0u);
  EXPECT_EQ(paper.flops_total, 12 * (950'045'760ull + 1'698'693'120ull));
  EXPECT_DOUBLE_EQ(paper.macs_total, paper.flops_total / 2.0);

  const auto full = cost_report(180, cfg, CountingMode::Full);
  EXPECT_EQ(full.flops_msa_per_layer, msa_flops(181, cfg));
  EXPECT_EQ(full.flops_embedding, 2ull * 180 * 2304 * 768);
  EXPECT_GT(full.flops_head, 0u);
  EXPECT_EQ(full.flops_total,
            12 * (msa_flops(181, cfg) + mlp_flops(181, cfg)) + full.flops_embedding + full.flops_head);
}

TEST(CostModel, JsonCarriesIntegers) {
  const auto j = nlohmann::json::parse(to_json(cost_report(180, ViTConfig::paper(), CountingMode::Paper)));
  EXPECT_EQ(j.at("mode"), "paper");
  EXPECT_TRUE(j.at("flops_total").is_number_integer());
  EXPECT_EQ(j.at("flops_total").get<std::uint64_t>(), 12 * (950'045'760ull + 1'698'693'120ull));
  EXPECT_EQ(j.at("per_layer").size(), 12u);
}

TEST(Reconcile, CountersAgreeOnToyConfig) {
  const auto cfg = ViTConfig::toy();
  const auto p = init_params(cfg, 1);
  Rng rng(2);
  for (std::size_t n : {0u, 1u, 10u, 50u}) {
    std::vector<std::size_t> pos(n);
    for (std::size_t i = 0; i < n; ++i) pos[i] = i;
    FlopTally tally;
    forward(ref::random_patch_set(cfg, pos, rng), p, cfg, &tally);
    const auto checks = reconcile(cost_report(n, cfg, CountingMode::Paper), tally);
    ASSERT_EQ(checks.size(), 9u);
    for (const auto& c : checks) {
      if (c.gated) {
        EXPECT_LT(c.rel_error, 0.01) << c.name << " n=" << n;
      }
      // Ungated ones are still within a factor of two of the formula.
      EXPECT_LT(c.rel_error, 1.0) << c.name << " n=" << n;
    }
  }
}

TEST(Reconcile, Errors) {
  const auto cfg = ViTConfig::toy();
  FlopTally tally;
  tally.tokens = 6;
  tally.layers = cfg.layers;
  EXPECT_THROW(reconcile(cost_report(5, cfg, CountingMode::Full), tally), Error);
  try {
    reconcile(cost_report(5, cfg, CountingMode::Full), tally);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ModeMismatch);
  }
  tally.tokens = 5;
  EXPECT_THROW(reconcile(cost_report(5, cfg, CountingMode::Paper), tally), Error);
}
