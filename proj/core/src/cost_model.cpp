#include "evit/cost_model.hpp"

#include <cmath>
#include <json.hpp>

#include "evit/error.hpp"

namespace evit {

std::string_view to_string(CountingMode mode) {
  return mode == CountingMode::Paper ? "paper" : "full";
}

MsaCoefficients msa_coefficients(const ViTConfig& cfg) {
  return {cfg.heads * (3 + 4 * cfg.head_dim), 8 * cfg.heads * cfg.dim * cfg.head_dim};
}

std::uint64_t mlp_coefficient(const ViTConfig& cfg) { return 4 * cfg.dim * cfg.mlp_dim; }

std::uint64_t msa_flops(std::uint64_t n, const ViTConfig& cfg) {
  const auto [a, b] = msa_coefficients(cfg);
  return a * n * n + b * n;
}

std::uint64_t mlp_flops(std::uint64_t n, const ViTConfig& cfg) { return mlp_coefficient(cfg) * n; }

std::uint64_t crossover_n(const ViTConfig& cfg) {
  const auto [a, b] = msa_coefficients(cfg);
  const std::uint64_t c = mlp_coefficient(cfg);
  if (a == 0) throw Error(ErrorCode::InvalidArgument, "quadratic coefficient must be positive");
  // a n^2 + b n >= c n  <=>  a n >= c - b  for n >= 1
  if (c <= b) return 1;
  const std::uint64_t n = (c - b + a - 1) / a;
  return n == 0 ? 1 : n;
}

CostReport cost_report(std::uint64_t n, const ViTConfig& cfg, CountingMode mode) {
  CostReport r;
  r.n = n;
  r.mode = mode;
  r.config = cfg;
  const std::uint64_t len = mode == CountingMode::Paper ? n : n + 1;
  r.flops_msa_per_layer = msa_flops(len, cfg);
  r.flops_mlp_per_layer = mlp_flops(len, cfg);
  r.per_layer.assign(cfg.layers, LayerCost{r.flops_msa_per_layer, r.flops_mlp_per_layer});
  if (mode == CountingMode::Full) {
    r.flops_embedding = 2 * n * cfg.patch_len() * cfg.dim;
    r.flops_head = 2 * cfg.dim * cfg.num_classes;
  }
  r.flops_total = cfg.layers * (r.flops_msa_per_layer + r.flops_mlp_per_layer) + r.flops_embedding +
                  r.flops_head;
  r.macs_total = static_cast<double>(r.flops_total) / 2.0;
  return r;
}

double model_macs(std::uint64_t n, const ViTConfig& cfg, CountingMode mode) {
  return cost_report(n, cfg, mode).macs_total;
}

std::string to_json(const CostReport& r) {
  using nlohmann::json;
  json layers = json::array();
  for (std::size_t i = 0; i < r.per_layer.size(); ++i) {
    layers.push_back({{"layer", i + 1}, {"msa", r.per_layer[i].msa}, {"mlp", r.per_layer[i].mlp}});
  }
  const ViTConfig& c = r.config;
  json j{{"mode", std::string(to_string(r.mode))},
         {"n", r.n},
         {"config",
          {{"patch", c.patch}, {"channels", c.channels}, {"dim", c.dim}, {"head_dim", c.head_dim},
           {"heads", c.heads}, {"layers", c.layers}, {"mlp_dim", c.mlp_dim},
           {"num_classes", c.num_classes}}},
         {"flops_msa_per_layer", r.flops_msa_per_layer},
         {"flops_mlp_per_layer", r.flops_mlp_per_layer},
         {"flops_embedding", r.flops_embedding},
         {"flops_head", r.flops_head},
         {"flops_total", r.flops_total},
         {"macs_total", r.macs_total},
         {"per_layer", layers}};
  return j.dump(2);
}

std::vector<ComponentCheck> reconcile(const CostReport& report, const FlopTally& tally) {
  if (report.mode != CountingMode::Paper) {
    throw Error(ErrorCode::ModeMismatch, "reconcile compares against the paper-mode formulas");
  }
  const ViTConfig& cfg = report.config;
  const std::uint64_t m = report.n + 1;
  if (tally.tokens != m || tally.layers != cfg.layers) {
    throw Error(ErrorCode::ShapeMismatch,
                "counters were taken at " + std::to_string(tally.tokens) + " tokens, expected " +
                    std::to_string(m));
  }
  const std::uint64_t L = cfg.layers, k = cfg.heads, dh = cfg.head_dim, d = cfg.dim;

  struct Row {
    const char* name;
    std::uint64_t analytic;
    std::uint64_t instrumented;
    bool gated;
  };
  auto flops = [&](Component c) { return tally[c].flops(); };
  const std::uint64_t msa_instr = flops(Component::Qkv) + flops(Component::Scores) +
                                  flops(Component::Softmax) + flops(Component::Context) +
                                  flops(Component::MsaProjection);
  const std::vector<Row> rows{
      {"qkv", L * 6 * k * d * dh * m, flops(Component::Qkv), true},
      {"scores", L * k * (2 * dh + 1) * m * m, flops(Component::Scores), false},
      {"softmax", L * 2 * k * m * m, flops(Component::Softmax), false},
      {"context", L * 2 * k * dh * m * m, flops(Component::Context), false},
      {"msa_projection", L * 2 * k * dh * d * m, flops(Component::MsaProjection), true},
      {"msa", L * msa_flops(m, cfg), msa_instr, true},
      {"mlp", L * mlp_flops(m, cfg), flops(Component::Mlp), true},
      {"activation", L * cfg.mlp_dim * m, flops(Component::Activation), false},
      {"layer", L * (msa_flops(m, cfg) + mlp_flops(m, cfg)), msa_instr + flops(Component::Mlp), true},
  };

  std::vector<ComponentCheck> out;
  for (const Row& r : rows) {
    ComponentCheck c{r.name, r.analytic, r.instrumented, 0.0, r.gated};
    const double a = static_cast<double>(r.analytic), b = static_cast<double>(r.instrumented);
    c.rel_error = a == 0.0 ? (b == 0.0 ? 0.0 : INFINITY) : std::abs(a - b) / a;
    out.push_back(c);
  }
  return out;
}

}  // namespace evit
