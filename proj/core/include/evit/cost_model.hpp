#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "evit/kernels.hpp"
#include "evit/vit.hpp"

namespace evit {

// paper: encoder MSA + MLP only, evaluated at n (class token, embedding and
//        head omitted; softmax costed as 2n^2 and scaling as n^2).
// full:  adds the patch embedding and head and evaluates layers at n + 1.
enum class CountingMode { Paper, Full };
std::string_view to_string(CountingMode mode);

// k(3 + 4 D_h) n^2 + 8 k D D_h n
std::uint64_t msa_flops(std::uint64_t n, const ViTConfig& cfg);
// 4 D D_mlp n
std::uint64_t mlp_flops(std::uint64_t n, const ViTConfig& cfg);

// Coefficients of msa_flops: {quadratic, linear}.
struct MsaCoefficients {
  std::uint64_t quadratic;
  std::uint64_t linear;
};
MsaCoefficients msa_coefficients(const ViTConfig& cfg);
std::uint64_t mlp_coefficient(const ViTConfig& cfg);

// Smallest n >= 1 with msa_flops(n) >= mlp_flops(n).
std::uint64_t crossover_n(const ViTConfig& cfg);

struct LayerCost {
  std::uint64_t msa = 0;
  std::uint64_t mlp = 0;
};

struct CostReport {
  std::uint64_t n = 0;
  CountingMode mode = CountingMode::Paper;
  ViTConfig config;
  std::uint64_t flops_msa_per_layer = 0;
  std::uint64_t flops_mlp_per_layer = 0;
  std::uint64_t flops_embedding = 0;  // full mode only
  std::uint64_t flops_head = 0;       // full mode only
  std::uint64_t flops_total = 0;
  double macs_total = 0.0;  // flops_total / 2
  std::vector<LayerCost> per_layer;
};

CostReport cost_report(std::uint64_t n, const ViTConfig& cfg, CountingMode mode);
double model_macs(std::uint64_t n, const ViTConfig& cfg, CountingMode mode = CountingMode::Paper);

// Integer FLOP counts and the mode label.
std::string to_json(const CostReport& report);

struct ComponentCheck {
  std::string name;
  std::uint64_t analytic = 0;
  std::uint64_t instrumented = 0;
  double rel_error = 0.0;  // |analytic - instrumented| / analytic
  bool gated = false;      // matmul-dominated; expected within 1%
};

// Compares a paper-mode report with the counters of one forward pass at
// sequence length report.n + 1 (the analytic side is re-evaluated at n + 1).
// Components: qkv, scores, softmax, context, msa_projection, msa, mlp,
// activation (GELU at one op per element), layer (msa + mlp). The ones whose
// error is bounded by 1/(2 * inner dimension) of a large matmul are gated.
std::vector<ComponentCheck> reconcile(const CostReport& report, const FlopTally& tally);

}  // namespace evit
