#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "evit/tensor.hpp"

namespace evit {

// Raw operation counts. A matmul of [m x k] by [k x p] adds m*p*k
// multiplies and m*p*(k-1) adds; exp, division, sqrt and erf land in
// `special`.
struct OpCounter {
  std::uint64_t multiplies = 0;
  std::uint64_t adds = 0;
  std::uint64_t special = 0;

  std::uint64_t flops() const noexcept { return multiplies + adds + special; }

  OpCounter& operator+=(const OpCounter& o) noexcept {
    multiplies += o.multiplies;
    adds += o.adds;
    special += o.special;
    return *this;
  }
  friend bool operator==(const OpCounter&, const OpCounter&) = default;
};

enum class Component : std::size_t {
  Embedding,
  Norm,
  Qkv,
  Scores,
  Softmax,
  Context,
  MsaProjection,
  Mlp,
  Activation,
  Residual,
  Head,
};
inline constexpr std::size_t kComponentCount = 11;
std::string_view to_string(Component c);

// Per-component counters for one forward pass.
struct FlopTally {
  std::array<OpCounter, kComponentCount> by_component{};
  std::size_t tokens = 0;  // sequence length including the class token
  std::size_t layers = 0;

  OpCounter& operator[](Component c) noexcept { return by_component[static_cast<std::size_t>(c)]; }
  const OpCounter& operator[](Component c) const noexcept {
    return by_component[static_cast<std::size_t>(c)];
  }
  OpCounter total() const noexcept;
};

// --- matrix products -------------------------------------------------------

Tensor2D matmul(const Tensor2D& a, const Tensor2D& b, OpCounter* counter = nullptr);
// a * b^T, with b given as [p x k].
Tensor2D matmul_nt(const Tensor2D& a, const Tensor2D& b, OpCounter* counter = nullptr);
// a^T * b, with a given as [k x m].
Tensor2D matmul_tn(const Tensor2D& a, const Tensor2D& b, OpCounter* counter = nullptr);

// x[r, :] += bias for every row.
void add_row_bias(Tensor2D& x, std::span<const double> bias, OpCounter* counter = nullptr);
void add_inplace(Tensor2D& x, const Tensor2D& y, OpCounter* counter = nullptr);

struct MatmulGrads {
  Tensor2D da;
  Tensor2D db;
};
// Gradients of c = a * b given dc.
MatmulGrads matmul_bwd(const Tensor2D& a, const Tensor2D& b, const Tensor2D& dc);

// Column sums, used for bias gradients.
std::vector<double> column_sums(const Tensor2D& x);

// --- layer normalization ---------------------------------------------------

inline constexpr double kLayerNormEps = 1e-6;

struct LayerNormCache {
  Tensor2D xhat;
  std::vector<double> rstd;
  bool valid = false;
};

// Row-wise (x - mean) / sqrt(var + eps) * gain + bias, population variance.
Tensor2D layer_norm(const Tensor2D& x, std::span<const double> gain, std::span<const double> bias,
                    double eps = kLayerNormEps, OpCounter* counter = nullptr,
                    LayerNormCache* cache = nullptr);
std::vector<double> layer_norm(std::span<const double> x, std::span<const double> gain,
                               std::span<const double> bias, double eps = kLayerNormEps);

struct LayerNormGrads {
  Tensor2D dx;
  std::vector<double> dgain;
  std::vector<double> dbias;
};
LayerNormGrads layer_norm_bwd(const LayerNormCache& cache, std::span<const double> gain,
                              const Tensor2D& dy);

// --- GELU (exact erf form) -------------------------------------------------

double gelu(double x);
double gelu_grad(double x);
Tensor2D gelu(const Tensor2D& x, OpCounter* counter = nullptr);
Tensor2D gelu_bwd(const Tensor2D& x, const Tensor2D& dy);

// --- softmax and attention -------------------------------------------------

Tensor2D softmax_rows(const Tensor2D& x, OpCounter* counter = nullptr);

struct AttentionCounters {
  OpCounter* scores = nullptr;   // q k^T and the 1/sqrt(d) scaling
  OpCounter* softmax = nullptr;
  OpCounter* context = nullptr;  // probs * v
};

struct AttentionCache {
  Tensor2D q, k, v, probs;
  double scale = 1.0;
  bool valid = false;
};

// softmax(q k^T / sqrt(d_h)) v
Tensor2D attention(const Tensor2D& q, const Tensor2D& k, const Tensor2D& v,
                   AttentionCounters counters = {}, AttentionCache* cache = nullptr);

struct AttentionGrads {
  Tensor2D dq, dk, dv;
};
AttentionGrads softmax_attention_bwd(const AttentionCache& cache, const Tensor2D& dout);

// --- loss ------------------------------------------------------------------

struct CrossEntropy {
  double loss = 0.0;
  std::vector<double> grad;  // softmax(logits) - one_hot(target)
};
CrossEntropy cross_entropy(std::span<const double> logits, std::size_t target);

}  // namespace evit
