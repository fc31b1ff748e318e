#include "evit/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include "evit/error.hpp"

namespace evit {

std::string_view to_string(Component c) {
  switch (c) {
    case Component::Embedding: return "embedding";
    case Component::Norm: return "norm";
    case Component::Qkv: return "qkv";
    case Component::Scores: return "scores";
    case Component::Softmax: return "softmax";
    case Component::Context: return "context";
    case Component::MsaProjection: return "msa_projection";
    case Component::Mlp: return "mlp";
    case Component::Activation: return "activation";
    case Component::Residual: return "residual";
    case Component::Head: return "head";
  }
  return "unknown";
}

OpCounter FlopTally::total() const noexcept {
  OpCounter t;
  for (const auto& c : by_component) t += c;
  return t;
}

namespace {

void count_matmul(OpCounter* counter, std::size_t m, std::size_t k, std::size_t p) {
  if (counter == nullptr || k == 0) return;
  counter->multiplies += static_cast<std::uint64_t>(m) * p * k;
  counter->adds += static_cast<std::uint64_t>(m) * p * (k - 1);
}

constexpr std::size_t kRowTile = 8;
constexpr std::size_t kColTile = 24;
constexpr std::size_t kDepthBlock = 256;

// Packs rows [k0, k0+kn) of B (or of B^T when transposed) into column panels
// of width kColTile, zero padded: panel q holds kn x kColTile contiguous values.
void pack_panels(const double* b, std::size_t k, std::size_t p, bool transposed, std::size_t k0,
                 std::size_t kn, std::vector<double>& packed) {
  const std::size_t panels = (p + kColTile - 1) / kColTile;
  packed.assign(panels * kn * kColTile, 0.0);
  for (std::size_t q = 0; q < panels; ++q) {
    double* dst = packed.data() + q * kn * kColTile;
    const std::size_t j0 = q * kColTile;
    const std::size_t jn = std::min(kColTile, p - j0);
    for (std::size_t kk = 0; kk < kn; ++kk) {
      for (std::size_t j = 0; j < jn; ++j) {
        dst[kk * kColTile + j] = transposed ? b[(j0 + j) * k + (k0 + kk)] : b[(k0 + kk) * p + j0 + j];
      }
    }
  }
}

// Rows x kColTile block of C accumulated in registers over one depth block.
template <std::size_t Rows>
void micro_kernel(const double* __restrict a, std::size_t lda, const double* __restrict panel,
                  std::size_t kn, double* __restrict c, std::size_t ldc, std::size_t cols) {
  double acc[Rows][kColTile] = {};
  for (std::size_t kk = 0; kk < kn; ++kk) {
    const double* bp = panel + kk * kColTile;
#pragma GCC unroll 8
    for (std::size_t r = 0; r < Rows; ++r) {
      const double av = a[r * lda + kk];
#pragma GCC unroll 24
      for (std::size_t j = 0; j < kColTile; ++j) acc[r][j] += av * bp[j];
    }
  }
  if (cols == kColTile) {
    for (std::size_t r = 0; r < Rows; ++r)
      for (std::size_t j = 0; j < kColTile; ++j) c[r * ldc + j] += acc[r][j];
    return;
  }
  // Edge panel: constant-bound copy keeps acc in registers.
  double tail[Rows][kColTile];
  for (std::size_t r = 0; r < Rows; ++r)
    for (std::size_t j = 0; j < kColTile; ++j) tail[r][j] = acc[r][j];
  for (std::size_t r = 0; r < Rows; ++r)
    for (std::size_t j = 0; j < cols; ++j) c[r * ldc + j] += tail[r][j];
}

template <std::size_t... R>
void dispatch_rows(std::size_t rows, std::index_sequence<R...>, const double* a, std::size_t lda,
                   const double* panel, std::size_t kn, double* c, std::size_t ldc,
                   std::size_t cols) {
  ((rows == R + 1 ? micro_kernel<R + 1>(a, lda, panel, kn, c, ldc, cols) : void()), ...);
}

// c[m x p] = a[m x k] * op(b). Deterministic for fixed shapes.
void gemm(const double* a, std::size_t m, std::size_t k, const double* b, std::size_t p,
          bool b_transposed, double* c) {
  std::fill(c, c + m * p, 0.0);
  if (k == 0 || m == 0 || p == 0) return;
  std::vector<double> packed;
  const std::size_t panels = (p + kColTile - 1) / kColTile;
  for (std::size_t k0 = 0; k0 < k; k0 += kDepthBlock) {
    const std::size_t kn = std::min(kDepthBlock, k - k0);
    pack_panels(b, k, p, b_transposed, k0, kn, packed);
    for (std::size_t i = 0; i < m; i += kRowTile) {
      const std::size_t rows = std::min(kRowTile, m - i);
      const double* ai = a + i * k + k0;
      for (std::size_t q = 0; q < panels; ++q) {
        dispatch_rows(rows, std::make_index_sequence<kRowTile>{}, ai, k,
                      packed.data() + q * kn * kColTile, kn, c + i * p + q * kColTile, p,
                      std::min(kColTile, p - q * kColTile));
      }
    }
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::ShapeMismatch, what);
}

}  // namespace

Tensor2D matmul(const Tensor2D& a, const Tensor2D& b, OpCounter* counter) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Tensor2D c(a.rows(), b.cols());
  gemm(a.data(), a.rows(), a.cols(), b.data(), b.cols(), false, c.data());
  count_matmul(counter, a.rows(), a.cols(), b.cols());
  return c;
}

Tensor2D matmul_nt(const Tensor2D& a, const Tensor2D& b, OpCounter* counter) {
  require(a.cols() == b.cols(), "matmul_nt: inner dimensions differ");
  Tensor2D c(a.rows(), b.rows());
  gemm(a.data(), a.rows(), a.cols(), b.data(), b.rows(), true, c.data());
  count_matmul(counter, a.rows(), a.cols(), b.rows());
  return c;
}

Tensor2D matmul_tn(const Tensor2D& a, const Tensor2D& b, OpCounter* counter) {
  require(a.rows() == b.rows(), "matmul_tn: inner dimensions differ");
  const Tensor2D at = a.transposed();
  Tensor2D c(at.rows(), b.cols());
  gemm(at.data(), at.rows(), at.cols(), b.data(), b.cols(), false, c.data());
  count_matmul(counter, at.rows(), at.cols(), b.cols());
  return c;
}

void add_row_bias(Tensor2D& x, std::span<const double> bias, OpCounter* counter) {
  require(bias.size() == x.cols(), "add_row_bias: bias length");
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias[c];
  }
  if (counter) counter->adds += x.size();
}

void add_inplace(Tensor2D& x, const Tensor2D& y, OpCounter* counter) {
  x += y;
  if (counter) counter->adds += x.size();
}

MatmulGrads matmul_bwd(const Tensor2D& a, const Tensor2D& b, const Tensor2D& dc) {
  require(a.cols() == b.rows() && dc.rows() == a.rows() && dc.cols() == b.cols(),
          "matmul_bwd: shapes");
  return {matmul_nt(dc, b), matmul_tn(a, dc)};
}

std::vector<double> column_sums(const Tensor2D& x) {
  std::vector<double> s(x.cols(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) s[c] += row[c];
  }
  return s;
}

Tensor2D layer_norm(const Tensor2D& x, std::span<const double> gain, std::span<const double> bias,
                    double eps, OpCounter* counter, LayerNormCache* cache) {
  const std::size_t d = x.cols();
  require(d >= 1 && gain.size() == d && bias.size() == d, "layer_norm: parameter length");
  Tensor2D y(x.rows(), d);
  if (cache) {
    cache->xhat = Tensor2D(x.rows(), d);
    cache->rstd.assign(x.rows(), 0.0);
    cache->valid = true;
  }
  const double inv_d = 1.0 / static_cast<double>(d);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row(r);
    double mean = 0.0;
    for (double v : in) mean += v;
    mean *= inv_d;
    double var = 0.0;
    for (double v : in) var += (v - mean) * (v - mean);
    var *= inv_d;
    const double rstd = 1.0 / std::sqrt(var + eps);
    auto out = y.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      const double xh = (in[c] - mean) * rstd;
      if (cache) cache->xhat(r, c) = xh;
      out[c] = xh * gain[c] + bias[c];
    }
    if (cache) cache->rstd[r] = rstd;
  }
  if (counter) {
    const auto rows = static_cast<std::uint64_t>(x.rows());
    counter->adds += rows * (5 * d - 1);
    counter->multiplies += rows * 3 * d;
    counter->special += rows * 4;
  }
  return y;
}

std::vector<double> layer_norm(std::span<const double> x, std::span<const double> gain,
                               std::span<const double> bias, double eps) {
  const Tensor2D row(1, x.size(), std::vector<double>(x.begin(), x.end()));
  const Tensor2D y = layer_norm(row, gain, bias, eps);
  return {y.values().begin(), y.values().end()};
}

LayerNormGrads layer_norm_bwd(const LayerNormCache& cache, std::span<const double> gain,
                              const Tensor2D& dy) {
  if (!cache.valid) throw Error(ErrorCode::MissingCache, "layer_norm_bwd without forward cache");
  require(dy.rows() == cache.xhat.rows() && dy.cols() == cache.xhat.cols() &&
              gain.size() == dy.cols(),
          "layer_norm_bwd: shapes");
  const std::size_t d = dy.cols();
  LayerNormGrads g{Tensor2D(dy.rows(), d), std::vector<double>(d, 0.0),
                   std::vector<double>(d, 0.0)};
  const double inv_d = 1.0 / static_cast<double>(d);
  std::vector<double> dxhat(d);
  for (std::size_t r = 0; r < dy.rows(); ++r) {
    auto xh = cache.xhat.row(r);
    auto up = dy.row(r);
    double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      g.dgain[c] += up[c] * xh[c];
      g.dbias[c] += up[c];
      dxhat[c] = up[c] * gain[c];
      mean_dxhat += dxhat[c];
      mean_dxhat_xhat += dxhat[c] * xh[c];
    }
    mean_dxhat *= inv_d;
    mean_dxhat_xhat *= inv_d;
    auto dx = g.dx.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      dx[c] = cache.rstd[r] * (dxhat[c] - mean_dxhat - xh[c] * mean_dxhat_xhat);
    }
  }
  return g;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
  const double pdf = std::exp(-0.5 * x * x) * std::numbers::inv_sqrtpi / std::numbers::sqrt2;
  return cdf + x * pdf;
}

Tensor2D gelu(const Tensor2D& x, OpCounter* counter) {
  Tensor2D y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y.data()[i] = gelu(x.data()[i]);
  if (counter) counter->special += x.size();
  return y;
}

Tensor2D gelu_bwd(const Tensor2D& x, const Tensor2D& dy) {
  require(x.rows() == dy.rows() && x.cols() == dy.cols(), "gelu_bwd: shapes");
  Tensor2D dx(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) dx.data()[i] = dy.data()[i] * gelu_grad(x.data()[i]);
  return dx;
}

namespace {

void softmax_row_inplace(std::span<double> row) {
  if (row.empty()) return;
  const double mx = *std::max_element(row.begin(), row.end());
  double sum = 0.0;
  for (double& v : row) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : row) v /= sum;
}

void count_softmax(OpCounter* counter, std::size_t rows, std::size_t width) {
  if (counter == nullptr || width == 0) return;
  const auto r = static_cast<std::uint64_t>(rows);
  counter->adds += r * (2 * width - 1);
  counter->special += r * 2 * width;
}

}  // namespace

Tensor2D softmax_rows(const Tensor2D& x, OpCounter* counter) {
  Tensor2D y = x;
  for (std::size_t r = 0; r < y.rows(); ++r) softmax_row_inplace(y.row(r));
  count_softmax(counter, y.rows(), y.cols());
  return y;
}

Tensor2D attention(const Tensor2D& q, const Tensor2D& k, const Tensor2D& v,
                   AttentionCounters counters, AttentionCache* cache) {
  require(q.cols() == k.cols() && k.rows() == v.rows(), "attention: shapes");
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Tensor2D scores = matmul_nt(q, k, counters.scores);
  scores *= scale;
  if (counters.scores) counters.scores->multiplies += scores.size();
  for (std::size_t r = 0; r < scores.rows(); ++r) softmax_row_inplace(scores.row(r));
  count_softmax(counters.softmax, scores.rows(), scores.cols());
  Tensor2D out = matmul(scores, v, counters.context);
  if (cache) {
    cache->q = q;
    cache->k = k;
    cache->v = v;
    cache->probs = std::move(scores);
    cache->scale = scale;
    cache->valid = true;
  }
  return out;
}

AttentionGrads softmax_attention_bwd(const AttentionCache& cache, const Tensor2D& dout) {
  if (!cache.valid) throw Error(ErrorCode::MissingCache, "attention backward without forward cache");
  require(dout.rows() == cache.probs.rows() && dout.cols() == cache.v.cols(),
          "softmax_attention_bwd: shapes");
  const Tensor2D& p = cache.probs;
  Tensor2D dv = matmul_tn(p, dout);
  Tensor2D dp = matmul_nt(dout, cache.v);
  Tensor2D ds(p.rows(), p.cols());
  for (std::size_t r = 0; r < p.rows(); ++r) {
    double dot = 0.0;
    for (std::size_t c = 0; c < p.cols(); ++c) dot += dp(r, c) * p(r, c);
    for (std::size_t c = 0; c < p.cols(); ++c) ds(r, c) = p(r, c) * (dp(r, c) - dot) * cache.scale;
  }
  return {matmul(ds, cache.k), matmul_tn(ds, cache.q), std::move(dv)};
}

CrossEntropy cross_entropy(std::span<const double> logits, std::size_t target) {
  if (target >= logits.size()) {
    throw Error(ErrorCode::BadTarget, "target " + std::to_string(target) + " with " +
                                          std::to_string(logits.size()) + " classes");
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  CrossEntropy ce;
  ce.loss = lse - logits[target];
  ce.grad.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) ce.grad[i] = std::exp(logits[i] - lse);
  ce.grad[target] -= 1.0;
  return ce;
}

}  // namespace evit
