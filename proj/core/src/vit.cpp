#include "evit/vit.hpp"

#include <algorithm>
#include <cmath>

#include "evit/error.hpp"
#include "evit/random.hpp"

namespace evit {

ViTConfig ViTConfig::paper() { return ViTConfig{}; }

ViTConfig ViTConfig::toy() {
  ViTConfig c;
  c.patch = 8;
  c.channels = 5;
  c.dim = 64;
  c.head_dim = 16;
  c.heads = 4;
  c.layers = 2;
  c.mlp_dim = 128;
  c.frame_height = 64;
  c.frame_width = 64;
  c.num_classes = 3;
  return c;
}

void ViTConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidArgument, m); };
  if (patch == 0 || channels == 0 || dim == 0 || head_dim == 0 || heads == 0 || mlp_dim == 0 ||
      num_classes == 0)
    fail("config dimensions must be positive");
  if (heads * head_dim != dim) fail("heads * head_dim must equal dim");
  if (frame_height % patch != 0 || frame_width % patch != 0 || frame_height == 0 ||
      frame_width == 0)
    fail("frame must tile exactly into patches");
}

namespace {

Tensor2D ones_row(std::size_t n) { return Tensor2D(1, n, 1.0); }

}  // namespace

ViTParams make_params(const ViTConfig& cfg) {
  cfg.validate();
  ViTParams p;
  const std::size_t d = cfg.dim;
  p.patch_embedding = Tensor2D(cfg.patch_len(), d);
  p.pos_embedding = Tensor2D(cfg.slots() + 1, d);
  p.class_token = Tensor2D(1, d);
  p.layers.resize(cfg.layers);
  for (auto& l : p.layers) {
    l.ln1_gain = ones_row(d);
    l.ln1_bias = Tensor2D(1, d);
    for (std::size_t h = 0; h < cfg.heads; ++h) {
      l.u_q.emplace_back(d, cfg.head_dim);
      l.u_k.emplace_back(d, cfg.head_dim);
      l.u_v.emplace_back(d, cfg.head_dim);
    }
    l.u_msa = Tensor2D(cfg.heads * cfg.head_dim, d);
    l.ln2_gain = ones_row(d);
    l.ln2_bias = Tensor2D(1, d);
    l.w1 = Tensor2D(d, cfg.mlp_dim);
    l.b1 = Tensor2D(1, cfg.mlp_dim);
    l.w2 = Tensor2D(cfg.mlp_dim, d);
    l.b2 = Tensor2D(1, d);
  }
  p.head_ln_gain = ones_row(d);
  p.head_ln_bias = Tensor2D(1, d);
  p.head_weight = Tensor2D(d, cfg.num_classes);
  p.head_bias = Tensor2D(1, cfg.num_classes);
  return p;
}

ViTParams zeros_like(const ViTParams& params) {
  ViTParams z = params;
  for_each_tensor(z, [](const std::string&, Tensor2D& t) { t.fill(0.0); });
  return z;
}

ViTParams init_params(const ViTConfig& cfg, std::uint64_t seed) {
  ViTParams p = make_params(cfg);
  Rng rng(seed);
  for_each_tensor(p, [&](const std::string& name, Tensor2D& t) {
    const bool is_bias_or_norm = name.find("ln") != std::string::npos ||
                                 name.ends_with(".b1") || name.ends_with(".b2") ||
                                 name == "head.b";
    if (is_bias_or_norm) return;
    for (double& v : t.values()) v = truncated_normal(rng, 0.02);
  });
  return p;
}

namespace {

template <typename P, typename F>
void visit_tensors(P& p, F&& fn) {
  fn(std::string("E"), p.patch_embedding);
  fn(std::string("E_pos"), p.pos_embedding);
  fn(std::string("x_class"), p.class_token);
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    auto& l = p.layers[i];
    const std::string pre = "layers." + std::to_string(i) + ".";
    fn(pre + "ln1.gain", l.ln1_gain);
    fn(pre + "ln1.bias", l.ln1_bias);
    for (std::size_t h = 0; h < l.u_q.size(); ++h) {
      const std::string hp = pre + "head" + std::to_string(h) + ".";
      fn(hp + "U_q", l.u_q[h]);
      fn(hp + "U_k", l.u_k[h]);
      fn(hp + "U_v", l.u_v[h]);
    }
    fn(pre + "U_msa", l.u_msa);
    fn(pre + "ln2.gain", l.ln2_gain);
    fn(pre + "ln2.bias", l.ln2_bias);
    fn(pre + "mlp.W1", l.w1);
    fn(pre + "mlp.b1", l.b1);
    fn(pre + "mlp.W2", l.w2);
    fn(pre + "mlp.b2", l.b2);
  }
  fn(std::string("head.ln.gain"), p.head_ln_gain);
  fn(std::string("head.ln.bias"), p.head_ln_bias);
  fn(std::string("head.W"), p.head_weight);
  fn(std::string("head.b"), p.head_bias);
}

}  // namespace

void for_each_tensor(ViTParams& params,
                     const std::function<void(const std::string&, Tensor2D&)>& fn) {
  visit_tensors(params, fn);
}

void for_each_tensor(const ViTParams& params,
                     const std::function<void(const std::string&, const Tensor2D&)>& fn) {
  visit_tensors(params, fn);
}

void for_each_tensor_pair(ViTParams& a, const ViTParams& b,
                          const std::function<void(Tensor2D&, const Tensor2D&)>& fn) {
  std::vector<const Tensor2D*> rhs;
  for_each_tensor(b, [&](const std::string&, const Tensor2D& t) { rhs.push_back(&t); });
  std::size_t i = 0;
  for_each_tensor(a, [&](const std::string& name, Tensor2D& t) {
    if (i >= rhs.size() || rhs[i]->rows() != t.rows() || rhs[i]->cols() != t.cols()) {
      throw Error(ErrorCode::ShapeMismatch, "parameter layouts differ at " + name);
    }
    fn(t, *rhs[i++]);
  });
  if (i != rhs.size()) throw Error(ErrorCode::ShapeMismatch, "parameter layouts differ in length");
}

std::size_t parameter_count(const ViTParams& params) {
  std::size_t n = 0;
  for_each_tensor(params, [&](const std::string&, const Tensor2D& t) { n += t.size(); });
  return n;
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

// --- forward -----------------------------------------------------------------

namespace {

OpCounter* slot(FlopTally* tally, Component c) { return tally ? &(*tally)[c] : nullptr; }

Tensor2D embed_rows(const Tensor2D& vectors, std::span<const std::size_t> positions,
                    const ViTParams& params, const ViTConfig& cfg, FlopTally* tally) {
  if (vectors.cols() != cfg.patch_len() || vectors.rows() != positions.size()) {
    throw Error(ErrorCode::ShapeMismatch, "patch vectors do not match the model's patch length");
  }
  for (std::size_t p : positions) {
    if (p >= cfg.slots()) {
      throw Error(ErrorCode::PositionOutOfRange,
                  "slot " + std::to_string(p) + " with " + std::to_string(cfg.slots()) + " slots");
    }
  }
  const std::size_t d = cfg.dim;
  const Tensor2D proj = matmul(vectors, params.patch_embedding, slot(tally, Component::Embedding));
  Tensor2D z(positions.size() + 1, d);
  auto cls = z.row(0);
  for (std::size_t c = 0; c < d; ++c) cls[c] = params.class_token(0, c) + params.pos_embedding(0, c);
  for (std::size_t j = 0; j < positions.size(); ++j) {
    auto out = z.row(j + 1);
    auto in = proj.row(j);
    auto pos = params.pos_embedding.row(positions[j] + 1);
    for (std::size_t c = 0; c < d; ++c) out[c] = in[c] + pos[c];
  }
  if (tally) (*tally)[Component::Embedding].adds += z.size();
  return z;
}

Tensor2D column_block(const Tensor2D& x, std::size_t c0, std::size_t width) {
  Tensor2D out(x.rows(), width);
  for (std::size_t r = 0; r < x.rows(); ++r)
    std::copy_n(x.row(r).begin() + static_cast<std::ptrdiff_t>(c0), width, out.row(r).begin());
  return out;
}

void set_column_block(Tensor2D& x, std::size_t c0, const Tensor2D& block) {
  for (std::size_t r = 0; r < x.rows(); ++r)
    std::copy_n(block.row(r).begin(), block.cols(), x.row(r).begin() + static_cast<std::ptrdiff_t>(c0));
}

std::vector<double> run_encoder(Tensor2D z, const ViTParams& params, const ViTConfig& cfg,
                                FlopTally* tally, ForwardTrace* trace) {
  if (tally) {
    tally->tokens = z.rows();
    tally->layers = params.layers.size();
  }
  if (trace) trace->layers.assign(params.layers.size(), LayerTrace{});
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    z = encoder_layer(z, params.layers[l], tally, trace ? &trace->layers[l] : nullptr);
  }
  const Tensor2D cls(1, cfg.dim, std::vector<double>(z.row(0).begin(), z.row(0).end()));
  LayerNormCache* ln_cache = trace ? &trace->head_ln : nullptr;
  const Tensor2D normed = layer_norm(cls, params.head_ln_gain.values(), params.head_ln_bias.values(),
                                     kLayerNormEps, slot(tally, Component::Head), ln_cache);
  Tensor2D logits = matmul(normed, params.head_weight, slot(tally, Component::Head));
  add_row_bias(logits, params.head_bias.values(), slot(tally, Component::Head));
  if (trace) {
    trace->head_in = normed;
    trace->valid = true;
  }
  return {logits.values().begin(), logits.values().end()};
}

}  // namespace

Tensor2D embed(const PatchSet& patches, const ViTParams& params, const ViTConfig& cfg,
               FlopTally* tally) {
  return embed_rows(patches.vectors, patches.positions, params, cfg, tally);
}

Tensor2D self_attention(const Tensor2D& z, const Tensor2D& u_q, const Tensor2D& u_k,
                        const Tensor2D& u_v, FlopTally* tally, AttentionCache* cache) {
  OpCounter* qkv = slot(tally, Component::Qkv);
  const Tensor2D q = matmul(z, u_q, qkv);
  const Tensor2D k = matmul(z, u_k, qkv);
  const Tensor2D v = matmul(z, u_v, qkv);
  return attention(q, k, v,
                   {slot(tally, Component::Scores), slot(tally, Component::Softmax),
                    slot(tally, Component::Context)},
                   cache);
}

Tensor2D msa(const Tensor2D& z, const EncoderLayerParams& layer, FlopTally* tally,
             LayerTrace* trace) {
  const std::size_t heads = layer.u_q.size();
  if (heads == 0 || layer.u_k.size() != heads || layer.u_v.size() != heads) {
    throw Error(ErrorCode::ShapeMismatch, "msa: head parameter count");
  }
  const std::size_t dh = layer.u_q.front().cols();
  if (layer.u_msa.rows() != heads * dh || z.cols() != layer.u_q.front().rows()) {
    throw Error(ErrorCode::ShapeMismatch, "msa: projection shape");
  }
  Tensor2D concat(z.rows(), heads * dh);
  if (trace) trace->heads.assign(heads, AttentionCache{});
  for (std::size_t h = 0; h < heads; ++h) {
    const Tensor2D sa = self_attention(z, layer.u_q[h], layer.u_k[h], layer.u_v[h], tally,
                                       trace ? &trace->heads[h] : nullptr);
    set_column_block(concat, h * dh, sa);
  }
  Tensor2D out = matmul(concat, layer.u_msa, slot(tally, Component::MsaProjection));
  if (trace) trace->concat = std::move(concat);
  return out;
}

Tensor2D encoder_layer(const Tensor2D& z, const EncoderLayerParams& layer, FlopTally* tally,
                       LayerTrace* trace) {
  if (z.cols() != layer.ln1_gain.cols()) throw Error(ErrorCode::ShapeMismatch, "encoder_layer input width");
  OpCounter* norm = slot(tally, Component::Norm);
  OpCounter* residual = slot(tally, Component::Residual);
  OpCounter* mlp = slot(tally, Component::Mlp);

  Tensor2D a1 = layer_norm(z, layer.ln1_gain.values(), layer.ln1_bias.values(), kLayerNormEps, norm,
                           trace ? &trace->ln1 : nullptr);
  Tensor2D mid = msa(a1, layer, tally, trace);
  add_inplace(mid, z, residual);

  Tensor2D a2 = layer_norm(mid, layer.ln2_gain.values(), layer.ln2_bias.values(), kLayerNormEps,
                           norm, trace ? &trace->ln2 : nullptr);
  Tensor2D pre = matmul(a2, layer.w1, mlp);
  add_row_bias(pre, layer.b1.values(), mlp);
  Tensor2D hidden = gelu(pre, slot(tally, Component::Activation));
  Tensor2D out = matmul(hidden, layer.w2, mlp);
  add_row_bias(out, layer.b2.values(), mlp);
  add_inplace(out, mid, residual);

  if (trace) {
    trace->ln1_out = std::move(a1);
    trace->ln2_out = std::move(a2);
    trace->hidden_pre = std::move(pre);
    trace->hidden = std::move(hidden);
  }
  return out;
}

std::vector<double> forward(const PatchSet& patches, const ViTParams& params,
                            const ViTConfig& cfg, FlopTally* tally, ForwardTrace* trace) {
  if (tally) *tally = FlopTally{};
  Tensor2D z = embed(patches, params, cfg, tally);
  if (trace) {
    *trace = ForwardTrace{};
    trace->patches = patches.vectors;
    trace->positions = patches.positions;
  }
  return run_encoder(std::move(z), params, cfg, tally, trace);
}

std::vector<double> forward_dense(const VoxelGrid& frame, const ViTParams& params,
                                  const ViTConfig& cfg) {
  if (frame.height() != cfg.frame_height || frame.width() != cfg.frame_width ||
      frame.channels() != cfg.channels) {
    throw Error(ErrorCode::ShapeMismatch, "frame does not match the model config");
  }
  const std::size_t p = cfg.patch, ch = cfg.channels;
  const std::size_t cols = cfg.frame_width / p;
  Tensor2D vectors(cfg.slots(), cfg.patch_len());
  std::vector<std::size_t> positions(cfg.slots());
  for (std::size_t s = 0; s < cfg.slots(); ++s) {
    positions[s] = s;
    const std::size_t y0 = (s / cols) * p, x0 = (s % cols) * p;
    std::size_t k = 0;
    for (std::size_t y = 0; y < p; ++y)
      for (std::size_t x = 0; x < p; ++x)
        for (std::size_t c = 0; c < ch; ++c) vectors(s, k++) = frame.at(y0 + y, x0 + x, c);
  }
  return run_encoder(embed_rows(vectors, positions, params, cfg, nullptr), params, cfg, nullptr,
                     nullptr);
}

// --- backward ----------------------------------------------------------------

namespace {

void accumulate_row(Tensor2D& dst, std::size_t r, std::span<const double> src) {
  auto row = dst.row(r);
  for (std::size_t c = 0; c < row.size(); ++c) row[c] += src[c];
}

void add_vector(Tensor2D& dst_row, const std::vector<double>& src) {
  auto row = dst_row.row(0);
  for (std::size_t c = 0; c < row.size(); ++c) row[c] += src[c];
}

// Returns dz for the layer input and writes parameter gradients into g.
Tensor2D layer_backward(const LayerTrace& t, const EncoderLayerParams& p, const Tensor2D& dout,
                        EncoderLayerParams& g) {
  // MLP branch: out = gelu(a2 W1 + b1) W2 + b2 + mid
  g.w2 += matmul_tn(t.hidden, dout);
  add_vector(g.b2, column_sums(dout));
  const Tensor2D dhidden = matmul_nt(dout, p.w2);
  const Tensor2D dpre = gelu_bwd(t.hidden_pre, dhidden);
  g.w1 += matmul_tn(t.ln2_out, dpre);
  add_vector(g.b1, column_sums(dpre));
  const Tensor2D da2 = matmul_nt(dpre, p.w1);
  LayerNormGrads ln2 = layer_norm_bwd(t.ln2, p.ln2_gain.values(), da2);
  add_vector(g.ln2_gain, ln2.dgain);
  add_vector(g.ln2_bias, ln2.dbias);
  Tensor2D dmid = dout;
  dmid += ln2.dx;

  // Attention branch: mid = concat(heads) U_msa + z
  g.u_msa += matmul_tn(t.concat, dmid);
  const Tensor2D dconcat = matmul_nt(dmid, p.u_msa);
  Tensor2D da1(t.ln1_out.rows(), t.ln1_out.cols());
  const std::size_t dh = p.u_q.front().cols();
  for (std::size_t h = 0; h < p.u_q.size(); ++h) {
    const Tensor2D dsa = column_block(dconcat, h * dh, dh);
    const AttentionGrads ag = softmax_attention_bwd(t.heads[h], dsa);
    g.u_q[h] += matmul_tn(t.ln1_out, ag.dq);
    g.u_k[h] += matmul_tn(t.ln1_out, ag.dk);
    g.u_v[h] += matmul_tn(t.ln1_out, ag.dv);
    da1 += matmul_nt(ag.dq, p.u_q[h]);
    da1 += matmul_nt(ag.dk, p.u_k[h]);
    da1 += matmul_nt(ag.dv, p.u_v[h]);
  }
  LayerNormGrads ln1 = layer_norm_bwd(t.ln1, p.ln1_gain.values(), da1);
  add_vector(g.ln1_gain, ln1.dgain);
  add_vector(g.ln1_bias, ln1.dbias);
  dmid += ln1.dx;
  return dmid;
}

}  // namespace

ViTParams backward(const ForwardTrace& trace, std::span<const double> dlogits,
                   const ViTParams& params, const ViTConfig& cfg) {
  if (!trace.valid) throw Error(ErrorCode::MissingCache, "backward needs a forward trace");
  if (dlogits.size() != cfg.num_classes) throw Error(ErrorCode::ShapeMismatch, "dlogits length");
  ViTParams g = zeros_like(params);
  const std::size_t d = cfg.dim;

  // Head: logits = LN(cls) W + b
  const Tensor2D dl(1, dlogits.size(), std::vector<double>(dlogits.begin(), dlogits.end()));
  g.head_weight += matmul_tn(trace.head_in, dl);
  add_vector(g.head_bias, std::vector<double>(dlogits.begin(), dlogits.end()));
  const Tensor2D dnormed = matmul_nt(dl, params.head_weight);
  const LayerNormGrads hln = layer_norm_bwd(trace.head_ln, params.head_ln_gain.values(), dnormed);
  add_vector(g.head_ln_gain, hln.dgain);
  add_vector(g.head_ln_bias, hln.dbias);

  Tensor2D dz(trace.positions.size() + 1, d);
  accumulate_row(dz, 0, hln.dx.row(0));
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    dz = layer_backward(trace.layers[l], params.layers[l], dz, g.layers[l]);
  }

  // Embedding: z0[0] = x_class + E_pos[0]; z0[j] = x_j E + E_pos[pos_j + 1]
  accumulate_row(g.class_token, 0, dz.row(0));
  accumulate_row(g.pos_embedding, 0, dz.row(0));
  for (std::size_t j = 0; j < trace.positions.size(); ++j) {
    accumulate_row(g.pos_embedding, trace.positions[j] + 1, dz.row(j + 1));
  }
  if (!trace.positions.empty()) {
    Tensor2D dtokens(trace.positions.size(), d);
    for (std::size_t j = 0; j < trace.positions.size(); ++j) accumulate_row(dtokens, j, dz.row(j + 1));
    g.patch_embedding += matmul_tn(trace.patches, dtokens);
  }
  return g;
}

LossAndGrads backward(const PatchSet& patches, std::size_t target, const ViTParams& params,
                      const ViTConfig& cfg) {
  ForwardTrace trace;
  LossAndGrads out;
  out.logits = forward(patches, params, cfg, nullptr, &trace);
  const CrossEntropy ce = cross_entropy(out.logits, target);
  out.loss = ce.loss;
  out.grads = backward(trace, ce.grad, params, cfg);
  return out;
}

}  // namespace evit
