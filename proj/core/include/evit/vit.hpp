#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "evit/kernels.hpp"
#include "evit/patches.hpp"
#include "evit/tensor.hpp"
#include "evit/voxel.hpp"

namespace evit {

struct ViTConfig {
  std::size_t patch = 16;
  std::size_t channels = 9;
  std::size_t dim = 768;
  std::size_t head_dim = 64;
  std::size_t heads = 12;
  std::size_t layers = 12;
  std::size_t mlp_dim = 3072;
  std::size_t frame_height = 192;
  std::size_t frame_width = 240;
  std::size_t num_classes = 100;

  std::size_t slots() const noexcept { return (frame_height / patch) * (frame_width / patch); }
  std::size_t patch_len() const noexcept { return patch * patch * channels; }

  // ViT-Base sized backbone over 192x240x9 frames with 16x16 patches.
  static ViTConfig paper();
  // Desk-scale model used by the training experiments.
  static ViTConfig toy();

  // Throws InvalidArgument unless heads*head_dim == dim and the frame tiles.
  void validate() const;

  friend bool operator==(const ViTConfig&, const ViTConfig&) = default;
};

struct EncoderLayerParams {
  Tensor2D ln1_gain, ln1_bias;            // 1 x D
  std::vector<Tensor2D> u_q, u_k, u_v;    // per head, D x D_h
  Tensor2D u_msa;                         // (k*D_h) x D
  Tensor2D ln2_gain, ln2_bias;            // 1 x D
  Tensor2D w1, b1;                        // D x D_mlp, 1 x D_mlp
  Tensor2D w2, b2;                        // D_mlp x D, 1 x D

  friend bool operator==(const EncoderLayerParams&, const EncoderLayerParams&) = default;
};

struct ViTParams {
  Tensor2D patch_embedding;  // (P*P*C) x D
  Tensor2D pos_embedding;    // (slots + 1) x D, row 0 belongs to the class token
  Tensor2D class_token;      // 1 x D
  std::vector<EncoderLayerParams> layers;
  Tensor2D head_ln_gain, head_ln_bias;  // 1 x D
  Tensor2D head_weight;                 // D x num_classes
  Tensor2D head_bias;                   // 1 x num_classes

  friend bool operator==(const ViTParams&, const ViTParams&) = default;
};

// Correctly shaped parameters: zero tensors, LayerNorm gains set to one.
ViTParams make_params(const ViTConfig& cfg);
ViTParams zeros_like(const ViTParams& params);

// Weights drawn from a normal(0, 0.02) truncated at two deviations; biases
// zero, LayerNorm gains one.
ViTParams init_params(const ViTConfig& cfg, std::uint64_t seed);

// Visits every tensor in canonical order: E, E_pos, x_class, the layers in
// order, then the head.
void for_each_tensor(ViTParams& params,
                     const std::function<void(const std::string&, Tensor2D&)>& fn);
void for_each_tensor(const ViTParams& params,
                     const std::function<void(const std::string&, const Tensor2D&)>& fn);
// Pairs matching tensors of two parameter sets with identical layout.
void for_each_tensor_pair(ViTParams& a, const ViTParams& b,
                          const std::function<void(Tensor2D&, const Tensor2D&)>& fn);

std::size_t parameter_count(const ViTParams& params);

// --- forward -----------------------------------------------------------------

struct LayerTrace {
  LayerNormCache ln1;
  Tensor2D ln1_out;
  std::vector<AttentionCache> heads;
  Tensor2D concat;
  LayerNormCache ln2;
  Tensor2D ln2_out;
  Tensor2D hidden_pre;
  Tensor2D hidden;
};

// Activations retained by forward() for backward().
struct ForwardTrace {
  Tensor2D patches;
  std::vector<std::size_t> positions;
  std::vector<LayerTrace> layers;
  LayerNormCache head_ln;
  Tensor2D head_in;  // 1 x D, normalized class-token row
  bool valid = false;
};

// Row 0 is x_class + E_pos[0]; row j is x_j E + E_pos[positions[j-1] + 1].
Tensor2D embed(const PatchSet& patches, const ViTParams& params, const ViTConfig& cfg,
               FlopTally* tally = nullptr);

// One head: softmax(q k^T / sqrt(D_h)) v with q, k, v = z U_q, z U_k, z U_v.
Tensor2D self_attention(const Tensor2D& z, const Tensor2D& u_q, const Tensor2D& u_k,
                        const Tensor2D& u_v, FlopTally* tally = nullptr,
                        AttentionCache* cache = nullptr);

// Heads concatenated along the width, then projected by U_MSA.
Tensor2D msa(const Tensor2D& z, const EncoderLayerParams& layer, FlopTally* tally = nullptr,
             LayerTrace* trace = nullptr);

// z' = MSA(LN1(z)) + z; z_next = MLP(LN2(z')) + z'.
Tensor2D encoder_layer(const Tensor2D& z, const EncoderLayerParams& layer,
                       FlopTally* tally = nullptr, LayerTrace* trace = nullptr);

// Logits from the LayerNormed class token through the affine head.
std::vector<double> forward(const PatchSet& patches, const ViTParams& params,
                            const ViTConfig& cfg, FlopTally* tally = nullptr,
                            ForwardTrace* trace = nullptr);

// Reference path that tiles every slot of a frame directly, with no
// selection step.
std::vector<double> forward_dense(const VoxelGrid& frame, const ViTParams& params,
                                  const ViTConfig& cfg);

// --- backward ----------------------------------------------------------------

// Gradients of sum_i dlogits[i] * logits[i] for every parameter. E_pos rows
// that were not gathered stay exactly zero.
ViTParams backward(const ForwardTrace& trace, std::span<const double> dlogits,
                   const ViTParams& params, const ViTConfig& cfg);

struct LossAndGrads {
  double loss = 0.0;
  std::vector<double> logits;
  ViTParams grads;
};

// Forward, cross-entropy against `target`, and backward in one call.
LossAndGrads backward(const PatchSet& patches, std::size_t target, const ViTParams& params,
                      const ViTConfig& cfg);

std::size_t argmax(std::span<const double> v);

}  // namespace evit
