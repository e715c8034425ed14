#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "simtrans/data.hpp"
#include "simtrans/numerics.hpp"

namespace simtrans {

struct TransformerConfig {
  int num_layers = 6;
  int num_heads = 4;
  int d_model = 512;
  int d_ff = 0;  // 0 selects 4 * d_model
  Scalar dropout_rate = 0.3;
  int max_positions = 1024;
  int vocab_size = 0;

  int ff_dim() const { return d_ff > 0 ? d_ff : 4 * d_model; }
  void validate() const;
  std::uint64_t hash() const;
};

struct AttentionParams {
  Matrix wq, wk, wv, wo;  // each d_model x d_model; heads are column blocks
};

struct LayerNormParams {
  Vector gain, bias;
};

struct FeedForwardParams {
  Matrix w1, w2;
  Vector b1, b2;
};

struct EncoderLayerParams {
  AttentionParams self_attn;
  LayerNormParams self_norm;
  FeedForwardParams ff;
  LayerNormParams ff_norm;
};

struct DecoderLayerParams {
  AttentionParams self_attn;
  LayerNormParams self_norm;
  AttentionParams cross_attn;
  LayerNormParams cross_norm;
  FeedForwardParams ff;
  LayerNormParams ff_norm;
};

// One embedding matrix is shared by encoder and decoder, and the output
// projection is tied to it.
struct ModelParams {
  Matrix embedding;  // vocab_size x d_model
  std::vector<EncoderLayerParams> encoder;
  std::vector<DecoderLayerParams> decoder;

  // Glorot-uniform weights, unit layer-norm gains, zero biases; deterministic
  // for a given seed.
  static ModelParams init(const TransformerConfig& config, std::uint64_t seed);
  static ModelParams zeros(const TransformerConfig& config);
};

// Canonical tensor enumeration shared by initialization, the optimizer, and
// the checkpoint format.
struct TensorSpec {
  std::string name;
  Index rows = 0, cols = 0;
};
std::vector<TensorSpec> tensor_specs(const TransformerConfig& config);
std::vector<TensorView> tensor_views(ModelParams& params);
long long parameter_count(const TransformerConfig& config);

// Sine/cosine positional encoding, n x d, wavelengths geometric from 2*pi to
// 10000*2*pi.
Matrix sinusoidal_positions(int n, int d);

// Lower-triangular self-attention mask (true = attention allowed).
BoolMatrix causal_mask(Index n);

// Scaled dot-product multi-head attention over projected inputs; rows of the
// mask correspond to query positions, columns to key positions. A fully
// masked query row yields zeros. Inference mode (no dropout).
Matrix multi_head_attention(const Matrix& queries, const Matrix& keys,
                            const Matrix& values, const BoolMatrix& mask,
                            const AttentionParams& params, int num_heads);

// Encoder stack over one source sentence; returns length x d_model states.
// Dropout is active only in train_mode, seeded by rng_seed.
Matrix encode(const std::vector<int>& source_ids, const ModelParams& params,
              const TransformerConfig& config, bool train_mode = false,
              std::uint64_t rng_seed = 0);

// Decoder stack over a target prefix (must begin with the bos id); row i holds
// the logits predicting position i+1. Inference mode.
Matrix decoder_logits(const std::vector<int>& prefix_ids, const Matrix& encoder_states,
                      const ModelParams& params, const TransformerConfig& config);

// Logits over the vocabulary for the next position after the prefix.
Vector decode_step(const std::vector<int>& prefix_ids, const Matrix& encoder_states,
                   const ModelParams& params, const TransformerConfig& config);

struct ForwardBackwardResult {
  Scalar loss = 0;  // mean label-smoothed CE over non-pad target positions
  ModelParams grads;
  long long target_positions = 0;
};

// Teacher-forced loss and exact gradients for the sampled dropout masks.
ForwardBackwardResult forward_backward(const Batch& batch, const ModelParams& params,
                                       const TransformerConfig& config,
                                       Scalar label_smoothing, std::uint64_t rng_seed);

}  // namespace simtrans
