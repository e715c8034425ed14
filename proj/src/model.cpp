#include "simtrans/model.hpp"

#include <cmath>
#include <cstdio>

#include "simtrans/rng.hpp"
#include "simtrans/subword.hpp"

namespace simtrans {

namespace {

constexpr Scalar kLayerNormEps = 1e-6;

// Inverted dropout; a null rng (or zero rate) is a no-op. The mask holds the
// keep scale 1/(1-rate) or 0 so backward is a plain elementwise product.
Matrix dropout_forward(const Matrix& x, Scalar rate, Rng* rng, Matrix* mask_out) {
  if (rng == nullptr || rate <= 0) {
    if (mask_out) mask_out->resize(0, 0);
    return x;
  }
  const Scalar scale = 1 / (1 - rate);
  Matrix mask(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < x.cols(); ++j)
      mask(i, j) = rng->uniform() < rate ? Scalar(0) : scale;
  Matrix out = x.cwiseProduct(mask);
  if (mask_out) *mask_out = std::move(mask);
  return out;
}

Matrix apply_mask(const Matrix& grad, const Matrix& mask) {
  return mask.size() == 0 ? grad : grad.cwiseProduct(mask);
}

struct AttnCache {
  Matrix q_in, k_in, v_in;
  Matrix q, k, v;
  std::vector<Matrix> probs;       // per head, post-softmax
  std::vector<Matrix> prob_masks;  // dropout masks on probs (may be empty)
  Matrix concat;
};

Matrix attention_forward(const Matrix& q_in, const Matrix& k_in, const Matrix& v_in,
                         const BoolMatrix& mask, const AttentionParams& p,
                         int num_heads, Scalar dropout_rate, Rng* rng,
                         AttnCache* cache) {
  const Index d = p.wq.cols();
  if (num_heads < 1 || d % num_heads != 0)
    throw ArgumentError("multi_head_attention: head count must divide model width");
  if (q_in.cols() != p.wq.rows() || k_in.cols() != p.wk.rows() ||
      v_in.cols() != p.wv.rows() || k_in.rows() != v_in.rows())
    throw ArgumentError("multi_head_attention: input shape mismatch");
  if (mask.rows() != q_in.rows() || mask.cols() != k_in.rows())
    throw ArgumentError("multi_head_attention: mask must be query rows x key rows");

  const Index dh = d / num_heads;
  const Scalar inv_sqrt_dh = 1 / std::sqrt(static_cast<Scalar>(dh));
  Matrix q = q_in * p.wq;
  Matrix k = k_in * p.wk;
  Matrix v = v_in * p.wv;
  Matrix concat(q.rows(), d);
  if (cache) {
    cache->probs.assign(num_heads, {});
    cache->prob_masks.assign(num_heads, {});
  }
  for (int h = 0; h < num_heads; ++h) {
    const Index off = h * dh;
    Matrix scores = q.middleCols(off, dh) * k.middleCols(off, dh).transpose() * inv_sqrt_dh;
    Matrix probs = masked_softmax_rows<Scalar>(scores, mask);
    Matrix prob_mask;
    Matrix probs_used = dropout_forward(probs, dropout_rate, rng, &prob_mask);
    concat.middleCols(off, dh) = probs_used * v.middleCols(off, dh);
    if (cache) {
      cache->probs[h] = std::move(probs);
      cache->prob_masks[h] = std::move(prob_mask);
    }
  }
  Matrix out = concat * p.wo;
  if (cache) {
    cache->q_in = q_in;
    cache->k_in = k_in;
    cache->v_in = v_in;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->concat = std::move(concat);
  }
  return out;
}

void attention_backward(const AttnCache& cache, const AttentionParams& p,
                        int num_heads, const Matrix& grad_out,
                        AttentionParams& grad_p, Matrix& grad_q_in,
                        Matrix& grad_k_in, Matrix& grad_v_in) {
  const Index d = p.wq.cols();
  const Index dh = d / num_heads;
  const Scalar inv_sqrt_dh = 1 / std::sqrt(static_cast<Scalar>(dh));

  grad_p.wo += cache.concat.transpose() * grad_out;
  Matrix d_concat = grad_out * p.wo.transpose();

  Matrix dq(cache.q.rows(), d), dk(cache.k.rows(), d), dv(cache.v.rows(), d);
  for (int h = 0; h < num_heads; ++h) {
    const Index off = h * dh;
    const Matrix& probs = cache.probs[h];
    const Matrix& prob_mask = cache.prob_masks[h];
    Matrix d_head = d_concat.middleCols(off, dh);
    Matrix probs_used = prob_mask.size() ? probs.cwiseProduct(prob_mask) : probs;
    dv.middleCols(off, dh) = probs_used.transpose() * d_head;
    Matrix d_probs = apply_mask(d_head * cache.v.middleCols(off, dh).transpose(), prob_mask);
    Matrix d_scores = softmax_rows_backward<Scalar>(probs, d_probs) * inv_sqrt_dh;
    dq.middleCols(off, dh) = d_scores * cache.k.middleCols(off, dh);
    dk.middleCols(off, dh) = d_scores.transpose() * cache.q.middleCols(off, dh);
  }
  grad_p.wq += cache.q_in.transpose() * dq;
  grad_p.wk += cache.k_in.transpose() * dk;
  grad_p.wv += cache.v_in.transpose() * dv;
  grad_q_in += dq * p.wq.transpose();
  grad_k_in += dk * p.wk.transpose();
  grad_v_in += dv * p.wv.transpose();
}

struct SublayerCache {
  Matrix drop_mask;
  LayerNormCache<Scalar> ln;
};

Matrix sublayer_connect(const Matrix& x, const Matrix& sub_out,
                        const LayerNormParams& norm, Scalar dropout_rate, Rng* rng,
                        SublayerCache* cache) {
  Matrix dropped = dropout_forward(sub_out, dropout_rate, rng,
                                   cache ? &cache->drop_mask : nullptr);
  Matrix sum = x + dropped;
  return layer_norm_forward<Scalar>(sum, norm.gain, norm.bias, kLayerNormEps,
                                    cache ? &cache->ln : nullptr);
}

// Splits dL/d(sublayer output) into the residual path (accumulated into
// grad_x) and the sublayer path (written to grad_sub_out).
void sublayer_backward(const SublayerCache& cache, const LayerNormParams& norm,
                       const Matrix& grad_out, LayerNormParams& grad_norm,
                       Matrix& grad_x, Matrix& grad_sub_out) {
  LayerNormGrads<Scalar> g = layer_norm_backward<Scalar>(cache.ln, norm.gain, grad_out);
  grad_norm.gain += g.gain;
  grad_norm.bias += g.bias;
  grad_x += g.input;
  grad_sub_out = apply_mask(g.input, cache.drop_mask);
}

struct FfCache {
  Matrix input, hidden_pre, hidden;
};

Matrix ff_forward(const Matrix& x, const FeedForwardParams& p, FfCache* cache) {
  Matrix pre = (x * p.w1).rowwise() + p.b1.transpose();
  Matrix hidden = pre.cwiseMax(Scalar(0));
  Matrix out = (hidden * p.w2).rowwise() + p.b2.transpose();
  if (cache) {
    cache->input = x;
    cache->hidden_pre = std::move(pre);
    cache->hidden = std::move(hidden);
  }
  return out;
}

void ff_backward(const FfCache& cache, const FeedForwardParams& p,
                 const Matrix& grad_out, FeedForwardParams& grad_p, Matrix& grad_x) {
  grad_p.w2 += cache.hidden.transpose() * grad_out;
  grad_p.b2 += grad_out.colwise().sum().transpose();
  Matrix d_hidden = grad_out * p.w2.transpose();
  d_hidden = (cache.hidden_pre.array() > 0).cast<Scalar>().matrix().cwiseProduct(d_hidden);
  grad_p.w1 += cache.input.transpose() * d_hidden;
  grad_p.b1 += d_hidden.colwise().sum().transpose();
  grad_x += d_hidden * p.w1.transpose();
}

struct EmbedCache {
  std::vector<int> ids;
  Matrix drop_mask;
};

Matrix embed_forward(const std::vector<int>& ids, const ModelParams& params,
                     const TransformerConfig& config, Scalar dropout_rate, Rng* rng,
                     EmbedCache* cache) {
  const Index n = static_cast<Index>(ids.size());
  const Index d = config.d_model;
  const Scalar scale = std::sqrt(static_cast<Scalar>(d));
  Matrix x(n, d);
  for (Index i = 0; i < n; ++i) x.row(i) = params.embedding.row(ids[i]) * scale;
  if (n > 0) x += sinusoidal_positions(static_cast<int>(n), static_cast<int>(d));
  if (cache) cache->ids = ids;
  return dropout_forward(x, dropout_rate, rng, cache ? &cache->drop_mask : nullptr);
}

void embed_backward(const EmbedCache& cache, const TransformerConfig& config,
                    const Matrix& grad_out, Matrix& grad_embedding) {
  Matrix g = apply_mask(grad_out, cache.drop_mask);
  const Scalar scale = std::sqrt(static_cast<Scalar>(config.d_model));
  for (std::size_t i = 0; i < cache.ids.size(); ++i)
    grad_embedding.row(cache.ids[i]) += g.row(static_cast<Index>(i)) * scale;
}

struct EncLayerCache {
  AttnCache attn;
  SublayerCache attn_sub;
  FfCache ff;
  SublayerCache ff_sub;
};

struct DecLayerCache {
  AttnCache self_attn;
  SublayerCache self_sub;
  AttnCache cross_attn;
  SublayerCache cross_sub;
  FfCache ff;
  SublayerCache ff_sub;
};

struct EncoderCache {
  EmbedCache emb;
  std::vector<EncLayerCache> layers;
};

struct DecoderCache {
  EmbedCache emb;
  std::vector<DecLayerCache> layers;
};

void check_ids(const std::vector<int>& ids, const TransformerConfig& config,
               const char* what) {
  if (static_cast<int>(ids.size()) > config.max_positions)
    throw ArgumentError(std::string(what) + ": length " + std::to_string(ids.size()) +
                        " exceeds max_positions " + std::to_string(config.max_positions));
  for (int id : ids)
    if (id < 0 || id >= config.vocab_size)
      throw ArgumentError(std::string(what) + ": token id " + std::to_string(id) +
                          " out of range for vocab " + std::to_string(config.vocab_size));
}

Matrix encoder_forward(const std::vector<int>& ids, const ModelParams& params,
                       const TransformerConfig& config, Scalar dropout_rate, Rng* rng) {
  Matrix x = embed_forward(ids, params, config, dropout_rate, rng, nullptr);
  const BoolMatrix full = BoolMatrix::Constant(x.rows(), x.rows(), true);
  for (std::size_t l = 0; l < params.encoder.size(); ++l) {
    const EncoderLayerParams& p = params.encoder[l];
    Matrix attn = attention_forward(x, x, x, full, p.self_attn, config.num_heads,
                                    dropout_rate, rng, nullptr);
    Matrix x1 = sublayer_connect(x, attn, p.self_norm, dropout_rate, rng, nullptr);
    Matrix ff = ff_forward(x1, p.ff, nullptr);
    x = sublayer_connect(x1, ff, p.ff_norm, dropout_rate, rng, nullptr);
    if (!x.allFinite())
      throw NumericError("encoder layer " + std::to_string(l) + " produced non-finite values");
  }
  return x;
}

// Residual-stream inputs to each layer are recomputable from caches, but the
// backward pass needs them directly; the forward stores them when training.
struct EncoderActs {
  std::vector<Matrix> layer_inputs;  // x entering each layer
  Matrix output;
};

EncoderActs encoder_forward_train(const std::vector<int>& ids, const ModelParams& params,
                                  const TransformerConfig& config, Scalar dropout_rate,
                                  Rng* rng, EncoderCache& cache) {
  EncoderActs acts;
  cache.layers.resize(params.encoder.size());
  Matrix x = embed_forward(ids, params, config, dropout_rate, rng, &cache.emb);
  const BoolMatrix full = BoolMatrix::Constant(x.rows(), x.rows(), true);
  for (std::size_t l = 0; l < params.encoder.size(); ++l) {
    acts.layer_inputs.push_back(x);
    const EncoderLayerParams& p = params.encoder[l];
    EncLayerCache& lc = cache.layers[l];
    Matrix attn = attention_forward(x, x, x, full, p.self_attn, config.num_heads,
                                    dropout_rate, rng, &lc.attn);
    Matrix x1 = sublayer_connect(x, attn, p.self_norm, dropout_rate, rng, &lc.attn_sub);
    Matrix ff = ff_forward(x1, p.ff, &lc.ff);
    x = sublayer_connect(x1, ff, p.ff_norm, dropout_rate, rng, &lc.ff_sub);
    if (!x.allFinite())
      throw NumericError("encoder layer " + std::to_string(l) + " produced non-finite values");
  }
  acts.output = std::move(x);
  return acts;
}

struct DecoderActs {
  std::vector<Matrix> layer_inputs;
  std::vector<Matrix> after_self;  // x1 entering cross attention
  std::vector<Matrix> after_cross; // x2 entering feed-forward
  Matrix output;
};

DecoderActs decoder_forward_train(const std::vector<int>& ids, const Matrix& enc_states,
                                  const ModelParams& params, const TransformerConfig& config,
                                  Scalar dropout_rate, Rng* rng, DecoderCache& cache) {
  DecoderActs acts;
  cache.layers.resize(params.decoder.size());
  Matrix x = embed_forward(ids, params, config, dropout_rate, rng, &cache.emb);
  const BoolMatrix causal = causal_mask(x.rows());
  const BoolMatrix cross = BoolMatrix::Constant(x.rows(), enc_states.rows(), true);
  for (std::size_t l = 0; l < params.decoder.size(); ++l) {
    const DecoderLayerParams& p = params.decoder[l];
    DecLayerCache& lc = cache.layers[l];
    acts.layer_inputs.push_back(x);
    Matrix self_out = attention_forward(x, x, x, causal, p.self_attn, config.num_heads,
                                        dropout_rate, rng, &lc.self_attn);
    Matrix x1 = sublayer_connect(x, self_out, p.self_norm, dropout_rate, rng, &lc.self_sub);
    acts.after_self.push_back(x1);
    Matrix cross_out = attention_forward(x1, enc_states, enc_states, cross, p.cross_attn,
                                         config.num_heads, dropout_rate, rng, &lc.cross_attn);
    Matrix x2 = sublayer_connect(x1, cross_out, p.cross_norm, dropout_rate, rng, &lc.cross_sub);
    acts.after_cross.push_back(x2);
    Matrix ff = ff_forward(x2, p.ff, &lc.ff);
    x = sublayer_connect(x2, ff, p.ff_norm, dropout_rate, rng, &lc.ff_sub);
    if (!x.allFinite())
      throw NumericError("decoder layer " + std::to_string(l) + " produced non-finite values");
  }
  acts.output = std::move(x);
  return acts;
}

Matrix decoder_forward_eval(const std::vector<int>& ids, const Matrix& enc_states,
                            const ModelParams& params, const TransformerConfig& config) {
  Matrix x = embed_forward(ids, params, config, 0, nullptr, nullptr);
  const BoolMatrix causal = causal_mask(x.rows());
  const BoolMatrix cross = BoolMatrix::Constant(x.rows(), enc_states.rows(), true);
  for (std::size_t l = 0; l < params.decoder.size(); ++l) {
    const DecoderLayerParams& p = params.decoder[l];
    Matrix self_out = attention_forward(x, x, x, causal, p.self_attn, config.num_heads,
                                        0, nullptr, nullptr);
    Matrix x1 = sublayer_connect(x, self_out, p.self_norm, 0, nullptr, nullptr);
    Matrix cross_out = attention_forward(x1, enc_states, enc_states, cross, p.cross_attn,
                                         config.num_heads, 0, nullptr, nullptr);
    Matrix x2 = sublayer_connect(x1, cross_out, p.cross_norm, 0, nullptr, nullptr);
    Matrix ff = ff_forward(x2, p.ff, nullptr);
    x = sublayer_connect(x2, ff, p.ff_norm, 0, nullptr, nullptr);
  }
  return x;
}

// Walks one decoder layer backward; accumulates parameter grads, the grad
// into the layer input (returned) and the grad into the encoder states.
Matrix decoder_layer_backward(const DecLayerCache& lc, const DecoderLayerParams& p,
                              const DecoderActs& acts, std::size_t l, int num_heads,
                              const Matrix& grad_out, DecoderLayerParams& gp,
                              Matrix& grad_enc) {
  const Matrix& x2 = acts.after_cross[l];
  Matrix d_x2 = Matrix::Zero(x2.rows(), x2.cols());
  Matrix d_ff_out;
  sublayer_backward(lc.ff_sub, p.ff_norm, grad_out, gp.ff_norm, d_x2, d_ff_out);
  ff_backward(lc.ff, p.ff, d_ff_out, gp.ff, d_x2);

  const Matrix& x1 = acts.after_self[l];
  Matrix d_x1 = Matrix::Zero(x1.rows(), x1.cols());
  Matrix d_cross_out;
  sublayer_backward(lc.cross_sub, p.cross_norm, d_x2, gp.cross_norm, d_x1, d_cross_out);
  attention_backward(lc.cross_attn, p.cross_attn, num_heads, d_cross_out, gp.cross_attn,
                     d_x1, grad_enc, grad_enc);

  const Matrix& x0 = acts.layer_inputs[l];
  Matrix d_x = Matrix::Zero(x0.rows(), x0.cols());
  Matrix d_self_out;
  sublayer_backward(lc.self_sub, p.self_norm, d_x1, gp.self_norm, d_x, d_self_out);
  attention_backward(lc.self_attn, p.self_attn, num_heads, d_self_out, gp.self_attn,
                     d_x, d_x, d_x);
  return d_x;
}

Matrix encoder_layer_backward(const EncLayerCache& lc, const EncoderLayerParams& p,
                              const Matrix& layer_input, int num_heads,
                              const Matrix& grad_out, EncoderLayerParams& gp) {
  Matrix d_x1 = Matrix::Zero(layer_input.rows(), layer_input.cols());
  Matrix d_ff_out;
  sublayer_backward(lc.ff_sub, p.ff_norm, grad_out, gp.ff_norm, d_x1, d_ff_out);
  ff_backward(lc.ff, p.ff, d_ff_out, gp.ff, d_x1);

  Matrix d_x = Matrix::Zero(layer_input.rows(), layer_input.cols());
  Matrix d_attn_out;
  sublayer_backward(lc.attn_sub, p.self_norm, d_x1, gp.self_norm, d_x, d_attn_out);
  attention_backward(lc.attn, p.self_attn, num_heads, d_attn_out, gp.self_attn,
                     d_x, d_x, d_x);
  return d_x;
}

}  // namespace

void TransformerConfig::validate() const {
  if (num_layers < 1 || num_heads < 1 || d_model < 1 || max_positions < 1 || vocab_size < 1)
    throw ArgumentError("TransformerConfig: all counts must be >= 1");
  if (d_model % num_heads != 0)
    throw ArgumentError("TransformerConfig: d_model must be divisible by num_heads");
  if (!(dropout_rate >= 0 && dropout_rate < 1))
    throw ArgumentError("TransformerConfig: dropout_rate must be in [0, 1)");
}

std::uint64_t TransformerConfig::hash() const {
  char buf[192];
  std::snprintf(buf, sizeof(buf), "L%d H%d D%d F%d P%d V%d dr%.17g", num_layers,
                num_heads, d_model, ff_dim(), max_positions, vocab_size,
                static_cast<double>(dropout_rate));
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (const char* c = buf; *c; ++c) {
    h ^= static_cast<unsigned char>(*c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<TensorSpec> tensor_specs(const TransformerConfig& config) {
  const Index d = config.d_model;
  const Index f = config.ff_dim();
  std::vector<TensorSpec> specs;
  specs.push_back({"embedding", config.vocab_size, d});
  auto attn = [&](const std::string& prefix) {
    for (const char* w : {"wq", "wk", "wv", "wo"})
      specs.push_back({prefix + "." + w, d, d});
  };
  auto norm = [&](const std::string& prefix) {
    specs.push_back({prefix + ".gain", d, 1});
    specs.push_back({prefix + ".bias", d, 1});
  };
  auto ff = [&](const std::string& prefix) {
    specs.push_back({prefix + ".w1", d, f});
    specs.push_back({prefix + ".b1", f, 1});
    specs.push_back({prefix + ".w2", f, d});
    specs.push_back({prefix + ".b2", d, 1});
  };
  for (int l = 0; l < config.num_layers; ++l) {
    const std::string p = "enc" + std::to_string(l);
    attn(p + ".self");
    norm(p + ".self_norm");
    ff(p + ".ff");
    norm(p + ".ff_norm");
  }
  for (int l = 0; l < config.num_layers; ++l) {
    const std::string p = "dec" + std::to_string(l);
    attn(p + ".self");
    norm(p + ".self_norm");
    attn(p + ".cross");
    norm(p + ".cross_norm");
    ff(p + ".ff");
    norm(p + ".ff_norm");
  }
  return specs;
}

long long parameter_count(const TransformerConfig& config) {
  long long total = 0;
  for (const auto& spec : tensor_specs(config)) total += spec.rows * spec.cols;
  return total;
}

std::vector<TensorView> tensor_views(ModelParams& params) {
  std::vector<TensorView> views;
  auto add_m = [&](const std::string& name, Matrix& m) {
    views.push_back({name, m.data(), m.rows(), m.cols()});
  };
  auto add_v = [&](const std::string& name, Vector& v) {
    views.push_back({name, v.data(), v.size(), 1});
  };
  auto attn = [&](const std::string& prefix, AttentionParams& a) {
    add_m(prefix + ".wq", a.wq);
    add_m(prefix + ".wk", a.wk);
    add_m(prefix + ".wv", a.wv);
    add_m(prefix + ".wo", a.wo);
  };
  auto norm = [&](const std::string& prefix, LayerNormParams& n) {
    add_v(prefix + ".gain", n.gain);
    add_v(prefix + ".bias", n.bias);
  };
  auto ff = [&](const std::string& prefix, FeedForwardParams& f) {
    add_m(prefix + ".w1", f.w1);
    add_v(prefix + ".b1", f.b1);
    add_m(prefix + ".w2", f.w2);
    add_v(prefix + ".b2", f.b2);
  };
  add_m("embedding", params.embedding);
  for (std::size_t l = 0; l < params.encoder.size(); ++l) {
    const std::string p = "enc" + std::to_string(l);
    attn(p + ".self", params.encoder[l].self_attn);
    norm(p + ".self_norm", params.encoder[l].self_norm);
    ff(p + ".ff", params.encoder[l].ff);
    norm(p + ".ff_norm", params.encoder[l].ff_norm);
  }
  for (std::size_t l = 0; l < params.decoder.size(); ++l) {
    const std::string p = "dec" + std::to_string(l);
    attn(p + ".self", params.decoder[l].self_attn);
    norm(p + ".self_norm", params.decoder[l].self_norm);
    attn(p + ".cross", params.decoder[l].cross_attn);
    norm(p + ".cross_norm", params.decoder[l].cross_norm);
    ff(p + ".ff", params.decoder[l].ff);
    norm(p + ".ff_norm", params.decoder[l].ff_norm);
  }
  return views;
}

ModelParams ModelParams::zeros(const TransformerConfig& config) {
  config.validate();
  const Index d = config.d_model;
  const Index f = config.ff_dim();
  auto zero_attn = [&] {
    return AttentionParams{Matrix::Zero(d, d), Matrix::Zero(d, d), Matrix::Zero(d, d),
                           Matrix::Zero(d, d)};
  };
  auto zero_norm = [&] { return LayerNormParams{Vector::Zero(d), Vector::Zero(d)}; };
  auto zero_ff = [&] {
    return FeedForwardParams{Matrix::Zero(d, f), Matrix::Zero(f, d), Vector::Zero(f),
                             Vector::Zero(d)};
  };
  ModelParams params;
  params.embedding = Matrix::Zero(config.vocab_size, d);
  for (int l = 0; l < config.num_layers; ++l)
    params.encoder.push_back({zero_attn(), zero_norm(), zero_ff(), zero_norm()});
  for (int l = 0; l < config.num_layers; ++l)
    params.decoder.push_back(
        {zero_attn(), zero_norm(), zero_attn(), zero_norm(), zero_ff(), zero_norm()});
  return params;
}

ModelParams ModelParams::init(const TransformerConfig& config, std::uint64_t seed) {
  ModelParams params = zeros(config);
  Rng rng(seed);
  auto glorot = [&](Matrix& w) {
    const Scalar limit =
        std::sqrt(Scalar(6) / static_cast<Scalar>(w.rows() + w.cols()));
    for (Index i = 0; i < w.rows(); ++i)
      for (Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-limit, limit);
  };
  auto init_attn = [&](AttentionParams& a) {
    glorot(a.wq);
    glorot(a.wk);
    glorot(a.wv);
    glorot(a.wo);
  };
  auto init_ff = [&](FeedForwardParams& f) {
    glorot(f.w1);
    glorot(f.w2);
  };
  glorot(params.embedding);
  for (auto& layer : params.encoder) {
    init_attn(layer.self_attn);
    layer.self_norm.gain.setOnes();
    init_ff(layer.ff);
    layer.ff_norm.gain.setOnes();
  }
  for (auto& layer : params.decoder) {
    init_attn(layer.self_attn);
    layer.self_norm.gain.setOnes();
    init_attn(layer.cross_attn);
    layer.cross_norm.gain.setOnes();
    init_ff(layer.ff);
    layer.ff_norm.gain.setOnes();
  }
  return params;
}

Matrix sinusoidal_positions(int n, int d) {
  if (d % 2 != 0) throw ArgumentError("sinusoidal_positions: dimension must be even");
  if (n < 0) throw ArgumentError("sinusoidal_positions: negative position count");
  Matrix pe(n, d);
  for (int pos = 0; pos < n; ++pos)
    for (int i = 0; i < d / 2; ++i) {
      const Scalar freq =
          std::exp(-std::log(Scalar(10000)) * (2 * i) / static_cast<Scalar>(d));
      pe(pos, 2 * i) = std::sin(pos * freq);
      pe(pos, 2 * i + 1) = std::cos(pos * freq);
    }
  return pe;
}

BoolMatrix causal_mask(Index n) {
  BoolMatrix mask = BoolMatrix::Constant(n, n, false);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j <= i; ++j) mask(i, j) = true;
  return mask;
}

Matrix multi_head_attention(const Matrix& queries, const Matrix& keys,
                            const Matrix& values, const BoolMatrix& mask,
                            const AttentionParams& params, int num_heads) {
  return attention_forward(queries, keys, values, mask, params, num_heads, 0, nullptr,
                           nullptr);
}

Matrix encode(const std::vector<int>& source_ids, const ModelParams& params,
              const TransformerConfig& config, bool train_mode, std::uint64_t rng_seed) {
  config.validate();
  check_ids(source_ids, config, "encode");
  if (train_mode && config.dropout_rate > 0) {
    Rng rng(rng_seed);
    return encoder_forward(source_ids, params, config, config.dropout_rate, &rng);
  }
  return encoder_forward(source_ids, params, config, 0, nullptr);
}

Matrix decoder_logits(const std::vector<int>& prefix_ids, const Matrix& encoder_states,
                      const ModelParams& params, const TransformerConfig& config) {
  config.validate();
  if (prefix_ids.empty()) throw ArgumentError("decode_step: empty target prefix");
  if (prefix_ids.front() != Vocab::kBosId)
    throw ArgumentError("decode_step: prefix must begin with the bos id");
  check_ids(prefix_ids, config, "decode_step");
  if (encoder_states.cols() != config.d_model)
    throw ArgumentError("decode_step: encoder state width mismatch");
  Matrix out = decoder_forward_eval(prefix_ids, encoder_states, params, config);
  return out * params.embedding.transpose();
}

Vector decode_step(const std::vector<int>& prefix_ids, const Matrix& encoder_states,
                   const ModelParams& params, const TransformerConfig& config) {
  Matrix logits = decoder_logits(prefix_ids, encoder_states, params, config);
  return logits.row(logits.rows() - 1).transpose();
}

ForwardBackwardResult forward_backward(const Batch& batch, const ModelParams& params,
                                       const TransformerConfig& config,
                                       Scalar label_smoothing, std::uint64_t rng_seed) {
  config.validate();
  ForwardBackwardResult result;
  result.grads = ModelParams::zeros(config);

  struct Sentence {
    std::vector<int> src, dec_in;
    EncoderCache enc_cache;
    DecoderCache dec_cache;
    EncoderActs enc;
    DecoderActs dec;
    Index offset = 0;  // row offset into the stacked logits
  };
  std::vector<Sentence> sentences;
  std::vector<int> labels;
  Index total_rows = 0;

  Rng rng(rng_seed);
  Rng* drop_rng = config.dropout_rate > 0 ? &rng : nullptr;

  for (Index r = 0; r < batch.rows(); ++r) {
    const Index src_len = batch.source_length(r);
    const Index tgt_len = batch.target_length(r);
    if (src_len == 0 || tgt_len == 0) continue;  // nothing to predict
    Sentence s;
    s.src.reserve(src_len);
    for (Index c = 0; c < src_len; ++c) s.src.push_back(batch.source(r, c));
    s.dec_in.reserve(tgt_len + 1);
    s.dec_in.push_back(Vocab::kBosId);
    for (Index c = 0; c < tgt_len; ++c) s.dec_in.push_back(batch.target(r, c));
    check_ids(s.src, config, "forward_backward source");
    check_ids(s.dec_in, config, "forward_backward target");

    s.enc = encoder_forward_train(s.src, params, config, config.dropout_rate, drop_rng,
                                  s.enc_cache);
    s.dec = decoder_forward_train(s.dec_in, s.enc.output, params, config,
                                  config.dropout_rate, drop_rng, s.dec_cache);
    s.offset = total_rows;
    total_rows += s.dec.output.rows();
    for (Index c = 0; c < tgt_len; ++c) labels.push_back(batch.target(r, c));
    labels.push_back(Vocab::kEosId);
    sentences.push_back(std::move(s));
  }

  if (total_rows == 0) return result;  // loss 0, zero grads

  Matrix logits(total_rows, config.vocab_size);
  for (const Sentence& s : sentences)
    logits.middleRows(s.offset, s.dec.output.rows()) =
        s.dec.output * params.embedding.transpose();
  if (!logits.allFinite()) throw NumericError("output projection produced non-finite logits");

  CeResult ce = label_smoothed_ce(logits, labels, label_smoothing, Vocab::kPadId);
  if (!std::isfinite(ce.loss)) throw NumericError("loss is non-finite");
  result.loss = ce.loss;
  result.target_positions = ce.positions;

  for (Sentence& s : sentences) {
    const Index rows = s.dec.output.rows();
    const Matrix d_logits = ce.grad.middleRows(s.offset, rows);
    result.grads.embedding += d_logits.transpose() * s.dec.output;
    Matrix d_dec = d_logits * params.embedding;

    Matrix d_enc = Matrix::Zero(s.enc.output.rows(), config.d_model);
    for (std::size_t l = params.decoder.size(); l-- > 0;)
      d_dec = decoder_layer_backward(s.dec_cache.layers[l], params.decoder[l], s.dec, l,
                                     config.num_heads, d_dec, result.grads.decoder[l],
                                     d_enc);
    embed_backward(s.dec_cache.emb, config, d_dec, result.grads.embedding);

    for (std::size_t l = params.encoder.size(); l-- > 0;)
      d_enc = encoder_layer_backward(s.enc_cache.layers[l], params.encoder[l],
                                     s.enc.layer_inputs[l], config.num_heads, d_enc,
                                     result.grads.encoder[l]);
    embed_backward(s.enc_cache.emb, config, d_enc, result.grads.embedding);
  }
  return result;
}

}  // namespace simtrans
