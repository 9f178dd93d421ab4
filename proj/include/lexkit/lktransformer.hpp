#pragma once
#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "lexkit/ops.hpp"
#include "lexkit/params.hpp"
#include "lexkit/tensor.hpp"

namespace lexkit {

// Sinusoidal position table for a sequence of the given length (constant, no
// gradient).
template <typename T>
TensorPtr<T> positional_encoding(std::size_t len, std::size_t d_model) {
  std::vector<T> vals(len * d_model);
  for (std::size_t pos = 0; pos < len; ++pos)
    for (std::size_t i = 0; i < d_model; ++i) {
      const double angle = static_cast<double>(pos) /
                           std::pow(10000.0, static_cast<double>(2 * (i / 2)) /
                                                 static_cast<double>(d_model));
      vals[pos * d_model + i] = static_cast<T>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  return make_tensor<T>({len, d_model}, std::move(vals));
}

// Optional probe that receives every attention weight matrix produced by a
// forward pass (one n_q x n_k tensor per head).
template <typename T>
using AttnCollector = std::vector<TensorPtr<T>>;

// Scaled dot-product attention with h independent heads, concatenated and
// projected by W^O. key_padding marks key positions to exclude (1 = padding).
template <typename T>
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(ParamStore<T> &params, const std::string &prefix, std::size_t d_model,
                     std::size_t heads, std::mt19937 &rng)
      : d_model_(d_model), heads_(heads), d_head_(d_model / heads) {
    if (heads == 0 || d_model % heads != 0)
      throw ConfigError("MultiHeadAttention: d_model " + std::to_string(d_model) +
                        " not divisible by heads " + std::to_string(heads));
    for (std::size_t i = 0; i < heads; ++i) {
      const std::string hp = prefix + ".h" + std::to_string(i);
      wq_.push_back(params.add(hp + ".wq", d_model, d_head_, Init::Xavier, rng));
      wk_.push_back(params.add(hp + ".wk", d_model, d_head_, Init::Xavier, rng));
      wv_.push_back(params.add(hp + ".wv", d_model, d_head_, Init::Xavier, rng));
    }
    wo_ = params.add(prefix + ".wo", d_model, d_model, Init::Xavier, rng);
  }

  TensorPtr<T> forward(Tape<T> *tape, const TensorPtr<T> &q, const TensorPtr<T> &k,
                       const TensorPtr<T> &v, const std::vector<std::uint8_t> *key_padding = nullptr,
                       AttnCollector<T> *probe = nullptr) const {
    if (q->cols() != d_model_ || k->cols() != d_model_ || v->cols() != d_model_)
      throw ShapeError("multi_head_attention: inputs must have width " +
                       std::to_string(d_model_));
    if (k->rows() != v->rows())
      throw ShapeError("multi_head_attention: key/value row mismatch");
    const std::size_t n_q = q->rows(), n_k = k->rows();
    std::vector<std::uint8_t> score_mask;
    if (key_padding) {
      if (key_padding->size() != n_k)
        throw ShapeError("multi_head_attention: mask length must equal key count");
      bool any_allowed = false;
      for (std::uint8_t m : *key_padding) any_allowed = any_allowed || !m;
      if (!any_allowed)
        throw UsageError("multi_head_attention: every key is masked for the query rows");
      score_mask.resize(n_q * n_k);
      for (std::size_t i = 0; i < n_q; ++i)
        for (std::size_t j = 0; j < n_k; ++j) score_mask[i * n_k + j] = (*key_padding)[j];
    }
    const T inv_sqrt_dk = static_cast<T>(1.0 / std::sqrt(static_cast<double>(d_head_)));
    std::vector<TensorPtr<T>> head_outputs;
    head_outputs.reserve(heads_);
    for (std::size_t i = 0; i < heads_; ++i) {
      auto qh = ops::matmul(tape, q, wq_[i]);
      auto kh = ops::matmul(tape, k, wk_[i]);
      auto vh = ops::matmul(tape, v, wv_[i]);
      auto scores = ops::scale(tape, ops::matmul(tape, qh, ops::transpose(tape, kh)), inv_sqrt_dk);
      if (!score_mask.empty()) scores = ops::masked_fill(tape, scores, score_mask, T(-1e9));
      auto weights = ops::softmax_rows(tape, scores);
      if (probe) probe->push_back(weights);
      head_outputs.push_back(ops::matmul(tape, weights, vh));
    }
    auto merged = head_outputs[0];
    for (std::size_t i = 1; i < heads_; ++i) merged = ops::concat_cols(tape, merged, head_outputs[i]);
    return ops::matmul(tape, merged, wo_);
  }

  std::size_t head_count() const { return heads_; }
  std::size_t head_dim() const { return d_head_; }
  const TensorPtr<T> &wq(std::size_t head) const { return wq_[head]; }
  const TensorPtr<T> &wk(std::size_t head) const { return wk_[head]; }
  const TensorPtr<T> &wv(std::size_t head) const { return wv_[head]; }
  const TensorPtr<T> &wo() const { return wo_; }

 private:
  std::size_t d_model_ = 0, heads_ = 0, d_head_ = 0;
  std::vector<TensorPtr<T>> wq_, wk_, wv_;
  TensorPtr<T> wo_;
};

// One encoder block: masked self-attention, plain self-attention, and a
// position-wise feed-forward net, each wrapped as LayerNorm(x + Sublayer(x)).
template <typename T>
class TransformerBlock {
 public:
  TransformerBlock() = default;
  TransformerBlock(ParamStore<T> &params, const std::string &prefix, std::size_t d_model,
                   std::size_t heads, std::mt19937 &rng)
      : attn_masked_(params, prefix + ".attn_masked", d_model, heads, rng),
        attn_plain_(params, prefix + ".attn", d_model, heads, rng),
        ffn_in_(params, prefix + ".ffn.in", d_model, 4 * d_model, rng),
        ffn_out_(params, prefix + ".ffn.out", 4 * d_model, d_model, rng),
        ln1_(params, prefix + ".ln1", d_model, rng),
        ln2_(params, prefix + ".ln2", d_model, rng),
        ln3_(params, prefix + ".ln3", d_model, rng) {}

  TensorPtr<T> forward(Tape<T> *tape, const TensorPtr<T> &x,
                       const std::vector<std::uint8_t> *key_padding = nullptr,
                       AttnCollector<T> *probe = nullptr) const {
    if (key_padding) {
      bool any_real = false;
      for (std::uint8_t m : *key_padding) any_real = any_real || !m;
      if (!any_real) throw UsageError("transformer_block: input is entirely padding");
    }
    auto a1 = attn_masked_.forward(tape, x, x, x, key_padding, probe);
    auto x1 = ln1_.forward(tape, ops::add(tape, x, a1));
    auto a2 = attn_plain_.forward(tape, x1, x1, x1, nullptr, probe);
    auto x2 = ln2_.forward(tape, ops::add(tape, x1, a2));
    auto ff = ffn_out_.forward(tape, ops::relu(tape, ffn_in_.forward(tape, x2)));
    return ln3_.forward(tape, ops::add(tape, x2, ff));
  }

  const MultiHeadAttention<T> &attn_masked() const { return attn_masked_; }
  const MultiHeadAttention<T> &attn_plain() const { return attn_plain_; }
  const Linear<T> &ffn_in() const { return ffn_in_; }
  const Linear<T> &ffn_out() const { return ffn_out_; }
  const LayerNormParams<T> &ln1() const { return ln1_; }
  const LayerNormParams<T> &ln2() const { return ln2_; }
  const LayerNormParams<T> &ln3() const { return ln3_; }

 private:
  MultiHeadAttention<T> attn_masked_, attn_plain_;
  Linear<T> ffn_in_, ffn_out_;
  LayerNormParams<T> ln1_, ln2_, ln3_;
};

// Pre-tokenized knowledge for one charge: group label tokens plus the four
// constitutive-element schemas.
struct ChargeTokens {
  std::string name;
  std::vector<int> group;
  std::array<std::vector<int>, 4> schemas;
};

// Two-level knowledge transformer: four schema-level encoders feed a
// charge-level encoder. Schema token embeddings get sinusoidal positions; the
// four schema vectors enter the charge level as an unordered set.
template <typename T>
class LkTransformer {
 public:
  LkTransformer() = default;
  LkTransformer(ParamStore<T> &params, const std::string &prefix, std::size_t d_model,
                std::size_t heads, std::mt19937 &rng, bool share_schema_blocks = false)
      : d_model_(d_model), share_(share_schema_blocks) {
    const std::size_t schema_blocks = share_schema_blocks ? 1 : 4;
    for (std::size_t i = 0; i < schema_blocks; ++i)
      schema_.emplace_back(params, prefix + ".schema" + std::to_string(i), d_model, heads, rng);
    charge_ = TransformerBlock<T>(params, prefix + ".charge", d_model, heads, rng);
  }

  TensorPtr<T> encode_schema(Tape<T> *tape, const TensorPtr<T> &embeddings,
                             const std::vector<int> &tokens, std::size_t which,
                             const std::vector<std::uint8_t> *pad = nullptr,
                             AttnCollector<T> *probe = nullptr) const {
    if (tokens.empty()) throw UsageError("encode_schema: empty schema text");
    if (which < 1 || which > 4) throw UsageError("encode_schema: schema index must be 1..4");
    auto x = ops::embedding_lookup(tape, embeddings, tokens);
    x = ops::add(tape, x, positional_encoding<T>(tokens.size(), d_model_));
    const auto &block = schema_[share_ ? 0 : which - 1];
    auto h = block.forward(tape, x, pad, probe);
    std::vector<std::uint8_t> keep;
    if (pad) {
      keep.resize(pad->size());
      for (std::size_t i = 0; i < pad->size(); ++i) keep[i] = (*pad)[i] ? 0 : 1;
    }
    return ops::mean_pool_rows(tape, h, pad ? &keep : nullptr);
  }

  TensorPtr<T> encode_charge(Tape<T> *tape, const std::array<TensorPtr<T>, 4> &schema_vecs,
                             AttnCollector<T> *probe = nullptr) const {
    std::vector<TensorPtr<T>> rows(schema_vecs.begin(), schema_vecs.end());
    auto stacked = ops::concat_rows(tape, rows);
    auto h = charge_.forward(tape, stacked, nullptr, probe);
    return ops::mean_pool_rows(tape, h);
  }

  // Per-charge knowledge vector q from the charge's four schema texts.
  TensorPtr<T> encode_knowledge(Tape<T> *tape, const TensorPtr<T> &embeddings,
                                const ChargeTokens &charge,
                                AttnCollector<T> *probe = nullptr) const {
    std::array<TensorPtr<T>, 4> s;
    for (std::size_t k = 0; k < 4; ++k) {
      if (charge.schemas[k].empty())
        throw ValidationError("charge '" + charge.name + "' is missing schema K" +
                              std::to_string(k + 1));
      s[k] = encode_schema(tape, embeddings, charge.schemas[k], k + 1, nullptr, probe);
    }
    return encode_charge(tape, s, probe);
  }

  std::size_t d_model() const { return d_model_; }
  const TransformerBlock<T> &schema_block(std::size_t which) const {
    return schema_[share_ ? 0 : which - 1];
  }
  const TransformerBlock<T> &charge_block() const { return charge_; }

 private:
  std::size_t d_model_ = 0;
  bool share_ = false;
  std::vector<TransformerBlock<T>> schema_;
  TransformerBlock<T> charge_;
};

}  // namespace lexkit
