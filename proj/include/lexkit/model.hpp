#pragma once
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lexkit/config.hpp"
#include "lexkit/data.hpp"
#include "lexkit/encoders.hpp"
#include "lexkit/lktransformer.hpp"
#include "lexkit/matcher.hpp"
#include "lexkit/params.hpp"
#include "lexkit/textgraph.hpp"

namespace lexkit {

// The full charge-prediction model: embedding table, fact encoder (GCN over
// the PMI graph, or a BiLSTM for the ablation), the two-level knowledge
// transformer plus group-label BiLSTM and matching network (dropped entirely
// under use_knowledge=false), and the softmax classifier.
template <typename T>
class ChargeModel {
 public:
  struct Output {
    TensorPtr<T> logits;  // 1 x m
    TensorPtr<T> beta;    // 1 x m charge attention; null without knowledge
  };

  ChargeModel(TrainConfig cfg, Vocabulary vocab, KnowledgeTree tree, EdgeSet edges)
      : cfg_(std::move(cfg)),
        vocab_(std::move(vocab)),
        tree_(std::move(tree)),
        edges_(std::move(edges)) {
    cfg_.validate();
    tree_.validate();
    labels_ = tree_.charge_names();
    const std::size_t s = cfg_.hidden, d = cfg_.embedding_dim();
    if (cfg_.use_knowledge && d != s)
      throw ConfigError("model: knowledge transformers require embed_dim == hidden");
    std::mt19937 rng(static_cast<std::uint32_t>(cfg_.seed));
    embedding_ = params_.add("embedding", vocab_.size(), d, Init::Xavier, rng);
    if (cfg_.fact_encoder == "gcn")
      gcn_ = GcnEncoder<T>(params_, "gcn", d, s, rng);
    else
      fact_bilstm_ = BiLstmEncoder<T>(params_, "fact_bilstm", d, s, rng);
    if (cfg_.use_knowledge) {
      group_bilstm_ = BiLstmEncoder<T>(params_, "group_bilstm", d, s, rng);
      lk_ = LkTransformer<T>(params_, "lk", s, cfg_.heads, rng, cfg_.share_schema_blocks);
      matcher_ = MatchingNetwork<T>(params_, "matcher", s, 2 * s, rng);
      classifier_ = Classifier<T>(params_, "classifier", 2 * s, labels_.size(), rng);
    } else {
      classifier_ = Classifier<T>(params_, "classifier", s, labels_.size(), rng);
    }
    tokenize_knowledge();
  }

  // m x 2s knowledge rows: concat(group BiLSTM vector, charge vector q).
  TensorPtr<T> knowledge_rows(Tape<T> *tape, AttnCollector<T> *probe = nullptr) const {
    if (!cfg_.use_knowledge)
      throw UsageError("knowledge_rows: model was built without knowledge");
    std::vector<TensorPtr<T>> rows;
    rows.reserve(charge_tokens_.size());
    for (const auto &ct : charge_tokens_) {
      auto group_emb = ops::embedding_lookup(tape, embedding_, ct.group);
      auto group_vec = group_bilstm_.encode(tape, group_emb);
      auto q = lk_.encode_knowledge(tape, embedding_, ct, probe);
      rows.push_back(ops::concat_cols(tape, group_vec, q));
    }
    return ops::concat_rows(tape, rows);
  }

  // Knowledge rows frozen for inference; recompute after any parameter change.
  TensorPtr<T> cached_knowledge() const {
    if (!cfg_.use_knowledge) return nullptr;
    if (!knowledge_cache_) knowledge_cache_ = knowledge_rows(nullptr);
    return knowledge_cache_;
  }

  void invalidate_knowledge_cache() { knowledge_cache_ = nullptr; }

  std::vector<int> fact_ids(const std::string &fact) const {
    auto tokens = tokenize(fact);
    if (tokens.empty()) throw UsageError("empty fact");
    if (tokens.size() > cfg_.max_fact_tokens) tokens.resize(cfg_.max_fact_tokens);
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto &t : tokens) ids.push_back(vocab_.lookup(t));
    return ids;
  }

  TensorPtr<T> encode_fact(Tape<T> *tape, const std::vector<int> &ids) const {
    if (ids.empty()) throw UsageError("encode_fact: empty token sequence");
    auto h0 = ops::embedding_lookup(tape, embedding_, ids);
    if (cfg_.fact_encoder == "gcn") {
      auto a_hat = adjacency_tensor<T>(normalize_adjacency(document_adjacency(ids, edges_)));
      return gcn_.encode(tape, h0, a_hat);
    }
    return ops::max_pool_columns(tape, fact_bilstm_.encode_steps(tape, h0));
  }

  Output forward(Tape<T> *tape, const std::vector<int> &ids, const TensorPtr<T> &knowledge,
                 bool training, std::mt19937 *rng = nullptr) const {
    const bool use_dropout = training && cfg_.dropout > 0.0;
    if (use_dropout && rng == nullptr)
      throw UsageError("forward: training with dropout requires an rng");
    auto e = encode_fact(tape, ids);
    if (use_dropout) e = ops::dropout(tape, e, cfg_.dropout, true, *rng);
    Output out;
    TensorPtr<T> g = e;
    if (cfg_.use_knowledge) {
      if (!knowledge) throw UsageError("forward: knowledge rows required for this model");
      auto matched = matcher_.match(tape, e, knowledge);
      out.beta = matched.beta;
      g = matched.g;
      if (use_dropout) g = ops::dropout(tape, g, cfg_.dropout, true, *rng);
    }
    out.logits = classifier_.logits(tape, g);
    return out;
  }

  // Loads "token v1 .. vd" lines over the random-initialized table; returns
  // how many vocabulary rows were overwritten.
  std::size_t load_pretrained_embeddings(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open embedding file '" + path + "'");
    const std::size_t d = cfg_.embedding_dim();
    std::string line;
    std::size_t loaded = 0, lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::string token;
      ss >> token;
      if (!vocab_.contains(token)) continue;
      std::vector<T> row(d);
      for (std::size_t j = 0; j < d; ++j)
        if (!(ss >> row[j]))
          throw ValidationError(path + ":" + std::to_string(lineno) +
                                ": expected " + std::to_string(d) + " vector components");
      const int id = vocab_.lookup(token);
      std::copy(row.begin(), row.end(), embedding_->value.begin() + id * d);
      ++loaded;
    }
    invalidate_knowledge_cache();
    return loaded;
  }

  ParamStore<T> &params() { return params_; }
  const ParamStore<T> &params() const { return params_; }
  const TrainConfig &config() const { return cfg_; }
  const Vocabulary &vocab() const { return vocab_; }
  const KnowledgeTree &tree() const { return tree_; }
  const EdgeSet &edges() const { return edges_; }
  const std::vector<std::string> &labels() const { return labels_; }
  std::size_t num_classes() const { return labels_.size(); }
  const TensorPtr<T> &embedding() const { return embedding_; }

 private:
  void tokenize_knowledge() {
    if (!cfg_.use_knowledge) return;
    for (const auto &g : tree_.groups) {
      auto group_tokens = tokenize(g.name);
      if (group_tokens.empty())
        throw ValidationError("group '" + g.name + "' has no usable label tokens");
      std::vector<int> group_ids;
      for (const auto &t : group_tokens) group_ids.push_back(vocab_.lookup(t));
      for (const auto &c : g.charges) {
        ChargeTokens ct;
        ct.name = c.name;
        ct.group = group_ids;
        for (std::size_t k = 1; k <= 4; ++k) {
          auto toks = tokenize(c.schema(k));
          if (toks.empty())
            throw ValidationError("charge '" + c.name + "' is missing schema K" +
                                  std::to_string(k));
          if (toks.size() > cfg_.max_fact_tokens) toks.resize(cfg_.max_fact_tokens);
          for (const auto &t : toks) ct.schemas[k - 1].push_back(vocab_.lookup(t));
        }
        charge_tokens_.push_back(std::move(ct));
      }
    }
  }

  TrainConfig cfg_;
  Vocabulary vocab_;
  KnowledgeTree tree_;
  EdgeSet edges_;
  std::vector<std::string> labels_;
  std::vector<ChargeTokens> charge_tokens_;
  ParamStore<T> params_;
  TensorPtr<T> embedding_;
  GcnEncoder<T> gcn_;
  BiLstmEncoder<T> fact_bilstm_;
  BiLstmEncoder<T> group_bilstm_;
  LkTransformer<T> lk_;
  MatchingNetwork<T> matcher_;
  Classifier<T> classifier_;
  mutable TensorPtr<T> knowledge_cache_;
};

}  // namespace lexkit
