#pragma once
#include <random>
#include <string>

#include "lexkit/ops.hpp"
#include "lexkit/params.hpp"
#include "lexkit/tensor.hpp"

namespace lexkit {

template <typename T>
struct MatchResult {
  TensorPtr<T> g;     // knowledge-aware fact representation, 1 x 2s
  TensorPtr<T> beta;  // charge attention, 1 x m, rows sum to 1
};

// Attention matching between the fact vector and the per-charge knowledge
// rows: two projected views per side, charge attention beta over
// ReLU-transformed first views, and the matched knowledge summed under beta.
template <typename T>
class MatchingNetwork {
 public:
  MatchingNetwork() = default;
  MatchingNetwork(ParamStore<T> &params, const std::string &prefix, std::size_t fact_dim,
                  std::size_t knowledge_dim, std::mt19937 &rng)
      : fact_dim_(fact_dim), knowledge_dim_(knowledge_dim) {
    w_e1_ = params.add(prefix + ".we1", fact_dim, fact_dim, Init::Xavier, rng);
    w_e2_ = params.add(prefix + ".we2", fact_dim, fact_dim, Init::Xavier, rng);
    w_c1_ = params.add(prefix + ".wc1", knowledge_dim, fact_dim, Init::Xavier, rng);
    w_c2_ = params.add(prefix + ".wc2", knowledge_dim, fact_dim, Init::Xavier, rng);
    w_att_fact_ = params.add(prefix + ".watt_f", fact_dim, fact_dim, Init::Xavier, rng);
    w_att_know_ = params.add(prefix + ".watt_k", fact_dim, fact_dim, Init::Xavier, rng);
  }

  MatchResult<T> match(Tape<T> *tape, const TensorPtr<T> &e, const TensorPtr<T> &c) const {
    if (e->rows() != 1 || e->cols() != fact_dim_)
      throw ShapeError("match: fact vector must be 1x" + std::to_string(fact_dim_) + ", got " +
                       shape_str(e->shape));
    if (c->cols() != knowledge_dim_)
      throw ShapeError("match: knowledge rows must have width " +
                       std::to_string(knowledge_dim_) + ", got " + shape_str(c->shape));
    if (c->rows() < 1) throw UsageError("match: need at least one charge row");
    auto e1 = ops::matmul(tape, e, w_e1_);
    auto e2 = ops::matmul(tape, e, w_e2_);
    auto c1 = ops::matmul(tape, c, w_c1_);
    auto c2 = ops::matmul(tape, c, w_c2_);
    auto fact_key = ops::relu(tape, ops::matmul(tape, e1, w_att_fact_));
    auto know_key = ops::relu(tape, ops::matmul(tape, c1, w_att_know_));
    auto scores = ops::matmul(tape, fact_key, ops::transpose(tape, know_key));
    auto beta = ops::softmax_rows(tape, scores);
    auto matched = ops::matmul(tape, beta, c2);
    return {ops::concat_cols(tape, e2, matched), beta};
  }

  std::size_t fact_dim() const { return fact_dim_; }
  std::size_t knowledge_dim() const { return knowledge_dim_; }
  const TensorPtr<T> &w_e1() const { return w_e1_; }
  const TensorPtr<T> &w_e2() const { return w_e2_; }
  const TensorPtr<T> &w_c1() const { return w_c1_; }
  const TensorPtr<T> &w_c2() const { return w_c2_; }
  const TensorPtr<T> &w_att_fact() const { return w_att_fact_; }
  const TensorPtr<T> &w_att_know() const { return w_att_know_; }

 private:
  std::size_t fact_dim_ = 0, knowledge_dim_ = 0;
  TensorPtr<T> w_e1_, w_e2_, w_c1_, w_c2_, w_att_fact_, w_att_know_;
};

// Softmax output layer over the m charges.
template <typename T>
class Classifier {
 public:
  Classifier() = default;
  Classifier(ParamStore<T> &params, const std::string &prefix, std::size_t in_dim,
             std::size_t num_classes, std::mt19937 &rng)
      : out_(params, prefix, in_dim, num_classes, rng) {}

  TensorPtr<T> logits(Tape<T> *tape, const TensorPtr<T> &g) const {
    return out_.forward(tape, g);
  }

  TensorPtr<T> classify(Tape<T> *tape, const TensorPtr<T> &g) const {
    return ops::softmax_rows(tape, logits(tape, g));
  }

 private:
  Linear<T> out_;
};

// -log y_hat[gold], computed from the logits through log-sum-exp.
template <typename T>
TensorPtr<T> cross_entropy_loss(Tape<T> *tape, const TensorPtr<T> &logits, std::size_t gold) {
  return ops::cross_entropy_logits(tape, logits, gold);
}

}  // namespace lexkit
