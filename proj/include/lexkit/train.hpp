#pragma once
#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "lexkit/metrics.hpp"
#include "lexkit/model.hpp"

namespace lexkit {

// Adam with bias correction; moment state follows the ParamStore order.
template <typename T>
class Adam {
 public:
  explicit Adam(const ParamStore<T> &params, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto &[name, t] : params.items()) {
      m_.emplace_back(t->size(), 0.0);
      v_.emplace_back(t->size(), 0.0);
    }
  }

  void step(ParamStore<T> &params, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    const auto &items = params.items();
    for (std::size_t p = 0; p < items.size(); ++p) {
      auto &tensor = items[p].second;
      for (std::size_t i = 0; i < tensor->size(); ++i) {
        const double g = static_cast<double>(tensor->grad[i]);
        m_[p][i] = beta1_ * m_[p][i] + (1.0 - beta1_) * g;
        v_[p][i] = beta2_ * v_[p][i] + (1.0 - beta2_) * g * g;
        const double m_hat = m_[p][i] / bc1;
        const double v_hat = v_[p][i] / bc2;
        tensor->value[i] =
            static_cast<T>(static_cast<double>(tensor->value[i]) -
                           lr * m_hat / (std::sqrt(v_hat) + eps_));
      }
    }
  }

  std::size_t step_count() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_acc = 0.0, val_mr = 0.0, val_maf1 = 0.0, val_mif1 = 0.0;

  json to_json() const {
    return json{{"epoch", epoch},        {"train_loss", train_loss}, {"val_acc", val_acc},
                {"val_mr", val_mr},      {"val_maf1", val_maf1},     {"val_mif1", val_mif1}};
  }

  bool operator==(const EpochLog &o) const {
    return epoch == o.epoch && train_loss == o.train_loss && val_acc == o.val_acc &&
           val_mr == o.val_mr && val_maf1 == o.val_maf1 && val_mif1 == o.val_mif1;
  }
};

namespace detail {

template <typename T>
struct PreparedExample {
  std::vector<int> ids;
  std::size_t gold = 0;
};

template <typename T>
std::vector<PreparedExample<T>> prepare(const ChargeModel<T> &model,
                                        const std::vector<CaseRecord> &records) {
  std::vector<PreparedExample<T>> out;
  out.reserve(records.size());
  for (const auto &rec : records) {
    const int label = model.tree().label_of(rec.charge);
    if (label < 0)
      throw ValidationError("charge '" + rec.charge + "' is not in the model's knowledge tree");
    out.push_back({model.fact_ids(rec.fact), static_cast<std::size_t>(label)});
  }
  return out;
}

}  // namespace detail

// Mean cross-entropy over a dataset with dropout disabled.
template <typename T>
double mean_loss(const ChargeModel<T> &model, const std::vector<CaseRecord> &records) {
  if (records.empty()) throw UsageError("mean_loss: empty dataset");
  const auto examples = detail::prepare(model, records);
  auto knowledge = model.cached_knowledge();
  double total = 0.0;
  for (const auto &ex : examples) {
    auto out = model.forward(nullptr, ex.ids, knowledge, false);
    total += static_cast<double>(ops::cross_entropy_logits<T>(nullptr, out.logits, ex.gold)->value[0]);
  }
  return total / static_cast<double>(examples.size());
}

template <typename T>
MetricsReport evaluate_model(const ChargeModel<T> &model, const std::vector<CaseRecord> &records) {
  if (records.empty()) throw UsageError("evaluate_model: empty dataset");
  const auto examples = detail::prepare(model, records);
  auto knowledge = model.cached_knowledge();
  std::vector<int> golds, preds;
  golds.reserve(examples.size());
  preds.reserve(examples.size());
  for (const auto &ex : examples) {
    auto out = model.forward(nullptr, ex.ids, knowledge, false);
    std::size_t best = 0;
    for (std::size_t j = 1; j < out.logits->size(); ++j)
      if (out.logits->value[j] > out.logits->value[best]) best = j;
    golds.push_back(static_cast<int>(ex.gold));
    preds.push_back(static_cast<int>(best));
  }
  return compute_metrics(golds, preds, model.num_classes());
}

struct Prediction {
  std::vector<std::pair<std::string, double>> ranked;  // charge, probability (descending)
  std::vector<std::pair<std::string, double>> betas;   // charge, attention (tree order)
};

template <typename T>
Prediction predict_ranked(const ChargeModel<T> &model, const std::string &fact) {
  const auto ids = model.fact_ids(fact);
  auto out = model.forward(nullptr, ids, model.cached_knowledge(), false);
  auto probs = ops::softmax_rows<T>(nullptr, out.logits);
  Prediction pred;
  std::vector<std::size_t> order(probs->size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return probs->value[a] > probs->value[b];
  });
  for (std::size_t i : order)
    pred.ranked.emplace_back(model.labels()[i], static_cast<double>(probs->value[i]));
  if (out.beta)
    for (std::size_t i = 0; i < out.beta->size(); ++i)
      pred.betas.emplace_back(model.labels()[i], static_cast<double>(out.beta->value[i]));
  return pred;
}

struct TrainResult {
  std::shared_ptr<ChargeModel<float>> model;  // best-validation parameters restored
  std::vector<EpochLog> logs;
  std::size_t best_epoch = 0;
  double best_val_maf1 = 0.0;
};

// Builds vocabulary and PMI edges from the training split, then runs Adam on
// mini-batches of the summed cross-entropy. Knowledge rows are recomputed
// under the tape every step so the knowledge-side parameters train end to
// end. Keeps the epoch with the best validation Ma-F1 (patience-based early
// stop) and restores it before returning.
inline TrainResult train_model(const TrainConfig &cfg, const std::vector<CaseRecord> &train_set,
                               const std::vector<CaseRecord> &val_set, const KnowledgeTree &tree) {
  cfg.validate();
  tree.validate();
  if (train_set.empty() || val_set.empty())
    throw UsageError("train_model: train and validation sets must be non-empty");

  Vocabulary vocab = build_vocabulary(train_set, &tree);
  EdgeSet edges;
  if (cfg.fact_encoder == "gcn") {
    std::vector<std::vector<int>> corpus;
    corpus.reserve(train_set.size());
    for (const auto &rec : train_set) {
      std::vector<int> ids;
      for (const auto &tok : tokenize(rec.fact)) ids.push_back(vocab.lookup(tok));
      corpus.push_back(std::move(ids));
    }
    edges = EdgeSet(collect_cooccurrence(corpus, cfg.window_size));
  }

  auto model = std::make_shared<ChargeModel<float>>(cfg, std::move(vocab), tree, std::move(edges));
  if (!cfg.embedding_file.empty()) model->load_pretrained_embeddings(cfg.embedding_file);

  const auto train_examples = detail::prepare(*model, train_set);
  detail::prepare(*model, val_set);  // label validation up front

  Adam<float> optimizer(model->params());
  std::mt19937 rng(static_cast<std::uint32_t>(cfg.seed) ^ 0x9e3779b9u);

  TrainResult result;
  result.model = model;

  auto snapshot = [&] {
    std::vector<std::vector<float>> values;
    for (const auto &[name, t] : model->params().items()) values.push_back(t->value);
    return values;
  };
  auto restore = [&](const std::vector<std::vector<float>> &values) {
    const auto &items = model->params().items();
    for (std::size_t i = 0; i < items.size(); ++i) items[i].second->value = values[i];
    model->invalidate_knowledge_cache();
  };

  auto log_epoch = [&](std::size_t epoch, double train_loss) {
    const MetricsReport val = evaluate_model(*model, val_set);
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = train_loss;
    log.val_acc = val.accuracy;
    log.val_mr = val.macro_recall;
    log.val_maf1 = val.macro_f1;
    log.val_mif1 = val.micro_f1;
    result.logs.push_back(log);
    return val.macro_f1;
  };

  // Epoch 0: state before any update.
  double best = log_epoch(0, mean_loss(*model, train_set));
  auto best_values = snapshot();
  result.best_epoch = 0;
  std::size_t stall = 0;

  std::vector<std::size_t> order(train_examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      model->params().zero_grads();
      Tape<float> tape;
      TensorPtr<float> knowledge;
      if (cfg.use_knowledge) knowledge = model->knowledge_rows(&tape);
      TensorPtr<float> batch_total;
      for (std::size_t i = start; i < end; ++i) {
        const auto &ex = train_examples[order[i]];
        auto out = model->forward(&tape, ex.ids, knowledge, true, &rng);
        auto loss = ops::cross_entropy_logits(&tape, out.logits, ex.gold);
        epoch_loss += static_cast<double>(loss->value[0]);
        batch_total = batch_total ? ops::add(&tape, batch_total, loss) : loss;
      }
      auto batch_mean =
          ops::scale(&tape, batch_total, 1.0f / static_cast<float>(end - start));
      tape.backward(batch_mean);
      optimizer.step(model->params(), cfg.learning_rate);
      model->invalidate_knowledge_cache();
    }
    const double maf1 = log_epoch(epoch, epoch_loss / static_cast<double>(order.size()));
    if (maf1 > best) {
      best = maf1;
      best_values = snapshot();
      result.best_epoch = epoch;
      stall = 0;
    } else if (cfg.patience > 0 && ++stall >= cfg.patience) {
      break;
    }
  }

  restore(best_values);
  result.best_val_maf1 = best;
  return result;
}

}  // namespace lexkit
