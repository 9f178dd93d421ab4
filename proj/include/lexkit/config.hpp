#pragma once
#include <cstdint>
#include <fstream>
#include <string>

#include <json.hpp>

#include "lexkit/errors.hpp"

namespace lexkit {

struct TrainConfig {
  std::size_t hidden = 300;      // shared hidden/state size s (= d_model)
  std::size_t embed_dim = 0;     // 0 means same as hidden
  std::size_t heads = 6;
  double learning_rate = 0.001;
  std::size_t batch_size = 128;
  double dropout = 0.5;
  std::size_t window_size = 20;
  std::size_t epochs = 50;
  std::size_t patience = 10;     // early-stop patience on validation Ma-F1; 0 disables
  std::uint64_t seed = 1;
  std::string fact_encoder = "gcn";  // gcn | bilstm
  bool use_knowledge = true;
  bool share_schema_blocks = false;
  std::size_t max_fact_tokens = 512;
  double train_ratio = 0.8, val_ratio = 0.1, test_ratio = 0.1;
  std::string embedding_file;    // optional whitespace "token v1..vd" vectors

  std::size_t embedding_dim() const { return embed_dim == 0 ? hidden : embed_dim; }

  void validate() const {
    if (hidden == 0) throw ConfigError("config: hidden size must be positive");
    if (heads == 0 || hidden % heads != 0)
      throw ConfigError("config: hidden size " + std::to_string(hidden) +
                        " must be divisible by heads " + std::to_string(heads));
    if (hidden % 2 != 0)
      throw ConfigError("config: hidden size must be even for the bidirectional encoder");
    if (learning_rate <= 0.0) throw ConfigError("config: learning rate must be positive");
    if (batch_size == 0) throw ConfigError("config: batch size must be positive");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("config: dropout must lie in [0,1)");
    if (window_size < 2) throw ConfigError("config: window size must be at least 2");
    if (epochs == 0) throw ConfigError("config: epochs must be positive");
    if (fact_encoder != "gcn" && fact_encoder != "bilstm")
      throw ConfigError("config: fact_encoder must be 'gcn' or 'bilstm', got '" + fact_encoder +
                        "'");
    if (max_fact_tokens == 0) throw ConfigError("config: max_fact_tokens must be positive");
    if (train_ratio <= 0 || val_ratio < 0 || test_ratio < 0 ||
        std::abs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-9)
      throw ConfigError("config: split ratios must be nonnegative and sum to 1");
  }
};

inline void to_json(nlohmann::json &j, const TrainConfig &cfg) {
  j = nlohmann::json{{"hidden", cfg.hidden},
                     {"embed_dim", cfg.embed_dim},
                     {"heads", cfg.heads},
                     {"learning_rate", cfg.learning_rate},
                     {"batch_size", cfg.batch_size},
                     {"dropout", cfg.dropout},
                     {"window_size", cfg.window_size},
                     {"epochs", cfg.epochs},
                     {"patience", cfg.patience},
                     {"seed", cfg.seed},
                     {"fact_encoder", cfg.fact_encoder},
                     {"use_knowledge", cfg.use_knowledge},
                     {"share_schema_blocks", cfg.share_schema_blocks},
                     {"max_fact_tokens", cfg.max_fact_tokens},
                     {"train_ratio", cfg.train_ratio},
                     {"val_ratio", cfg.val_ratio},
                     {"test_ratio", cfg.test_ratio},
                     {"embedding_file", cfg.embedding_file}};
}

inline void from_json(const nlohmann::json &j, TrainConfig &cfg) {
  cfg.hidden = j.value("hidden", cfg.hidden);
  cfg.embed_dim = j.value("embed_dim", cfg.embed_dim);
  cfg.heads = j.value("heads", cfg.heads);
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.dropout = j.value("dropout", cfg.dropout);
  cfg.window_size = j.value("window_size", cfg.window_size);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.patience = j.value("patience", cfg.patience);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.fact_encoder = j.value("fact_encoder", cfg.fact_encoder);
  cfg.use_knowledge = j.value("use_knowledge", cfg.use_knowledge);
  cfg.share_schema_blocks = j.value("share_schema_blocks", cfg.share_schema_blocks);
  cfg.max_fact_tokens = j.value("max_fact_tokens", cfg.max_fact_tokens);
  cfg.train_ratio = j.value("train_ratio", cfg.train_ratio);
  cfg.val_ratio = j.value("val_ratio", cfg.val_ratio);
  cfg.test_ratio = j.value("test_ratio", cfg.test_ratio);
  cfg.embedding_file = j.value("embedding_file", cfg.embedding_file);
}

inline TrainConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
  TrainConfig cfg = j.get<TrainConfig>();
  cfg.validate();
  return cfg;
}

}  // namespace lexkit
