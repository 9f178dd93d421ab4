#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lexkit/lexkit.hpp"

namespace fs = std::filesystem;
using lexkit::json;

namespace {

int run_train(const std::string &config_path, const std::string &data_path,
              const std::string &knowledge_path, const std::string &out_dir, bool no_knowledge,
              const std::string &fact_encoder) {
  lexkit::TrainConfig cfg = lexkit::load_config(config_path);
  if (no_knowledge) cfg.use_knowledge = false;
  if (!fact_encoder.empty()) cfg.fact_encoder = fact_encoder;
  cfg.validate();

  const auto tree = lexkit::load_knowledge(knowledge_path);
  const auto records = lexkit::load_cases(data_path, tree);
  const auto split = lexkit::split_dataset(records, cfg.seed, cfg.train_ratio, cfg.val_ratio,
                                           cfg.test_ratio);
  std::cout << "training on " << split.train.size() << " cases, validating on "
            << split.validation.size() << " (" << tree.charge_count() << " charges)\n";

  auto result = lexkit::train_model(cfg, split.train, split.validation, tree);

  fs::create_directories(out_dir);
  const std::string ckpt_path = (fs::path(out_dir) / "model.ckpt").string();
  lexkit::save_checkpoint(*result.model, ckpt_path);
  {
    std::ofstream log_out(fs::path(out_dir) / "train_log.jsonl");
    for (const auto &log : result.logs) log_out << log.to_json().dump() << '\n';
  }
  for (const auto &log : result.logs)
    std::cout << log.to_json().dump() << '\n';
  std::cout << "best epoch " << result.best_epoch << " (val Ma-F1 " << result.best_val_maf1
            << "), checkpoint written to " << ckpt_path << '\n';
  return 0;
}

int run_eval(const std::string &ckpt_path, const std::string &data_path,
             const std::string &split_name) {
  auto model = lexkit::load_checkpoint(ckpt_path);
  const auto records = lexkit::load_cases(data_path, model->tree());
  const auto &cfg = model->config();
  const auto split = lexkit::split_dataset(records, cfg.seed, cfg.train_ratio, cfg.val_ratio,
                                           cfg.test_ratio);
  const auto &subset = split_name == "train"  ? split.train
                       : split_name == "val"  ? split.validation
                                              : split.test;
  const auto report = lexkit::evaluate_model(*model, subset);
  json per_class = json::array();
  for (std::size_t c = 0; c < model->num_classes(); ++c)
    per_class.push_back({{"charge", model->labels()[c]},
                         {"precision", report.precision[c]},
                         {"recall", report.recall[c]},
                         {"f1", report.f1[c]}});
  json out{{"split", split_name},
           {"examples", subset.size()},
           {"accuracy", report.accuracy},
           {"macro_recall", report.macro_recall},
           {"macro_f1", report.macro_f1},
           {"micro_f1", report.micro_f1},
           {"per_class", per_class}};
  std::cout << out.dump(2) << '\n';
  return 0;
}

int run_predict(const std::string &ckpt_path, const std::string &fact) {
  auto model = lexkit::load_checkpoint(ckpt_path);
  const auto pred = lexkit::predict_ranked(*model, fact);
  std::cout << "rank  probability  charge\n";
  for (std::size_t i = 0; i < pred.ranked.size(); ++i)
    std::printf("%-5zu %.6f     %s\n", i + 1, pred.ranked[i].second,
                pred.ranked[i].first.c_str());
  if (!pred.betas.empty()) {
    std::cout << "\nknowledge attention (beta)\n";
    for (const auto &[charge, beta] : pred.betas)
      std::printf("%.6f  %s\n", beta, charge.c_str());
  }
  return 0;
}

int run_synth(const std::string &spec_path, const std::string &out_dir) {
  std::ifstream in(spec_path);
  if (!in) throw lexkit::ConfigError("cannot open spec file '" + spec_path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception &e) {
    throw lexkit::ConfigError("spec file '" + spec_path + "': " + e.what());
  }
  const auto spec = lexkit::synthetic_spec_from_json(j);
  const auto corpus = lexkit::generate_synthetic(spec);
  fs::create_directories(out_dir);
  lexkit::save_knowledge((fs::path(out_dir) / "knowledge.json").string(), corpus.knowledge);
  lexkit::save_cases((fs::path(out_dir) / "cases.jsonl").string(), corpus.cases);
  std::cout << "wrote " << corpus.cases.size() << " cases over "
            << corpus.knowledge.charge_count() << " charges to " << out_dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"charge prediction with schematic legal knowledge"};
  app.require_subcommand(1);

  std::string config_path, data_path, knowledge_path, out_dir, ckpt_path, fact, spec_path;
  std::string split_name = "test", fact_encoder;
  bool no_knowledge = false;

  auto *train = app.add_subcommand("train", "train a model and write a checkpoint");
  train->add_option("--config", config_path, "JSON training config")->required();
  train->add_option("--data", data_path, "JSONL case records")->required();
  train->add_option("--knowledge", knowledge_path, "knowledge tree JSON")->required();
  train->add_option("--out", out_dir, "output directory")->required();
  train->add_flag("--no-knowledge", no_knowledge, "ablation: drop schematic knowledge");
  train->add_option("--fact-encoder", fact_encoder, "ablation: gcn or bilstm")
      ->check(CLI::IsMember({"gcn", "bilstm"}));

  auto *eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
  eval->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  eval->add_option("--data", data_path, "JSONL case records")->required();
  eval->add_option("--split", split_name, "train, val or test")
      ->check(CLI::IsMember({"train", "val", "test"}));

  auto *predict = app.add_subcommand("predict", "rank charges for one fact description");
  predict->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  predict->add_option("--fact", fact, "fact description text")->required();

  auto *synth = app.add_subcommand("synth", "generate a synthetic confusable corpus");
  synth->add_option("--spec", spec_path, "synthetic spec JSON")->required();
  synth->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (app.got_subcommand(train))
      return run_train(config_path, data_path, knowledge_path, out_dir, no_knowledge,
                       fact_encoder);
    if (app.got_subcommand(eval)) return run_eval(ckpt_path, data_path, split_name);
    if (app.got_subcommand(predict)) return run_predict(ckpt_path, fact);
    if (app.got_subcommand(synth)) return run_synth(spec_path, out_dir);
  } catch (const lexkit::NumericalError &e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
