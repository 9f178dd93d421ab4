#pragma once
#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "lexkit/errors.hpp"
#include "lexkit/textgraph.hpp"

namespace lexkit {

using json = nlohmann::json;

// Lowercased whitespace tokenization; pre-segmented input passes through.
inline std::vector<std::string> tokenize(const std::string &text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char ch : text) {
    if (std::isspace(ch)) {
      if (!current.empty()) {
        tokens.push_back(current);
        current.clear();
      }
    } else {
      current.push_back(static_cast<char>(std::tolower(ch)));
    }
  }
  if (!current.empty()) tokens.push_back(current);
  return tokens;
}

struct CaseRecord {
  std::string id;
  std::string fact;
  std::string charge;
};

struct ChargeSchemas {
  std::string name;
  std::string object_elements;
  std::string objective_elements;
  std::string subject_elements;
  std::string subjective_elements;

  const std::string &schema(std::size_t which) const {
    switch (which) {
      case 1: return object_elements;
      case 2: return objective_elements;
      case 3: return subject_elements;
      default: return subjective_elements;
    }
  }
};

struct ChargeGroup {
  std::string name;
  std::vector<ChargeSchemas> charges;
};

// root -> groups -> charges -> four constitutive-element schemas. The
// flattened charge order (groups in file order, charges in file order) is the
// canonical label order everywhere in the model.
struct KnowledgeTree {
  std::vector<ChargeGroup> groups;

  std::vector<std::string> charge_names() const {
    std::vector<std::string> names;
    for (const auto &g : groups)
      for (const auto &c : g.charges) names.push_back(c.name);
    return names;
  }

  std::size_t charge_count() const {
    std::size_t n = 0;
    for (const auto &g : groups) n += g.charges.size();
    return n;
  }

  int label_of(const std::string &charge) const {
    int idx = 0;
    for (const auto &g : groups)
      for (const auto &c : g.charges) {
        if (c.name == charge) return idx;
        ++idx;
      }
    return -1;
  }

  void validate() const {
    if (groups.empty()) throw ValidationError("knowledge tree has no groups");
    std::unordered_set<std::string> group_names, charge_names;
    for (const auto &g : groups) {
      if (g.name.empty()) throw ValidationError("knowledge tree has a group with no name");
      if (!group_names.insert(g.name).second)
        throw ValidationError("duplicate group name '" + g.name + "'");
      if (g.charges.empty())
        throw ValidationError("group '" + g.name + "' has no charges");
      for (const auto &c : g.charges) {
        if (c.name.empty())
          throw ValidationError("group '" + g.name + "' has a charge with no name");
        if (!charge_names.insert(c.name).second)
          throw ValidationError("duplicate charge name '" + c.name + "'");
        const char *keys[4] = {"object_elements", "objective_elements", "subject_elements",
                               "subjective_elements"};
        for (std::size_t k = 1; k <= 4; ++k)
          if (tokenize(c.schema(k)).empty())
            throw ValidationError("charge '" + c.name + "' has an empty schema " +
                                  keys[k - 1]);
      }
    }
  }
};

inline json knowledge_to_json(const KnowledgeTree &tree) {
  json groups = json::array();
  for (const auto &g : tree.groups) {
    json charges = json::array();
    for (const auto &c : g.charges)
      charges.push_back({{"name", c.name},
                         {"object_elements", c.object_elements},
                         {"objective_elements", c.objective_elements},
                         {"subject_elements", c.subject_elements},
                         {"subjective_elements", c.subjective_elements}});
    groups.push_back({{"name", g.name}, {"charges", charges}});
  }
  return json{{"groups", groups}};
}

inline KnowledgeTree knowledge_from_json(const json &j) {
  KnowledgeTree tree;
  if (!j.is_object() || !j.contains("groups") || !j["groups"].is_array())
    throw ValidationError("knowledge file must be an object with a 'groups' array");
  for (const auto &jg : j["groups"]) {
    ChargeGroup group;
    group.name = jg.value("name", "");
    for (const auto &jc : jg.value("charges", json::array())) {
      ChargeSchemas c;
      c.name = jc.value("name", "");
      c.object_elements = jc.value("object_elements", "");
      c.objective_elements = jc.value("objective_elements", "");
      c.subject_elements = jc.value("subject_elements", "");
      c.subjective_elements = jc.value("subjective_elements", "");
      group.charges.push_back(std::move(c));
    }
    tree.groups.push_back(std::move(group));
  }
  tree.validate();
  return tree;
}

inline KnowledgeTree load_knowledge(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open knowledge file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception &e) {
    throw ValidationError("knowledge file '" + path + "': " + e.what());
  }
  return knowledge_from_json(j);
}

inline void save_knowledge(const std::string &path, const KnowledgeTree &tree) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write knowledge file '" + path + "'");
  out << knowledge_to_json(tree).dump(2) << '\n';
}

// Line-delimited JSON case records, validated against the knowledge tree.
inline std::vector<CaseRecord> load_cases(const std::string &path, const KnowledgeTree &tree) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open case file '" + path + "'");
  std::vector<CaseRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception &e) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": malformed record: " +
                            e.what());
    }
    CaseRecord rec;
    rec.id = j.value("id", "");
    rec.fact = j.value("fact", "");
    rec.charge = j.value("charge", "");
    if (tokenize(rec.fact).empty())
      throw ValidationError(path + ":" + std::to_string(lineno) + ": empty fact");
    if (tree.label_of(rec.charge) < 0)
      throw ValidationError(path + ":" + std::to_string(lineno) + ": charge '" + rec.charge +
                            "' is not in the knowledge tree");
    records.push_back(std::move(rec));
  }
  return records;
}

inline void save_cases(const std::string &path, const std::vector<CaseRecord> &records) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write case file '" + path + "'");
  for (const auto &rec : records) {
    json j{{"fact", rec.fact}, {"charge", rec.charge}};
    if (!rec.id.empty()) j["id"] = rec.id;
    out << j.dump() << '\n';
  }
}

struct DatasetSplit {
  std::vector<CaseRecord> train, validation, test;
};

// Deterministic shuffled split; floor-sized validation/test, remainder to
// train.
inline DatasetSplit split_dataset(const std::vector<CaseRecord> &records, std::uint64_t seed,
                                  double train_ratio = 0.8, double val_ratio = 0.1,
                                  double test_ratio = 0.1) {
  if (records.size() < 10)
    throw UsageError("split_dataset: need at least 10 records, got " +
                     std::to_string(records.size()));
  if (train_ratio <= 0 || val_ratio < 0 || test_ratio < 0 ||
      std::abs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-9)
    throw ConfigError("split_dataset: ratios must be nonnegative and sum to 1");
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937 rng(static_cast<std::uint32_t>(seed));
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_val = static_cast<std::size_t>(val_ratio * static_cast<double>(records.size()));
  const std::size_t n_test =
      static_cast<std::size_t>(test_ratio * static_cast<double>(records.size()));
  const std::size_t n_train = records.size() - n_val - n_test;
  DatasetSplit split;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const CaseRecord &rec = records[order[i]];
    if (i < n_train)
      split.train.push_back(rec);
    else if (i < n_train + n_val)
      split.validation.push_back(rec);
    else
      split.test.push_back(rec);
  }
  return split;
}

// Desk-scale confusable corpus: all charges of a group share one background
// vocabulary, and only a handful of per-charge discriminative tokens (which
// also appear verbatim in the objective/subjective schema texts) separate
// them. disc_presence < 1 withholds those tokens from a fraction of facts.
struct SyntheticSpec {
  std::size_t groups = 1;
  std::size_t charges_per_group = 4;
  std::size_t background_vocab = 50;
  std::size_t disc_tokens_per_charge = 3;
  std::size_t fact_len_min = 20;
  std::size_t fact_len_max = 40;
  std::size_t examples_per_charge = 50;
  double disc_presence = 1.0;
  std::uint64_t seed = 7;

  void validate() const {
    if (groups < 1 || charges_per_group < 1)
      throw ConfigError("synthetic spec: need at least one group and charge");
    if (background_vocab < 2) throw ConfigError("synthetic spec: background vocabulary too small");
    if (disc_tokens_per_charge < 1)
      throw ConfigError("synthetic spec: need at least one discriminative token per charge");
    if (fact_len_min < 2 || fact_len_max < fact_len_min)
      throw ConfigError("synthetic spec: bad fact length range");
    if (fact_len_min <= disc_tokens_per_charge)
      throw ConfigError("synthetic spec: facts must be longer than the discriminative set");
    if (examples_per_charge < 1) throw ConfigError("synthetic spec: examples_per_charge < 1");
    if (disc_presence < 0.0 || disc_presence > 1.0)
      throw ConfigError("synthetic spec: disc_presence must lie in [0,1]");
  }
};

inline SyntheticSpec synthetic_spec_from_json(const json &j) {
  SyntheticSpec spec;
  spec.groups = j.value("groups", spec.groups);
  spec.charges_per_group = j.value("charges_per_group", spec.charges_per_group);
  spec.background_vocab = j.value("background_vocab", spec.background_vocab);
  spec.disc_tokens_per_charge = j.value("disc_tokens_per_charge", spec.disc_tokens_per_charge);
  spec.fact_len_min = j.value("fact_len_min", spec.fact_len_min);
  spec.fact_len_max = j.value("fact_len_max", spec.fact_len_max);
  spec.examples_per_charge = j.value("examples_per_charge", spec.examples_per_charge);
  spec.disc_presence = j.value("disc_presence", spec.disc_presence);
  spec.seed = j.value("seed", spec.seed);
  spec.validate();
  return spec;
}

struct SyntheticCorpus {
  KnowledgeTree knowledge;
  std::vector<CaseRecord> cases;
};

inline SyntheticCorpus generate_synthetic(const SyntheticSpec &spec) {
  spec.validate();
  std::mt19937 rng(static_cast<std::uint32_t>(spec.seed));
  auto pad3 = [](std::size_t v) {
    std::string s = std::to_string(v);
    while (s.size() < 3) s.insert(s.begin(), '0');
    return s;
  };

  std::vector<std::string> background(spec.background_vocab);
  for (std::size_t b = 0; b < spec.background_vocab; ++b) background[b] = "w" + pad3(b);

  SyntheticCorpus corpus;
  std::vector<std::vector<std::string>> disc_tokens;  // per flattened charge
  std::unordered_set<std::string> seen_disc;
  for (std::size_t g = 0; g < spec.groups; ++g) {
    ChargeGroup group;
    group.name = "group_" + pad3(g);
    for (std::size_t c = 0; c < spec.charges_per_group; ++c) {
      ChargeSchemas charge;
      charge.name = "charge_" + pad3(g) + "_" + pad3(c);
      std::vector<std::string> disc(spec.disc_tokens_per_charge);
      for (std::size_t k = 0; k < disc.size(); ++k) {
        disc[k] = "key" + pad3(g) + "x" + pad3(c) + "x" + pad3(k);
        if (!seen_disc.insert(disc[k]).second)
          throw ConfigError("synthetic spec: discriminative token sets are not disjoint");
      }
      std::string disc_text;
      for (const auto &d : disc) disc_text += " " + d;
      charge.object_elements = "property interest protected by the " + group.name + " statute";
      charge.objective_elements = "conduct consisting of" + disc_text + " acts against the order";
      charge.subject_elements = "natural person bearing criminal responsibility";
      charge.subjective_elements = "intent characterized by" + disc_text + " purpose";
      disc_tokens.push_back(std::move(disc));
      group.charges.push_back(std::move(charge));
    }
    corpus.knowledge.groups.push_back(std::move(group));
  }
  corpus.knowledge.validate();

  std::uniform_int_distribution<std::size_t> len_dist(spec.fact_len_min, spec.fact_len_max);
  std::uniform_int_distribution<std::size_t> bg_dist(0, spec.background_vocab - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto names = corpus.knowledge.charge_names();
  std::size_t case_index = 0;
  for (std::size_t label = 0; label < names.size(); ++label) {
    std::uniform_int_distribution<std::size_t> count_dist(1, spec.disc_tokens_per_charge);
    for (std::size_t ex = 0; ex < spec.examples_per_charge; ++ex) {
      const std::size_t total_len = len_dist(rng);
      std::size_t n_disc = 0;
      if (unit(rng) < spec.disc_presence) n_disc = count_dist(rng);
      std::vector<std::string> fact_tokens;
      fact_tokens.reserve(total_len);
      if (n_disc > 0) {
        std::vector<std::string> pool = disc_tokens[label];
        std::shuffle(pool.begin(), pool.end(), rng);
        fact_tokens.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_disc));
      }
      while (fact_tokens.size() < total_len) fact_tokens.push_back(background[bg_dist(rng)]);
      std::shuffle(fact_tokens.begin(), fact_tokens.end(), rng);
      std::string fact;
      for (const auto &t : fact_tokens) {
        if (!fact.empty()) fact += ' ';
        fact += t;
      }
      CaseRecord rec;
      rec.id = "case_" + std::to_string(case_index++);
      rec.fact = std::move(fact);
      rec.charge = names[label];
      corpus.cases.push_back(std::move(rec));
    }
  }
  return corpus;
}

// Vocabulary over the training split plus the knowledge-tree text. Knowledge
// is a fixed model input available at train and test time, so its tokens are
// not held-out data; PMI statistics still come from the training split alone.
inline Vocabulary build_vocabulary(const std::vector<CaseRecord> &train_records,
                                   const KnowledgeTree *tree = nullptr) {
  Vocabulary vocab;
  for (const auto &rec : train_records)
    for (const auto &tok : tokenize(rec.fact)) vocab.add(tok);
  if (tree) {
    for (const auto &g : tree->groups) {
      for (const auto &tok : tokenize(g.name)) vocab.add(tok);
      for (const auto &c : g.charges)
        for (std::size_t k = 1; k <= 4; ++k)
          for (const auto &tok : tokenize(c.schema(k))) vocab.add(tok);
    }
  }
  return vocab;
}

}  // namespace lexkit
