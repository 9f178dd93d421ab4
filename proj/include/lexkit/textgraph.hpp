#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "lexkit/errors.hpp"
#include "lexkit/tensor.hpp"

namespace lexkit {

// Token <-> id bijection with reserved padding/unknown slots.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocabulary() {
    add("<pad>");
    add("<unk>");
  }

  int add(const std::string &token) {
    auto it = index_.find(token);
    if (it != index_.end()) return it->second;
    const int id = static_cast<int>(tokens_.size());
    index_.emplace(token, id);
    tokens_.push_back(token);
    return id;
  }

  int lookup(const std::string &token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
  }

  bool contains(const std::string &token) const { return index_.count(token) != 0; }
  const std::string &token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string> &tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Sliding-window co-occurrence counts. Counting is presence-based: a window
// containing a word twice still increments that word's count once.
struct CooccurrenceStats {
  std::size_t window_size = 0;
  std::int64_t total_windows = 0;
  std::unordered_map<int, std::int64_t> word_windows;
  std::unordered_map<std::uint64_t, std::int64_t> pair_windows;

  static std::uint64_t pair_key(int i, int j) {
    const std::uint64_t lo = static_cast<std::uint32_t>(std::min(i, j));
    const std::uint64_t hi = static_cast<std::uint32_t>(std::max(i, j));
    return (hi << 32) | lo;
  }

  std::int64_t word_count(int i) const {
    auto it = word_windows.find(i);
    return it == word_windows.end() ? 0 : it->second;
  }
  std::int64_t pair_count(int i, int j) const {
    auto it = pair_windows.find(pair_key(i, j));
    return it == pair_windows.end() ? 0 : it->second;
  }

  // Order-independent merge of per-shard partial counts.
  void merge(const CooccurrenceStats &other) {
    if (window_size != other.window_size)
      throw UsageError("CooccurrenceStats::merge: window sizes differ");
    total_windows += other.total_windows;
    for (const auto &[k, v] : other.word_windows) word_windows[k] += v;
    for (const auto &[k, v] : other.pair_windows) pair_windows[k] += v;
  }
};

inline CooccurrenceStats collect_cooccurrence(const std::vector<std::vector<int>> &corpus,
                                              std::size_t window_size) {
  if (window_size < 2)
    throw UsageError("collect_cooccurrence: window_size must be at least 2");
  if (corpus.empty()) throw UsageError("collect_cooccurrence: empty corpus");
  CooccurrenceStats stats;
  stats.window_size = window_size;
  std::vector<int> distinct;
  for (const auto &doc : corpus) {
    const std::size_t len = doc.size();
    const std::size_t windows = len > window_size ? len - window_size + 1 : 1;
    for (std::size_t t = 0; t < windows; ++t) {
      const std::size_t end = std::min(len, t + window_size);
      distinct.assign(doc.begin() + static_cast<std::ptrdiff_t>(t),
                      doc.begin() + static_cast<std::ptrdiff_t>(end));
      std::sort(distinct.begin(), distinct.end());
      distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
      ++stats.total_windows;
      for (std::size_t a = 0; a < distinct.size(); ++a) {
        ++stats.word_windows[distinct[a]];
        for (std::size_t b = a + 1; b < distinct.size(); ++b)
          ++stats.pair_windows[CooccurrenceStats::pair_key(distinct[a], distinct[b])];
      }
    }
  }
  return stats;
}

// PMI(w_i,w_j) = log(p(w_i,w_j) / (p(w_i) p(w_j))) with window probabilities,
// clamped to 0 for non-positive scores; pairs that never co-occur get 0.
inline double pmi_edge_weight(const CooccurrenceStats &stats, int i, int j) {
  if (i == j) throw UsageError("pmi_edge_weight: self-pairs have no PMI edge");
  const std::int64_t pair = stats.pair_count(i, j);
  if (pair == 0) return 0.0;
  const double p_ij = static_cast<double>(pair) / static_cast<double>(stats.total_windows);
  const double p_i =
      static_cast<double>(stats.word_count(i)) / static_cast<double>(stats.total_windows);
  const double p_j =
      static_cast<double>(stats.word_count(j)) / static_cast<double>(stats.total_windows);
  const double pmi = std::log(p_ij / (p_i * p_j));
  return pmi > 0.0 ? pmi : 0.0;
}

// The global word-relation set: every unordered pair with positive PMI.
class EdgeSet {
 public:
  EdgeSet() = default;

  explicit EdgeSet(const CooccurrenceStats &stats) {
    for (const auto &[key, count] : stats.pair_windows) {
      const int i = static_cast<int>(key & 0xffffffffu);
      const int j = static_cast<int>(key >> 32);
      const double w = pmi_edge_weight(stats, i, j);
      if (w > 0.0) edges_.emplace(key, w);
    }
  }

  double lookup(int i, int j) const {
    if (i == j) return 0.0;
    auto it = edges_.find(CooccurrenceStats::pair_key(i, j));
    return it == edges_.end() ? 0.0 : it->second;
  }

  void insert(int i, int j, double w) { edges_[CooccurrenceStats::pair_key(i, j)] = w; }
  std::size_t size() const { return edges_.size(); }
  const std::unordered_map<std::uint64_t, double> &raw() const { return edges_; }

  // Debug dump: "token_i<TAB>token_j<TAB>weight" per edge, lower id first.
  void dump(const Vocabulary &vocab, std::ostream &os) const {
    std::vector<std::uint64_t> keys;
    keys.reserve(edges_.size());
    for (const auto &[k, w] : edges_) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    for (std::uint64_t k : keys) {
      const int lo = static_cast<int>(k & 0xffffffffu);
      const int hi = static_cast<int>(k >> 32);
      os << vocab.token(lo) << '\t' << vocab.token(hi) << '\t' << edges_.at(k) << '\n';
    }
  }

 private:
  std::unordered_map<std::uint64_t, double> edges_;
};

// Dense symmetric per-document adjacency over token positions.
struct AdjacencyMatrix {
  std::size_t n = 0;
  std::vector<double> w;
  bool normalized = false;

  double &at(std::size_t i, std::size_t j) { return w[i * n + j]; }
  double at(std::size_t i, std::size_t j) const { return w[i * n + j]; }
};

// One node per token position; positions sharing a word type carry no edge
// (the type-level self-pair is excluded), and unknown tokens get no edges.
inline AdjacencyMatrix document_adjacency(const std::vector<int> &doc, const EdgeSet &edges) {
  if (doc.empty()) throw UsageError("document_adjacency: empty document");
  AdjacencyMatrix adj;
  adj.n = doc.size();
  adj.w.assign(adj.n * adj.n, 0.0);
  for (std::size_t p = 0; p < adj.n; ++p)
    for (std::size_t q = p + 1; q < adj.n; ++q) {
      if (doc[p] == doc[q]) continue;
      const double w = edges.lookup(doc[p], doc[q]);
      adj.at(p, q) = w;
      adj.at(q, p) = w;
    }
  return adj;
}

// D^{-1/2} (A + I) D^{-1/2} with D_ii the row sums of A + I.
inline AdjacencyMatrix normalize_adjacency(const AdjacencyMatrix &raw) {
  if (raw.normalized) throw UsageError("normalize_adjacency: input is already normalized");
  AdjacencyMatrix out;
  out.n = raw.n;
  out.w = raw.w;
  out.normalized = true;
  std::vector<double> inv_sqrt_deg(raw.n);
  for (std::size_t i = 0; i < raw.n; ++i) out.at(i, i) += 1.0;
  for (std::size_t i = 0; i < raw.n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < raw.n; ++j) deg += out.at(i, j);
    inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
  }
  for (std::size_t i = 0; i < raw.n; ++i)
    for (std::size_t j = 0; j < raw.n; ++j) out.at(i, j) *= inv_sqrt_deg[i] * inv_sqrt_deg[j];
  return out;
}

template <typename T>
TensorPtr<T> adjacency_tensor(const AdjacencyMatrix &adj) {
  std::vector<T> vals(adj.w.size());
  for (std::size_t i = 0; i < adj.w.size(); ++i) vals[i] = static_cast<T>(adj.w[i]);
  return make_tensor<T>({adj.n, adj.n}, std::move(vals));
}

}  // namespace lexkit
