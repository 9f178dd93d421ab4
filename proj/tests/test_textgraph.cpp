#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>
#include <set>
#include <sstream>

#include "lexkit/textgraph.hpp"

using namespace lexkit;

namespace {

// Window-enumeration oracle: materializes every window as a set and tallies
// counts directly, independent of CooccurrenceStats bookkeeping.
struct NaiveStats {
  std::int64_t total = 0;
  std::map<int, std::int64_t> word;
  std::map<std::pair<int, int>, std::int64_t> pair;
};

NaiveStats naive_cooccurrence(const std::vector<std::vector<int>> &corpus, std::size_t window) {
  NaiveStats stats;
  for (const auto &doc : corpus) {
    const std::size_t n_windows = doc.size() > window ? doc.size() - window + 1 : 1;
    for (std::size_t t = 0; t < n_windows; ++t) {
      std::set<int> seen(doc.begin() + static_cast<std::ptrdiff_t>(t),
                         doc.begin() + static_cast<std::ptrdiff_t>(std::min(doc.size(), t + window)));
      ++stats.total;
      for (int w : seen) ++stats.word[w];
      for (auto i = seen.begin(); i != seen.end(); ++i)
        for (auto j = std::next(i); j != seen.end(); ++j) ++stats.pair[{*i, *j}];
    }
  }
  return stats;
}

double naive_pmi(const NaiveStats &s, int i, int j) {
  auto it = s.pair.find({std::min(i, j), std::max(i, j)});
  if (it == s.pair.end() || it->second == 0) return 0.0;
  const double p_ij = static_cast<double>(it->second) / static_cast<double>(s.total);
  const double p_i = static_cast<double>(s.word.at(i)) / static_cast<double>(s.total);
  const double p_j = static_cast<double>(s.word.at(j)) / static_cast<double>(s.total);
  const double v = std::log(p_ij / (p_i * p_j));
  return v > 0.0 ? v : 0.0;
}

std::vector<std::vector<int>> random_corpus(std::mt19937 &rng, std::size_t max_docs,
                                            std::size_t max_len, int vocab) {
  std::uniform_int_distribution<std::size_t> docs_dist(1, max_docs);
  std::uniform_int_distribution<std::size_t> len_dist(1, max_len);
  std::uniform_int_distribution<int> tok_dist(0, vocab - 1);
  std::vector<std::vector<int>> corpus(docs_dist(rng));
  for (auto &doc : corpus) {
    doc.resize(len_dist(rng));
    for (auto &t : doc) t = tok_dist(rng);
  }
  return corpus;
}

// Dense oracle for the symmetric normalization: explicit diagonal matrices
// multiplied out with a naive triple loop.
std::vector<double> naive_normalize(const std::vector<double> &a, std::size_t n) {
  std::vector<double> tilde(a);
  for (std::size_t i = 0; i < n; ++i) tilde[i * n + i] += 1.0;
  std::vector<double> d_inv_sqrt(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += tilde[i * n + j];
    d_inv_sqrt[i * n + i] = 1.0 / std::sqrt(deg);
  }
  auto mul = [n](const std::vector<double> &x, const std::vector<double> &y) {
    std::vector<double> out(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) out[i * n + j] += x[i * n + k] * y[k * n + j];
    return out;
  };
  return mul(mul(d_inv_sqrt, tilde), d_inv_sqrt);
}

// Cyclic Jacobi eigenvalue iteration for small symmetric matrices.
std::vector<double> sym_eigenvalues(std::vector<double> a, std::size_t n) {
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::fabs(a[p * n + q]) < 1e-18) continue;
        const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * a[p * n + q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p], akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k], aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a[i * n + i];
  return eig;
}

}  // namespace

TEST_CASE("window counting on a three-token document", "[textgraph]") {
  const int a = 0, b = 1, c = 2;
  auto stats = collect_cooccurrence({{a, b, c}}, 2);  // windows {a,b}, {b,c}
  CHECK(stats.total_windows == 2);
  CHECK(stats.word_count(b) == 2);
  CHECK(stats.word_count(a) == 1);
  CHECK(stats.pair_count(a, b) == 1);
  CHECK(stats.pair_count(b, c) == 1);
  CHECK(stats.pair_count(a, c) == 0);
}

TEST_CASE("documents shorter than the window form exactly one window", "[textgraph]") {
  auto stats = collect_cooccurrence({{5}}, 20);
  CHECK(stats.total_windows == 1);
  CHECK(stats.word_count(5) == 1);
}

TEST_CASE("window counts across documents", "[textgraph]") {
  const int a = 0, b = 1, c = 2, d = 3;
  auto stats = collect_cooccurrence({{a, b}, {a, b}, {c, d}}, 2);
  CHECK(stats.total_windows == 3);
  CHECK(stats.pair_count(a, b) == 2);
  CHECK(stats.pair_count(c, d) == 1);
}

TEST_CASE("collect_cooccurrence rejects bad inputs", "[textgraph]") {
  CHECK_THROWS_AS(collect_cooccurrence({}, 2), UsageError);
  CHECK_THROWS_AS(collect_cooccurrence({{1, 2}}, 1), UsageError);
}

TEST_CASE("PMI weights from hand-computed window counts", "[textgraph]") {
  const int a = 0, b = 1, c = 2, d = 3;
  auto stats = collect_cooccurrence({{a, b}, {a, b}, {c, d}}, 2);
  // p(a,b)=2/3, p(a)=p(b)=2/3 -> log((2/3)/(4/9)) = log 1.5
  CHECK(pmi_edge_weight(stats, a, b) == Catch::Approx(std::log(1.5)).margin(1e-12));
  CHECK(pmi_edge_weight(stats, a, c) == 0.0);  // never co-occur
  CHECK_THROWS_AS(pmi_edge_weight(stats, a, a), UsageError);
}

TEST_CASE("perfectly correlated pair has PMI zero and no edge", "[textgraph]") {
  const int a = 0, b = 1;
  auto stats = collect_cooccurrence({{a, b, a, b}}, 2);
  CHECK(stats.total_windows == 3);
  CHECK(pmi_edge_weight(stats, a, b) == 0.0);
  EdgeSet edges(stats);
  CHECK(edges.size() == 0);
}

TEST_CASE("PMI is symmetric in its arguments", "[textgraph]") {
  std::mt19937 rng(101);
  auto corpus = random_corpus(rng, 8, 12, 6);
  auto stats = collect_cooccurrence(corpus, 3);
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j)
      CHECK(pmi_edge_weight(stats, i, j) == pmi_edge_weight(stats, j, i));
}

TEST_CASE("pair window counts never exceed either word count", "[textgraph]") {
  std::mt19937 rng(202);
  for (int trial = 0; trial < 100; ++trial) {
    auto corpus = random_corpus(rng, 10, 12, 8);
    std::uniform_int_distribution<std::size_t> wdist(2, 5);
    auto stats = collect_cooccurrence(corpus, wdist(rng));
    for (const auto &[key, count] : stats.pair_windows) {
      const int i = static_cast<int>(key & 0xffffffffu);
      const int j = static_cast<int>(key >> 32);
      CHECK(count <= std::min(stats.word_count(i), stats.word_count(j)));
      CHECK(stats.word_count(i) <= stats.total_windows);
    }
  }
}

TEST_CASE("stats match the naive window-enumeration oracle exactly", "[textgraph]") {
  std::mt19937 rng(303);
  for (int trial = 0; trial < 100; ++trial) {
    auto corpus = random_corpus(rng, 5, 10, 7);  // at most 50 tokens
    const std::size_t window = 2 + trial % 4;
    auto stats = collect_cooccurrence(corpus, window);
    auto oracle = naive_cooccurrence(corpus, window);
    REQUIRE(stats.total_windows == oracle.total);
    for (int w = 0; w < 7; ++w) {
      auto it = oracle.word.find(w);
      CHECK(stats.word_count(w) == (it == oracle.word.end() ? 0 : it->second));
    }
    for (int i = 0; i < 7; ++i)
      for (int j = i + 1; j < 7; ++j) {
        auto it = oracle.pair.find({i, j});
        CHECK(stats.pair_count(i, j) == (it == oracle.pair.end() ? 0 : it->second));
        if (stats.pair_count(i, j) > 0)
          CHECK(pmi_edge_weight(stats, i, j) ==
                Catch::Approx(naive_pmi(oracle, i, j)).margin(1e-9));
      }
  }
}

TEST_CASE("per-shard stats merge order-independently", "[textgraph]") {
  std::mt19937 rng(404);
  auto corpus_a = random_corpus(rng, 4, 10, 6);
  auto corpus_b = random_corpus(rng, 4, 10, 6);
  auto combined = corpus_a;
  combined.insert(combined.end(), corpus_b.begin(), corpus_b.end());
  auto whole = collect_cooccurrence(combined, 3);

  auto ab = collect_cooccurrence(corpus_a, 3);
  ab.merge(collect_cooccurrence(corpus_b, 3));
  auto ba = collect_cooccurrence(corpus_b, 3);
  ba.merge(collect_cooccurrence(corpus_a, 3));

  CHECK(ab.total_windows == whole.total_windows);
  CHECK(ba.total_windows == whole.total_windows);
  for (int i = 0; i < 6; ++i) {
    CHECK(ab.word_count(i) == whole.word_count(i));
    CHECK(ba.word_count(i) == whole.word_count(i));
    for (int j = i + 1; j < 6; ++j) {
      CHECK(ab.pair_count(i, j) == whole.pair_count(i, j));
      CHECK(ba.pair_count(i, j) == whole.pair_count(i, j));
    }
  }
}

TEST_CASE("document adjacency over token positions", "[textgraph]") {
  const int a = 2, b = 3;
  auto stats = collect_cooccurrence({{a, b}, {a, b}, {4, 5}}, 2);
  EdgeSet edges(stats);
  const double w_ab = pmi_edge_weight(stats, a, b);
  REQUIRE(w_ab > 0.0);

  auto single = document_adjacency({a}, edges);
  CHECK(single.n == 1);
  CHECK(single.at(0, 0) == 0.0);

  // doc = [a, b, a]: positions sharing a type carry no edge.
  auto adj = document_adjacency({a, b, a}, edges);
  CHECK(adj.at(0, 1) == w_ab);
  CHECK(adj.at(2, 1) == w_ab);
  CHECK(adj.at(0, 2) == 0.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(adj.at(i, i) == 0.0);

  auto pair = document_adjacency({a, b}, edges);
  CHECK(pair.at(0, 1) == Catch::Approx(std::log(1.5)).margin(1e-12));
  CHECK_THROWS_AS(document_adjacency({}, edges), UsageError);
}

TEST_CASE("unknown tokens get no edges", "[textgraph]") {
  EdgeSet edges;
  edges.insert(5, 6, 0.7);
  auto adj = document_adjacency({Vocabulary::kUnk, 5}, edges);
  CHECK(adj.at(0, 1) == 0.0);
}

TEST_CASE("normalization of trivial adjacencies", "[textgraph]") {
  AdjacencyMatrix isolated;
  isolated.n = 1;
  isolated.w = {0.0};
  auto norm = normalize_adjacency(isolated);
  CHECK(norm.at(0, 0) == Catch::Approx(1.0));
  CHECK(norm.normalized);
  CHECK_THROWS_AS(normalize_adjacency(norm), UsageError);

  AdjacencyMatrix pair;
  pair.n = 2;
  pair.w = {0.0, 1.0, 1.0, 0.0};
  auto npair = normalize_adjacency(pair);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(npair.at(i, j) == Catch::Approx(0.5));
}

TEST_CASE("normalization matches the dense oracle and spectral bound", "[textgraph]") {
  std::mt19937 rng(505);
  std::uniform_real_distribution<double> weight(0.0, 2.0);
  std::bernoulli_distribution has_edge(0.4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + trial % 7;
    AdjacencyMatrix raw;
    raw.n = n;
    raw.w.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (has_edge(rng)) {
          const double w = weight(rng);
          raw.at(i, j) = w;
          raw.at(j, i) = w;
        }
    auto norm = normalize_adjacency(raw);
    auto oracle = naive_normalize(raw.w, n);
    for (std::size_t i = 0; i < n * n; ++i)
      CHECK(norm.w[i] == Catch::Approx(oracle[i]).margin(1e-9));
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(norm.at(i, i) > 0.0);
      for (std::size_t j = 0; j < n; ++j) CHECK(norm.at(i, j) == norm.at(j, i));
    }
    for (double ev : sym_eigenvalues(norm.w, n)) {
      CHECK(ev >= -1.0 - 1e-6);
      CHECK(ev <= 1.0 + 1e-6);
    }
  }
}

TEST_CASE("edge dump emits token/token/weight lines", "[textgraph]") {
  Vocabulary vocab;
  const int a = vocab.add("alpha"), b = vocab.add("beta");
  EdgeSet edges;
  edges.insert(a, b, 0.5);
  std::ostringstream os;
  edges.dump(vocab, os);
  CHECK(os.str() == "alpha\tbeta\t0.5\n");
}

TEST_CASE("vocabulary ids are dense and bijective", "[textgraph]") {
  Vocabulary vocab;
  CHECK(vocab.size() == 2);  // pad + unk reserved
  const int x = vocab.add("xx");
  CHECK(x == 2);
  CHECK(vocab.add("xx") == x);
  CHECK(vocab.lookup("xx") == x);
  CHECK(vocab.token(x) == "xx");
  CHECK(vocab.lookup("yy") == Vocabulary::kUnk);
}
