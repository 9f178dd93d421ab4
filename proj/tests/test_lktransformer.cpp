#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "lexkit/lktransformer.hpp"

using namespace lexkit;

namespace {

std::mt19937 fill_rng(77);

template <typename T>
void randomize(const TensorPtr<T> &t, double lo = -0.5, double hi = 0.5) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto &v : t->value) v = static_cast<T>(dist(fill_rng));
}

// Per-head loop oracle for multi-head attention in plain double arrays.
std::vector<double> mha_oracle(const MultiHeadAttention<double> &mha,
                               const std::vector<double> &x, std::size_t n, std::size_t d) {
  const std::size_t h = mha.head_count(), dk = mha.head_dim();
  auto project = [&](const TensorPtr<double> &w) {
    std::vector<double> out(n * dk, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < dk; ++j)
        for (std::size_t k = 0; k < d; ++k) out[i * dk + j] += x[i * d + k] * w->at(k, j);
    return out;
  };
  std::vector<double> merged(n * h * dk, 0.0);
  for (std::size_t head = 0; head < h; ++head) {
    auto q = project(mha.wq(head)), k = project(mha.wk(head)), v = project(mha.wv(head));
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> scores(n, 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t p = 0; p < dk; ++p) scores[j] += q[i * dk + p] * k[j * dk + p];
        scores[j] /= std::sqrt(static_cast<double>(dk));
      }
      const double mx = *std::max_element(scores.begin(), scores.end());
      double z = 0.0;
      for (double &sv : scores) {
        sv = std::exp(sv - mx);
        z += sv;
      }
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t p = 0; p < dk; ++p)
          merged[i * h * dk + head * dk + p] += scores[j] / z * v[j * dk + p];
    }
  }
  std::vector<double> out(n * d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t p = 0; p < h * dk; ++p)
        out[i * d + j] += merged[i * h * dk + p] * mha.wo()->at(p, j);
  return out;
}

}  // namespace

TEST_CASE("identical keys give uniform attention weights", "[lktransformer]") {
  ParamStore<double> params;
  std::mt19937 rng(1);
  MultiHeadAttention<double> mha(params, "mha", 8, 2, rng);
  auto q = zeros<double>(3, 8);
  randomize(q);
  std::vector<double> key_row(8);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (auto &v : key_row) v = dist(fill_rng);
  std::vector<double> keys;
  for (int i = 0; i < 4; ++i) keys.insert(keys.end(), key_row.begin(), key_row.end());
  auto kv = make_matrix<double>(4, 8, keys);
  AttnCollector<double> probe;
  mha.forward(nullptr, q, kv, kv, nullptr, &probe);
  REQUIRE(probe.size() == 2);
  for (const auto &w : probe)
    for (double v : w->value) CHECK(v == Catch::Approx(0.25).margin(1e-9));
}

TEST_CASE("a single key receives full attention and fixes the output", "[lktransformer]") {
  ParamStore<double> params;
  std::mt19937 rng(2);
  const std::size_t d = 6, h = 2, dk = 3;
  MultiHeadAttention<double> mha(params, "mha", d, h, rng);
  auto q = zeros<double>(2, d);
  auto kv = zeros<double>(1, d);
  randomize(q);
  randomize(kv);
  AttnCollector<double> probe;
  auto out = mha.forward(nullptr, q, kv, kv, nullptr, &probe);
  for (const auto &w : probe)
    for (double v : w->value) CHECK(v == 1.0);
  // Output per query row is concat_h(v W^V_h) W^O regardless of the query.
  std::vector<double> merged(h * dk, 0.0);
  for (std::size_t head = 0; head < h; ++head)
    for (std::size_t j = 0; j < dk; ++j)
      for (std::size_t k = 0; k < d; ++k)
        merged[head * dk + j] += kv->value[k] * mha.wv(head)->at(k, j);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t j = 0; j < d; ++j) {
      double expect = 0.0;
      for (std::size_t p = 0; p < h * dk; ++p) expect += merged[p] * mha.wo()->at(p, j);
      CHECK(out->at(r, j) == Catch::Approx(expect).margin(1e-12));
    }
}

TEST_CASE("multi-head attention matches the per-head loop oracle", "[lktransformer]") {
  ParamStore<double> params;
  std::mt19937 rng(3);
  const std::size_t d = 8, n = 3;
  MultiHeadAttention<double> mha(params, "mha", d, 2, rng);
  auto x = zeros<double>(n, d);
  randomize(x, -1.0, 1.0);
  auto out = mha.forward(nullptr, x, x, x);
  auto expect = mha_oracle(mha, x->value, n, d);
  for (std::size_t i = 0; i < expect.size(); ++i)
    CHECK(out->value[i] == Catch::Approx(expect[i]).margin(1e-5));
}

TEST_CASE("attention rows sum to one and masked keys get exactly zero", "[lktransformer]") {
  ParamStore<double> params;
  std::mt19937 rng(4);
  MultiHeadAttention<double> mha(params, "mha", 8, 4, rng);
  std::bernoulli_distribution coin(0.3);
  for (int trial = 0; trial < 30; ++trial) {
    auto x = zeros<double>(5, 8);
    randomize(x, -2.0, 2.0);
    std::vector<std::uint8_t> mask(5, 0);
    for (auto &m : mask) m = coin(fill_rng) ? 1 : 0;
    mask[0] = 0;  // keep at least one key
    AttnCollector<double> probe;
    mha.forward(nullptr, x, x, x, &mask, &probe);
    for (const auto &w : probe)
      for (std::size_t i = 0; i < w->rows(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < w->cols(); ++j) {
          sum += w->at(i, j);
          if (mask[j]) CHECK(w->at(i, j) == 0.0);
        }
        CHECK(sum == Catch::Approx(1.0).margin(1e-6));
      }
  }
}

TEST_CASE("a fully masked key set is rejected", "[lktransformer]") {
  ParamStore<double> params;
  std::mt19937 rng(5);
  MultiHeadAttention<double> mha(params, "mha", 4, 2, rng);
  auto x = zeros<double>(2, 4);
  randomize(x);
  std::vector<std::uint8_t> all_masked = {1, 1};
  CHECK_THROWS_AS(mha.forward(nullptr, x, x, x, &all_masked), UsageError);
}

TEST_CASE("block with zero sublayer weights is a cascade of layer norms", "[lktransformer]") {
  ParamStore<double> params;
  std::mt19937 rng(6);
  const std::size_t d = 6;
  TransformerBlock<double> block(params, "blk", d, 2, rng);
  for (const auto &[name, t] : params.items())
    if (name.find(".gain") == std::string::npos)
      std::fill(t->value.begin(), t->value.end(), 0.0);
  auto x = zeros<double>(3, d);
  randomize(x, -1.5, 1.5);
  auto out = block.forward(nullptr, x);
  auto gain = full<double>(1, d, 1.0);
  auto bias = zeros<double>(1, d);
  auto expect = ops::layer_norm_rows<double>(nullptr, x, gain, bias);
  expect = ops::layer_norm_rows<double>(nullptr, expect, gain, bias);
  expect = ops::layer_norm_rows<double>(nullptr, expect, gain, bias);
  for (std::size_t i = 0; i < out->size(); ++i)
    CHECK(out->value[i] == Catch::Approx(expect->value[i]).margin(1e-12));
}

TEST_CASE("block keeps its shape and rejects all-padding input", "[lktransformer]") {
  ParamStore<double> params;
  std::mt19937 rng(7);
  TransformerBlock<double> block(params, "blk", 8, 2, rng);
  for (std::size_t len : {1, 2, 5}) {
    auto x = zeros<double>(len, 8);
    randomize(x);
    auto out = block.forward(nullptr, x);
    CHECK(out->rows() == len);
    CHECK(out->cols() == 8);
  }
  auto x = zeros<double>(2, 8);
  std::vector<std::uint8_t> pad = {1, 1};
  CHECK_THROWS_AS(block.forward(nullptr, x, &pad), UsageError);
}

TEST_CASE("block matches composing its three sublayers by hand", "[lktransformer]") {
  ParamStore<double> params;
  std::mt19937 rng(8);
  const std::size_t d = 6;
  TransformerBlock<double> block(params, "blk", d, 2, rng);
  auto x = zeros<double>(3, d);
  randomize(x, -1.0, 1.0);
  auto out = block.forward(nullptr, x);

  auto x1 = block.ln1().forward(nullptr,
                                ops::add<double>(nullptr, x,
                                                 block.attn_masked().forward(nullptr, x, x, x)));
  auto x2 = block.ln2().forward(
      nullptr, ops::add<double>(nullptr, x1, block.attn_plain().forward(nullptr, x1, x1, x1)));
  auto ff = block.ffn_out().forward(
      nullptr, ops::relu<double>(nullptr, block.ffn_in().forward(nullptr, x2)));
  auto expect = block.ln3().forward(nullptr, ops::add<double>(nullptr, x2, ff));
  for (std::size_t i = 0; i < out->size(); ++i)
    CHECK(out->value[i] == Catch::Approx(expect->value[i]).margin(1e-12));
}

TEST_CASE("identical rows stay identical through a block", "[lktransformer]") {
  ParamStore<double> params;
  std::mt19937 rng(9);
  const std::size_t d = 6;
  TransformerBlock<double> block(params, "blk", d, 2, rng);
  std::vector<double> row(d);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (auto &v : row) v = dist(fill_rng);
  std::vector<double> vals;
  for (int i = 0; i < 3; ++i) vals.insert(vals.end(), row.begin(), row.end());
  auto out = block.forward(nullptr, make_matrix<double>(3, d, vals));
  for (std::size_t i = 1; i < 3; ++i)
    for (std::size_t j = 0; j < d; ++j)
      CHECK(out->at(i, j) == Catch::Approx(out->at(0, j)).margin(1e-12));
}

TEST_CASE("schema encoding pools block outputs over positions", "[lktransformer]") {
  ParamStore<double> params;
  std::mt19937 rng(10);
  const std::size_t d = 6, vocab = 9;
  LkTransformer<double> lk(params, "lk", d, 2, rng);
  auto table = zeros<double>(vocab, d);
  randomize(table);

  // Single token: the mean over one position is that position's output.
  auto s_single = lk.encode_schema(nullptr, table, {3}, 1);
  auto emb = ops::embedding_lookup<double>(nullptr, table, {3});
  emb = ops::add<double>(nullptr, emb, positional_encoding<double>(1, d));
  auto block_out = lk.schema_block(1).forward(nullptr, emb);
  for (std::size_t j = 0; j < d; ++j)
    CHECK(s_single->value[j] == Catch::Approx(block_out->value[j]).margin(1e-12));

  // Three tokens: embed, add positions, block, mean over rows.
  std::vector<int> toks = {1, 4, 7};
  auto s3 = lk.encode_schema(nullptr, table, toks, 2);
  auto e3 = ops::embedding_lookup<double>(nullptr, table, toks);
  e3 = ops::add<double>(nullptr, e3, positional_encoding<double>(3, d));
  auto b3 = lk.schema_block(2).forward(nullptr, e3);
  auto expect = ops::mean_pool_rows<double>(nullptr, b3);
  for (std::size_t j = 0; j < d; ++j)
    CHECK(s3->value[j] == Catch::Approx(expect->value[j]).margin(1e-12));

  CHECK_THROWS_AS(lk.encode_schema(nullptr, table, {}, 1), UsageError);
  CHECK_THROWS_AS(lk.encode_schema(nullptr, table, {1}, 5), UsageError);
}

TEST_CASE("charge encoding is a block plus mean over the four schemas", "[lktransformer]") {
  ParamStore<double> params;
  std::mt19937 rng(11);
  const std::size_t d = 6;
  LkTransformer<double> lk(params, "lk", d, 2, rng);

  std::array<TensorPtr<double>, 4> s;
  for (auto &v : s) {
    v = zeros<double>(1, d);
    randomize(v);
  }
  auto q = lk.encode_charge(nullptr, s);
  CHECK(q->cols() == d);
  auto stacked = ops::concat_rows<double>(
      nullptr, std::vector<TensorPtr<double>>(s.begin(), s.end()));
  auto expect = ops::mean_pool_rows<double>(nullptr, lk.charge_block().forward(nullptr, stacked));
  for (std::size_t j = 0; j < d; ++j)
    CHECK(q->value[j] == Catch::Approx(expect->value[j]).margin(1e-12));

  // Four identical schema vectors: every per-position output equals q.
  std::array<TensorPtr<double>, 4> same;
  for (auto &v : same) v = make_tensor<double>(s[0]->shape, s[0]->value);
  auto q_same = lk.encode_charge(nullptr, same);
  auto stacked_same = ops::concat_rows<double>(
      nullptr, std::vector<TensorPtr<double>>(same.begin(), same.end()));
  auto rows = lk.charge_block().forward(nullptr, stacked_same);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < d; ++j)
      CHECK(rows->at(i, j) == Catch::Approx(q_same->value[j]).margin(1e-12));
}

TEST_CASE("permuting the schema vectors leaves q unchanged", "[lktransformer]") {
  // No positional encoding at the charge level, so the four schema vectors
  // form a set: permuting them permutes per-position outputs only.
  ParamStore<double> params;
  std::mt19937 rng(12);
  const std::size_t d = 8;
  LkTransformer<double> lk(params, "lk", d, 2, rng);
  std::array<TensorPtr<double>, 4> s;
  for (auto &v : s) {
    v = zeros<double>(1, d);
    randomize(v);
  }
  auto q = lk.encode_charge(nullptr, s);
  std::array<TensorPtr<double>, 4> perm = {s[2], s[0], s[3], s[1]};
  auto q_perm = lk.encode_charge(nullptr, perm);
  for (std::size_t j = 0; j < d; ++j)
    CHECK(q->value[j] == Catch::Approx(q_perm->value[j]).margin(1e-9));

  auto rows = lk.charge_block().forward(
      nullptr,
      ops::concat_rows<double>(nullptr, std::vector<TensorPtr<double>>(s.begin(), s.end())));
  auto rows_perm = lk.charge_block().forward(
      nullptr,
      ops::concat_rows<double>(nullptr,
                               std::vector<TensorPtr<double>>(perm.begin(), perm.end())));
  const std::size_t inverse[4] = {2, 0, 3, 1};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < d; ++j)
      CHECK(rows_perm->at(i, j) == Catch::Approx(rows->at(inverse[i], j)).margin(1e-9));
}

TEST_CASE("every knowledge-side parameter receives gradient", "[lktransformer]") {
  ParamStore<double> params;
  std::mt19937 rng(13);
  const std::size_t d = 8, vocab = 12;
  LkTransformer<double> lk(params, "lk", d, 2, rng);
  auto table = params.add("embedding", vocab, d, Init::Xavier, rng);

  ChargeTokens charge;
  charge.name = "c0";
  charge.group = {1};
  charge.schemas = {std::vector<int>{2, 3, 4}, std::vector<int>{5, 6}, std::vector<int>{7, 8, 9},
                    std::vector<int>{10, 11}};
  Tape<double> tape;
  auto q = lk.encode_knowledge(&tape, table, charge);
  auto loss = ops::sum_all(&tape, ops::elementwise_mul(&tape, q, q));
  tape.backward(loss);
  for (const auto &[name, t] : params.items()) {
    if (name.find("lk.") != 0) continue;
    double norm = 0.0;
    for (double g : t->grad) norm += g * g;
    INFO(name);
    CHECK(norm > 0.0);
  }
}

TEST_CASE("missing schemas are named in validation errors", "[lktransformer]") {
  ParamStore<double> params;
  std::mt19937 rng(14);
  LkTransformer<double> lk(params, "lk", 6, 2, rng);
  auto table = zeros<double>(4, 6);
  ChargeTokens charge;
  charge.name = "theft";
  charge.group = {1};
  charge.schemas = {std::vector<int>{1}, std::vector<int>{}, std::vector<int>{2},
                    std::vector<int>{3}};
  CHECK_THROWS_MATCHES(lk.encode_knowledge(nullptr, table, charge), ValidationError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("theft")));
}

TEST_CASE("positional encodings follow the sinusoid definition", "[lktransformer]") {
  auto pe = positional_encoding<double>(4, 6);
  for (std::size_t pos = 0; pos < 4; ++pos)
    for (std::size_t i = 0; i < 6; ++i) {
      const double angle = pos / std::pow(10000.0, (2.0 * (i / 2)) / 6.0);
      const double expect = i % 2 == 0 ? std::sin(angle) : std::cos(angle);
      CHECK(pe->at(pos, i) == Catch::Approx(expect).margin(1e-12));
    }
}
