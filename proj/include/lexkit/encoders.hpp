#pragma once
#include <random>
#include <string>
#include <vector>

#include "lexkit/ops.hpp"
#include "lexkit/params.hpp"
#include "lexkit/tensor.hpp"

namespace lexkit {

// Four-layer graph convolution: H^{k+1} = relu(A_hat H^k W^k), followed by a
// componentwise max over the node vectors of the last layer.
template <typename T>
class GcnEncoder {
 public:
  static constexpr std::size_t kLayers = 4;

  GcnEncoder() = default;
  GcnEncoder(ParamStore<T> &params, const std::string &prefix, std::size_t embed_dim,
             std::size_t hidden, std::mt19937 &rng) {
    layers_.push_back(params.add(prefix + ".w0", embed_dim, hidden, Init::Xavier, rng));
    for (std::size_t k = 1; k < kLayers; ++k)
      layers_.push_back(
          params.add(prefix + ".w" + std::to_string(k), hidden, hidden, Init::Xavier, rng));
  }

  // H0: n x d node features, a_hat: normalized n x n adjacency.
  TensorPtr<T> propagate(Tape<T> *tape, const TensorPtr<T> &h0, const TensorPtr<T> &a_hat) const {
    if (h0->rows() != a_hat->rows() || a_hat->rows() != a_hat->cols())
      throw ShapeError("gcn_encode: adjacency " + shape_str(a_hat->shape) +
                       " does not match features " + shape_str(h0->shape));
    if (h0->cols() != layers_[0]->rows())
      throw ShapeError("gcn_encode: feature width " + std::to_string(h0->cols()) +
                       " does not match first layer input " + std::to_string(layers_[0]->rows()));
    auto h = h0;
    for (const auto &w : layers_)
      h = ops::relu(tape, ops::matmul(tape, ops::matmul(tape, a_hat, h), w));
    return h;
  }

  TensorPtr<T> encode(Tape<T> *tape, const TensorPtr<T> &h0, const TensorPtr<T> &a_hat) const {
    return ops::max_pool_columns(tape, propagate(tape, h0, a_hat));
  }

  const std::vector<TensorPtr<T>> &layers() const { return layers_; }

 private:
  std::vector<TensorPtr<T>> layers_;
};

// Single-layer bidirectional LSTM. Each direction runs at hidden/2 so that the
// concatenated output keeps the model hidden size.
template <typename T>
class BiLstmEncoder {
 public:
  struct Gate {
    TensorPtr<T> w;  // input_dim x half
    TensorPtr<T> u;  // half x half
    TensorPtr<T> b;  // 1 x half
  };
  struct Direction {
    Gate input, forget, output, cell;
  };

  BiLstmEncoder() = default;
  BiLstmEncoder(ParamStore<T> &params, const std::string &prefix, std::size_t input_dim,
                std::size_t hidden, std::mt19937 &rng)
      : half_(hidden / 2) {
    if (hidden % 2 != 0)
      throw ConfigError("BiLstmEncoder: hidden size must be even, got " + std::to_string(hidden));
    fwd_ = make_direction(params, prefix + ".fwd", input_dim, rng);
    bwd_ = make_direction(params, prefix + ".bwd", input_dim, rng);
  }

  // Final-state sequence vector: concat of the two directions' last states.
  TensorPtr<T> encode(Tape<T> *tape, const TensorPtr<T> &x) const {
    auto f = run_direction(tape, x, fwd_, false);
    auto b = run_direction(tape, x, bwd_, true);
    return ops::concat_cols(tape, f.back(), b.back());
  }

  // Per-position outputs as an n x hidden matrix (row t pairs the forward
  // state at t with the backward state at t).
  TensorPtr<T> encode_steps(Tape<T> *tape, const TensorPtr<T> &x) const {
    auto f = run_direction(tape, x, fwd_, false);
    auto b = run_direction(tape, x, bwd_, true);
    const std::size_t n = f.size();
    std::vector<TensorPtr<T>> rows;
    rows.reserve(n);
    for (std::size_t t = 0; t < n; ++t)
      rows.push_back(ops::concat_cols(tape, f[t], b[n - 1 - t]));
    return ops::concat_rows(tape, rows);
  }

  // States in processing order; backwards=true consumes the sequence from the
  // end, so .back() is the state after the whole pass either way.
  std::vector<TensorPtr<T>> run_direction(Tape<T> *tape, const TensorPtr<T> &x,
                                          const Direction &dir, bool backwards) const {
    const std::size_t n = x->rows();
    if (n == 0) throw UsageError("bilstm_encode: empty sequence");
    auto h = zeros<T>(1, half_);
    auto c = zeros<T>(1, half_);
    std::vector<TensorPtr<T>> states;
    states.reserve(n);
    for (std::size_t step = 0; step < n; ++step) {
      const std::size_t t = backwards ? n - 1 - step : step;
      auto xt = ops::slice_rows(tape, x, t, 1);
      auto i = gate_act(tape, xt, h, dir.input, true);
      auto f = gate_act(tape, xt, h, dir.forget, true);
      auto o = gate_act(tape, xt, h, dir.output, true);
      auto cand = gate_act(tape, xt, h, dir.cell, false);
      c = ops::add(tape, ops::elementwise_mul(tape, f, c), ops::elementwise_mul(tape, i, cand));
      h = ops::elementwise_mul(tape, o, ops::tanh_act(tape, c));
      states.push_back(h);
    }
    return states;
  }

  const Direction &forward_params() const { return fwd_; }
  const Direction &backward_params() const { return bwd_; }
  std::size_t half_size() const { return half_; }

 private:
  Direction make_direction(ParamStore<T> &params, const std::string &prefix,
                           std::size_t input_dim, std::mt19937 &rng) const {
    auto make_gate = [&](const std::string &name, Init bias_init) {
      Gate g;
      g.w = params.add(prefix + "." + name + ".w", input_dim, half_, Init::Xavier, rng);
      g.u = params.add(prefix + "." + name + ".u", half_, half_, Init::Xavier, rng);
      g.b = params.add(prefix + "." + name + ".b", 1, half_, bias_init, rng);
      return g;
    };
    Direction d;
    d.input = make_gate("i", Init::Zero);
    d.forget = make_gate("f", Init::ForgetBias);
    d.output = make_gate("o", Init::Zero);
    d.cell = make_gate("c", Init::Zero);
    return d;
  }

  TensorPtr<T> gate_act(Tape<T> *tape, const TensorPtr<T> &xt, const TensorPtr<T> &h,
                        const Gate &g, bool sigmoid_gate) const {
    auto pre = ops::add(
        tape, ops::add(tape, ops::matmul(tape, xt, g.w), ops::matmul(tape, h, g.u)), g.b);
    return sigmoid_gate ? ops::sigmoid(tape, pre) : ops::tanh_act(tape, pre);
  }

  std::size_t half_ = 0;
  Direction fwd_, bwd_;
};

}  // namespace lexkit
