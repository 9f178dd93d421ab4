#pragma once
#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "lexkit/ops.hpp"
#include "lexkit/tensor.hpp"

namespace lexkit {

enum class Init { Xavier, Zero, One, ForgetBias };

// Named registry of trainable tensors. Registration order is the canonical
// parameter order everywhere: rng consumption at init, Adam state, checkpoint
// payload layout, and gradient-check reports.
template <typename T>
class ParamStore {
 public:
  TensorPtr<T> add(const std::string &name, std::size_t rows, std::size_t cols, Init init,
                   std::mt19937 &rng) {
    std::vector<T> vals(rows * cols, T(0));
    switch (init) {
      case Init::Xavier: {
        const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (T &v : vals) v = static_cast<T>(dist(rng));
        break;
      }
      case Init::Zero:
        break;
      case Init::One:
        std::fill(vals.begin(), vals.end(), T(1));
        break;
      case Init::ForgetBias:
        std::fill(vals.begin(), vals.end(), T(1));
        break;
    }
    auto t = make_tensor<T>({rows, cols}, std::move(vals));
    t->requires_grad = true;
    t->ensure_grad();
    items_.emplace_back(name, t);
    return t;
  }

  const std::vector<std::pair<std::string, TensorPtr<T>>> &items() const { return items_; }

  TensorPtr<T> find(const std::string &name) const {
    for (const auto &[n, t] : items_)
      if (n == name) return t;
    return nullptr;
  }

  void zero_grads() {
    for (auto &[n, t] : items_) t->zero_grad();
  }

  std::size_t tensor_count() const { return items_.size(); }

  std::size_t scalar_count() const {
    std::size_t total = 0;
    for (const auto &[n, t] : items_) total += t->size();
    return total;
  }

 private:
  std::vector<std::pair<std::string, TensorPtr<T>>> items_;
};

template <typename T>
struct Linear {
  TensorPtr<T> weight;  // in x out
  TensorPtr<T> bias;    // 1 x out, absent when bias-free

  Linear() = default;
  Linear(ParamStore<T> &params, const std::string &name, std::size_t in, std::size_t out,
         std::mt19937 &rng, bool with_bias = true) {
    weight = params.add(name + ".w", in, out, Init::Xavier, rng);
    if (with_bias) bias = params.add(name + ".b", 1, out, Init::Zero, rng);
  }

  TensorPtr<T> forward(Tape<T> *tape, const TensorPtr<T> &x) const {
    auto y = ops::matmul(tape, x, weight);
    return bias ? ops::add(tape, y, bias) : y;
  }
};

template <typename T>
struct LayerNormParams {
  TensorPtr<T> gain;
  TensorPtr<T> bias;

  LayerNormParams() = default;
  LayerNormParams(ParamStore<T> &params, const std::string &name, std::size_t width,
                  std::mt19937 &rng) {
    gain = params.add(name + ".gain", 1, width, Init::One, rng);
    bias = params.add(name + ".bias", 1, width, Init::Zero, rng);
  }

  TensorPtr<T> forward(Tape<T> *tape, const TensorPtr<T> &x) const {
    return ops::layer_norm_rows(tape, x, gain, bias);
  }
};

}  // namespace lexkit
