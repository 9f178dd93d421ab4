#pragma once
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "lexkit/errors.hpp"

namespace lexkit {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape &s) {
  std::size_t n = 1;
  for (std::size_t e : s) n *= e;
  return n;
}

inline std::string shape_str(const Shape &s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

// Dense row-major tensor node. Values are immutable after the op that
// produced them; only the grad buffer is written during backward.
template <typename T>
struct TensorNode {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // allocated on demand, same extent as value
  bool requires_grad = false;

  std::size_t size() const { return value.size(); }
  std::size_t rows() const { return shape.size() == 2 ? shape[0] : 1; }
  std::size_t cols() const { return shape.empty() ? 0 : shape.back(); }

  T &at(std::size_t r, std::size_t c) { return value[r * cols() + c]; }
  const T &at(std::size_t r, std::size_t c) const { return value[r * cols() + c]; }

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
  }
  void zero_grad() {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), T(0));
  }
  T &grad_at(std::size_t r, std::size_t c) { return grad[r * cols() + c]; }
};

template <typename T>
using TensorPtr = std::shared_ptr<TensorNode<T>>;

template <typename T>
TensorPtr<T> make_tensor(Shape shape, std::vector<T> values) {
  if (shape.empty() || shape_size(shape) != values.size())
    throw ShapeError("make_tensor: shape " + shape_str(shape) + " does not cover " +
                     std::to_string(values.size()) + " values");
  for (std::size_t e : shape)
    if (e == 0) throw ShapeError("make_tensor: zero extent in shape " + shape_str(shape));
  auto t = std::make_shared<TensorNode<T>>();
  t->shape = std::move(shape);
  t->value = std::move(values);
  return t;
}

template <typename T>
TensorPtr<T> make_matrix(std::size_t rows, std::size_t cols, std::vector<T> values) {
  return make_tensor<T>({rows, cols}, std::move(values));
}

template <typename T>
TensorPtr<T> make_row(std::vector<T> values) {
  const std::size_t n = values.size();
  return make_tensor<T>({1, n}, std::move(values));
}

template <typename T>
TensorPtr<T> zeros(std::size_t rows, std::size_t cols) {
  return make_tensor<T>({rows, cols}, std::vector<T>(rows * cols, T(0)));
}

template <typename T>
TensorPtr<T> full(std::size_t rows, std::size_t cols, T v) {
  return make_tensor<T>({rows, cols}, std::vector<T>(rows * cols, v));
}

// Execution tape for reverse-mode differentiation. Ops append themselves in
// forward order; backward replays the closures in exact reverse order, and
// each closure accumulates (+=) into its inputs' grad buffers so a tensor
// consumed by several ops sums the per-consumer contributions.
template <typename T>
class Tape {
 public:
  void record(const char *op, std::function<void()> backprop) {
    steps_.push_back(Step{op, std::move(backprop)});
  }

  bool empty() const { return steps_.empty(); }
  std::size_t size() const { return steps_.size(); }
  void clear() { steps_.clear(); }

  void backward(const TensorPtr<T> &loss) {
    if (!loss || loss->size() != 1)
      throw UsageError("backward: loss must be a scalar tensor");
    if (steps_.empty())
      throw UsageError("backward: no operations were recorded on this tape");
    if (!loss->requires_grad)
      throw UsageError("backward: loss is not connected to any recorded operation");
    loss->ensure_grad();
    loss->grad[0] = T(1);
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) it->backprop();
  }

 private:
  struct Step {
    const char *op;
    std::function<void()> backprop;
  };
  std::vector<Step> steps_;
};

}  // namespace lexkit
