#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "lexkit/tensor.hpp"

// Elementary differentiable operations. Every op validates shapes, computes
// its forward value eagerly (reductions accumulate in double), rejects
// non-finite outputs, and, when a recording tape is supplied and any input
// is on a gradient path, appends a backward closure to the tape.

namespace lexkit::ops {

template <typename T>
void check_finite(const TensorPtr<T> &t, const char *op) {
  for (const T &v : t->value)
    if (!std::isfinite(static_cast<double>(v)))
      throw NumericalError(std::string(op) + " produced a non-finite value");
}

template <typename T>
bool tracking(Tape<T> *tape, const TensorPtr<T> &a) {
  return tape != nullptr && a->requires_grad;
}
template <typename T>
bool tracking(Tape<T> *tape, const TensorPtr<T> &a, const TensorPtr<T> &b) {
  return tape != nullptr && (a->requires_grad || b->requires_grad);
}

template <typename T>
void mark_tracked(const TensorPtr<T> &out, std::initializer_list<TensorPtr<T>> inputs) {
  out->requires_grad = true;
  out->ensure_grad();
  for (const auto &in : inputs)
    if (in->requires_grad) in->ensure_grad();
}

template <typename T>
TensorPtr<T> matmul(Tape<T> *tape, const TensorPtr<T> &a, const TensorPtr<T> &b) {
  if (a->shape.size() != 2 || b->shape.size() != 2 || a->shape[1] != b->shape[0])
    throw ShapeError("matmul: incompatible shapes " + shape_str(a->shape) + " and " +
                     shape_str(b->shape));
  const std::size_t m = a->shape[0], k = a->shape[1], n = b->shape[1];
  auto out = zeros<T>(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p)
        acc += static_cast<double>(a->at(i, p)) * static_cast<double>(b->at(p, j));
      out->at(i, j) = static_cast<T>(acc);
    }
  check_finite(out, "matmul");
  if (tracking(tape, a, b)) {
    mark_tracked(out, {a, b});
    const bool need_a = a->requires_grad, need_b = b->requires_grad;
    tape->record("matmul", [a, b, out, m, k, n, need_a, need_b] {
      if (need_a)
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j)
              acc += static_cast<double>(out->grad_at(i, j)) * static_cast<double>(b->at(p, j));
            a->grad_at(i, p) += static_cast<T>(acc);
          }
      if (need_b)
        for (std::size_t p = 0; p < k; ++p)
          for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < m; ++i)
              acc += static_cast<double>(a->at(i, p)) * static_cast<double>(out->grad_at(i, j));
            b->grad_at(p, j) += static_cast<T>(acc);
          }
    });
  }
  return out;
}

// add: identical shapes, or b a single row broadcast over the rows of a.
template <typename T>
TensorPtr<T> add(Tape<T> *tape, const TensorPtr<T> &a, const TensorPtr<T> &b) {
  const bool same = a->shape == b->shape;
  const bool bcast = !same && b->rows() == 1 && a->cols() == b->cols();
  if (!same && !bcast)
    throw ShapeError("add: incompatible shapes " + shape_str(a->shape) + " and " +
                     shape_str(b->shape));
  auto out = make_tensor<T>(a->shape, a->value);
  const std::size_t rows = a->rows(), cols = a->cols();
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      out->at(i, j) += same ? b->at(i, j) : b->value[j];
  check_finite(out, "add");
  if (tracking(tape, a, b)) {
    mark_tracked(out, {a, b});
    const bool need_a = a->requires_grad, need_b = b->requires_grad;
    tape->record("add", [a, b, out, rows, cols, same, need_a, need_b] {
      if (need_a)
        for (std::size_t i = 0; i < a->size(); ++i) a->grad[i] += out->grad[i];
      if (need_b) {
        if (same)
          for (std::size_t i = 0; i < b->size(); ++i) b->grad[i] += out->grad[i];
        else
          for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) b->grad[j] += out->grad_at(i, j);
      }
    });
  }
  return out;
}

template <typename T>
TensorPtr<T> scale(Tape<T> *tape, const TensorPtr<T> &a, T factor) {
  auto out = make_tensor<T>(a->shape, a->value);
  for (T &v : out->value) v *= factor;
  check_finite(out, "scale");
  if (tracking(tape, a)) {
    mark_tracked(out, {a});
    tape->record("scale", [a, out, factor] {
      for (std::size_t i = 0; i < a->size(); ++i) a->grad[i] += factor * out->grad[i];
    });
  }
  return out;
}

namespace detail {
// Shared plumbing for unary elementwise ops; dfn receives the output value.
template <typename T, typename Fn, typename Dfn>
TensorPtr<T> unary_ew(Tape<T> *tape, const TensorPtr<T> &a, const char *name, Fn fn, Dfn dfn) {
  auto out = make_tensor<T>(a->shape, a->value);
  for (T &v : out->value) v = fn(v);
  check_finite(out, name);
  if (tracking(tape, a)) {
    mark_tracked(out, {a});
    tape->record(name, [a, out, dfn] {
      for (std::size_t i = 0; i < a->size(); ++i)
        a->grad[i] += dfn(a->value[i], out->value[i]) * out->grad[i];
    });
  }
  return out;
}
}  // namespace detail

template <typename T>
TensorPtr<T> relu(Tape<T> *tape, const TensorPtr<T> &a) {
  return detail::unary_ew(
      tape, a, "relu", [](T v) { return v > T(0) ? v : T(0); },
      [](T x, T) { return x > T(0) ? T(1) : T(0); });
}

template <typename T>
TensorPtr<T> sigmoid(Tape<T> *tape, const TensorPtr<T> &a) {
  return detail::unary_ew(
      tape, a, "sigmoid", [](T v) { return T(1) / (T(1) + std::exp(-v)); },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
TensorPtr<T> tanh_act(Tape<T> *tape, const TensorPtr<T> &a) {
  return detail::unary_ew(
      tape, a, "tanh", [](T v) { return std::tanh(v); },
      [](T, T y) { return T(1) - y * y; });
}

template <typename T>
TensorPtr<T> elementwise_mul(Tape<T> *tape, const TensorPtr<T> &a, const TensorPtr<T> &b) {
  if (a->shape != b->shape)
    throw ShapeError("elementwise_mul: shapes differ, " + shape_str(a->shape) + " vs " +
                     shape_str(b->shape));
  auto out = make_tensor<T>(a->shape, a->value);
  for (std::size_t i = 0; i < out->size(); ++i) out->value[i] *= b->value[i];
  check_finite(out, "elementwise_mul");
  if (tracking(tape, a, b)) {
    mark_tracked(out, {a, b});
    const bool need_a = a->requires_grad, need_b = b->requires_grad;
    tape->record("elementwise_mul", [a, b, out, need_a, need_b] {
      for (std::size_t i = 0; i < out->size(); ++i) {
        if (need_a) a->grad[i] += b->value[i] * out->grad[i];
        if (need_b) b->grad[i] += a->value[i] * out->grad[i];
      }
    });
  }
  return out;
}

template <typename T>
TensorPtr<T> transpose(Tape<T> *tape, const TensorPtr<T> &a) {
  if (a->shape.size() != 2) throw ShapeError("transpose: expects a matrix, got " + shape_str(a->shape));
  const std::size_t m = a->shape[0], n = a->shape[1];
  auto out = zeros<T>(n, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out->at(j, i) = a->at(i, j);
  if (tracking(tape, a)) {
    mark_tracked(out, {a});
    tape->record("transpose", [a, out, m, n] {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) a->grad_at(i, j) += out->grad_at(j, i);
    });
  }
  return out;
}

template <typename T>
TensorPtr<T> softmax_rows(Tape<T> *tape, const TensorPtr<T> &a) {
  const std::size_t rows = a->rows(), cols = a->cols();
  if (cols == 0) throw ShapeError("softmax_rows: empty rows");
  auto out = make_tensor<T>(a->shape, a->value);
  for (std::size_t i = 0; i < rows; ++i) {
    T mx = a->at(i, 0);
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, a->at(i, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      const double e = std::exp(static_cast<double>(a->at(i, j) - mx));
      out->at(i, j) = static_cast<T>(e);
      sum += e;
    }
    for (std::size_t j = 0; j < cols; ++j)
      out->at(i, j) = static_cast<T>(static_cast<double>(out->at(i, j)) / sum);
  }
  check_finite(out, "softmax_rows");
  if (tracking(tape, a)) {
    mark_tracked(out, {a});
    tape->record("softmax_rows", [a, out, rows, cols] {
      for (std::size_t i = 0; i < rows; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < cols; ++j)
          dot += static_cast<double>(out->grad_at(i, j)) * static_cast<double>(out->at(i, j));
        for (std::size_t j = 0; j < cols; ++j)
          a->grad_at(i, j) += static_cast<T>(static_cast<double>(out->at(i, j)) *
                                             (static_cast<double>(out->grad_at(i, j)) - dot));
      }
    });
  }
  return out;
}

// Row-wise layer normalization with learned gain/bias (pass ones/zeros for the
// pre-affine transform). Uses the biased variance.
template <typename T>
TensorPtr<T> layer_norm_rows(Tape<T> *tape, const TensorPtr<T> &a, const TensorPtr<T> &gain,
                             const TensorPtr<T> &bias, T eps = T(1e-5)) {
  const std::size_t rows = a->rows(), cols = a->cols();
  if (gain->size() != cols || bias->size() != cols)
    throw ShapeError("layer_norm_rows: gain/bias width must equal row width " +
                     std::to_string(cols));
  auto out = make_tensor<T>(a->shape, a->value);
  std::vector<T> xhat(rows * cols);
  std::vector<T> inv_sigma(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < cols; ++j) mean += static_cast<double>(a->at(i, j));
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      const double d = static_cast<double>(a->at(i, j)) - mean;
      var += d * d;
    }
    var /= static_cast<double>(cols);
    const double inv = 1.0 / std::sqrt(var + static_cast<double>(eps));
    inv_sigma[i] = static_cast<T>(inv);
    for (std::size_t j = 0; j < cols; ++j) {
      const T xh = static_cast<T>((static_cast<double>(a->at(i, j)) - mean) * inv);
      xhat[i * cols + j] = xh;
      out->at(i, j) = gain->value[j] * xh + bias->value[j];
    }
  }
  check_finite(out, "layer_norm_rows");
  if (tape != nullptr && (a->requires_grad || gain->requires_grad || bias->requires_grad)) {
    mark_tracked(out, {a, gain, bias});
    const bool need_a = a->requires_grad;
    const bool need_g = gain->requires_grad, need_b = bias->requires_grad;
    tape->record("layer_norm_rows",
                 [a, gain, bias, out, rows, cols, xhat = std::move(xhat),
                  inv_sigma = std::move(inv_sigma), need_a, need_g, need_b] {
                   for (std::size_t i = 0; i < rows; ++i) {
                     double m1 = 0.0, m2 = 0.0;
                     for (std::size_t j = 0; j < cols; ++j) {
                       const double dy = static_cast<double>(out->grad_at(i, j));
                       const double xh = static_cast<double>(xhat[i * cols + j]);
                       if (need_g) gain->grad[j] += static_cast<T>(dy * xh);
                       if (need_b) bias->grad[j] += static_cast<T>(dy);
                       const double dxh = dy * static_cast<double>(gain->value[j]);
                       m1 += dxh;
                       m2 += dxh * xh;
                     }
                     if (!need_a) continue;
                     m1 /= static_cast<double>(cols);
                     m2 /= static_cast<double>(cols);
                     for (std::size_t j = 0; j < cols; ++j) {
                       const double dy = static_cast<double>(out->grad_at(i, j));
                       const double xh = static_cast<double>(xhat[i * cols + j]);
                       const double dxh = dy * static_cast<double>(gain->value[j]);
                       a->grad_at(i, j) += static_cast<T>(static_cast<double>(inv_sigma[i]) *
                                                          (dxh - m1 - xh * m2));
                     }
                   }
                 });
  }
  return out;
}

template <typename T>
TensorPtr<T> concat_rows(Tape<T> *tape, const std::vector<TensorPtr<T>> &parts) {
  if (parts.empty()) throw UsageError("concat_rows: no inputs");
  const std::size_t cols = parts[0]->cols();
  std::size_t rows = 0;
  for (const auto &p : parts) {
    if (p->cols() != cols)
      throw ShapeError("concat_rows: column mismatch, " + shape_str(p->shape));
    rows += p->rows();
  }
  auto out = zeros<T>(rows, cols);
  std::size_t r0 = 0;
  for (const auto &p : parts) {
    std::copy(p->value.begin(), p->value.end(), out->value.begin() + r0 * cols);
    r0 += p->rows();
  }
  bool any = false;
  for (const auto &p : parts) any = any || p->requires_grad;
  if (tape != nullptr && any) {
    out->requires_grad = true;
    out->ensure_grad();
    for (const auto &p : parts)
      if (p->requires_grad) p->ensure_grad();
    tape->record("concat_rows", [parts, out, cols] {
      std::size_t r0 = 0;
      for (const auto &p : parts) {
        if (p->requires_grad)
          for (std::size_t i = 0; i < p->size(); ++i) p->grad[i] += out->grad[r0 * cols + i];
        r0 += p->rows();
      }
    });
  }
  return out;
}

template <typename T>
TensorPtr<T> concat_rows(Tape<T> *tape, const TensorPtr<T> &a, const TensorPtr<T> &b) {
  return concat_rows(tape, std::vector<TensorPtr<T>>{a, b});
}

template <typename T>
TensorPtr<T> concat_cols(Tape<T> *tape, const TensorPtr<T> &a, const TensorPtr<T> &b) {
  if (a->rows() != b->rows())
    throw ShapeError("concat_cols: row mismatch, " + shape_str(a->shape) + " vs " +
                     shape_str(b->shape));
  const std::size_t rows = a->rows(), ca = a->cols(), cb = b->cols();
  auto out = zeros<T>(rows, ca + cb);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < ca; ++j) out->at(i, j) = a->at(i, j);
    for (std::size_t j = 0; j < cb; ++j) out->at(i, ca + j) = b->at(i, j);
  }
  if (tracking(tape, a, b)) {
    mark_tracked(out, {a, b});
    const bool need_a = a->requires_grad, need_b = b->requires_grad;
    tape->record("concat_cols", [a, b, out, rows, ca, cb, need_a, need_b] {
      for (std::size_t i = 0; i < rows; ++i) {
        if (need_a)
          for (std::size_t j = 0; j < ca; ++j) a->grad_at(i, j) += out->grad_at(i, j);
        if (need_b)
          for (std::size_t j = 0; j < cb; ++j) b->grad_at(i, j) += out->grad_at(i, ca + j);
      }
    });
  }
  return out;
}

// Componentwise max over rows; ties resolve to the first row holding the max.
template <typename T>
TensorPtr<T> max_pool_columns(Tape<T> *tape, const TensorPtr<T> &a) {
  const std::size_t rows = a->rows(), cols = a->cols();
  if (rows == 0) throw UsageError("max_pool_columns: empty input");
  auto out = zeros<T>(1, cols);
  std::vector<std::size_t> argmax(cols, 0);
  for (std::size_t j = 0; j < cols; ++j) {
    T best = a->at(0, j);
    for (std::size_t i = 1; i < rows; ++i)
      if (a->at(i, j) > best) {
        best = a->at(i, j);
        argmax[j] = i;
      }
    out->value[j] = best;
  }
  if (tracking(tape, a)) {
    mark_tracked(out, {a});
    tape->record("max_pool_columns", [a, out, cols, argmax = std::move(argmax)] {
      for (std::size_t j = 0; j < cols; ++j) a->grad_at(argmax[j], j) += out->grad[j];
    });
  }
  return out;
}

// Mean over rows; with a row mask, the mean runs over mask-true rows only.
template <typename T>
TensorPtr<T> mean_pool_rows(Tape<T> *tape, const TensorPtr<T> &a,
                            const std::vector<std::uint8_t> *row_mask = nullptr) {
  const std::size_t rows = a->rows(), cols = a->cols();
  if (row_mask && row_mask->size() != rows)
    throw ShapeError("mean_pool_rows: mask length must equal row count");
  std::size_t kept = 0;
  for (std::size_t i = 0; i < rows; ++i)
    if (!row_mask || (*row_mask)[i]) ++kept;
  if (kept == 0) throw UsageError("mean_pool_rows: no rows selected");
  auto out = zeros<T>(1, cols);
  for (std::size_t j = 0; j < cols; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < rows; ++i)
      if (!row_mask || (*row_mask)[i]) acc += static_cast<double>(a->at(i, j));
    out->value[j] = static_cast<T>(acc / static_cast<double>(kept));
  }
  check_finite(out, "mean_pool_rows");
  if (tracking(tape, a)) {
    mark_tracked(out, {a});
    std::vector<std::uint8_t> mask;
    if (row_mask) mask = *row_mask;
    tape->record("mean_pool_rows", [a, out, rows, cols, kept, mask = std::move(mask)] {
      const T inv = T(1) / static_cast<T>(kept);
      for (std::size_t i = 0; i < rows; ++i) {
        if (!mask.empty() && !mask[i]) continue;
        for (std::size_t j = 0; j < cols; ++j) a->grad_at(i, j) += inv * out->grad[j];
      }
    });
  }
  return out;
}

template <typename T>
TensorPtr<T> embedding_lookup(Tape<T> *tape, const TensorPtr<T> &table,
                              const std::vector<int> &ids) {
  if (table->shape.size() != 2) throw ShapeError("embedding_lookup: table must be 2-d");
  if (ids.empty()) throw UsageError("embedding_lookup: empty id sequence");
  const std::size_t vocab = table->shape[0], dim = table->shape[1];
  for (int id : ids)
    if (id < 0 || static_cast<std::size_t>(id) >= vocab)
      throw UsageError("embedding_lookup: id " + std::to_string(id) + " outside table of " +
                       std::to_string(vocab));
  auto out = zeros<T>(ids.size(), dim);
  for (std::size_t r = 0; r < ids.size(); ++r)
    std::copy(table->value.begin() + ids[r] * dim, table->value.begin() + (ids[r] + 1) * dim,
              out->value.begin() + r * dim);
  if (tracking(tape, table)) {
    mark_tracked(out, {table});
    tape->record("embedding_lookup", [table, out, ids, dim] {
      for (std::size_t r = 0; r < ids.size(); ++r)
        for (std::size_t j = 0; j < dim; ++j)
          table->grad[ids[r] * dim + j] += out->grad[r * dim + j];
    });
  }
  return out;
}

// Inverted dropout: kept activations are rescaled by 1/keep at train time, so
// evaluation is a plain identity.
template <typename T>
TensorPtr<T> dropout(Tape<T> *tape, const TensorPtr<T> &a, double rate, bool training,
                     std::mt19937 &rng) {
  if (rate < 0.0 || rate >= 1.0)
    throw ConfigError("dropout: rate must lie in [0,1), got " + std::to_string(rate));
  if (!training || rate == 0.0) return a;
  const double keep = 1.0 - rate;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::uint8_t> mask(a->size());
  auto out = make_tensor<T>(a->shape, a->value);
  for (std::size_t i = 0; i < a->size(); ++i) {
    mask[i] = unit(rng) < keep ? 1 : 0;
    out->value[i] = mask[i] ? static_cast<T>(static_cast<double>(a->value[i]) / keep) : T(0);
  }
  check_finite(out, "dropout");
  if (tracking(tape, a)) {
    mark_tracked(out, {a});
    tape->record("dropout", [a, out, keep, mask = std::move(mask)] {
      for (std::size_t i = 0; i < a->size(); ++i)
        if (mask[i]) a->grad[i] += static_cast<T>(static_cast<double>(out->grad[i]) / keep);
    });
  }
  return out;
}

// Replaces mask-true positions with fill_value; gradients flow only through
// the untouched positions.
template <typename T>
TensorPtr<T> masked_fill(Tape<T> *tape, const TensorPtr<T> &a,
                         const std::vector<std::uint8_t> &mask, T fill_value) {
  if (mask.size() != a->size())
    throw ShapeError("masked_fill: mask covers " + std::to_string(mask.size()) +
                     " elements, tensor has " + std::to_string(a->size()));
  auto out = make_tensor<T>(a->shape, a->value);
  for (std::size_t i = 0; i < a->size(); ++i)
    if (mask[i]) out->value[i] = fill_value;
  check_finite(out, "masked_fill");
  if (tracking(tape, a)) {
    mark_tracked(out, {a});
    tape->record("masked_fill", [a, out, mask] {
      for (std::size_t i = 0; i < a->size(); ++i)
        if (!mask[i]) a->grad[i] += out->grad[i];
    });
  }
  return out;
}

template <typename T>
TensorPtr<T> slice_rows(Tape<T> *tape, const TensorPtr<T> &a, std::size_t start,
                        std::size_t count) {
  const std::size_t rows = a->rows(), cols = a->cols();
  if (start + count > rows || count == 0)
    throw ShapeError("slice_rows: range [" + std::to_string(start) + "," +
                     std::to_string(start + count) + ") outside " + std::to_string(rows) +
                     " rows");
  auto out = make_tensor<T>({count, cols},
                            std::vector<T>(a->value.begin() + start * cols,
                                           a->value.begin() + (start + count) * cols));
  if (tracking(tape, a)) {
    mark_tracked(out, {a});
    tape->record("slice_rows", [a, out, start, cols] {
      for (std::size_t i = 0; i < out->size(); ++i) a->grad[start * cols + i] += out->grad[i];
    });
  }
  return out;
}

template <typename T>
TensorPtr<T> sum_all(Tape<T> *tape, const TensorPtr<T> &a) {
  double acc = 0.0;
  for (const T &v : a->value) acc += static_cast<double>(v);
  auto out = make_tensor<T>({1, 1}, {static_cast<T>(acc)});
  check_finite(out, "sum_all");
  if (tracking(tape, a)) {
    mark_tracked(out, {a});
    tape->record("sum_all", [a, out] {
      for (std::size_t i = 0; i < a->size(); ++i) a->grad[i] += out->grad[0];
    });
  }
  return out;
}

// -log softmax(logits)[gold], evaluated through log-sum-exp on the logits so
// no probability is ever clamped or logged directly.
template <typename T>
TensorPtr<T> cross_entropy_logits(Tape<T> *tape, const TensorPtr<T> &logits, std::size_t gold) {
  const std::size_t m = logits->size();
  if (logits->rows() != 1) throw ShapeError("cross_entropy_logits: logits must be a single row");
  if (gold >= m)
    throw UsageError("cross_entropy_logits: gold index " + std::to_string(gold) +
                     " outside [0," + std::to_string(m) + ")");
  T mx = logits->value[0];
  for (const T &v : logits->value) mx = std::max(mx, v);
  double sum = 0.0;
  std::vector<T> soft(m);
  for (std::size_t j = 0; j < m; ++j) sum += std::exp(static_cast<double>(logits->value[j] - mx));
  for (std::size_t j = 0; j < m; ++j)
    soft[j] = static_cast<T>(std::exp(static_cast<double>(logits->value[j] - mx)) / sum);
  const double loss =
      static_cast<double>(mx) + std::log(sum) - static_cast<double>(logits->value[gold]);
  auto out = make_tensor<T>({1, 1}, {static_cast<T>(loss)});
  check_finite(out, "cross_entropy_logits");
  if (tracking(tape, logits)) {
    mark_tracked(out, {logits});
    tape->record("cross_entropy_logits", [logits, out, gold, soft = std::move(soft)] {
      for (std::size_t j = 0; j < logits->size(); ++j)
        logits->grad[j] += (soft[j] - (j == gold ? T(1) : T(0))) * out->grad[0];
    });
  }
  return out;
}

}  // namespace lexkit::ops
