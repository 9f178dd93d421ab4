#pragma once
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "lexkit/ops.hpp"
#include "lexkit/tensor.hpp"

namespace lexkit {

template <typename T>
struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
};

template <typename T>
struct GradCheckReport {
  std::vector<GradCheckEntry<T>> per_param;
  double max_rel_err = 0.0;
  bool passed(double tolerance) const { return max_rel_err < tolerance; }
};

// Compares analytic gradients against central finite differences
// (f(p+h) - f(p-h)) / 2h for every element of every listed parameter. The
// function must rebuild its graph on each call and be deterministic (dropout
// disabled); determinism is verified by evaluating twice up front.
template <typename T>
GradCheckReport<T> grad_check(const std::function<TensorPtr<T>(Tape<T> *)> &f,
                              const std::vector<std::pair<std::string, TensorPtr<T>>> &params,
                              T step = T(1e-4), double denom_floor = 1e-6) {
  const T v0 = f(nullptr)->value[0];
  const T v1 = f(nullptr)->value[0];
  if (v0 != v1)
    throw UsageError("grad_check: function is non-deterministic (two evaluations differ)");

  for (auto &[name, p] : params) {
    p->ensure_grad();
    p->zero_grad();
  }
  Tape<T> tape;
  auto loss = f(&tape);
  tape.backward(loss);

  GradCheckReport<T> report;
  for (auto &[name, p] : params) {
    GradCheckEntry<T> entry{name, 0.0};
    for (std::size_t i = 0; i < p->size(); ++i) {
      const T saved = p->value[i];
      p->value[i] = saved + step;
      const double up = static_cast<double>(f(nullptr)->value[0]);
      p->value[i] = saved - step;
      const double dn = static_cast<double>(f(nullptr)->value[0]);
      p->value[i] = saved;
      const double fd = (up - dn) / (2.0 * static_cast<double>(step));
      const double an = static_cast<double>(p->grad[i]);
      const double denom = std::max({std::fabs(an), std::fabs(fd), denom_floor});
      entry.max_rel_err = std::max(entry.max_rel_err, std::fabs(an - fd) / denom);
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.per_param.push_back(std::move(entry));
  }
  return report;
}

}  // namespace lexkit
