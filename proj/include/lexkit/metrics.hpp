#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "lexkit/errors.hpp"

namespace lexkit {

struct MetricsReport {
  double accuracy = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  std::vector<double> precision, recall, f1;          // per class
  std::vector<std::vector<std::int64_t>> confusion;   // gold x predicted
};

// Accuracy, macro-recall, macro-F1 and micro-F1 over a fixed label space of m
// classes. Macro averages run over all m classes; a class without gold or
// predicted instances contributes zero terms.
inline MetricsReport compute_metrics(const std::vector<int> &golds, const std::vector<int> &preds,
                                     std::size_t num_classes) {
  if (golds.size() != preds.size())
    throw UsageError("compute_metrics: gold/prediction lengths differ");
  if (golds.empty()) throw UsageError("compute_metrics: empty label arrays");
  MetricsReport report;
  report.confusion.assign(num_classes, std::vector<std::int64_t>(num_classes, 0));
  for (std::size_t i = 0; i < golds.size(); ++i) {
    if (golds[i] < 0 || static_cast<std::size_t>(golds[i]) >= num_classes ||
        preds[i] < 0 || static_cast<std::size_t>(preds[i]) >= num_classes)
      throw ValidationError("compute_metrics: label outside [0," + std::to_string(num_classes) +
                            ") at position " + std::to_string(i));
    ++report.confusion[static_cast<std::size_t>(golds[i])][static_cast<std::size_t>(preds[i])];
  }
  std::int64_t pooled_tp = 0, pooled_fp = 0, pooled_fn = 0, correct = 0;
  report.precision.assign(num_classes, 0.0);
  report.recall.assign(num_classes, 0.0);
  report.f1.assign(num_classes, 0.0);
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::int64_t tp = report.confusion[c][c], fp = 0, fn = 0;
    for (std::size_t o = 0; o < num_classes; ++o) {
      if (o == c) continue;
      fn += report.confusion[c][o];
      fp += report.confusion[o][c];
    }
    correct += tp;
    pooled_tp += tp;
    pooled_fp += fp;
    pooled_fn += fn;
    const double p = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double r = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    report.precision[c] = p;
    report.recall[c] = r;
    report.f1[c] = p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
    report.macro_recall += r;
    report.macro_f1 += report.f1[c];
  }
  report.macro_recall /= static_cast<double>(num_classes);
  report.macro_f1 /= static_cast<double>(num_classes);
  report.accuracy = static_cast<double>(correct) / static_cast<double>(golds.size());
  const double micro_p =
      pooled_tp + pooled_fp > 0
          ? static_cast<double>(pooled_tp) / static_cast<double>(pooled_tp + pooled_fp)
          : 0.0;
  const double micro_r =
      pooled_tp + pooled_fn > 0
          ? static_cast<double>(pooled_tp) / static_cast<double>(pooled_tp + pooled_fn)
          : 0.0;
  report.micro_f1 = micro_p + micro_r > 0 ? 2.0 * micro_p * micro_r / (micro_p + micro_r) : 0.0;
  return report;
}

}  // namespace lexkit
