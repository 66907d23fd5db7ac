#pragma once

#include <cstdint>
#include <span>

#include "fallcloud/signal.hpp"

namespace fallcloud::eval {

/// FALL is the positive class.
struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const noexcept { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  void record(Label truth, Label predicted) noexcept;
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

ConfusionCounts confusion(std::span<const Label> labels, std::span<const Label> predictions);

/// A ratio whose denominator is zero is reported as 0 with its flag set.
struct Metrics {
  double sensitivity = 0.0;
  double specificity = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  bool sensitivity_degenerate = false;
  bool specificity_degenerate = false;
  bool precision_degenerate = false;
  bool f1_degenerate = false;

  bool degenerate() const noexcept {
    return sensitivity_degenerate || specificity_degenerate || precision_degenerate || f1_degenerate;
  }
};

/// sensitivity = TP/(TP+FN), specificity = TN/(TN+FP), precision = TP/(TP+FP),
/// f1 = 2 * precision * sensitivity / (precision + sensitivity).
Metrics metrics(const ConfusionCounts& c) noexcept;

}  // namespace fallcloud::eval
