#include "fallcloud/metrics.hpp"

#include "fallcloud/error.hpp"

namespace fallcloud::eval {

void ConfusionCounts::record(Label truth, Label predicted) noexcept {
  if (truth == Label::Fall) {
    (predicted == Label::Fall ? tp : fn) += 1;
  } else {
    (predicted == Label::Fall ? fp : tn) += 1;
  }
}

ConfusionCounts confusion(std::span<const Label> labels, std::span<const Label> predictions) {
  if (labels.size() != predictions.size()) {
    throw Error(Errc::Contract, "labels and predictions differ in length");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) c.record(labels[i], predictions[i]);
  return c;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den, bool& degenerate) noexcept {
  if (den == 0) {
    degenerate = true;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

Metrics metrics(const ConfusionCounts& c) noexcept {
  Metrics m;
  m.sensitivity = ratio(c.tp, c.tp + c.fn, m.sensitivity_degenerate);
  m.specificity = ratio(c.tn, c.tn + c.fp, m.specificity_degenerate);
  m.precision = ratio(c.tp, c.tp + c.fp, m.precision_degenerate);
  const double sum = m.precision + m.sensitivity;
  if (sum == 0.0) {
    m.f1_degenerate = true;
    m.f1 = 0.0;
  } else {
    m.f1 = 2.0 * m.precision * m.sensitivity / sum;
  }
  return m;
}

}  // namespace fallcloud::eval
