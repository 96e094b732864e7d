#include "polyfuse/eval/metrics.hpp"

#include <cmath>

#include "polyfuse/core/error.hpp"

namespace polyfuse::eval {

double f_measure(double precision, double recall) {
  const double denom = precision + recall;
  return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

double round_half_up(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::floor(value * scale + 0.5 + 1e-9) / scale;
}

namespace {

ClassMetrics class_metrics(const ConfusionMatrix& c, int cls) {
  const int other = 1 - cls;
  const double tp = static_cast<double>(c.counts[cls][cls]);
  const double fp = static_cast<double>(c.counts[other][cls]);
  const double fn = static_cast<double>(c.counts[cls][other]);
  ClassMetrics m;
  m.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  m.f_measure = f_measure(m.precision, m.recall);
  return m;
}

}  // namespace

Metrics metrics_from_confusion(const ConfusionMatrix& confusion) {
  if (confusion.total() == 0) throw Error(ErrorCode::EmptyInput, "no evaluated utterances");
  Metrics m;
  m.confusion = confusion;
  m.positive = class_metrics(confusion, kPositive);
  m.negative = class_metrics(confusion, kNegative);
  m.macro = {(m.positive.precision + m.negative.precision) / 2.0, (m.positive.recall + m.negative.recall) / 2.0,
             (m.positive.f_measure + m.negative.f_measure) / 2.0};
  const double acc = static_cast<double>(confusion.trace()) / static_cast<double>(confusion.total());
  m.micro = {acc, acc, acc};
  m.accuracy = 100.0 * acc;
  return m;
}

Metrics compute_metrics(std::span<const int> predictions, std::span<const int> truth) {
  if (predictions.size() != truth.size())
    throw Error(ErrorCode::LengthMismatch, std::to_string(predictions.size()) + " predictions for " +
                                               std::to_string(truth.size()) + " labels");
  if (truth.empty()) throw Error(ErrorCode::EmptyInput, "no predictions to score");
  ConfusionMatrix c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if ((truth[i] != 0 && truth[i] != 1) || (predictions[i] != 0 && predictions[i] != 1))
      throw Error(ErrorCode::ValidationError, "labels must be 0 (negative) or 1 (positive)");
    c.add(truth[i], predictions[i]);
  }
  return metrics_from_confusion(c);
}

}  // namespace polyfuse::eval
