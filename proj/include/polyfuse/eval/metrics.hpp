#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace polyfuse::eval {

/// Class indices used throughout: 0 = negative, 1 = positive.
inline constexpr int kNegative = 0;
inline constexpr int kPositive = 1;

struct ConfusionMatrix {
  std::array<std::array<std::int64_t, 2>, 2> counts{};  // [true][predicted]

  void add(int truth, int predicted) { ++counts[truth][predicted]; }
  std::int64_t total() const { return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1]; }
  std::int64_t trace() const { return counts[0][0] + counts[1][1]; }
  bool operator==(const ConfusionMatrix&) const = default;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
  bool operator==(const ClassMetrics&) const = default;
};

struct Metrics {
  ClassMetrics positive;
  ClassMetrics negative;
  ClassMetrics macro;  // unweighted mean over the two classes
  ClassMetrics micro;  // pooled counts; equals accuracy for single-label data
  double accuracy = 0.0;  // percent
  ConfusionMatrix confusion;
  bool operator==(const Metrics&) const = default;
};

/// 2PR / (P + R), or 0 when P + R = 0.
double f_measure(double precision, double recall);

/// Half-up rounding with a small guard against binary representation error
/// (0.865 stored as 0.86499999... still rounds to 0.87).
double round_half_up(double value, int decimals);

Metrics compute_metrics(std::span<const int> predictions, std::span<const int> truth);
Metrics metrics_from_confusion(const ConfusionMatrix& confusion);

}  // namespace polyfuse::eval
