#pragma once

#include <vector>

namespace polyfuse {

/// Class distribution for one utterance: (p_negative, p_positive).
struct ProbabilityPair {
  double negative = 0.5;
  double positive = 0.5;

  int label() const { return positive > negative ? 1 : 0; }
  bool operator==(const ProbabilityPair&) const = default;
};

inline std::vector<int> labels_of(const std::vector<ProbabilityPair>& probs) {
  std::vector<int> out;
  out.reserve(probs.size());
  for (const auto& p : probs) out.push_back(p.label());
  return out;
}

}  // namespace polyfuse
