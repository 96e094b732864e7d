#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "polyfuse/core/prediction.hpp"

namespace polyfuse::text {

enum class BowKind { linear_margin, logistic };

std::string_view to_string(BowKind k) noexcept;
BowKind parse_bow_kind(std::string_view s);

struct BowConfig {
  int epochs = 50;
  double regularization = 1e-4;  // L2 strength
  double learning_rate = 0.1;    // logistic only; the margin model uses the 1/(λt) schedule
};

/// Bag-of-words linear classifier over token counts from the training
/// vocabulary. linear_margin minimizes the regularized hinge loss with
/// Pegasos-style steps; logistic minimizes regularized log-loss by SGD.
class BowModel {
 public:
  static BowModel train(std::span<const std::vector<std::string>> documents, std::span<const int> labels, BowKind kind,
                        std::uint64_t seed, const BowConfig& config = {});

  double decision(const std::vector<std::string>& tokens) const;
  ProbabilityPair predict(const std::vector<std::string>& tokens) const;

  BowKind kind() const { return kind_; }
  std::size_t vocabulary_size() const { return vocabulary_.size(); }

  nlohmann::json to_json() const;
  static BowModel from_json(const nlohmann::json& j);

 private:
  BowKind kind_ = BowKind::logistic;
  std::unordered_map<std::string, std::size_t> vocabulary_;
  std::vector<double> weights_;
  double bias_ = 0.0;
};

}  // namespace polyfuse::text
