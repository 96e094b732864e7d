#include "polyfuse/text/bow.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "polyfuse/core/error.hpp"
#include "polyfuse/core/rng.hpp"
#include "polyfuse/nn/trainer.hpp"

namespace polyfuse::text {

std::string_view to_string(BowKind k) noexcept { return k == BowKind::linear_margin ? "linear_margin" : "logistic"; }

BowKind parse_bow_kind(std::string_view s) {
  if (s == "linear_margin" || s == "svm") return BowKind::linear_margin;
  if (s == "logistic") return BowKind::logistic;
  throw Error(ErrorCode::ConfigError, "unknown bag-of-words model '" + std::string(s) + "'");
}

namespace {

using Sparse = std::vector<std::pair<std::size_t, double>>;

Sparse count_vector(const std::vector<std::string>& tokens,
                    const std::unordered_map<std::string, std::size_t>& vocabulary) {
  std::map<std::size_t, double> counts;
  for (const auto& t : tokens)
    if (auto it = vocabulary.find(t); it != vocabulary.end()) counts[it->second] += 1.0;
  return {counts.begin(), counts.end()};
}

double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

}  // namespace

BowModel BowModel::train(std::span<const std::vector<std::string>> documents, std::span<const int> labels,
                         BowKind kind, std::uint64_t seed, const BowConfig& config) {
  if (documents.size() != labels.size())
    throw Error(ErrorCode::LengthMismatch, "documents and labels differ in length");
  nn::require_two_classes(labels);

  BowModel model;
  model.kind_ = kind;
  // Sorted vocabulary so indices do not depend on hash order.
  std::vector<std::string> words;
  for (const auto& doc : documents) words.insert(words.end(), doc.begin(), doc.end());
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  for (std::size_t i = 0; i < words.size(); ++i) model.vocabulary_.emplace(words[i], i);
  model.weights_.assign(words.size(), 0.0);

  std::vector<Sparse> x;
  for (const auto& doc : documents) x.push_back(count_vector(doc, model.vocabulary_));

  Rng rng(seed);
  std::vector<std::size_t> order(documents.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const double lambda = config.regularization;
  long t = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    for (std::size_t i : order) {
      ++t;
      const double y = labels[i] == 1 ? 1.0 : -1.0;
      double z = model.bias_;
      for (auto [j, v] : x[i]) z += model.weights_[j] * v;
      double step = 0.0;
      double g = 0.0;  // d loss / d z
      if (kind == BowKind::linear_margin) {
        step = 1.0 / (lambda * static_cast<double>(t + 100));
        g = y * z < 1.0 ? -y : 0.0;
      } else {
        step = config.learning_rate / std::sqrt(1.0 + static_cast<double>(t) / static_cast<double>(order.size()));
        g = sigmoid(z) - (labels[i] == 1 ? 1.0 : 0.0);
      }
      const double shrink = 1.0 - step * lambda;
      for (double& w : model.weights_) w *= shrink;
      for (auto [j, v] : x[i]) model.weights_[j] -= step * g * v;
      model.bias_ -= step * g * (kind == BowKind::linear_margin ? lambda : 1.0);
    }
  }
  return model;
}

double BowModel::decision(const std::vector<std::string>& tokens) const {
  double z = bias_;
  for (auto [j, v] : count_vector(tokens, vocabulary_)) z += weights_[j] * v;
  return z;
}

ProbabilityPair BowModel::predict(const std::vector<std::string>& tokens) const {
  const double p = sigmoid(decision(tokens));
  return {1.0 - p, p};
}

nlohmann::json BowModel::to_json() const {
  std::vector<std::string> words(vocabulary_.size());
  for (const auto& [w, i] : vocabulary_) words[i] = w;
  return {{"kind", "bow"}, {"model", to_string(kind_)}, {"vocabulary", words}, {"weights", weights_}, {"bias", bias_}};
}

BowModel BowModel::from_json(const nlohmann::json& j) {
  BowModel m;
  m.kind_ = parse_bow_kind(j.at("model").get<std::string>());
  const auto words = j.at("vocabulary").get<std::vector<std::string>>();
  for (std::size_t i = 0; i < words.size(); ++i) m.vocabulary_.emplace(words[i], i);
  m.weights_ = j.at("weights").get<std::vector<double>>();
  m.bias_ = j.at("bias").get<double>();
  if (m.weights_.size() != words.size()) throw Error(ErrorCode::ShapeMismatch, "bag-of-words weights/vocabulary size");
  return m;
}

}  // namespace polyfuse::text
