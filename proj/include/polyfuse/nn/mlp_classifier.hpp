#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "polyfuse/core/prediction.hpp"
#include "polyfuse/nn/mlp.hpp"
#include "polyfuse/nn/trainer.hpp"

namespace polyfuse::nn {

struct MlpClassifierConfig {
  std::vector<int> hidden;
  double dropout = 0.0;
  /// Single logit with a sigmoid readout instead of a two-way softmax.
  bool sigmoid_output = false;

  nlohmann::json to_json() const;
  static MlpClassifierConfig from_json(const nlohmann::json& j);
};

/// Binary classifier over fixed-length vectors (one row per example).
class MlpClassifier {
 public:
  MlpClassifier(std::string kind, MlpClassifierConfig config, Eigen::Index input_dim);

  TrainingLog train(const Mat<float>& x, std::span<const int> labels, const Mat<float>& validation,
                    std::span<const int> validation_labels, const TrainConfig& train_config, std::uint64_t seed);

  /// Throws ShapeMismatch on a wrong column count.
  std::vector<ProbabilityPair> predict(const Mat<float>& x) const;
  Mat<float> penultimate(const Mat<float>& x) const;

  void save(const std::filesystem::path& dir, const nlohmann::json& extra = nlohmann::json::object());
  static MlpClassifier load(const std::filesystem::path& dir, const std::string& kind);

  const std::string& kind() const { return kind_; }
  const MlpClassifierConfig& config() const { return config_; }
  Eigen::Index input_dim() const { return input_dim_; }
  const TrainingLog& training_log() const { return log_; }
  ParamList<float> params() { return net_.params(); }
  Mlp<float>& network() { return net_; }
  std::string weights_digest();

 private:
  void check_input(const Mat<float>& x) const;

  std::string kind_;
  MlpClassifierConfig config_;
  Eigen::Index input_dim_;
  Mlp<float> net_;
  TrainingLog log_;
  TrainConfig train_config_;
  std::uint64_t seed_ = 0;
};

}  // namespace polyfuse::nn
