#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "polyfuse/core/prediction.hpp"
#include "polyfuse/eval/report.hpp"
#include "polyfuse/fusion/modality.hpp"
#include "polyfuse/nn/mlp_classifier.hpp"

namespace polyfuse::fusion {

using FeatureMap = std::map<Modality, std::vector<float>>;
/// One row per utterance for each modality.
using FeatureMatrices = std::map<Modality, nn::Mat<float>>;
using PredictionMap = std::map<Modality, ProbabilityPair>;
using PredictionLists = std::map<Modality, std::vector<ProbabilityPair>>;
/// Registered representation width per modality.
using BlockDims = std::map<Modality, Eigen::Index>;

struct Block {
  Modality modality;
  Eigen::Index offset = 0;
  Eigen::Index length = 0;

  bool operator==(const Block&) const = default;
};

struct FusedFeatureVector {
  std::vector<float> values;
  std::vector<Block> layout;
};

/// Concatenates the set's vectors in canonical order. Throws MissingModality
/// when a member has no vector and DimMismatch when `expected` lists a
/// different width.
FusedFeatureVector early_fuse(const FeatureMap& features, ModalitySet set, const BlockDims& expected = {});

/// Row-wise early fusion over a batch.
nn::Mat<float> early_fuse_rows(const FeatureMatrices& features, ModalitySet set, const BlockDims& expected,
                               std::vector<Block>* layout = nullptr);

struct DecisionVector {
  ModalitySet set;
  std::vector<double> values;  // (p_negative, p_positive) per member
};

/// Throws MissingModality, or ValidationError when a pair is not a distribution.
DecisionVector late_fuse(const PredictionMap& predictions, ModalitySet set);

/// Column-wise z-scoring fitted on training rows; constant columns are centred only.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const nn::Mat<float>& rows);
  nn::Mat<float> apply(const nn::Mat<float>& rows) const;
  nlohmann::json to_json() const;
  static Standardizer from_json(const nlohmann::json& j);
};

struct FusedPrediction {
  ProbabilityPair probabilities;
  eval::FusionStrategy strategy;
  ModalitySet set;
};

/// MLP over standardized fused feature vectors.
class EarlyFusionModel {
 public:
  static nn::MlpClassifierConfig default_head();  // 128 → 32 → 2, dropout 0.2

  EarlyFusionModel(ModalitySet set, BlockDims dims, nn::MlpClassifierConfig head = default_head());

  nn::TrainingLog train(const FeatureMatrices& train, std::span<const int> labels, const FeatureMatrices& validation,
                        std::span<const int> validation_labels, const nn::TrainConfig& train_config,
                        std::uint64_t seed);

  /// Inputs must cover exactly the model's set with the recorded widths;
  /// otherwise SetMismatch or DimMismatch.
  std::vector<FusedPrediction> predict(const FeatureMatrices& features) const;
  FusedPrediction predict(const FeatureMap& features) const;

  void save(const std::filesystem::path& dir, const nlohmann::json& extra = nlohmann::json::object());
  static EarlyFusionModel load(const std::filesystem::path& dir);

  ModalitySet set() const { return set_; }
  const std::vector<Block>& layout() const { return layout_; }
  const Standardizer& standardizer() const { return standardizer_; }
  nn::MlpClassifier& head() { return head_; }
  std::string weights_digest() { return head_.weights_digest(); }

 private:
  void check_set(ModalitySet given) const;

  ModalitySet set_;
  BlockDims dims_;
  std::vector<Block> layout_;
  Standardizer standardizer_;
  nn::MlpClassifier head_;
};

struct MetaConfig {
  double l2 = 1e-3;
  int max_iterations = 50;

  nlohmann::json to_json() const;
  static MetaConfig from_json(const nlohmann::json& j);
};

/// Logistic meta-classifier over decision vectors. A singleton set uses the
/// identity (the unimodal distribution passes through unchanged).
class LateFusionModel {
 public:
  explicit LateFusionModel(ModalitySet set, MetaConfig config = {});

  /// Fits on held-out unimodal predictions. Throws UntrainedUnimodal when a
  /// member has no predictions, LengthMismatch on ragged inputs.
  void train(const PredictionLists& validation_predictions, std::span<const int> labels);

  /// Throws SetMismatch when the predictions do not cover exactly the set.
  FusedPrediction predict(const PredictionMap& predictions) const;
  std::vector<FusedPrediction> predict(const PredictionLists& predictions) const;

  void save(const std::filesystem::path& dir, const nlohmann::json& extra = nlohmann::json::object()) const;
  static LateFusionModel load(const std::filesystem::path& dir);

  ModalitySet set() const { return set_; }
  bool is_identity() const { return set_.is_singleton(); }
  const std::vector<double>& coefficients() const { return coefficients_; }
  double intercept() const { return intercept_; }

 private:
  ModalitySet set_;
  MetaConfig config_;
  std::vector<double> coefficients_;
  double intercept_ = 0.0;
  bool trained_ = false;
};

}  // namespace polyfuse::fusion
