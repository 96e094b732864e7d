#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "polyfuse/corpus/splits.hpp"
#include "polyfuse/eval/report.hpp"
#include "polyfuse/fusion/fusion.hpp"
#include "polyfuse/nn/mlp_classifier.hpp"
#include "polyfuse/pipeline/feature_cache.hpp"
#include "polyfuse/text/text_model.hpp"
#include "polyfuse/visual/visual_model.hpp"

namespace polyfuse::eval {

struct ModelSettings {
  text::TextModelConfig text;
  nn::MlpClassifierConfig audio;
  /// Feature layers and dense widths; the input geometry always comes from
  /// the visual feature cache.
  visual::VisualModelConfig visual;
  nn::MlpClassifierConfig early;
  fusion::MetaConfig late;
  nn::TrainConfig train;
  std::size_t visual_micro_batch = 8;

  ModelSettings();
  nlohmann::json to_json() const;
  static ModelSettings from_json(const nlohmann::json& j);
};

struct ProtocolOptions {
  std::uint64_t seed = 7;
  /// When set, every trained model is saved under this directory.
  std::optional<std::filesystem::path> artifacts_dir;
  std::function<void(const std::string&)> log;
};

/// Unimodal rows T, A, V followed by the four multimodal sets with `strategy`.
std::vector<Configuration> table_configurations(FusionStrategy strategy);

/// Per-model seed derived from the base seed and the model's name.
std::uint64_t derive_seed(std::uint64_t base, const std::string& name);

/// Artifact directory name of a configuration ("unimodal_T", "early_A+V+T").
std::string artifact_name(const Configuration& c);

/// Trains every configuration on the train split (model selection on
/// validation) and evaluates on test. Labels come from majority resolution of
/// the manifest's annotations; only utterances with a positive or negative
/// label take part. Throws SpeakerLeakage before any work when a speaker
/// appears in more than one split.
EvaluationReport run_protocol(const corpus::CorpusManifest& manifest, const corpus::SplitAssignment& split,
                              const std::vector<Configuration>& configurations, const pipeline::FeatureCache& cache,
                              const ModelSettings& settings, const ProtocolOptions& options = {});

/// Re-evaluates saved artifacts on the test split.
EvaluationReport evaluate_artifacts(const corpus::CorpusManifest& manifest, const corpus::SplitAssignment& split,
                                    const std::vector<Configuration>& configurations,
                                    const pipeline::FeatureCache& cache, const std::filesystem::path& artifacts_dir);

}  // namespace polyfuse::eval
