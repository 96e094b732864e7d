#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "polyfuse/audio/functionals.hpp"
#include "polyfuse/nn/mlp_classifier.hpp"

namespace polyfuse::audio {

struct AudioPipelineConfig {
  FramingConfig framing;
  LldConfig lld;
  bool voiced_gate = true;
  bool mean_only = false;

  FunctionalOptions functional_options() const { return {voiced_gate, lld.voicing_threshold, mean_only}; }
  std::size_t dimension() const;
  /// Changes whenever a setting that affects extracted values changes.
  std::string version() const;
  nlohmann::json to_json() const;
  static AudioPipelineConfig from_json(const nlohmann::json& j);
};

/// Unnormalized functional vector of one utterance clip.
FunctionalVector utterance_functionals(const AudioSignal& clip, const AudioPipelineConfig& config = {});

/// 1024 → 512 → 128 rectified layers and a single sigmoid logit.
nn::MlpClassifierConfig audio_model_config();

}  // namespace polyfuse::audio
