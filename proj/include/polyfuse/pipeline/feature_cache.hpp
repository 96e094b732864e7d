#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "polyfuse/audio/pipeline.hpp"
#include "polyfuse/core/error.hpp"
#include "polyfuse/core/tensor_file.hpp"
#include "polyfuse/corpus/types.hpp"
#include "polyfuse/fusion/modality.hpp"
#include "polyfuse/text/embedding.hpp"
#include "polyfuse/visual/frames.hpp"

namespace polyfuse::pipeline {

struct PipelineSettings {
  audio::AudioPipelineConfig audio;
  visual::ClipGeometry visual;
  std::filesystem::path embeddings;  // word-vector file
  int text_window = text::kWindow;
  int embedding_dim = text::kEmbeddingDim;

  nlohmann::json to_json() const;
  static PipelineSettings from_json(const nlohmann::json& j);
};

/// Identifies every setting (and for text the embedding file content, for
/// visual the decoder build) that affects cached values.
std::string pipeline_version(Modality modality, const PipelineSettings& settings);

struct CacheFailure {
  std::string utterance_id;
  ErrorCode code;
  std::string message;
};

struct CacheBuildReport {
  Modality modality = Modality::text;
  std::string pipeline_version;
  std::size_t built = 0;
  std::size_t skipped = 0;
  std::vector<CacheFailure> failures;  // sorted by utterance id

  nlohmann::json to_json() const;
};

/// Per-utterance tensors at <dir>/<modality>/<utterance_id>.npy with a JSON
/// sidecar {utterance_id, modality, shape, dtype, pipeline_version,
/// content_hash, ...}.
class FeatureCache {
 public:
  FeatureCache(std::filesystem::path dir, PipelineSettings settings);

  /// Extracts features for every utterance (or the listed ones) whose entry
  /// is absent or stale. Utterances are processed by `workers` threads, each
  /// with its own media handles. Per-utterance failures are collected.
  CacheBuildReport build(const corpus::CorpusManifest& manifest, Modality modality, int workers = 1,
                         const std::vector<std::string>* only = nullptr) const;

  /// Throws IoError when the entry is missing and ValidationError when it was
  /// built by a different pipeline version.
  Tensor load(Modality modality, const std::string& utterance_id, nlohmann::json* meta = nullptr) const;

  std::filesystem::path tensor_path(Modality modality, const std::string& utterance_id) const;
  const PipelineSettings& settings() const { return settings_; }
  const std::filesystem::path& dir() const { return dir_; }
  const std::string& version(Modality modality) const;

 private:
  std::filesystem::path dir_;
  PipelineSettings settings_;
  std::string versions_[3];
};

}  // namespace polyfuse::pipeline
