#pragma once

#include <filesystem>
#include <string_view>

#include <nlohmann/json.hpp>

#include "polyfuse/nn/param.hpp"

namespace polyfuse::nn {

// A model artifact is a directory holding model.json (configuration, training
// record, weights index) and weights.bin (float32 parameters).
inline constexpr std::string_view kModelFile = "model.json";
inline constexpr std::string_view kWeightsFile = "weights.bin";

/// Writes weights and the manifest; the manifest gains "weights" (index) and
/// "weights_sha256".
void save_artifact(const std::filesystem::path& dir, nlohmann::json manifest, const ParamList<float>& params);

/// Reads model.json and checks its "kind" (any kind when empty). Throws IoError when absent and
/// ValidationError on a kind mismatch.
nlohmann::json read_artifact_manifest(const std::filesystem::path& dir, std::string_view expected_kind);

void load_artifact_weights(const std::filesystem::path& dir, const nlohmann::json& manifest,
                           const ParamList<float>& params);

}  // namespace polyfuse::nn
