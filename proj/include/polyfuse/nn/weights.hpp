#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "polyfuse/nn/param.hpp"

namespace polyfuse::nn {

/// Writes every parameter as little-endian float32, in list order, and
/// returns the index [{name, rows, cols, offset}] describing the file.
nlohmann::json save_weights(const ParamList<float>& params, const std::filesystem::path& file);

/// Loads weights written by save_weights. Throws ShapeMismatch when the index
/// disagrees with the parameter list.
void load_weights(const ParamList<float>& params, const std::filesystem::path& file, const nlohmann::json& index);

/// SHA-256 over the raw parameter bytes, for determinism checks.
std::string weights_digest(const ParamList<float>& params);

}  // namespace polyfuse::nn
