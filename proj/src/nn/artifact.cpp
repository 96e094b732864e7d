#include "polyfuse/nn/artifact.hpp"

#include "polyfuse/core/error.hpp"
#include "polyfuse/core/hash.hpp"
#include "polyfuse/core/tensor_file.hpp"
#include "polyfuse/nn/weights.hpp"

namespace polyfuse::nn {

namespace fs = std::filesystem;

void save_artifact(const fs::path& dir, nlohmann::json manifest, const ParamList<float>& params) {
  fs::create_directories(dir);
  manifest["weights"] = save_weights(params, dir / kWeightsFile);
  manifest["weights_sha256"] = sha256_file(dir / kWeightsFile);
  write_json(dir / kModelFile, manifest);
}

nlohmann::json read_artifact_manifest(const fs::path& dir, std::string_view expected_kind) {
  const fs::path file = dir / kModelFile;
  if (!fs::exists(file)) throw Error(ErrorCode::IoError, "no model artifact at " + dir.string());
  nlohmann::json manifest = read_json(file);
  const std::string kind = manifest.value("kind", "");
  if (!expected_kind.empty() && kind != expected_kind)
    throw Error(ErrorCode::ValidationError,
                "artifact " + dir.string() + " holds a '" + kind + "' model, expected '" + std::string(expected_kind) + "'");
  return manifest;
}

void load_artifact_weights(const fs::path& dir, const nlohmann::json& manifest, const ParamList<float>& params) {
  const fs::path file = dir / kWeightsFile;
  if (manifest.contains("weights_sha256") && sha256_file(file) != manifest.at("weights_sha256").get<std::string>())
    throw Error(ErrorCode::ValidationError, "weights checksum mismatch in " + dir.string());
  load_weights(params, file, manifest.at("weights"));
}

}  // namespace polyfuse::nn
