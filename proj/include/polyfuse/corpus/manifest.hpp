#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "polyfuse/corpus/types.hpp"

namespace polyfuse::corpus {

struct LoadOptions {
  bool verify_media = true;
};

/// Parses and validates a JSON-lines manifest. Errors name the offending record.
CorpusManifest load_manifest(const std::filesystem::path& path, const LoadOptions& options = {});
CorpusManifest parse_manifest(const std::string& jsonl, const std::filesystem::path& base_dir,
                              const LoadOptions& options = {});

/// Checks every manifest invariant; throws polyfuse::Error on the first violation.
void validate(const CorpusManifest& manifest, const LoadOptions& options = {});

/// Canonical serialization: header line, then videos, utterances and annotations
/// in id order. Byte-identical for equal manifests.
std::string to_jsonl(const CorpusManifest& manifest);
void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& path);

nlohmann::json to_json(const VideoRecord& v);
nlohmann::json to_json(const Utterance& u);
nlohmann::json to_json(const AnnotationRecord& a);
/// Parses an annotation payload; throws ValidationError on out-of-enum values.
AnnotationRecord annotation_from_json(const nlohmann::json& j);

}  // namespace polyfuse::corpus
