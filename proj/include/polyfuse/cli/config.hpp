#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "polyfuse/corpus/splits.hpp"
#include "polyfuse/eval/protocol.hpp"
#include "polyfuse/eval/report.hpp"
#include "polyfuse/pipeline/feature_cache.hpp"
#include "polyfuse/pipeline/synth.hpp"

namespace polyfuse::cli {

struct RunPaths {
  std::filesystem::path manifest;
  std::filesystem::path media_root;  // empty: directory of the manifest
  std::filesystem::path cache;
  std::filesystem::path output;
  std::filesystem::path synth_output;
  std::filesystem::path annotation_log;
  std::filesystem::path annotation_static;  // empty: no browser client
};

struct AnnotationSettings {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::vector<std::string> annotators;
};

/// Effective settings of one invocation. Every path is absolute (resolved
/// against the root directory).
struct RunConfig {
  nlohmann::json tree;  // effective key tree, persisted next to outputs
  std::filesystem::path root;
  RunPaths paths;
  corpus::SplitRatios ratios;
  std::uint64_t split_seed = 1;
  int workers = 1;
  std::vector<Modality> feature_modalities;
  pipeline::PipelineSettings pipeline;
  eval::ModelSettings models;
  std::vector<eval::Configuration> configurations;
  std::uint64_t protocol_seed = 7;
  eval::ReportFormat report_format = eval::ReportFormat::text_table;
  pipeline::SynthOptions synth;
  AnnotationSettings annotation;
};

/// Layered sources, lowest precedence first: built-in defaults, the TOML-style
/// config file, POLYFUSE_* environment variables, then explicit overrides.
struct ConfigSources {
  std::optional<std::filesystem::path> file;
  std::map<std::string, std::string> environment;           // raw NAME=value pairs
  std::vector<std::pair<std::string, std::string>> overrides;  // "section.key", value
};

/// Default key tree ("section.key" leaves).
nlohmann::json default_tree();

/// Environment variable naming a key: "split.seed" -> "POLYFUSE_SPLIT_SEED".
std::string environment_name(const std::string& key);

/// Throws ConfigError on unknown keys, values of the wrong type, split ratios
/// that do not sum to 1 and other invalid settings.
RunConfig build_config(const std::filesystem::path& root, const ConfigSources& sources);

/// Splits "section.key=value".
std::pair<std::string, std::string> parse_assignment(const std::string& text);

/// Creates the directory if needed and checks that it accepts new files.
void ensure_writable_directory(const std::filesystem::path& dir);

}  // namespace polyfuse::cli
